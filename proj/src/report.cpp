#include "btcalc/report.hpp"

#include <iomanip>
#include <sstream>

namespace btcalc {

std::string content_hash(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    std::ostringstream out;
    out << "fnv1a64:" << std::hex << std::setw(16) << std::setfill('0') << h;
    return out.str();
}

json state_json(const WorldModel& m, StateIndex s) {
    json out = json::object();
    for (std::size_t v = 0; v < m.variables().size(); ++v)
        out[m.variables()[v].name] = m.variables()[v].values[m.value_of(s, int(v))];
    return out;
}

json region_json(const Region& r, std::uint64_t max_states) {
    json out;
    out["count"] = r.count();
    if (r.count() <= max_states) {
        json states = json::array();
        r.for_each([&](StateIndex s) { states.push_back(state_json(r.model(), s)); });
        out["states"] = states;
    }
    return out;
}

namespace {

const char* kind_name(NodeKind k) {
    switch (k) {
    case NodeKind::Sequence:
        return "sequence";
    case NodeKind::Fallback:
        return "fallback";
    case NodeKind::Condition:
        return "condition";
    case NodeKind::Leaf:
        return "leaf";
    }
    return "?";
}

} // namespace

json regions_report(const Tree& t, const RegionMap& map, const PartitionReport& partition,
                    const std::string& input_hash) {
    json out;
    out["schema"] = kSchema;
    out["input_hash"] = input_hash;
    out["tree"] = t.name();
    out["state_count"] = t.model().state_count();

    json nodes = json::array();
    for (const auto& n : t.nodes()) {
        json j;
        j["id"] = n.id;
        j["kind"] = kind_name(n.kind);
        if (!n.name.empty())
            j["name"] = n.name;
        j["success"] = map.triples[n.id].success.count();
        j["failure"] = map.triples[n.id].failure.count();
        j["running"] = map.triples[n.id].running.count();
        j["influence"] = map.influence[n.id].count();
        j["operating"] = map.operating[n.id].count();
        nodes.push_back(std::move(j));
    }
    out["nodes"] = nodes;

    json part;
    part["ok"] = partition.ok();
    part["triples_ok"] = partition.triples_ok;
    part["parent_child_ok"] = partition.parent_child_ok;
    part["leaf_ok"] = partition.leaf_ok;
    json violations = json::array();
    for (const auto& v : partition.violations) {
        json j;
        j["kind"] = to_string(v.kind);
        j["node"] = v.node;
        if (v.other >= 0)
            j["other"] = v.other;
        j["witness"] = state_json(t.model(), v.witness);
        violations.push_back(std::move(j));
    }
    part["violations"] = violations;
    out["partition"] = part;
    return out;
}

json certificate_report(const Tree& t, const ConvergenceProblem& problem,
                        const ConvergenceCertificate& cert, const std::string& input_hash) {
    json out;
    out["schema"] = kSchema;
    out["input_hash"] = input_hash;
    out["tree"] = t.name();
    out["verdict"] = cert.verdict == Verdict::Proven ? "proven" : "not-proven";
    out["level_valid"] = cert.level_valid;
    out["bound_sum_tau"] = cert.bound_sum;
    out["bound_n_max_tau"] = cert.bound_nmax;

    json per = json::array();
    for (std::size_t i = 0; i < cert.labeling.size(); ++i) {
        json j;
        j["label"] = i + 1;
        j["node"] = cert.labeling[i];
        const auto& node = t.node(cert.labeling[i]);
        if (!node.name.empty())
            j["name"] = node.name;
        j["constraint_set"] = region_json(cert.ci[i]);
        j["invariant"] = cert.invariance[i].pass;
        if (!cert.invariance[i].pass) {
            j["invariance_witness"] = {
                {"state", state_json(t.model(), cert.invariance[i].witness_state)},
                {"successor", state_json(t.model(), cert.invariance[i].witness_successor)},
            };
        }
        j["dwell_bounded"] = cert.dwell[i].pass;
        if (cert.dwell[i].pass) {
            j["tau"] = cert.dwell[i].tau;
        } else {
            json cycle = json::array();
            for (StateIndex s : cert.dwell[i].cycle)
                cycle.push_back(state_json(t.model(), s));
            j["dwell_cycle"] = cycle;
        }
        per.push_back(std::move(j));
    }
    out["regions"] = per;

    out["monotone_exit"] = cert.monotone_ok;
    if (cert.exit_witness) {
        out["exit_witness"] = {
            {"label", cert.exit_witness->label_index + 1},
            {"state", state_json(t.model(), cert.exit_witness->state)},
            {"successor", state_json(t.model(), cert.exit_witness->successor)},
        };
    }
    out["conclusion_checked"] = cert.conclusion_checked;
    out["conclusion_ok"] = cert.conclusion_ok;
    out["conclusion_worst_steps"] = cert.conclusion_worst_steps;
    if (cert.conclusion_witness)
        out["conclusion_witness"] = state_json(t.model(), *cert.conclusion_witness);
    out["external_constraint"] = region_json(problem.cbar, 0);
    return out;
}

json trace_report(const Tree& t, const Trace& trace, const std::string& input_hash) {
    json out;
    out["schema"] = kSchema;
    out["input_hash"] = input_hash;
    out["tree"] = t.name();
    out["start"] = state_json(t.model(), trace.start);
    out["termination"] = to_string(trace.reason);
    json steps = json::array();
    for (const auto& s : trace.steps) {
        json j;
        j["state"] = state_json(t.model(), s.state);
        j["status"] = to_string(s.status);
        if (s.active_leaf >= 0) {
            j["active_leaf"] = s.active_leaf;
            j["active_leaf_name"] = auto_name(t, s.active_leaf);
        }
        steps.push_back(std::move(j));
    }
    out["steps"] = steps;
    return out;
}

json ds_report(const Tree& t, const DecisionStructure& ds, bool with_complexity,
               const std::string& input_hash) {
    json out;
    out["schema"] = kSchema;
    out["input_hash"] = input_hash;
    out["tree"] = t.name();
    out["source"] = ds.source;
    json nodes = json::array();
    for (int v = 0; v < ds.node_count(); ++v)
        nodes.push_back({{"id", v}, {"name", ds.node_names[v]}, {"leaf", ds.node_refs[v]}});
    out["nodes"] = nodes;
    json edges = json::array();
    for (int v = 0; v < ds.node_count(); ++v)
        for (int label = 0; label < ds.label_count(); ++label)
            if (ds.out[v][label] >= 0)
                edges.push_back(
                    {{"from", v}, {"label", ds.labels[label]}, {"to", ds.out[v][label]}});
    out["edges"] = edges;
    if (with_complexity) {
        out["cyclomatic"] = cyclomatic(ds);
        out["essential"] = essential_complexity(ds);
        out["bt_equivalent"] = is_bt_equivalent(ds);
    }
    return out;
}

json montecarlo_report(const ProbabilisticChain& chain, const ChainStats& stats,
                       RegressMode mode) {
    json out;
    out["schema"] = kSchema;
    out["regions"] = chain.n;
    out["p"] = chain.p;
    out["seed"] = chain.seed;
    out["mode"] = mode == RegressMode::Uniform ? "uniform" : "worst-case";
    out["trials"] = stats.trials;
    out["mean_transitions"] = stats.mean_transitions;
    out["stderr"] = stats.stderr_transitions;
    out["expected_bound"] = stats.e_bound;
    out["bound_ok"] = stats.e_bound_ok;
    out["gamma"] = stats.gamma;
    out["p_k"] = stats.p_k;
    return out;
}

json cbf_trace_json(const ContinuousTrace& trace, const std::string& input_hash) {
    json out;
    out["schema"] = kSchema;
    out["input_hash"] = input_hash;
    out["dt"] = trace.dt;
    out["infeasible"] = trace.infeasible;
    out["t"] = trace.t;
    out["x"] = trace.x;
    out["u"] = trace.u;
    out["h"] = trace.h;
    out["prefix"] = trace.prefix;
    return out;
}

} // namespace btcalc
