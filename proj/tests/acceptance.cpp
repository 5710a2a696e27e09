// Acceptance suite: one line per criterion, nonzero exit when any fails.
#include "support.hpp"

#include "btcalc/cbf.hpp"
#include "btcalc/convergence.hpp"
#include "btcalc/decision.hpp"
#include "btcalc/dot.hpp"
#include "btcalc/dsl.hpp"
#include "btcalc/regions.hpp"
#include "btcalc/sweep.hpp"
#include "btcalc/synthesis.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

using namespace btcalc;
using namespace btcalc::testing;

namespace {

struct Ctx {
    std::ostringstream log;
    bool ok = true;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            log << (log.str().empty() ? "" : "; ") << what;
        }
    }
};

Region lit(const Tree& t, const std::string& name, bool value = true) {
    const int var = t.model().variable_index(name);
    if (var < 0)
        throw Error("no variable " + name);
    const Region r = region_from_predicate(t.model(), Predicate::var_true(var));
    return value ? r : ~r;
}

std::vector<ActionTemplate> library_of(const WorldModel& m) {
    std::vector<ActionTemplate> out;
    for (const auto& a : m.actions())
        if (a.post)
            out.push_back({a.id, a.preconditions, *a.post});
    return out;
}

// --- criterion 1: reproduction of the published region tables ---------------

void criterion_tables(Ctx& c) {
    // Three goals in sequence.
    {
        const Document doc = load_document("delivery_sequence.bt");
        const Tree t = build_tree(doc, "mission");
        const RegionMap map = compute_regions(t);
        const Region full(t.model(), true);
        const Region safe = lit(t, "in_safe_area");
        const Region goal = lit(t, "object_at_goal");
        const Region charger = lit(t, "robot_at_charger");

        c.require(map.operating[1] == ~safe, "seq omega_1");
        c.require(map.operating[2] == (safe & ~goal), "seq omega_2");
        c.require(map.operating[3] == (safe & goal & ~charger), "seq omega_3");

        const auto ci = build_ci(make_problem(t, {1, 2, 3}), map);
        c.require(ci[0] == full, "seq c_1");
        c.require(ci[1] == safe, "seq c_2");
        c.require(ci[2] == (safe & goal), "seq c_3");
    }

    // Implicit sequence (fallback numbered right to left).
    {
        const Document doc = load_document("pick_place.bt");
        const Tree t = build_tree(doc, "implicit");
        const Region holding = lit(t, "holding_object");
        const Region at_goal = lit(t, "object_at_goal");
        const Region cbar = holding | ~at_goal;

        const ImplicitSets sets = implicit_sequence_sets(t, cbar);
        c.require(sets.operating[0] == (~holding & ~at_goal), "implicit omega_1");
        c.require(sets.operating[1] == (holding & ~at_goal), "implicit omega_2");
        c.require(sets.c_hat[0] == cbar, "implicit c_1");
        c.require(sets.c_hat[1] == holding, "implicit c_2");
        c.require(sets.hypothesis[0].holds, "implicit hypothesis");
        c.require(sets.c_hat_subset_ci[0] && sets.c_hat_subset_ci[1], "implicit c_hat subset");
    }

    // Mobile manipulator rows, each at its natural abstraction level.
    const Document doc = load_document("mobile_manipulator.bt");
    {
        const Tree t = build_tree(doc, "top_goals_level");
        const RegionMap map = compute_regions(t);
        const Region s = lit(t, "in_safe_area");
        const Region b = lit(t, "proper_battery_level");
        const Region g = lit(t, "object_at_goal");
        const std::vector<int> leaves = {3, 6, 9, 10};
        c.require(validate_level(t, map, leaves).valid, "top level valid");

        c.require(map.operating[3] == ~s, "move-to-safe omega");
        c.require(map.operating[6] == (s & ~b), "recharge omega");
        c.require(map.operating[9] == (s & b & ~g), "place omega");
        c.require(map.operating[10] == (s & b & g), "move-to-charger omega");

        const auto ci = build_ci(make_problem(t, leaves), map);
        c.require(ci[0] == Region(t.model(), true), "move-to-safe c");
        c.require(ci[1] == s, "recharge c");
        c.require(ci[2] == (s & b), "place c");
        c.require(ci[3] == (s & b & g), "move-to-charger c");
    }
    {
        const Tree t = build_tree(doc, "grasp_level");
        const RegionMap map = compute_regions(t);
        const Region s = lit(t, "in_safe_area");
        const Region b = lit(t, "proper_battery_level");
        const Region g = lit(t, "object_at_goal");
        const Region o = lit(t, "object_in_gripper");
        const Region n = lit(t, "robot_near_object");
        const Region f = lit(t, "free_path_to_object_exists");
        const std::vector<int> leaves = {3, 6, 17, 18, 19, 20, 21};
        c.require(validate_level(t, map, leaves).valid, "grasp level valid");

        c.require(map.operating[17] == (s & b & ~g & ~o & ~n & f), "move-to-object omega");
        c.require(map.operating[18] == (s & b & ~g & ~o & n), "grasp omega");
        c.require(map.operating[19] == (s & b & ~g & o), "move-to-goal omega");

        const auto ci_mto = build_ci(make_problem(t, leaves), map);
        c.require(ci_mto[2] == (s & b), "move-to-object c");

        const auto ci_grasp = build_ci(make_problem(t, {3, 6, 18, 17, 19, 20, 21}), map);
        c.require(ci_grasp[2] == (s & b), "grasp c");

        const auto ci_mtg = build_ci(make_problem(t, leaves, o), map);
        c.require(ci_mtg[4] == (s & b & o), "move-to-goal c");
    }
    {
        const Tree t = build_tree(doc, "delegate_level");
        const RegionMap map = compute_regions(t);
        const Region s = lit(t, "in_safe_area");
        const Region b = lit(t, "proper_battery_level");
        const Region g = lit(t, "object_at_goal");
        const Region latched = lit(t, "t11_failed");
        const std::vector<int> leaves = {3, 6, 11, 12};
        c.require(validate_level(t, map, leaves).valid, "delegate level valid");

        c.require(map.operating[11] == (s & b & ~g & latched), "delegate omega");
        const auto ci = build_ci(make_problem(t, leaves, latched), map);
        c.require(ci[2] == (s & b & latched), "delegate c");
    }
    {
        // The full tree pins the rows the deep structure determines exactly.
        const Tree t = build_tree(doc, "deliver");
        const RegionMap map = compute_regions(t);
        const Region s = lit(t, "in_safe_area");
        const Region b = lit(t, "proper_battery_level");
        const Region g = lit(t, "object_at_goal");
        const Region o = lit(t, "object_in_gripper");
        const Region n = lit(t, "robot_near_object");
        const Region f = lit(t, "free_path_to_object_exists");

        c.require(map.operating[5] == ~s, "full omega_5");
        c.require(map.operating[8] == (s & ~b), "full omega_8");
        c.require(map.operating[19] == (s & b & ~g & ~o & ~n & f), "full omega_19");
        c.require(map.operating[20] == (s & b & ~g & ~o & n), "full omega_20");

        const std::vector<int> level = {5, 8, 19, 20, 21, 32, 33, 36, 39};
        const auto ci = build_ci(make_problem(t, level), compute_regions(t));
        c.require(ci[8] == (s & b & g), "full c_39");
    }
}

// --- criteria 2 & 3: operating-region partitions and the tick oracle --------

void criterion_partitions(Ctx& c, bool tick_oracle) {
    Rng rng(tick_oracle ? 1009 : 1013);
    int violations = 0;
    for (int round = 0; round < 1000; ++round) {
        auto model = random_model(rng, rand_int(rng, 2, 8), rand_int(rng, 1, 4));
        const Tree t = random_tree(rng, model, 15);
        if (!tick_oracle) {
            const PartitionReport report = verify_partition(t);
            violations += int(report.violations.size());
        } else {
            const RegionMap map = compute_regions(t);
            const TickSweep sweep = tick_sweep(t);
            for (int leaf : t.leaves())
                if (!(map.operating[leaf] == sweep.active[leaf]))
                    ++violations;
        }
    }
    c.require(violations == 0,
              std::to_string(violations) + (tick_oracle ? " oracle mismatches" : " violations"));
}

// --- criterion 4: the convergence theorem end to end ------------------------

void criterion_theorem(Ctx& c) {
    const Document doc = load_document("mobile_manipulator.bt");
    const Tree t = build_tree(doc, "deliver");
    const CheckDecl* decl = doc.find_check("deliver_converges");
    c.require(decl != nullptr, "check declaration present");
    const std::vector<int> labeling = decl->labeling;

    const ConvergenceProblem p = make_problem(t, labeling);
    const ConvergenceCertificate cert = check_theorem(p);
    c.require(cert.verdict == Verdict::Proven, "verdict proven");
    c.require(cert.level_valid, "level valid");

    // Independent replay: from every start in C_1, walk the closed loop and
    // demand monotone region progress into S_0 within the certificate bound.
    const RegionMap map = compute_regions(t);
    const Region& s0 = map.triples[0].success;
    bool replay_ok = true;
    std::uint64_t worst = 0;
    cert.ci[0].for_each([&](StateIndex x0) {
        if (!replay_ok)
            return;
        StateIndex x = x0;
        std::size_t current = 0;
        for (std::uint64_t k = 0; k <= cert.bound_sum; ++k) {
            if (s0.test(x)) {
                worst = std::max(worst, k);
                return;
            }
            std::size_t region = labeling.size();
            for (std::size_t i = 0; i < labeling.size(); ++i)
                if (map.operating[labeling[i]].test(x)) {
                    region = i;
                    break;
                }
            if (region == labeling.size() || region < current || !p.cbar.test(x)) {
                replay_ok = false;
                return;
            }
            current = region;
            const StepResult r = step(t, x);
            if (r.status != Status::Running) {
                replay_ok = false;
                return;
            }
            x = r.next;
        }
        replay_ok = false; // exceeded the bound
    });
    c.require(replay_ok, "replay from C_1 reaches the goal monotonically");
    c.require(worst <= cert.bound_sum, "bound respected");

    // Mutation: approaching the object may leave the safe area; the proof
    // must fail with a concrete witness.
    {
        const std::string text = read_file(data_path("mobile_manipulator.bt"));
        const std::string needle = "action move_to_object {\n"
                                   "  pre: free_path_to_object_exists;\n"
                                   "  effect: robot_near_object := true;";
        std::string mutated_text = text;
        const auto pos = mutated_text.find(needle);
        c.require(pos != std::string::npos, "mutation site found");
        mutated_text.replace(pos, needle.size(),
                             "action move_to_object {\n"
                             "  pre: free_path_to_object_exists;\n"
                             "  effect: robot_near_object := true, in_safe_area := false;");
        const ParseResult mutated = parse(mutated_text);
        c.require(mutated.ok(), "mutated fixture parses");
        const Tree bad = build_tree(mutated.doc, "deliver");
        const ConvergenceCertificate bad_cert = check_theorem(make_problem(bad, labeling));
        c.require(bad_cert.verdict == Verdict::Failed, "mutated verdict failed");
        bool witness = false;
        for (const auto& inv : bad_cert.invariance)
            if (!inv.pass)
                witness = true;
        c.require(witness, "mutation witness transition reported");
    }
}

// --- criterion 5: probabilistic transition bounds ----------------------------

void criterion_probabilistic(Ctx& c) {
    const std::pair<int, double> configs[] = {{1, 0.5}, {3, 0.9}, {5, 0.7}};
    const std::uint64_t trials = 100000;
    for (const auto& [n, prob] : configs) {
        ProbabilisticChain chain;
        chain.n = n;
        chain.p.assign(std::size_t(n), prob);
        chain.seed = 0xb7c0 + n;
        const ProbBounds bounds = probabilistic_bounds(n, prob);

        // Worst-case regressions: the closed forms are exact.
        const ChainStats worst = monte_carlo_chain(chain, trials, RegressMode::WorstCase);
        c.require(worst.e_bound_ok, "worst-case mean bound (n=" + std::to_string(n) + ")");
        for (int k = 0; k <= 20; ++k) {
            const double expected = bounds.p_k(k);
            const double sigma = std::sqrt(expected * (1 - expected) / double(trials));
            if (std::fabs(worst.p_k[k] - expected) > 3 * sigma + 1e-12) {
                c.require(false, "p_k deviation at n=" + std::to_string(n) +
                                     " k=" + std::to_string(k));
                break;
            }
        }

        // Uniform regressions must also respect the expectation bound.
        const ChainStats uniform = monte_carlo_chain(chain, trials, RegressMode::Uniform);
        c.require(uniform.e_bound_ok, "uniform mean bound (n=" + std::to_string(n) + ")");
    }
}

// --- criterion 6: backchained synthesis --------------------------------------

bool skeletons_match(const Tree& a, int ida, const Tree& b, int idb) {
    const Node& na = a.node(ida);
    const Node& nb = b.node(idb);
    if (na.kind != nb.kind || na.children.size() != nb.children.size())
        return false;
    if (na.kind == NodeKind::Leaf &&
        a.model().actions()[na.action].id != b.model().actions()[nb.action].id)
        return false;
    for (std::size_t i = 0; i < na.children.size(); ++i)
        if (!skeletons_match(a, na.children[i], b, nb.children[i]))
            return false;
    return true;
}

void criterion_synthesis(Ctx& c) {
    const Document doc = load_document("mobile_manipulator.bt");
    const GoalsDecl* goals = doc.find_goals("top_goals");
    c.require(goals != nullptr, "goal list present");

    GoalList list;
    list.goals = goals->goals;
    const Tree synthesized = backchain(doc.model, list, library_of(*doc.model), 3);
    const Tree reference = build_tree(doc, "deliver");

    c.require(synthesized.node_count() == reference.node_count(), "node count");
    c.require(skeletons_match(synthesized, 0, reference, 0), "skeleton isomorphic");

    int fragments = 0;
    std::vector<int> stroked;
    for (const auto& n : synthesized.nodes()) {
        if (n.double_stroked)
            stroked.push_back(n.id);
        if (n.kind == NodeKind::Fallback)
            ++fragments;
    }
    c.require(fragments == 8, "eight fragments");
    c.require(stroked == std::vector<int>({1, 6, 9, 12, 15, 22, 28, 37}),
              "double-stroke marks");

    const ConvergenceCertificate cert =
        check_theorem(make_problem(synthesized, {5, 8, 19, 20, 21, 32, 33, 36, 39}));
    c.require(cert.verdict == Verdict::Proven, "synthesized tree proven");
}

// --- criterion 7: modularity and complexity ----------------------------------

void criterion_complexity(Ctx& c) {
    Rng rng(4242);
    int done = 0;
    while (done < 500) {
        auto model = random_model(rng, rand_int(rng, 2, 5), rand_int(rng, 1, 3));
        const Tree t = random_tree(rng, model, 16);
        if (int(t.leaves().size()) > 12)
            continue;
        ++done;
        const DecisionStructure ds = compile_to_ds(t);
        if (essential_complexity(ds) != 1 || !is_bt_equivalent(ds)) {
            c.require(false, "essential complexity != 1 on tree " + std::to_string(done));
            return;
        }
    }

    DecisionStructure cyc;
    cyc.labels = {"S"};
    cyc.add_node("a");
    cyc.add_node("b");
    cyc.add_node("c");
    cyc.add_edge(0, 0, 1);
    cyc.add_edge(1, 0, 2);
    cyc.add_edge(2, 0, 0);
    cyc.source = 0;
    c.require(essential_complexity(cyc) == 2, "prime cycle essential complexity");
    c.require(!is_bt_equivalent(cyc), "prime cycle not a tree");

    // compile correctness, exhaustive over models up to 2^12 states
    const Document doc = load_document("mobile_manipulator.bt");
    std::vector<Tree> trees;
    trees.push_back(build_tree(doc, "deliver"));
    for (int round = 0; round < 10; ++round) {
        auto model = random_model(rng, 12, 3);
        trees.push_back(random_tree(rng, model, 14));
    }
    for (const Tree& t : trees) {
        const DecisionStructure ds = compile_to_ds(t);
        for (StateIndex s = 0; s < t.model().state_count(); ++s) {
            const TickResult r = tick(t, s);
            const int chosen = execute_ds_on_state(ds, t, s);
            if (r.status == Status::Running) {
                if (chosen != r.active_leaf) {
                    c.require(false, "ds/tick divergence");
                    return;
                }
            } else {
                const Node& node = t.node(chosen);
                const Status st = eval_predicate(t.model(), node.success, s) ? Status::Success
                                                                             : Status::Failure;
                if (st != r.status) {
                    c.require(false, "ds/tick terminal divergence");
                    return;
                }
            }
        }
    }
}

// --- criterion 8: barrier filter ---------------------------------------------

void criterion_cbf(Ctx& c) {
    const Document doc = load_document("cbf_scenarios.bt");

    {
        const CbfProblem p = build_cbf_problem(*doc.find_cbf("disk"));
        const ContinuousTrace trace = integrate(p, doc.find_cbf("disk")->start, 10.0, 1e-3);
        c.require(!trace.infeasible, "disk rollout feasible");
        double min_h = 1e18;
        for (const auto& h : trace.h)
            min_h = std::min(min_h, h[0]);
        c.require(min_h >= -1e-6, "disk min h >= -1e-6 (got " + std::to_string(min_h) + ")");
        c.require(min_h <= 1e-2, "disk reaches the boundary");
    }

    {
        const CbfProblem p = build_cbf_problem(*doc.find_cbf("charger_conflict"));
        const ContinuousTrace trace =
            integrate(p, doc.find_cbf("charger_conflict")->start, 10.0, 1e-3);
        c.require(!trace.infeasible, "charger rollout feasible");
        double min_h1 = 1e18;
        for (const auto& h : trace.h)
            min_h1 = std::min(min_h1, h[0]);
        c.require(min_h1 >= -1e-6, "charger h1 maintained");
        // steady state: the conflicting barrier is dropped
        for (std::size_t k = trace.prefix.size() - 100; k < trace.prefix.size(); ++k)
            if (trace.prefix[k] != 1) {
                c.require(false, "steady-state prefix != 1");
                break;
            }
        // and the trace settles at the boundary point nearest the charger
        const Vec& last = trace.x.back();
        c.require(std::fabs(last[0] - 1.0) < 0.05 && std::fabs(last[1]) < 0.05,
                  "settles nearest the charger");
    }

    {
        const CbfProblem p = build_cbf_problem(*doc.find_cbf("disk"));
        Rng rng(777);
        std::uniform_real_distribution<double> coord(-1.2, 1.2);
        std::uniform_real_distribution<double> ctrl(-0.25, 0.25);
        double worst_kkt = 0;
        for (int round = 0; round < 10000; ++round) {
            const Vec x{coord(rng), coord(rng)};
            const Vec w{ctrl(rng), ctrl(rng)};
            PrefixResult prefix;
            try {
                prefix = feasible_prefix(p, x);
            } catch (const SafetyInfeasible&) {
                continue;
            }
            const QpSolution sol = solve_projection_qp(prefix.set, w);

            std::vector<Halfspace> rows = prefix.set.rows;
            for (std::size_t k = 0; k < prefix.set.lo.size(); ++k) {
                Vec e(prefix.set.lo.size(), 0.0);
                e[k] = 1.0;
                rows.push_back({e, prefix.set.lo[k]});
                Vec ne(prefix.set.lo.size(), 0.0);
                ne[k] = -1.0;
                rows.push_back({ne, -prefix.set.hi[k]});
            }
            Vec residual(sol.u.size());
            for (std::size_t i = 0; i < sol.u.size(); ++i)
                residual[i] = sol.u[i] - w[i];
            for (std::size_t r = 0; r < sol.active.size(); ++r) {
                double tight = -rows[sol.active[r]].b;
                for (std::size_t i = 0; i < sol.u.size(); ++i) {
                    residual[i] -= sol.lambda[r] * rows[sol.active[r]].a[i];
                    tight += rows[sol.active[r]].a[i] * sol.u[i];
                }
                worst_kkt = std::max(worst_kkt, std::fabs(tight));
                worst_kkt = std::max(worst_kkt, std::max(0.0, -sol.lambda[r]));
            }
            for (double v : residual)
                worst_kkt = std::max(worst_kkt, std::fabs(v));
        }
        c.require(worst_kkt <= 1e-7,
                  "KKT residual <= 1e-7 (got " + std::to_string(worst_kkt) + ")");
    }
}

// --- criterion 9: parser robustness -------------------------------------------

void criterion_parser(Ctx& c) {
    Rng rng(31415);
    int failures = 0;
    for (int round = 0; round < 1000; ++round) {
        const Document doc = random_document(rng);
        const std::string text = serialize(doc);
        const ParseResult again = parse(text);
        if (!again.ok() || !structurally_equal(doc, again.doc))
            ++failures;
    }
    c.require(failures == 0, std::to_string(failures) + " round-trip failures");

    std::uniform_int_distribution<int> len(0, 48);
    std::uniform_int_distribution<int> byte(0, 255);
    std::string buf;
    for (int round = 0; round < 1000000; ++round) {
        buf.clear();
        const int n = len(rng);
        for (int i = 0; i < n; ++i)
            buf.push_back(char(byte(rng)));
        const ParseResult r = parse(buf); // must return diagnostics, never crash
        (void)r;
    }
    c.require(true, "");
}

struct Criterion {
    int id;
    const char* title;
    std::function<void(Ctx&)> run;
    double budget_seconds; // 0 = unbounded
};

} // namespace

int main() {
    const Criterion criteria[] = {
        {1, "region tables reproduced exactly", criterion_tables, 1.0},
        {2, "operating-region partitions on 1000 random trees", [](Ctx& c) { criterion_partitions(c, false); },
         0},
        {3, "operating regions equal the tick oracle", [](Ctx& c) { criterion_partitions(c, true); },
         0},
        {4, "convergence theorem end to end", criterion_theorem, 0},
        {5, "probabilistic transition bounds", criterion_probabilistic, 10.0},
        {6, "backchained synthesis", criterion_synthesis, 0},
        {7, "decision-structure complexity", criterion_complexity, 0},
        {8, "prioritized barrier filter", criterion_cbf, 30.0},
        {9, "parser round-trip and fuzzing", criterion_parser, 0},
    };

    bool all_ok = true;
    for (const auto& criterion : criteria) {
        Ctx ctx;
        const auto start = std::chrono::steady_clock::now();
        try {
            criterion.run(ctx);
        } catch (const std::exception& e) {
            ctx.require(false, std::string("exception: ") + e.what());
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (criterion.budget_seconds > 0 && seconds > criterion.budget_seconds)
            ctx.require(false, "runtime " + std::to_string(seconds) + "s over budget");

        all_ok = all_ok && ctx.ok;
        std::printf("[%d] %s  %s (%.2fs)%s%s\n", criterion.id, ctx.ok ? "PASS" : "FAIL",
                    criterion.title, seconds, ctx.log.str().empty() ? "" : " -- ",
                    ctx.log.str().c_str());
    }
    return all_ok ? 0 : 1;
}
