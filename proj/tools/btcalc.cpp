#include "btcalc/convergence.hpp"
#include "btcalc/decision.hpp"
#include "btcalc/dot.hpp"
#include "btcalc/dsl.hpp"
#include "btcalc/report.hpp"
#include "btcalc/sweep.hpp"
#include "btcalc/synthesis.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNegative = 1; // analysis negative: violation found / not proven
constexpr int kExitUsage = 2;    // usage or parse error

struct Loaded {
    btcalc::Document doc;
    std::string hash;
};

Loaded load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw btcalc::Error("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();

    btcalc::ParseResult result = btcalc::parse(text);
    for (const auto& d : result.diagnostics)
        std::cerr << path << ":" << d.render() << "\n";
    if (!result.ok())
        throw btcalc::Error("parse failed");
    return {std::move(result.doc), btcalc::content_hash(text)};
}

void emit(const btcalc::json& j) { std::cout << j.dump(2) << "\n"; }

btcalc::ConvergenceProblem problem_from_check(const btcalc::Tree& tree,
                                              const btcalc::CheckDecl& decl) {
    std::vector<int> level = decl.level;
    if (level.empty()) {
        if (!decl.labeling.empty())
            level = decl.labeling;
        else
            level = tree.leaves();
    }
    std::vector<int> labeling = decl.labeling.empty() ? level : decl.labeling;

    btcalc::ConvergenceProblem p;
    p.tree = &tree;
    p.level = level;
    p.labeling = labeling;
    p.cbar = decl.cbar ? btcalc::region_from_predicate(tree.model(), *decl.cbar)
                       : btcalc::Region(tree.model(), true);
    if (p.cbar.empty())
        throw btcalc::Error("external constraint region is empty");
    return p;
}

std::uint64_t default_seed() {
    if (const char* env = std::getenv("BTCALC_SEED"))
        return std::strtoull(env, nullptr, 0);
    return 0x42;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"behavior tree region calculus and analysis toolkit"};
    app.require_subcommand(1);

    std::string file, tree_name, check_name, goals_name, scenario_name, from, csv_out;
    bool as_json = false, as_dot = false, with_complexity = false, do_explain = false;
    std::uint64_t max_steps = 1000;
    int depth = 3;
    double duration = 10.0, dt = 1e-3;
    int mc_n = 1;
    double mc_p = 0.9;
    std::uint64_t mc_trials = 100000, mc_seed = default_seed();
    std::string mc_mode = "uniform";

    auto* parse_cmd = app.add_subcommand("parse", "validate a document");
    parse_cmd->add_option("file", file)->required();

    auto* regions_cmd = app.add_subcommand("regions", "per-node region analysis");
    regions_cmd->add_option("file", file)->required();
    regions_cmd->add_option("--tree", tree_name)->required();
    regions_cmd->add_flag("--json", as_json, "emit the full JSON report (default)");

    auto* check_cmd = app.add_subcommand("check", "convergence certificate");
    check_cmd->add_option("file", file)->required();
    check_cmd->add_option("--check", check_name)->required();

    auto* sim_cmd = app.add_subcommand("simulate", "closed-loop simulation");
    sim_cmd->add_option("file", file)->required();
    sim_cmd->add_option("--tree", tree_name)->required();
    sim_cmd->add_option("--from", from, "start state, e.g. var=true,mode=idle")->required();
    sim_cmd->add_option("--max-steps", max_steps);
    sim_cmd->add_flag("--explain", do_explain, "print the active branch at every step");

    auto* synth_cmd = app.add_subcommand("synth", "backchain a tree from goals");
    synth_cmd->add_option("file", file)->required();
    synth_cmd->add_option("--goals", goals_name)->required();
    synth_cmd->add_option("--depth", depth);

    bool as_decomposition = false;
    auto* ds_cmd = app.add_subcommand("ds", "decision structure analysis");
    ds_cmd->add_option("file", file)->required();
    ds_cmd->add_option("--tree", tree_name)->required();
    ds_cmd->add_flag("--complexity", with_complexity);
    ds_cmd->add_flag("--dot", as_dot);
    ds_cmd->add_flag("--decomposition", as_decomposition,
                     "with --dot: render the modular decomposition");

    auto* cbf_cmd = app.add_subcommand("cbf", "barrier-filtered rollout");
    cbf_cmd->add_option("file", file)->required();
    cbf_cmd->add_option("--scenario", scenario_name)->required();
    cbf_cmd->add_option("--T", duration);
    cbf_cmd->add_option("--dt", dt);
    cbf_cmd->add_option("--csv", csv_out, "write the trace as CSV to this path");

    auto* mc_cmd = app.add_subcommand("montecarlo", "probabilistic chain statistics");
    mc_cmd->add_option("--n", mc_n)->required();
    mc_cmd->add_option("--p", mc_p)->required();
    mc_cmd->add_option("--trials", mc_trials);
    mc_cmd->add_option("--seed", mc_seed);
    mc_cmd->add_option("--regress", mc_mode, "uniform|worst");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (parse_cmd->parsed()) {
            load(file);
            std::cout << "ok\n";
            return kExitOk;
        }

        if (regions_cmd->parsed()) {
            const Loaded in = load(file);
            const btcalc::Tree tree = btcalc::build_tree(in.doc, tree_name);
            const btcalc::RegionMap map = btcalc::compute_regions(tree);
            const btcalc::PartitionReport partition = btcalc::verify_partition(tree, map);
            emit(btcalc::regions_report(tree, map, partition, in.hash));
            return partition.ok() ? kExitOk : kExitNegative;
        }

        if (check_cmd->parsed()) {
            const Loaded in = load(file);
            const btcalc::CheckDecl* decl = in.doc.find_check(check_name);
            if (!decl)
                throw btcalc::Error("check '" + check_name + "' not found");
            const btcalc::Tree tree = btcalc::build_tree(in.doc, decl->tree);
            const btcalc::ConvergenceProblem problem = problem_from_check(tree, *decl);
            const btcalc::ConvergenceCertificate cert = btcalc::check_theorem(problem);
            emit(btcalc::certificate_report(tree, problem, cert, in.hash));
            return cert.verdict == btcalc::Verdict::Proven ? kExitOk : kExitNegative;
        }

        if (sim_cmd->parsed()) {
            const Loaded in = load(file);
            const btcalc::Tree tree = btcalc::build_tree(in.doc, tree_name);
            const btcalc::StateIndex x0 = tree.model().parse_assignment(from);
            const btcalc::Trace trace = btcalc::simulate(tree, x0, max_steps);
            btcalc::json report = btcalc::trace_report(tree, trace, in.hash);
            if (do_explain) {
                btcalc::json chains = btcalc::json::array();
                for (const auto& s : trace.steps) {
                    if (s.status != btcalc::Status::Running)
                        continue;
                    chains.push_back(btcalc::explain(tree, s.state));
                }
                report["explain"] = chains;
            }
            emit(report);
            return trace.reason == btcalc::StopReason::ReachedFailure ||
                           trace.reason == btcalc::StopReason::CycleDetected
                       ? kExitNegative
                       : kExitOk;
        }

        if (synth_cmd->parsed()) {
            const Loaded in = load(file);
            const btcalc::GoalsDecl* goals = in.doc.find_goals(goals_name);
            if (!goals)
                throw btcalc::Error("goals '" + goals_name + "' not found");
            btcalc::GoalList list;
            list.goals = goals->goals;

            std::vector<btcalc::ActionTemplate> library;
            for (const auto& a : in.doc.model->actions()) {
                if (!a.post)
                    continue;
                library.push_back({a.id, a.preconditions, *a.post});
            }
            const btcalc::Tree tree =
                btcalc::backchain(in.doc.model, list, library, depth);

            btcalc::Document out;
            out.model = in.doc.model;
            out.model_name = in.doc.model_name;
            out.trees.push_back({goals_name + "_tree", tree.to_spec()});
            std::cout << btcalc::serialize(out);
            return kExitOk;
        }

        if (ds_cmd->parsed()) {
            const Loaded in = load(file);
            const btcalc::Tree tree = btcalc::build_tree(in.doc, tree_name);
            const btcalc::DecisionStructure ds = btcalc::compile_to_ds(tree);
            if (as_dot) {
                if (as_decomposition)
                    std::cout << btcalc::export_decomposition_dot(btcalc::module_decomposition(ds));
                else
                    std::cout << btcalc::export_ds_dot(ds);
                return kExitOk;
            }
            emit(btcalc::ds_report(tree, ds, with_complexity, in.hash));
            return kExitOk;
        }

        if (cbf_cmd->parsed()) {
            const Loaded in = load(file);
            const btcalc::CbfScenario* scenario = in.doc.find_cbf(scenario_name);
            if (!scenario)
                throw btcalc::Error("cbf scenario '" + scenario_name + "' not found");
            const btcalc::CbfProblem problem = btcalc::build_cbf_problem(*scenario);
            const btcalc::ContinuousTrace trace =
                btcalc::integrate(problem, scenario->start, duration, dt);
            if (!csv_out.empty()) {
                std::ofstream out(csv_out, std::ios::binary);
                out << btcalc::trace_csv(trace);
                std::cout << "wrote " << csv_out << " (" << trace.t.size() << " samples)\n";
            } else {
                emit(btcalc::cbf_trace_json(trace, in.hash));
            }
            return trace.infeasible ? kExitNegative : kExitOk;
        }

        if (mc_cmd->parsed()) {
            btcalc::ProbabilisticChain chain;
            chain.n = mc_n;
            chain.p.assign(std::size_t(mc_n), mc_p);
            chain.seed = mc_seed;
            const btcalc::RegressMode mode = mc_mode == "worst"
                                                 ? btcalc::RegressMode::WorstCase
                                                 : btcalc::RegressMode::Uniform;
            const btcalc::ChainStats stats = btcalc::monte_carlo_chain(chain, mc_trials, mode);
            emit(btcalc::montecarlo_report(chain, stats, mode));
            return stats.e_bound_ok ? kExitOk : kExitNegative;
        }
    } catch (const btcalc::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
