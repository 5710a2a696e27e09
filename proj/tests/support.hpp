#pragma once

#include "btcalc/dsl.hpp"
#include "btcalc/model.hpp"
#include "btcalc/sweep.hpp"
#include "btcalc/tree.hpp"

#include <functional>

#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace btcalc::testing {

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline std::string data_path(const std::string& name) {
    return std::string(BTCALC_DATA_DIR) + "/" + name;
}

inline Document load_document(const std::string& name) {
    ParseResult result = parse(read_file(data_path(name)));
    if (!result.ok()) {
        std::string msg = "fixture " + name + " failed to parse:";
        for (const auto& d : result.diagnostics)
            msg += "\n  " + d.render();
        throw Error(msg);
    }
    return std::move(result.doc);
}

// --- random generation ------------------------------------------------------

using Rng = std::mt19937_64;

inline int rand_int(Rng& rng, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline Predicate random_predicate(Rng& rng, int var_count, int depth = 3) {
    if (depth == 0 || rand_int(rng, 0, 3) == 0) {
        switch (rand_int(rng, 0, 5)) {
        case 0:
            return Predicate::constant(true);
        case 1:
            return Predicate::constant(false);
        default:
            return Predicate::var_true(rand_int(rng, 0, var_count - 1));
        }
    }
    switch (rand_int(rng, 0, 2)) {
    case 0:
        return Predicate::negate(random_predicate(rng, var_count, depth - 1));
    case 1:
        return Predicate::conj(random_predicate(rng, var_count, depth - 1),
                               random_predicate(rng, var_count, depth - 1));
    default:
        return Predicate::disj(random_predicate(rng, var_count, depth - 1),
                               random_predicate(rng, var_count, depth - 1));
    }
}

/// Boolean model with `vars` variables and `actions` random conditional
/// toggle actions.
inline std::shared_ptr<WorldModel> random_model(Rng& rng, int vars, int actions) {
    auto model = std::make_shared<WorldModel>();
    for (int i = 0; i < vars; ++i)
        model->add_bool("v" + std::to_string(i));
    for (int a = 0; a < actions; ++a) {
        ActionSpec spec;
        spec.id = "a" + std::to_string(a);
        const int assigns = rand_int(rng, 1, 3);
        for (int k = 0; k < assigns; ++k) {
            Assignment asg;
            asg.var = rand_int(rng, 0, vars - 1);
            if (rand_int(rng, 0, 1)) {
                asg.then_value = rand_int(rng, 0, 1);
            } else {
                asg.condition = random_predicate(rng, vars, 2);
                asg.then_value = rand_int(rng, 0, 1);
                asg.else_value = rand_int(rng, 0, 1);
            }
            spec.assigns.push_back(std::move(asg));
        }
        if (rand_int(rng, 0, 1))
            spec.post = random_predicate(rng, vars, 2);
        model->add_action(std::move(spec));
    }
    model->finalize();
    return model;
}

/// Leaf S/F are forced disjoint by conjoining the failure predicate with the
/// success predicate's negation.
inline NodeSpec random_node(Rng& rng, const WorldModel& m, int max_nodes, int& budget) {
    const int vars = int(m.variables().size());
    --budget;
    const bool interior = budget >= 2 && rand_int(rng, 0, 2) > 0;
    if (!interior) {
        if (rand_int(rng, 0, 1) == 0)
            return NodeSpec::condition(random_predicate(rng, vars));
        const int action = rand_int(rng, 0, int(m.actions().size()) - 1);
        Predicate s = random_predicate(rng, vars);
        Predicate f = Predicate::conj(random_predicate(rng, vars), Predicate::negate(s));
        return NodeSpec::leaf(m.actions()[action].id, std::move(s), std::move(f));
    }
    const int arity = std::min(budget, rand_int(rng, 2, 4));
    std::vector<NodeSpec> children;
    for (int i = 0; i < arity; ++i)
        children.push_back(random_node(rng, m, max_nodes, budget));
    return rand_int(rng, 0, 1) ? NodeSpec::sequence(std::move(children))
                               : NodeSpec::fallback(std::move(children));
}

inline Tree random_tree(Rng& rng, std::shared_ptr<const WorldModel> model, int max_nodes) {
    // The budget can overshoot by a couple of forced leaves; retry in that case.
    while (true) {
        int budget = std::max(3, max_nodes) - 1; // root
        std::vector<NodeSpec> children;
        const int arity = std::min(budget, rand_int(rng, 2, 4));
        for (int i = 0; i < arity; ++i)
            children.push_back(random_node(rng, *model, max_nodes, budget));
        NodeSpec root = rand_int(rng, 0, 1) ? NodeSpec::sequence(std::move(children))
                                            : NodeSpec::fallback(std::move(children));
        Tree t = Tree::build(model, root, "random");
        if (t.node_count() <= max_nodes)
            return t;
    }
}

/// Random but valid document for round-trip tests.
inline Document random_document(Rng& rng) {
    Document doc;
    const int vars = rand_int(rng, 1, 6);
    const int actions = rand_int(rng, 1, 4);
    auto model = std::make_shared<WorldModel>();
    for (int i = 0; i < vars; ++i) {
        if (rand_int(rng, 0, 3) == 0) {
            std::vector<std::string> values;
            const int n = rand_int(rng, 2, 4);
            for (int v = 0; v < n; ++v)
                values.push_back("e" + std::to_string(v));
            model->add_enum("v" + std::to_string(i), values);
        } else {
            model->add_bool("v" + std::to_string(i));
        }
    }
    auto random_pred_resolved = [&](int depth) {
        // only boolean atoms over boolean vars; enum vars via equality
        std::function<Predicate(int)> gen = [&](int d) -> Predicate {
            if (d == 0 || rand_int(rng, 0, 3) == 0) {
                const int v = rand_int(rng, 0, vars - 1);
                if (model->variables()[v].is_bool)
                    return rand_int(rng, 0, 1) ? Predicate::var_true(v)
                                               : Predicate::constant(rand_int(rng, 0, 1));
                return Predicate::equals(
                    v, rand_int(rng, 0, int(model->variables()[v].size()) - 1));
            }
            switch (rand_int(rng, 0, 2)) {
            case 0:
                return Predicate::negate(gen(d - 1));
            case 1:
                return Predicate::conj(gen(d - 1), gen(d - 1));
            default:
                return Predicate::disj(gen(d - 1), gen(d - 1));
            }
        };
        return gen(depth);
    };
    for (int a = 0; a < actions; ++a) {
        ActionSpec spec;
        spec.id = "act" + std::to_string(a);
        const int pres = rand_int(rng, 0, 2);
        for (int k = 0; k < pres; ++k)
            spec.preconditions.push_back(random_pred_resolved(2));
        const int assigns = rand_int(rng, 1, 3);
        for (int k = 0; k < assigns; ++k) {
            Assignment asg;
            asg.var = rand_int(rng, 0, vars - 1);
            const int domain = int(model->variables()[asg.var].size());
            if (rand_int(rng, 0, 1)) {
                asg.then_value = rand_int(rng, 0, domain - 1);
            } else {
                asg.condition = random_pred_resolved(2);
                asg.then_value = rand_int(rng, 0, domain - 1);
                asg.else_value = rand_int(rng, 0, domain - 1);
            }
            spec.assigns.push_back(std::move(asg));
        }
        if (rand_int(rng, 0, 1))
            spec.post = random_pred_resolved(2);
        model->add_action(std::move(spec));
    }
    model->finalize();
    doc.model = model;
    doc.model_name = "world";

    const int trees = rand_int(rng, 0, 2);
    Rng tree_rng(rng());
    for (int t = 0; t < trees; ++t) {
        std::function<NodeSpec(int&)> gen_node = [&](int& budget) -> NodeSpec {
            --budget;
            if (budget < 2 || rand_int(tree_rng, 0, 2) == 0) {
                if (rand_int(tree_rng, 0, 1) == 0)
                    return NodeSpec::condition(random_pred_resolved(2));
                NodeSpec leaf = NodeSpec::leaf(
                    model->actions()[rand_int(tree_rng, 0, actions - 1)].id);
                if (rand_int(tree_rng, 0, 1)) {
                    Predicate s = random_pred_resolved(2);
                    leaf.failure = Predicate::conj(random_pred_resolved(2),
                                                   Predicate::negate(s));
                    leaf.success = std::move(s);
                }
                if (rand_int(tree_rng, 0, 2) == 0)
                    leaf.name = "leaf " + std::to_string(budget);
                return leaf;
            }
            const int arity = std::min(budget, rand_int(tree_rng, 2, 3));
            std::vector<NodeSpec> children;
            for (int i = 0; i < arity; ++i)
                children.push_back(gen_node(budget));
            NodeSpec n = rand_int(tree_rng, 0, 1) ? NodeSpec::sequence(std::move(children))
                                                  : NodeSpec::fallback(std::move(children));
            if (rand_int(tree_rng, 0, 2) == 0)
                n.name = "node " + std::to_string(budget);
            return n;
        };
        int budget = rand_int(rng, 3, 12);
        std::vector<NodeSpec> children;
        budget -= 1;
        const int arity = std::min(std::max(budget, 2), rand_int(tree_rng, 2, 3));
        for (int i = 0; i < arity; ++i)
            children.push_back(gen_node(budget));
        TreeDecl decl;
        decl.name = "tree" + std::to_string(t);
        decl.root = NodeSpec::sequence(std::move(children));
        doc.trees.push_back(std::move(decl));
    }

    if (rand_int(rng, 0, 1)) {
        GoalsDecl g;
        g.name = "g0";
        const int n = rand_int(rng, 1, 3);
        for (int k = 0; k < n; ++k)
            g.goals.push_back(random_pred_resolved(2));
        doc.goals.push_back(std::move(g));
    }
    if (!doc.trees.empty() && rand_int(rng, 0, 1)) {
        CheckDecl c;
        c.name = "c0";
        c.tree = doc.trees[0].name;
        if (rand_int(rng, 0, 1))
            c.level = {0};
        if (rand_int(rng, 0, 1))
            c.cbar = random_pred_resolved(2);
        doc.checks.push_back(std::move(c));
    }
    if (rand_int(rng, 0, 2) == 0) {
        CbfScenario s;
        s.name = "s0";
        s.state_dim = rand_int(rng, 1, 3);
        s.control_dim = rand_int(rng, 1, 2);
        for (int k = 0; k < s.control_dim; ++k) {
            s.lo.push_back(-1.0 - k);
            s.hi.push_back(1.0 + k);
        }
        for (int k = 0; k < s.state_dim; ++k)
            s.dynamics.push_back(Expr::control(rand_int(rng, 0, s.control_dim - 1)));
        s.barriers.push_back(
            Expr::sub(Expr::constant(1.0), Expr::pow(Expr::state(0), 2)));
        s.alpha = 1.0 + rand_int(rng, 0, 9);
        for (int k = 0; k < s.control_dim; ++k)
            s.nominal.push_back(Expr::constant(0.25 * (k + 1)));
        s.start.assign(std::size_t(s.state_dim), 0.0);
        doc.cbfs.push_back(std::move(s));
    }
    return doc;
}

} // namespace btcalc::testing
