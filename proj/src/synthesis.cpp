#include "btcalc/synthesis.hpp"

#include "btcalc/sweep.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

namespace btcalc {

bool validate_template(const WorldModel& m, const ActionTemplate& tpl, StateIndex* witness) {
    const int action = m.action_index(tpl.action_id);
    if (action < 0)
        throw Error("template action '" + tpl.action_id + "' not found in model");
    const ActionSpec& spec = m.actions()[action];

    Region domain(m, true);
    for (const auto& pre : tpl.preconditions)
        domain &= region_from_predicate(m, pre);
    const Region post = region_from_predicate(m, tpl.postcondition);

    bool ok = true;
    domain.for_each([&](StateIndex start) {
        if (!ok)
            return;
        StateIndex x = start;
        for (StateIndex k = 0; k <= m.state_count(); ++k) {
            if (post.test(x))
                return;
            x = apply_action(m, spec, x);
        }
        ok = false;
        if (witness)
            *witness = start;
    });
    return ok;
}

namespace {

bool achieves(const WorldModel& m, const ActionTemplate& tpl, const Region& goal) {
    return region_from_predicate(m, tpl.postcondition).is_subset_of(goal);
}

std::string predicate_name(const WorldModel& m, const Predicate& p);

std::string predicate_name_rec(const WorldModel& m, const Predicate& p) {
    switch (p.kind) {
    case PredKind::True:
        return "true";
    case PredKind::False:
        return "false";
    case PredKind::Var:
        return m.variables()[p.var].name;
    case PredKind::Eq:
        return m.variables()[p.var].name + "=" + m.variables()[p.var].values[p.value];
    case PredKind::Not:
        return "!" + predicate_name_rec(m, p.args[0]);
    case PredKind::And:
        return predicate_name_rec(m, p.args[0]) + " && " + predicate_name_rec(m, p.args[1]);
    case PredKind::Or:
        return predicate_name_rec(m, p.args[0]) + " || " + predicate_name_rec(m, p.args[1]);
    }
    return "?";
}

std::string predicate_name(const WorldModel& m, const Predicate& p) {
    return predicate_name_rec(m, p);
}

} // namespace

NodeSpec make_sure(const WorldModel& m, const Predicate& goal, const std::string& goal_name,
                   const std::vector<ActionTemplate>& options) {
    const Region goal_region = region_from_predicate(m, goal);
    for (const auto& opt : options) {
        StateIndex witness = 0;
        if (!achieves(m, opt, goal_region))
            throw Error("option '" + opt.action_id + "' does not achieve goal '" + goal_name +
                        "': its postcondition is not contained in the goal");
        if (!validate_template(m, opt, &witness))
            throw Error("option '" + opt.action_id + "' never reaches its postcondition from " +
                        m.format_state(witness));
    }

    NodeSpec check = NodeSpec::condition(goal);
    check.name = goal_name;
    if (options.empty())
        return check;

    std::vector<NodeSpec> children;
    children.push_back(std::move(check));
    for (const auto& opt : options) {
        NodeSpec act = NodeSpec::leaf(opt.action_id);
        if (opt.preconditions.empty()) {
            children.push_back(std::move(act));
            continue;
        }
        std::vector<NodeSpec> seq;
        for (const auto& pre : opt.preconditions) {
            NodeSpec c = NodeSpec::condition(pre);
            c.name = predicate_name(m, pre);
            seq.push_back(std::move(c));
        }
        seq.push_back(std::move(act));
        children.push_back(NodeSpec::sequence(std::move(seq)));
    }
    NodeSpec fragment = NodeSpec::fallback(std::move(children));
    fragment.name = "Make sure " + goal_name;
    fragment.double_stroked = true; // a fallback standing where a condition was
    return fragment;
}

namespace {

struct PendingCondition {
    std::vector<int> path;          // child indices from the root NodeSpec
    std::vector<Region> chain;      // goal regions of enclosing expansions
    std::vector<std::string> chain_names;
    int depth = 0;
};

NodeSpec* resolve(NodeSpec& root, const std::vector<int>& path) {
    NodeSpec* n = &root;
    for (int idx : path)
        n = &n->children[idx];
    return n;
}

/// Elder-sequence-sibling rule: walking up from the condition, an achieving
/// leaf inside an elder sibling of a Sequence ancestor (whose success flows
/// onward) or inside a later sibling of the condition's own Fallback parent
/// (its achieving options) makes replacement pointless.
bool subtree_contains_achiever(const WorldModel& m, const NodeSpec& n, const Region& goal,
                               const std::vector<ActionTemplate>& library) {
    if (n.kind == NodeKind::Leaf) {
        for (const auto& tpl : library)
            if (tpl.action_id == n.action && achieves(m, tpl, goal))
                return true;
        return false;
    }
    for (const auto& c : n.children)
        if (subtree_contains_achiever(m, c, goal, library))
            return true;
    return false;
}

bool already_established(const WorldModel& m, NodeSpec& root, const std::vector<int>& path,
                         const Region& goal, const std::vector<ActionTemplate>& library) {
    // Own fallback parent: later siblings are the achieving options. Own
    // sequence parent: an achieving action anywhere alongside.
    if (!path.empty()) {
        NodeSpec* parent = resolve(root, {path.begin(), path.end() - 1});
        const int pos = path.back();
        if (parent->kind == NodeKind::Fallback) {
            for (std::size_t k = pos + 1; k < parent->children.size(); ++k)
                if (subtree_contains_achiever(m, parent->children[k], goal, library))
                    return true;
        }
        if (parent->kind == NodeKind::Sequence) {
            for (std::size_t k = 0; k < parent->children.size(); ++k)
                if (int(k) != pos &&
                    subtree_contains_achiever(m, parent->children[k], goal, library))
                    return true;
        }
    }
    // Sequence ancestors higher up: elder siblings whose success precedes us.
    for (int up = int(path.size()) - 2; up >= 0; --up) {
        NodeSpec* ancestor = resolve(root, {path.begin(), path.begin() + up});
        if (ancestor->kind != NodeKind::Sequence)
            continue;
        for (int k = 0; k < path[up]; ++k)
            if (subtree_contains_achiever(m, ancestor->children[k], goal, library))
                return true;
    }
    return false;
}

std::vector<ActionTemplate> achieving_options(const WorldModel& m, const Region& goal,
                                              const std::vector<ActionTemplate>& library) {
    std::vector<ActionTemplate> out;
    for (const auto& tpl : library)
        if (achieves(m, tpl, goal))
            out.push_back(tpl);
    return out;
}

} // namespace

Tree backchain(std::shared_ptr<const WorldModel> model, const GoalList& goals,
               const std::vector<ActionTemplate>& library, int max_depth) {
    if (goals.goals.empty())
        throw Error("goal list must be non-empty");
    if (max_depth < 1)
        throw Error("max_depth must be at least 1");
    const WorldModel& m = *model;

    NodeSpec root;
    std::deque<PendingCondition> queue;

    std::vector<NodeSpec> slots;
    for (std::size_t k = 0; k < goals.goals.size(); ++k) {
        NodeSpec c = NodeSpec::condition(goals.goals[k]);
        c.name = k < goals.names.size() && !goals.names[k].empty()
                     ? goals.names[k]
                     : predicate_name(m, goals.goals[k]);
        slots.push_back(std::move(c));
    }
    if (slots.size() == 1) {
        root = std::move(slots[0]);
        queue.push_back({{}, {}, {}, 0});
    } else {
        root = NodeSpec::sequence(std::move(slots));
        root.name = "Make sure top level goals are achieved";
        for (std::size_t k = 0; k < goals.goals.size(); ++k)
            queue.push_back({{int(k)}, {}, {}, 0});
    }

    while (!queue.empty()) {
        PendingCondition item = std::move(queue.front());
        queue.pop_front();
        NodeSpec* node = resolve(root, item.path);
        const Region goal = region_from_predicate(m, *node->success);
        const auto options = achieving_options(m, goal, library);
        if (options.empty())
            continue;
        if (already_established(m, root, item.path, goal, library))
            continue;

        bool cyclic = false;
        for (const auto& seen : item.chain)
            cyclic = cyclic || seen == goal;

        if (item.depth >= max_depth) {
            if (cyclic) {
                std::ostringstream msg;
                msg << "cyclic achievement chain exceeds depth " << max_depth << ":";
                for (const auto& n : item.chain_names)
                    msg << " " << n << " ->";
                msg << " " << node->name;
                throw Error(msg.str());
            }
            node->double_stroked = true; // still replaceable, left as a condition
            continue;
        }

        const std::string goal_name = node->name;
        NodeSpec fragment = make_sure(m, *node->success, goal_name, options);
        *node = std::move(fragment);

        // Queue the fresh precondition conditions, left to right.
        auto chain = item.chain;
        chain.push_back(goal);
        auto chain_names = item.chain_names;
        chain_names.push_back(goal_name);
        for (std::size_t c = 1; c < node->children.size(); ++c) {
            const NodeSpec& option = node->children[c];
            if (option.kind != NodeKind::Sequence)
                continue;
            for (std::size_t k = 0; k + 1 < option.children.size(); ++k) {
                auto path = item.path;
                path.push_back(int(c));
                path.push_back(int(k));
                queue.push_back({std::move(path), chain, chain_names, item.depth + 1});
            }
        }
    }

    return Tree::build(std::move(model), root, "backchained");
}

std::vector<int> expandable_conditions(const Tree& t, const std::vector<ActionTemplate>& library) {
    const WorldModel& m = t.model();
    std::vector<int> out;
    for (const auto& n : t.nodes()) {
        if (n.kind != NodeKind::Condition)
            continue;
        const Region goal = region_from_predicate(m, n.success);
        if (achieving_options(m, goal, library).empty())
            continue;

        // Re-create the elder-sequence-sibling / own-fallback rule on the
        // analyzed tree.
        bool established = false;
        int child = n.id;
        for (int parent = n.parent; parent != -1 && !established;
             child = parent, parent = t.node(parent).parent) {
            const Node& p = t.node(parent);
            const auto& kids = p.children;
            const auto pos = std::size_t(std::find(kids.begin(), kids.end(), child) - kids.begin());
            if (p.kind == NodeKind::Fallback && child == n.id) {
                // the condition's own options
                for (std::size_t k = pos + 1; k < kids.size() && !established; ++k)
                    established = subtree_contains_achiever(m, t.to_spec(kids[k]), goal, library);
            } else if (p.kind == NodeKind::Sequence && child == n.id) {
                for (std::size_t k = 0; k < kids.size() && !established; ++k)
                    established = k != pos && subtree_contains_achiever(m, t.to_spec(kids[k]),
                                                                        goal, library);
            } else if (p.kind == NodeKind::Sequence) {
                // elder siblings of an enclosing sequence: already achieved
                // when control reaches this branch
                for (std::size_t k = 0; k < pos && !established; ++k)
                    established = subtree_contains_achiever(m, t.to_spec(kids[k]), goal, library);
            }
        }
        if (!established)
            out.push_back(n.id);
    }
    return out;
}

} // namespace btcalc
