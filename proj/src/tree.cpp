#include "btcalc/tree.hpp"

#include "btcalc/sweep.hpp"

#include <algorithm>
#include <unordered_set>

namespace btcalc {

const char* to_string(Status s) {
    switch (s) {
    case Status::Running:
        return "running";
    case Status::Success:
        return "success";
    case Status::Failure:
        return "failure";
    }
    return "?";
}

const char* to_string(StopReason r) {
    switch (r) {
    case StopReason::ReachedSuccess:
        return "reached-success";
    case StopReason::ReachedFailure:
        return "reached-failure";
    case StopReason::StepLimit:
        return "step-limit";
    case StopReason::CycleDetected:
        return "cycle-detected";
    }
    return "?";
}

NodeSpec NodeSpec::sequence(std::vector<NodeSpec> children) {
    NodeSpec n;
    n.kind = NodeKind::Sequence;
    n.children = std::move(children);
    return n;
}

NodeSpec NodeSpec::fallback(std::vector<NodeSpec> children) {
    NodeSpec n;
    n.kind = NodeKind::Fallback;
    n.children = std::move(children);
    return n;
}

NodeSpec NodeSpec::condition(Predicate p) {
    NodeSpec n;
    n.kind = NodeKind::Condition;
    n.success = std::move(p);
    return n;
}

NodeSpec NodeSpec::leaf(std::string action) {
    NodeSpec n;
    n.kind = NodeKind::Leaf;
    n.action = std::move(action);
    return n;
}

NodeSpec NodeSpec::leaf(std::string action, Predicate s, Predicate f) {
    NodeSpec n = leaf(std::move(action));
    n.success = std::move(s);
    n.failure = std::move(f);
    return n;
}

namespace {

void flatten(const WorldModel& model, const NodeSpec& spec, std::vector<Node>& nodes, int parent,
             int left_sibling) {
    Node n;
    n.kind = spec.kind;
    n.id = int(nodes.size());
    n.parent = parent;
    n.left_sibling = left_sibling;
    n.name = spec.name;
    n.double_stroked = spec.double_stroked;

    switch (spec.kind) {
    case NodeKind::Sequence:
    case NodeKind::Fallback: {
        if (spec.children.size() < 2)
            throw Error("interior node needs at least 2 children");
        break;
    }
    case NodeKind::Condition: {
        if (!spec.success)
            throw Error("condition node needs a predicate");
        n.success = *spec.success;
        n.failure = Predicate::negate(*spec.success);
        if (!predicate_valid(model, n.success))
            throw Error("condition predicate references unknown variables");
        if (!spec.action.empty())
            n.action = model.action_index(spec.action); // carried, never executed
        break;
    }
    case NodeKind::Leaf: {
        n.action = model.action_index(spec.action);
        if (n.action < 0)
            throw Error("leaf action '" + spec.action + "' not found in model");
        if (spec.success)
            n.success = *spec.success;
        else if (model.action(n.action).post)
            n.success = *model.action(n.action).post;
        else
            n.success = Predicate::constant(false);
        n.failure = spec.failure ? *spec.failure : Predicate::constant(false);
        if (!predicate_valid(model, n.success) || !predicate_valid(model, n.failure))
            throw Error("leaf predicate references unknown variables");
        break;
    }
    }

    const int self = n.id;
    nodes.push_back(std::move(n));
    int prev = -1;
    for (const auto& c : spec.children) {
        const int child_id = int(nodes.size());
        nodes[self].children.push_back(child_id);
        flatten(model, c, nodes, self, prev);
        prev = child_id;
    }
}

} // namespace

Tree Tree::build(std::shared_ptr<const WorldModel> model, const NodeSpec& root, std::string name) {
    if (!model || !model->finalized())
        throw Error("tree needs a finalized model");
    Tree t;
    t.model_ = std::move(model);
    t.name_ = std::move(name);
    flatten(*t.model_, root, t.nodes_, -1, -1);

    // Leaf S/F must be disjoint, checked exhaustively.
    for (const auto& n : t.nodes_) {
        if (n.kind != NodeKind::Leaf)
            continue;
        const Region overlap = region_from_predicate(*t.model_, n.success) &
                               region_from_predicate(*t.model_, n.failure);
        if (!overlap.empty())
            throw Error("leaf '" + (n.name.empty() ? t.model_->actions()[n.action].id : n.name) +
                        "' has overlapping success and failure predicates on " +
                        t.model_->format_state(*overlap.first()));
    }
    return t;
}

std::vector<int> Tree::leaves() const {
    std::vector<int> out;
    for (const auto& n : nodes_)
        if (n.is_leaf_like())
            out.push_back(n.id);
    return out;
}

bool Tree::is_descendant_of(int node, int ancestor) const {
    while (node != -1) {
        if (node == ancestor)
            return true;
        node = nodes_[node].parent;
    }
    return false;
}

NodeSpec Tree::to_spec(int id) const {
    const Node& n = nodes_.at(id);
    NodeSpec s;
    s.kind = n.kind;
    s.name = n.name;
    s.double_stroked = n.double_stroked;
    if (n.kind == NodeKind::Condition) {
        s.success = n.success;
        if (n.action >= 0)
            s.action = model_->actions()[n.action].id;
    } else if (n.kind == NodeKind::Leaf) {
        s.action = model_->actions()[n.action].id;
        s.success = n.success;
        s.failure = n.failure;
    }
    for (int c : n.children)
        s.children.push_back(to_spec(c));
    return s;
}

NodeSpec Tree::to_spec() const { return to_spec(0); }

// ---------------------------------------------------------------------------

namespace {

TickResult tick_node(const Tree& t, int id, StateIndex s) {
    const Node& n = t.node(id);
    switch (n.kind) {
    case NodeKind::Condition:
        return {eval_predicate(t.model(), n.success, s) ? Status::Success : Status::Failure, -1};
    case NodeKind::Leaf:
        if (eval_predicate(t.model(), n.success, s))
            return {Status::Success, -1};
        if (eval_predicate(t.model(), n.failure, s))
            return {Status::Failure, -1};
        return {Status::Running, id};
    case NodeKind::Sequence: {
        TickResult r{Status::Success, -1};
        for (int c : n.children) {
            r = tick_node(t, c, s);
            if (r.status != Status::Success)
                return r;
        }
        return r;
    }
    case NodeKind::Fallback: {
        TickResult r{Status::Failure, -1};
        for (int c : n.children) {
            r = tick_node(t, c, s);
            if (r.status != Status::Failure)
                return r;
        }
        return r;
    }
    }
    return {Status::Failure, -1};
}

} // namespace

TickResult tick(const Tree& t, StateIndex s) { return tick_node(t, 0, s); }

TickResult tick_subtree(const Tree& t, int root_id, StateIndex s) {
    return tick_node(t, root_id, s);
}

StepResult step_subtree(const Tree& t, int root_id, StateIndex s) {
    const TickResult r = tick_subtree(t, root_id, s);
    if (r.status != Status::Running)
        return {r.status, s, -1};
    const Node& leaf = t.node(r.active_leaf);
    return {Status::Running, apply_action(t.model(), t.model().actions()[leaf.action], s),
            r.active_leaf};
}

StepResult step(const Tree& t, StateIndex s) { return step_subtree(t, 0, s); }

Trace simulate(const Tree& t, StateIndex x0, std::uint64_t max_steps) {
    if (max_steps < 1)
        throw Error("max_steps must be at least 1");
    Trace trace;
    trace.start = x0;
    std::unordered_set<StateIndex> visited;
    StateIndex x = x0;
    for (std::uint64_t k = 0;; ++k) {
        const TickResult r = tick(t, x);
        trace.steps.push_back({x, r.active_leaf, r.status});
        if (r.status == Status::Success) {
            trace.reason = StopReason::ReachedSuccess;
            return trace;
        }
        if (r.status == Status::Failure) {
            trace.reason = StopReason::ReachedFailure;
            return trace;
        }
        if (!visited.insert(x).second) {
            trace.reason = StopReason::CycleDetected;
            return trace;
        }
        if (k == max_steps) {
            trace.reason = StopReason::StepLimit;
            return trace;
        }
        const Node& leaf = t.node(r.active_leaf);
        x = apply_action(t.model(), t.model().actions()[leaf.action], x);
    }
}

std::string auto_name(const Tree& t, int id) {
    const Node& n = t.node(id);
    if (!n.name.empty())
        return n.name;
    switch (n.kind) {
    case NodeKind::Sequence:
        return "seq(" + std::to_string(id) + ")";
    case NodeKind::Fallback:
        return "fall(" + std::to_string(id) + ")";
    case NodeKind::Condition:
        return "cond(" + std::to_string(id) + ")";
    case NodeKind::Leaf:
        return t.model().actions()[n.action].id;
    }
    return std::to_string(id);
}

std::vector<std::string> explain(const Tree& t, StateIndex s) {
    const TickResult r = tick(t, s);
    if (r.status != Status::Running)
        throw Error(std::string("explain requires a running tree (status is ") +
                    to_string(r.status) + ")");
    std::vector<std::string> out;
    for (int id = r.active_leaf; id != -1; id = t.node(id).parent) {
        const bool endpoint = id == r.active_leaf || id == 0;
        if (endpoint || !t.node(id).name.empty())
            out.push_back(auto_name(t, id));
    }
    return out;
}

Tree with_idle_layer(const Tree& t) {
    auto model = std::make_shared<WorldModel>();
    for (const auto& v : t.model().variables()) {
        if (v.is_bool)
            model->add_bool(v.name);
        else
            model->add_enum(v.name, v.values);
    }
    for (const auto& a : t.model().actions())
        model->add_action(a);
    if (t.model().action_index("__idle") < 0)
        model->add_action(ActionSpec{"__idle", {}, {}, std::nullopt});
    model->finalize();

    NodeSpec idle = NodeSpec::leaf("__idle", Predicate::constant(false), Predicate::constant(false));
    idle.name = "idle";
    NodeSpec wrapped = NodeSpec::sequence({
        NodeSpec::fallback({t.to_spec(), idle}),
        idle,
    });
    wrapped.name = t.name().empty() ? "idle-wrapped" : t.name() + " (idle-wrapped)";
    return Tree::build(std::move(model), wrapped, wrapped.name);
}

} // namespace btcalc
