#pragma once

#include "btcalc/model.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace btcalc {

enum class Status { Running, Success, Failure };

const char* to_string(Status s);

enum class NodeKind { Sequence, Fallback, Leaf, Condition };

/// Builder form of a tree node, used by the parser, the synthesizer and
/// tests. Converted to the flat analyzed form by Tree::build.
struct NodeSpec {
    NodeKind kind = NodeKind::Condition;
    std::string name;
    bool double_stroked = false;
    std::vector<NodeSpec> children;
    std::string action;                 // Leaf: required; Condition: optional, never executed
    std::optional<Predicate> success;   // Leaf S override / Condition predicate
    std::optional<Predicate> failure;   // Leaf F override

    static NodeSpec sequence(std::vector<NodeSpec> children);
    static NodeSpec fallback(std::vector<NodeSpec> children);
    static NodeSpec condition(Predicate p);
    static NodeSpec leaf(std::string action);
    static NodeSpec leaf(std::string action, Predicate s, Predicate f);
    NodeSpec named(std::string n) && {
        name = std::move(n);
        return std::move(*this);
    }
};

/// Analyzed node: lives in the tree's preorder arena, children by id.
struct Node {
    NodeKind kind;
    int id = -1;
    int parent = -1;          // -1 at root
    int left_sibling = -1;    // closest elder sibling, -1 if leftmost
    std::vector<int> children;
    std::string name;         // display name, "" if unnamed
    bool double_stroked = false;
    int action = -1;          // model action index (Leaf; optional on Condition)
    Predicate success;        // S predicate (Condition: the predicate itself)
    Predicate failure;        // F predicate (Condition: complement of predicate)

    bool is_interior() const { return kind == NodeKind::Sequence || kind == NodeKind::Fallback; }
    bool is_leaf_like() const { return !is_interior(); }
};

class Tree {
public:
    /// Flattens and validates a NodeSpec against the model. Node ids are the
    /// depth-first preorder numbering, contiguous from 0 at the root.
    static Tree build(std::shared_ptr<const WorldModel> model, const NodeSpec& root,
                      std::string name = "");

    const WorldModel& model() const { return *model_; }
    std::shared_ptr<const WorldModel> model_ptr() const { return model_; }
    const std::string& name() const { return name_; }
    int node_count() const { return int(nodes_.size()); }
    const Node& node(int id) const { return nodes_.at(id); }
    const std::vector<Node>& nodes() const { return nodes_; }
    const Node& root() const { return nodes_.front(); }

    std::vector<int> leaves() const; // leaf-like node ids in preorder
    bool is_descendant_of(int node, int ancestor) const;
    NodeSpec to_spec() const;
    NodeSpec to_spec(int id) const;

private:
    std::shared_ptr<const WorldModel> model_;
    std::string name_;
    std::vector<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Execution semantics

struct TickResult {
    Status status = Status::Running;
    int active_leaf = -1; // valid iff status == Running

    bool operator==(const TickResult&) const = default;
};

/// Resolves the tree's status and, when Running, the unique leaf whose
/// controller runs. Sequence hands over to the next child on Success,
/// Fallback on Failure.
TickResult tick(const Tree& t, StateIndex s);

/// Same recursion with `root_id` treated as the root (used to evaluate a
/// subtree's own controller on its operating region).
TickResult tick_subtree(const Tree& t, int root_id, StateIndex s);

struct StepResult {
    Status status = Status::Running; // Running => advanced to `next`
    StateIndex next = 0;
    int active_leaf = -1;
};

/// One closed-loop step: applies the active leaf's action when Running,
/// otherwise reports the terminal status.
StepResult step(const Tree& t, StateIndex s);
StepResult step_subtree(const Tree& t, int root_id, StateIndex s);

enum class StopReason { ReachedSuccess, ReachedFailure, StepLimit, CycleDetected };

const char* to_string(StopReason r);

struct TraceStep {
    StateIndex state;
    int active_leaf; // -1 when the root status is not Running
    Status status;
};

struct Trace {
    StateIndex start = 0;
    std::vector<TraceStep> steps;
    StopReason reason = StopReason::StepLimit;
};

/// Iterates `step` from x0 until terminal, a revisited state (the closed loop
/// is deterministic, so a revisit is a cycle) or the step limit.
Trace simulate(const Tree& t, StateIndex x0, std::uint64_t max_steps);

/// Names on the branch from the active leaf to the root, leaf first. Nodes
/// without a display name are skipped, except the leaf and the root which are
/// always reported (with a generated name when unnamed).
std::vector<std::string> explain(const Tree& t, StateIndex s);

std::string auto_name(const Tree& t, int id);

/// Wraps the tree in a top layer that returns Running where the original
/// root returned Success or Failure, so the overall S and F regions are
/// empty. Clones the model, adding an identity `__idle` action if missing.
Tree with_idle_layer(const Tree& t);

} // namespace btcalc
