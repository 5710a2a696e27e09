#pragma once

#include "btcalc/model.hpp"
#include "btcalc/tree.hpp"

#include <memory>
#include <string>
#include <vector>

namespace btcalc {

/// An achieving option: running `action_id` from any state satisfying the
/// preconditions eventually satisfies the postcondition.
struct ActionTemplate {
    std::string action_id;
    std::vector<Predicate> preconditions;
    Predicate postcondition;
};

struct GoalList {
    std::vector<Predicate> goals; // priority order
    std::vector<std::string> names;
};

/// Checks the template promise by iterating the effect from every state
/// satisfying the preconditions; fills `witness` with a stuck state if not.
bool validate_template(const WorldModel& m, const ActionTemplate& tpl, StateIndex* witness);

/// Fallback(Condition(goal), option fragments...). An option with
/// preconditions becomes Sequence(precondition conditions..., Leaf(action));
/// one without becomes a bare leaf. Zero options degenerate to the bare
/// Condition. Every option's postcondition must imply the goal (exact region
/// inclusion over the model).
NodeSpec make_sure(const WorldModel& m, const Predicate& goal, const std::string& goal_name,
                   const std::vector<ActionTemplate>& options);

/// Goal conditions become a top-level Sequence of make_sure fragments; then
/// expandable conditions are repeatedly replaced by their own fragments,
/// breadth-first left to right, until the depth bound. Replaced conditions
/// and conditions that still could be replaced carry the double-stroke flag.
/// A goal that re-achieves one of its expansion ancestors past the depth
/// bound is a cycle and raises an error naming the chain.
Tree backchain(std::shared_ptr<const WorldModel> model, const GoalList& goals,
               const std::vector<ActionTemplate>& library, int max_depth);

/// Conditions with at least one achieving template, excluding those already
/// established where they stand: the check condition of its own make_sure
/// fragment (its fallback already carries achieving options) and conditions
/// guaranteed by an achieving leaf inside an elder sibling of an enclosing
/// Sequence.
std::vector<int> expandable_conditions(const Tree& t, const std::vector<ActionTemplate>& library);

} // namespace btcalc
