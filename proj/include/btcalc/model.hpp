#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace btcalc {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Packed state: a mixed-radix index over the model's variables, first
/// variable least significant.
using StateIndex = std::uint64_t;

struct Variable {
    std::string name;
    std::vector<std::string> values; // booleans use {"false","true"}
    bool is_bool = false;

    std::size_t size() const { return values.size(); }
};

// ---------------------------------------------------------------------------
// Predicates: boolean expressions over model variables, resolved to variable
// indices at construction time and evaluated over packed states.

enum class PredKind { True, False, Var, Eq, Not, And, Or };

struct Predicate {
    PredKind kind = PredKind::False;
    int var = -1;   // Var, Eq
    int value = -1; // Eq
    std::vector<Predicate> args;

    static Predicate constant(bool b) { return {b ? PredKind::True : PredKind::False, -1, -1, {}}; }
    static Predicate var_true(int v) { return {PredKind::Var, v, -1, {}}; }
    static Predicate equals(int v, int val) { return {PredKind::Eq, v, val, {}}; }
    static Predicate negate(Predicate p);
    static Predicate conj(Predicate a, Predicate b);
    static Predicate disj(Predicate a, Predicate b);

    bool operator==(const Predicate&) const = default;
};

// ---------------------------------------------------------------------------
// Actions: deterministic, total effects given as simultaneous conditional
// assignments. All right-hand sides are evaluated on the pre-state.

struct Assignment {
    int var = -1;
    int then_value = -1;
    int else_value = -1;                 // unused when condition is absent
    std::optional<Predicate> condition;  // absent => unconditional then_value
};

struct ActionSpec {
    std::string id;
    std::vector<Assignment> assigns;
    std::vector<Predicate> preconditions; // template metadata, not enforced at apply time
    std::optional<Predicate> post;        // declared postcondition
};

// ---------------------------------------------------------------------------

class WorldModel {
public:
    /// Enumeration feasibility guard: every analysis in this library is
    /// exhaustive, so models beyond this are rejected outright.
    static constexpr StateIndex kMaxStates = StateIndex(1) << 24;

    void add_bool(const std::string& name);
    void add_enum(const std::string& name, std::vector<std::string> values);
    void add_action(ActionSpec spec);

    /// Computes strides and state count; validates invariants. Must be called
    /// once after all variables are added and before any state operation.
    void finalize();

    bool finalized() const { return finalized_; }
    StateIndex state_count() const { return state_count_; }
    const std::vector<Variable>& variables() const { return variables_; }
    const std::vector<ActionSpec>& actions() const { return actions_; }

    int variable_index(const std::string& name) const; // -1 if unknown
    int action_index(const std::string& id) const;     // -1 if unknown
    const ActionSpec& action(int index) const { return actions_.at(index); }

    int value_of(StateIndex s, int var) const {
        return int((s / strides_[var]) % variables_[var].size());
    }
    StateIndex with_value(StateIndex s, int var, int val) const {
        const StateIndex stride = strides_[var];
        const StateIndex old = (s / stride) % variables_[var].size();
        return s + (StateIndex(val) - old) * stride;
    }

    std::vector<int> unpack(StateIndex s) const;
    StateIndex pack(const std::vector<int>& assignment) const;

    /// Parses "var=value,var=value" into a packed state; unlisted variables
    /// take the first domain value.
    StateIndex parse_assignment(const std::string& text) const;
    std::string format_state(StateIndex s) const;

private:
    void add_variable(Variable v);

    std::vector<Variable> variables_;
    std::vector<ActionSpec> actions_;
    std::unordered_map<std::string, int> var_index_;
    std::unordered_map<std::string, int> action_index_;
    std::vector<StateIndex> strides_;
    StateIndex state_count_ = 0;
    bool finalized_ = false;
};

bool eval_predicate(const WorldModel& m, const Predicate& p, StateIndex s);

/// Checks that the predicate only references variables of `m` (with valid
/// enum values); returns the offending variable index otherwise.
bool predicate_valid(const WorldModel& m, const Predicate& p);

StateIndex apply_action(const WorldModel& m, const ActionSpec& a, StateIndex s);

/// All valid states in packed-index order. Enforces the enumeration guard.
std::vector<StateIndex> enumerate_states(const WorldModel& m);

// ---------------------------------------------------------------------------
// Region: dense bitset over packed state indices. Unused tail bits of the
// last word are kept zero so word-level comparisons are exact.

class Region {
public:
    Region() = default;
    explicit Region(const WorldModel& m, bool fill = false);

    const WorldModel& model() const { return *model_; }
    bool attached() const { return model_ != nullptr; }

    bool test(StateIndex s) const { return (words_[s >> 6] >> (s & 63)) & 1; }
    void set(StateIndex s, bool on = true) {
        const std::uint64_t bit = std::uint64_t(1) << (s & 63);
        if (on)
            words_[s >> 6] |= bit;
        else
            words_[s >> 6] &= ~bit;
    }

    std::uint64_t count() const;
    bool empty() const;
    bool is_subset_of(const Region& other) const;
    std::optional<StateIndex> first() const;

    Region operator&(const Region& o) const;
    Region operator|(const Region& o) const;
    Region operator-(const Region& o) const;
    Region operator~() const;
    Region& operator&=(const Region& o);
    Region& operator|=(const Region& o);
    bool operator==(const Region& o) const;

    template <typename F>
    void for_each(F&& f) const {
        for (std::size_t w = 0; w < words_.size(); ++w) {
            std::uint64_t bits = words_[w];
            while (bits) {
                const int b = __builtin_ctzll(bits);
                bits &= bits - 1;
                f(StateIndex(w * 64 + b));
            }
        }
    }

    std::vector<std::uint64_t>& words() { return words_; }
    const std::vector<std::uint64_t>& words() const { return words_; }
    void mask_tail();

private:
    void check_same_model(const Region& o) const;

    const WorldModel* model_ = nullptr;
    std::vector<std::uint64_t> words_;
};

enum class SetOp { Intersect, Union, ComplementOfA, Difference };

Region region_algebra(const Region& a, const Region& b, SetOp op);

/// Region of all states where `var` holds `value`.
Region value_region(const WorldModel& m, int var, int value);

/// Formats a region as a sorted list of state strings (small regions only).
std::string format_region(const Region& r, std::uint64_t limit = 16);

} // namespace btcalc
