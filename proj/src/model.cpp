#include "btcalc/model.hpp"

#include <algorithm>
#include <bit>
#include <sstream>

namespace btcalc {

Predicate Predicate::negate(Predicate p) {
    Predicate r{PredKind::Not, -1, -1, {}};
    r.args.push_back(std::move(p));
    return r;
}

Predicate Predicate::conj(Predicate a, Predicate b) {
    Predicate r{PredKind::And, -1, -1, {}};
    r.args.push_back(std::move(a));
    r.args.push_back(std::move(b));
    return r;
}

Predicate Predicate::disj(Predicate a, Predicate b) {
    Predicate r{PredKind::Or, -1, -1, {}};
    r.args.push_back(std::move(a));
    r.args.push_back(std::move(b));
    return r;
}

void WorldModel::add_variable(Variable v) {
    if (finalized_)
        throw Error("model is finalized");
    if (v.values.empty())
        throw Error("variable '" + v.name + "' has an empty domain");
    if (v.values.size() > 16)
        throw Error("variable '" + v.name + "' exceeds 16 domain values");
    if (var_index_.count(v.name))
        throw Error("duplicate variable '" + v.name + "'");
    var_index_[v.name] = int(variables_.size());
    variables_.push_back(std::move(v));
}

void WorldModel::add_bool(const std::string& name) {
    add_variable(Variable{name, {"false", "true"}, true});
}

void WorldModel::add_enum(const std::string& name, std::vector<std::string> values) {
    add_variable(Variable{name, std::move(values), false});
}

void WorldModel::add_action(ActionSpec spec) {
    if (action_index_.count(spec.id))
        throw Error("duplicate action '" + spec.id + "'");
    action_index_[spec.id] = int(actions_.size());
    actions_.push_back(std::move(spec));
}

void WorldModel::finalize() {
    if (finalized_)
        return;
    strides_.resize(variables_.size());
    StateIndex count = 1;
    for (std::size_t i = 0; i < variables_.size(); ++i) {
        strides_[i] = count;
        const StateIndex size = variables_[i].size();
        if (count > kMaxStates / size)
            throw Error("state space exceeds the enumeration guard (2^24 states)");
        count *= size;
    }
    state_count_ = count;
    finalized_ = true;
}

int WorldModel::variable_index(const std::string& name) const {
    auto it = var_index_.find(name);
    return it == var_index_.end() ? -1 : it->second;
}

int WorldModel::action_index(const std::string& id) const {
    auto it = action_index_.find(id);
    return it == action_index_.end() ? -1 : it->second;
}

std::vector<int> WorldModel::unpack(StateIndex s) const {
    std::vector<int> out(variables_.size());
    for (std::size_t i = 0; i < variables_.size(); ++i)
        out[i] = value_of(s, int(i));
    return out;
}

StateIndex WorldModel::pack(const std::vector<int>& assignment) const {
    if (assignment.size() != variables_.size())
        throw Error("assignment arity mismatch");
    StateIndex s = 0;
    for (std::size_t i = 0; i < variables_.size(); ++i) {
        if (assignment[i] < 0 || StateIndex(assignment[i]) >= variables_[i].size())
            throw Error("value out of range for variable '" + variables_[i].name + "'");
        s += StateIndex(assignment[i]) * strides_[i];
    }
    return s;
}

StateIndex WorldModel::parse_assignment(const std::string& text) const {
    std::vector<int> values(variables_.size(), 0);
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find(',', pos);
        if (end == std::string::npos)
            end = text.size();
        const std::string item = text.substr(pos, end - pos);
        pos = end + 1;
        if (item.empty())
            continue;
        const std::size_t eq = item.find('=');
        if (eq == std::string::npos)
            throw Error("bad assignment item '" + item + "' (expected var=value)");
        const std::string name = item.substr(0, eq);
        const std::string value = item.substr(eq + 1);
        const int var = variable_index(name);
        if (var < 0)
            throw Error("unknown variable '" + name + "'");
        const auto& dom = variables_[var].values;
        const auto it = std::find(dom.begin(), dom.end(), value);
        if (it == dom.end())
            throw Error("value '" + value + "' not in the domain of '" + name + "'");
        values[var] = int(it - dom.begin());
    }
    return pack(values);
}

std::string WorldModel::format_state(StateIndex s) const {
    std::ostringstream out;
    out << "{";
    for (std::size_t i = 0; i < variables_.size(); ++i) {
        if (i)
            out << ",";
        out << variables_[i].name << "=" << variables_[i].values[value_of(s, int(i))];
    }
    out << "}";
    return out.str();
}

bool eval_predicate(const WorldModel& m, const Predicate& p, StateIndex s) {
    switch (p.kind) {
    case PredKind::True:
        return true;
    case PredKind::False:
        return false;
    case PredKind::Var:
        return m.value_of(s, p.var) == 1;
    case PredKind::Eq:
        return m.value_of(s, p.var) == p.value;
    case PredKind::Not:
        return !eval_predicate(m, p.args[0], s);
    case PredKind::And:
        for (const auto& a : p.args)
            if (!eval_predicate(m, a, s))
                return false;
        return true;
    case PredKind::Or:
        for (const auto& a : p.args)
            if (eval_predicate(m, a, s))
                return true;
        return false;
    }
    return false;
}

bool predicate_valid(const WorldModel& m, const Predicate& p) {
    switch (p.kind) {
    case PredKind::True:
    case PredKind::False:
        return true;
    case PredKind::Var:
        return p.var >= 0 && p.var < int(m.variables().size()) && m.variables()[p.var].is_bool;
    case PredKind::Eq:
        return p.var >= 0 && p.var < int(m.variables().size()) && p.value >= 0 &&
               StateIndex(p.value) < m.variables()[p.var].size();
    default:
        for (const auto& a : p.args)
            if (!predicate_valid(m, a))
                return false;
        return true;
    }
}

StateIndex apply_action(const WorldModel& m, const ActionSpec& a, StateIndex s) {
    StateIndex out = s;
    for (const auto& assign : a.assigns) {
        int value = assign.then_value;
        if (assign.condition && !eval_predicate(m, *assign.condition, s))
            value = assign.else_value;
        out = m.with_value(out, assign.var, value);
    }
    return out;
}

std::vector<StateIndex> enumerate_states(const WorldModel& m) {
    if (!m.finalized())
        throw Error("model not finalized");
    if (m.state_count() > WorldModel::kMaxStates)
        throw Error("enumeration refused: state space exceeds the guard");
    std::vector<StateIndex> out(m.state_count());
    for (StateIndex i = 0; i < m.state_count(); ++i)
        out[i] = i;
    return out;
}

// ---------------------------------------------------------------------------

Region::Region(const WorldModel& m, bool fill) : model_(&m) {
    if (!m.finalized())
        throw Error("model not finalized");
    words_.assign((m.state_count() + 63) / 64, fill ? ~std::uint64_t(0) : 0);
    if (fill)
        mask_tail();
}

void Region::mask_tail() {
    const StateIndex n = model_->state_count();
    if (n % 64 != 0 && !words_.empty())
        words_.back() &= (std::uint64_t(1) << (n % 64)) - 1;
}

void Region::check_same_model(const Region& o) const {
    if (model_ != o.model_)
        throw Error("region model mismatch");
}

std::uint64_t Region::count() const {
    std::uint64_t n = 0;
    for (auto w : words_)
        n += std::popcount(w);
    return n;
}

bool Region::empty() const {
    for (auto w : words_)
        if (w)
            return false;
    return true;
}

bool Region::is_subset_of(const Region& other) const {
    check_same_model(other);
    for (std::size_t i = 0; i < words_.size(); ++i)
        if (words_[i] & ~other.words_[i])
            return false;
    return true;
}

std::optional<StateIndex> Region::first() const {
    for (std::size_t i = 0; i < words_.size(); ++i)
        if (words_[i])
            return StateIndex(i * 64 + __builtin_ctzll(words_[i]));
    return std::nullopt;
}

Region Region::operator&(const Region& o) const {
    Region r = *this;
    r &= o;
    return r;
}

Region Region::operator|(const Region& o) const {
    Region r = *this;
    r |= o;
    return r;
}

Region Region::operator-(const Region& o) const {
    check_same_model(o);
    Region r = *this;
    for (std::size_t i = 0; i < words_.size(); ++i)
        r.words_[i] &= ~o.words_[i];
    return r;
}

Region Region::operator~() const {
    Region r = *this;
    for (auto& w : r.words_)
        w = ~w;
    r.mask_tail();
    return r;
}

Region& Region::operator&=(const Region& o) {
    check_same_model(o);
    for (std::size_t i = 0; i < words_.size(); ++i)
        words_[i] &= o.words_[i];
    return *this;
}

Region& Region::operator|=(const Region& o) {
    check_same_model(o);
    for (std::size_t i = 0; i < words_.size(); ++i)
        words_[i] |= o.words_[i];
    return *this;
}

bool Region::operator==(const Region& o) const {
    return model_ == o.model_ && words_ == o.words_;
}

Region region_algebra(const Region& a, const Region& b, SetOp op) {
    switch (op) {
    case SetOp::Intersect:
        return a & b;
    case SetOp::Union:
        return a | b;
    case SetOp::ComplementOfA:
        return ~a;
    case SetOp::Difference:
        return a - b;
    }
    throw Error("bad set operation");
}

Region value_region(const WorldModel& m, int var, int value) {
    Region r(m);
    for (StateIndex s = 0; s < m.state_count(); ++s)
        if (m.value_of(s, var) == value)
            r.set(s);
    return r;
}

std::string format_region(const Region& r, std::uint64_t limit) {
    std::ostringstream out;
    out << "|" << r.count() << "|";
    std::uint64_t shown = 0;
    r.for_each([&](StateIndex s) {
        if (shown++ < limit)
            out << " " << r.model().format_state(s);
    });
    if (shown > limit)
        out << " ...";
    return out.str();
}

} // namespace btcalc
