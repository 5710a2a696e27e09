#include "btcalc/sweep.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace btcalc {

bool openmp_enabled() {
#ifdef _OPENMP
    return true;
#else
    return false;
#endif
}

int sweep_thread_count() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

namespace {

std::uint64_t predicate_word(const WorldModel& m, const Predicate& p, StateIndex word_index) {
    const StateIndex base = word_index * 64;
    const StateIndex end = std::min<StateIndex>(base + 64, m.state_count());
    std::uint64_t bits = 0;
    for (StateIndex s = base; s < end; ++s)
        if (eval_predicate(m, p, s))
            bits |= std::uint64_t(1) << (s - base);
    return bits;
}

} // namespace

Region region_from_predicate_serial(const WorldModel& m, const Predicate& p) {
    if (!predicate_valid(m, p))
        throw Error("predicate references variables outside the model");
    Region r(m);
    for (StateIndex s = 0; s < m.state_count(); ++s)
        if (eval_predicate(m, p, s))
            r.set(s);
    return r;
}

Region region_from_predicate_parallel(const WorldModel& m, const Predicate& p) {
    if (!predicate_valid(m, p))
        throw Error("predicate references variables outside the model");
    Region r(m);
    auto& words = r.words();
    const std::int64_t nwords = std::int64_t(words.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t w = 0; w < nwords; ++w)
        words[w] = predicate_word(m, p, StateIndex(w));
    return r;
}

// Spawning a team costs more than sweeping a small model.
constexpr StateIndex kParallelCutoff = StateIndex(1) << 14;

Region region_from_predicate(const WorldModel& m, const Predicate& p) {
    return m.state_count() < kParallelCutoff ? region_from_predicate_serial(m, p)
                                             : region_from_predicate_parallel(m, p);
}

namespace {

TickSweep make_sweep(const Tree& t) {
    TickSweep out;
    out.active.assign(t.node_count(), Region(t.model()));
    out.success = Region(t.model());
    out.failure = Region(t.model());
    out.running = Region(t.model());
    return out;
}

void tick_word(const Tree& t, TickSweep& out, StateIndex word_index) {
    const StateIndex base = word_index * 64;
    const StateIndex end = std::min<StateIndex>(base + 64, t.model().state_count());
    for (StateIndex s = base; s < end; ++s) {
        const TickResult r = tick(t, s);
        switch (r.status) {
        case Status::Success:
            out.success.set(s);
            break;
        case Status::Failure:
            out.failure.set(s);
            break;
        case Status::Running:
            out.running.set(s);
            out.active[r.active_leaf].set(s);
            break;
        }
    }
}

} // namespace

TickSweep tick_sweep_serial(const Tree& t) {
    TickSweep out = make_sweep(t);
    const StateIndex nwords = (t.model().state_count() + 63) / 64;
    for (StateIndex w = 0; w < nwords; ++w)
        tick_word(t, out, w);
    return out;
}

TickSweep tick_sweep_parallel(const Tree& t) {
    TickSweep out = make_sweep(t);
    const std::int64_t nwords = std::int64_t((t.model().state_count() + 63) / 64);
#pragma omp parallel for schedule(static)
    for (std::int64_t w = 0; w < nwords; ++w)
        tick_word(t, out, StateIndex(w)); // disjoint words: no two threads touch the same bit word
    return out;
}

TickSweep tick_sweep(const Tree& t) {
    return t.model().state_count() < kParallelCutoff ? tick_sweep_serial(t)
                                                     : tick_sweep_parallel(t);
}

namespace {

struct ReachOne {
    bool reached;
    std::uint64_t steps;
};

ReachOne reach_one(const Tree& t, StateIndex x0, const Region& target, std::uint64_t max_steps) {
    StateIndex x = x0;
    for (std::uint64_t k = 0; k <= max_steps; ++k) {
        if (target.test(x))
            return {true, k};
        if (k == max_steps)
            break;
        const StepResult r = step(t, x);
        if (r.status != Status::Running)
            return {false, k};
        x = r.next;
    }
    return {false, max_steps};
}

} // namespace

ReachReport reach_sweep_serial(const Tree& t, const Region& starts, const Region& target,
                               std::uint64_t max_steps) {
    ReachReport report;
    starts.for_each([&](StateIndex s) {
        if (!report.all_reached)
            return;
        const ReachOne r = reach_one(t, s, target, max_steps);
        if (!r.reached) {
            report.all_reached = false;
            report.witness = s;
        } else {
            report.worst_steps = std::max(report.worst_steps, r.steps);
        }
    });
    return report;
}

ReachReport reach_sweep_parallel(const Tree& t, const Region& starts, const Region& target,
                                 std::uint64_t max_steps) {
    std::vector<StateIndex> start_list;
    starts.for_each([&](StateIndex s) { start_list.push_back(s); });

    ReachReport report;
    std::uint64_t worst = 0;
    std::int64_t witness = -1;
    const std::int64_t n = std::int64_t(start_list.size());
#pragma omp parallel for schedule(static) reduction(max : worst) reduction(max : witness)
    for (std::int64_t i = 0; i < n; ++i) {
        const ReachOne r = reach_one(t, start_list[i], target, max_steps);
        if (!r.reached)
            witness = std::max(witness, std::int64_t(start_list[i]));
        else
            worst = std::max(worst, r.steps);
    }
    report.worst_steps = worst;
    if (witness >= 0) {
        report.all_reached = false;
        report.witness = StateIndex(witness);
    }
    return report;
}

ReachReport reach_sweep(const Tree& t, const Region& starts, const Region& target,
                        std::uint64_t max_steps) {
    return reach_sweep_parallel(t, starts, target, max_steps);
}

} // namespace btcalc
