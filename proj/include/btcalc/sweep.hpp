#pragma once

#include "btcalc/model.hpp"
#include "btcalc/tree.hpp"

#include <cstdint>
#include <vector>

namespace btcalc {

// Exhaustive state sweeps are the hot loops of every analysis here. Each
// kernel has a serial reference implementation and an OpenMP variant that
// partitions the state space into disjoint 64-state words, so results are
// bit-identical regardless of schedule. The unsuffixed entry points dispatch
// to the parallel variant.

bool openmp_enabled();
int sweep_thread_count();

Region region_from_predicate_serial(const WorldModel& m, const Predicate& p);
Region region_from_predicate_parallel(const WorldModel& m, const Predicate& p);
Region region_from_predicate(const WorldModel& m, const Predicate& p);

/// Per-node regions where the tick resolves to that node as the active leaf
/// (empty for interior nodes and conditions except where they are active
/// leaves, which never happens), plus the root-status partition.
struct TickSweep {
    std::vector<Region> active; // by node id; nonempty only for leaves
    Region success;             // root status per state
    Region failure;
    Region running;
};

TickSweep tick_sweep_serial(const Tree& t);
TickSweep tick_sweep_parallel(const Tree& t);
TickSweep tick_sweep(const Tree& t);

/// Closed-loop reachability: from every start state, simulate up to
/// `max_steps` and report whether all runs end inside `target`.
struct ReachReport {
    bool all_reached = true;
    std::uint64_t worst_steps = 0;          // longest run among successful starts
    std::optional<StateIndex> witness;      // a start state that failed to reach
};

ReachReport reach_sweep_serial(const Tree& t, const Region& starts, const Region& target,
                               std::uint64_t max_steps);
ReachReport reach_sweep_parallel(const Tree& t, const Region& starts, const Region& target,
                                 std::uint64_t max_steps);
ReachReport reach_sweep(const Tree& t, const Region& starts, const Region& target,
                        std::uint64_t max_steps);

} // namespace btcalc
