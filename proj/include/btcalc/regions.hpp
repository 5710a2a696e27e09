#pragma once

#include "btcalc/model.hpp"
#include "btcalc/tree.hpp"

#include <optional>
#include <vector>

namespace btcalc {

struct RegionTriple {
    Region success;
    Region failure;
    Region running;
};

/// Per-node exact region analysis. influence[root] is the whole space unless
/// an external region is supplied, which stands in for the context a subtree
/// would have as part of a larger tree.
struct RegionMap {
    std::vector<RegionTriple> triples;  // by node id
    std::vector<Region> influence;      // I_i
    std::vector<Region> operating;      // Omega_i = I_i ∩ R_i
};

/// Leaves from their predicates; Sequence folds S = S1∩S2, F = F1∪(S1∩F2),
/// R = R1∪(S1∩R2); Fallback folds S = S1∪(F1∩S2), F = F1∩F2, R = R1∪(F1∩R2).
/// N-ary nodes fold left-associatively.
std::vector<RegionTriple> compute_status_regions(const Tree& t);

/// Top-down: leftmost child inherits the parent's influence; a later child
/// intersects its elder sibling's influence with that sibling's S (Sequence)
/// or F (Fallback).
std::vector<Region> compute_influence_regions(const Tree& t,
                                              const std::vector<RegionTriple>& triples,
                                              const Region* external = nullptr);

std::vector<Region> compute_operating_regions(const Tree& t,
                                              const std::vector<RegionTriple>& triples,
                                              const std::vector<Region>& influence);

RegionMap compute_regions(const Tree& t, const Region* external = nullptr);

// ---------------------------------------------------------------------------

enum class ViolationKind {
    TripleOverlap,   // S/F/R of one node intersect
    TripleGap,       // S∪F∪R misses a state
    ChildrenOverlap, // two children's operating regions intersect
    ChildrenGap,     // children's operating regions do not cover the parent's
    LeafOverlap,
    LeafGap,
};

const char* to_string(ViolationKind k);

struct PartitionViolation {
    ViolationKind kind;
    int node = -1;  // offending node (or parent for children checks)
    int other = -1; // second node for overlap kinds
    StateIndex witness = 0;
};

struct PartitionReport {
    bool triples_ok = true;
    bool parent_child_ok = true;
    bool leaf_ok = true;
    std::vector<PartitionViolation> violations;

    bool ok() const { return triples_ok && parent_child_ok && leaf_ok; }
};

PartitionReport verify_partition(const Tree& t);
PartitionReport verify_partition(const Tree& t, const RegionMap& map);

struct LevelCheck {
    bool valid = true;
    bool doubly_covered = false;          // witness kind; false => uncovered
    std::optional<StateIndex> witness;
};

/// A node set L is a level of abstraction when the operating regions of L
/// plus the root's S and F tile the state space.
LevelCheck validate_level(const Tree& t, const RegionMap& map, const std::vector<int>& level);

} // namespace btcalc
