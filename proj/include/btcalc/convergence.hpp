#pragma once

#include "btcalc/regions.hpp"
#include "btcalc/tree.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace btcalc {

/// A convergence question: a level of abstraction over the tree, a labeling
/// of its nodes (labeling[k] carries label k+1), and an external constraint
/// region kept invariant throughout.
struct ConvergenceProblem {
    const Tree* tree = nullptr;
    std::vector<int> level;    // node ids
    std::vector<int> labeling; // permutation of `level`, label order 1..N
    Region cbar;               // external constraint (nonempty)

    int label_count() const { return int(labeling.size()); }
};

ConvergenceProblem make_problem(const Tree& t, std::vector<int> labeling,
                                std::optional<Region> cbar = std::nullopt);

/// C_i = ((∪_{j>=i} Omega_j) ∪ S_0) ∩ Cbar under the given labeling.
std::vector<Region> build_ci(const ConvergenceProblem& p, const RegionMap& map);

struct InvarianceCheck {
    bool pass = true;
    StateIndex witness_state = 0; // leaves C_i in one step
    StateIndex witness_successor = 0;
};

/// One-step invariance of C_i under node i's own controller, checked over
/// Omega_i ∩ C_i (the states where that controller actually runs).
InvarianceCheck check_invariance(const ConvergenceProblem& p, const RegionMap& map,
                                 const std::vector<Region>& ci, int label_index);

struct DwellCheck {
    bool pass = true;
    std::uint64_t tau = 0;           // max consecutive steps spent inside Omega_i
    std::vector<StateIndex> cycle;   // nonempty on failure
};

/// The model is finite and deterministic, so the dwell bound is the longest
/// path inside Omega_i under the node's controller; a cycle inside Omega_i
/// means the state can stay forever.
DwellCheck check_dwell(const ConvergenceProblem& p, const RegionMap& map, int label_index);

struct ExitViolation {
    int label_index = -1;
    StateIndex state = 0;
    StateIndex successor = 0;
};

enum class Verdict { Proven, Failed };

struct ConvergenceCertificate {
    std::vector<int> labeling;
    std::vector<Region> ci;
    std::vector<InvarianceCheck> invariance;
    std::vector<DwellCheck> dwell;
    bool level_valid = true;
    bool monotone_ok = true;
    std::optional<ExitViolation> exit_witness;
    std::uint64_t bound_sum = 0;   // sum of tau_i
    std::uint64_t bound_nmax = 0;  // N * max tau_i
    bool conclusion_checked = false; // only when every hypothesis holds
    bool conclusion_ok = false;    // every start in C_1 reaches S_0 within bound_sum
    std::optional<StateIndex> conclusion_witness;
    std::uint64_t conclusion_worst_steps = 0;
    Verdict verdict = Verdict::Failed;
};

/// Full hypothesis check plus, when all hypotheses hold, a direct model check
/// of the conclusion by exhaustive simulation from C_1.
ConvergenceCertificate check_theorem(const ConvergenceProblem& p);

// ---------------------------------------------------------------------------
// Closed forms for the two canonical designs.

struct SequenceSets {
    std::vector<Region> influence;
    std::vector<Region> operating;
    std::vector<Region> c; // constraint sets, left-to-right labeling
};

/// Root must be a Sequence of N subtrees: I_i = ∩_{j<i} S_j, C_i =
/// (∩_{j<i} S_j ∪ S_0) ∩ Cbar; the empty intersection is the full space.
SequenceSets standard_sequence_sets(const Tree& t, const Region& cbar);

struct ImplicitHypothesis {
    bool holds = false;
    int witness_label = -1; // label j > i with S_j ∪ R_j ⊇ S_i
};

struct ImplicitSets {
    std::vector<int> labeling;            // node ids, label order (rightmost child first)
    std::vector<Region> influence;        // by label index
    std::vector<Region> operating;
    std::vector<Region> c_hat;            // (R_i ∪ S_i) ∩ Cbar
    std::vector<ImplicitHypothesis> hypothesis; // for labels i < N
    std::vector<bool> c_hat_subset_ci;
};

/// Root must be a Fallback whose children are numbered right to left; a lone
/// leaf root is treated as the single member.
ImplicitSets implicit_sequence_sets(const Tree& t, const Region& cbar);

// ---------------------------------------------------------------------------
// Probabilistic transition chain.

struct ProbBounds {
    double e_bound = 0;  // N / p^N
    double gamma = 0;    // 1 - p^N
    double p_k(int k) const; // 1 - gamma^(k+1)
};

ProbBounds probabilistic_bounds(int n, double p);

struct ProbabilisticChain {
    int n = 1;
    std::vector<double> p;  // per-region advance probability, size n
    std::uint64_t seed = 0;

    double p_min() const;
};

enum class RegressMode { Uniform, WorstCase };

struct ChainStats {
    std::uint64_t trials = 0;
    double mean_transitions = 0;   // all transitions, regressions included
    double stderr_transitions = 0;
    double e_bound = 0;
    bool e_bound_ok = false;       // mean <= bound + 3*stderr
    std::vector<double> p_k;       // fraction of trials with <= k regressions
    double gamma = 0;
};

/// Simulates the ordered-region chain: from region i, advance with
/// probability p_i (to i+1, or the goal at i = n), otherwise regress to a
/// uniformly chosen lower region (or always to region 1 in worst-case mode;
/// region 1 regresses to itself). Trials use per-trial derived seeds, so the
/// result is deterministic for a fixed master seed regardless of threading.
ChainStats monte_carlo_chain(const ProbabilisticChain& chain, std::uint64_t trials,
                             RegressMode mode = RegressMode::Uniform, int max_k = 20);

} // namespace btcalc
