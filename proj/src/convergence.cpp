#include "btcalc/convergence.hpp"

#include "btcalc/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace btcalc {

ConvergenceProblem make_problem(const Tree& t, std::vector<int> labeling,
                                std::optional<Region> cbar) {
    ConvergenceProblem p;
    p.tree = &t;
    p.level = labeling;
    p.labeling = std::move(labeling);
    p.cbar = cbar ? std::move(*cbar) : Region(t.model(), true);
    if (p.cbar.empty())
        throw Error("external constraint region must be nonempty");
    for (int id : p.labeling)
        if (id < 0 || id >= t.node_count())
            throw Error("labeling references node " + std::to_string(id) + " outside the tree");
    return p;
}

std::vector<Region> build_ci(const ConvergenceProblem& p, const RegionMap& map) {
    const int n = p.label_count();
    if (n == 0)
        throw Error("empty labeling");
    std::vector<Region> ci(n, Region(p.tree->model()));
    Region acc = map.triples[0].success; // S_0
    for (int i = n - 1; i >= 0; --i) {
        acc |= map.operating[p.labeling[i]];
        ci[i] = acc & p.cbar;
    }
    return ci;
}

namespace {

/// Successor of x under node i's own controller. Defined on Omega_i, where
/// the subtree-local tick is Running by construction.
StateIndex subtree_successor(const Tree& t, int node_id, StateIndex x) {
    const StepResult r = step_subtree(t, node_id, x);
    if (r.status != Status::Running)
        throw Error("controller successor requested outside the running region");
    return r.next;
}

} // namespace

InvarianceCheck check_invariance(const ConvergenceProblem& p, const RegionMap& map,
                                 const std::vector<Region>& ci, int label_index) {
    const Tree& t = *p.tree;
    const int node_id = p.labeling[label_index];
    const Region domain = map.operating[node_id] & ci[label_index];
    InvarianceCheck out;
    domain.for_each([&](StateIndex x) {
        if (!out.pass)
            return;
        const StateIndex y = subtree_successor(t, node_id, x);
        if (!ci[label_index].test(y)) {
            out.pass = false;
            out.witness_state = x;
            out.witness_successor = y;
        }
    });
    return out;
}

DwellCheck check_dwell(const ConvergenceProblem& p, const RegionMap& map, int label_index) {
    const Tree& t = *p.tree;
    const int node_id = p.labeling[label_index];
    const Region& omega = map.operating[node_id];

    // Longest-path DFS over the in-region successor graph; a back edge to a
    // state on the stack is a cycle.
    std::unordered_map<StateIndex, int> color; // 0 unseen, 1 on stack, 2 done
    std::unordered_map<StateIndex, std::uint64_t> depth;
    DwellCheck out;

    std::vector<std::pair<StateIndex, bool>> stack;
    std::vector<StateIndex> path;
    omega.for_each([&](StateIndex start) {
        if (!out.pass || color.count(start))
            return;
        stack.push_back({start, false});
        while (!stack.empty() && out.pass) {
            auto [x, exiting] = stack.back();
            stack.pop_back();
            if (exiting) {
                color[x] = 2;
                path.pop_back();
                const StateIndex y = subtree_successor(t, node_id, x);
                depth[x] = omega.test(y) ? depth[y] + 1 : 1;
                continue;
            }
            if (color[x] == 2)
                continue;
            color[x] = 1;
            path.push_back(x);
            stack.push_back({x, true});
            const StateIndex y = subtree_successor(t, node_id, x);
            if (!omega.test(y))
                continue;
            if (color.count(y) && color[y] == 1) {
                // cycle: report the looping suffix of the current path
                out.pass = false;
                auto it = std::find(path.begin(), path.end(), y);
                out.cycle.assign(it, path.end());
                return;
            }
            if (!color.count(y) || color[y] == 0)
                stack.push_back({y, false});
        }
    });
    if (!out.pass)
        return out;
    for (const auto& [x, d] : depth)
        out.tau = std::max(out.tau, d);
    return out;
}

ConvergenceCertificate check_theorem(const ConvergenceProblem& p) {
    const Tree& t = *p.tree;
    const RegionMap map = compute_regions(t);

    ConvergenceCertificate cert;
    cert.labeling = p.labeling;

    const LevelCheck level = validate_level(t, map, p.level);
    cert.level_valid = level.valid;

    cert.ci = build_ci(p, map);
    const int n = p.label_count();
    cert.invariance.resize(n);
    cert.dwell.resize(n);

    bool hypotheses_ok = cert.level_valid;
    for (int i = 0; i < n; ++i) {
        cert.invariance[i] = check_invariance(p, map, cert.ci, i);
        cert.dwell[i] = check_dwell(p, map, i);
        hypotheses_ok = hypotheses_ok && cert.invariance[i].pass && cert.dwell[i].pass;
    }

    // Monotone exit, re-verified directly so failures carry the offending
    // transition: leaving Omega_i must land in a higher-labeled region or S_0.
    const Region& s0 = map.triples[0].success;
    for (int i = 0; i < n && cert.monotone_ok; ++i) {
        const Region domain = map.operating[p.labeling[i]] & cert.ci[i];
        domain.for_each([&](StateIndex x) {
            if (!cert.monotone_ok)
                return;
            const StateIndex y = subtree_successor(t, p.labeling[i], x);
            if (map.operating[p.labeling[i]].test(y) || s0.test(y))
                return;
            for (int j = i + 1; j < n; ++j)
                if (map.operating[p.labeling[j]].test(y))
                    return;
            cert.monotone_ok = false;
            cert.exit_witness = ExitViolation{i, x, y};
        });
    }
    hypotheses_ok = hypotheses_ok && cert.monotone_ok;

    std::uint64_t max_tau = 0;
    for (const auto& d : cert.dwell) {
        cert.bound_sum += d.tau;
        max_tau = std::max(max_tau, d.tau);
    }
    cert.bound_nmax = std::uint64_t(n) * max_tau;

    if (!hypotheses_ok) {
        cert.verdict = Verdict::Failed;
        return cert;
    }

    const ReachReport reach = reach_sweep(t, cert.ci.empty() ? Region(t.model()) : cert.ci[0], s0,
                                          cert.bound_sum);
    cert.conclusion_checked = true;
    cert.conclusion_ok = reach.all_reached;
    cert.conclusion_witness = reach.witness;
    cert.conclusion_worst_steps = reach.worst_steps;
    cert.verdict = cert.conclusion_ok ? Verdict::Proven : Verdict::Failed;
    return cert;
}

// ---------------------------------------------------------------------------

SequenceSets standard_sequence_sets(const Tree& t, const Region& cbar) {
    const Node& root = t.root();
    if (root.kind != NodeKind::Sequence)
        throw Error("standard sequence sets need a Sequence root");
    const auto triples = compute_status_regions(t);
    const Region& s0 = triples[0].success;

    SequenceSets out;
    Region prefix(t.model(), true); // empty intersection = full space
    for (int child : root.children) {
        out.influence.push_back(prefix);
        out.operating.push_back(prefix & triples[child].running);
        out.c.push_back((prefix | s0) & cbar);
        prefix &= triples[child].success;
    }
    return out;
}

ImplicitSets implicit_sequence_sets(const Tree& t, const Region& cbar) {
    const Node& root = t.root();
    std::vector<int> children_lr;
    if (root.kind == NodeKind::Fallback)
        children_lr = root.children;
    else if (root.is_leaf_like())
        children_lr = {0};
    else
        throw Error("implicit sequence sets need a Fallback root");

    const auto triples = compute_status_regions(t);
    const int n = int(children_lr.size());

    // Children are written T_N..T_1 left to right; label i lives at child
    // index n-i.
    ImplicitSets out;
    out.labeling.resize(n);
    for (int i = 1; i <= n; ++i)
        out.labeling[i - 1] = children_lr[n - i];

    std::vector<Region> influence_lr(n);
    Region prefix(t.model(), true);
    for (int k = 0; k < n; ++k) {
        influence_lr[k] = prefix;
        prefix &= triples[children_lr[k]].failure;
    }

    for (int i = 1; i <= n; ++i) {
        const int node = out.labeling[i - 1];
        out.influence.push_back(influence_lr[n - i]);
        out.operating.push_back(influence_lr[n - i] & triples[node].running);
        out.c_hat.push_back((triples[node].running | triples[node].success) & cbar);
    }

    out.hypothesis.resize(n);
    for (int i = 1; i < n; ++i) {
        ImplicitHypothesis h;
        for (int j = i + 1; j <= n && !h.holds; ++j) {
            const int node_j = out.labeling[j - 1];
            const Region cover = triples[node_j].success | triples[node_j].running;
            if (triples[out.labeling[i - 1]].success.is_subset_of(cover)) {
                h.holds = true;
                h.witness_label = j;
            }
        }
        out.hypothesis[i - 1] = h;
    }
    out.hypothesis[n - 1] = {true, -1}; // no requirement on the last label

    // Against the generic construction: c_hat_i ⊆ C_i.
    ConvergenceProblem p;
    p.tree = &t;
    p.level = out.labeling;
    p.labeling = out.labeling;
    p.cbar = cbar;
    const RegionMap map = compute_regions(t);
    const auto ci = build_ci(p, map);
    for (int i = 0; i < n; ++i)
        out.c_hat_subset_ci.push_back(out.c_hat[i].is_subset_of(ci[i]));
    return out;
}

// ---------------------------------------------------------------------------

double ProbBounds::p_k(int k) const { return 1.0 - std::pow(gamma, k + 1); }

ProbBounds probabilistic_bounds(int n, double p) {
    if (n < 1)
        throw Error("region count must be at least 1");
    if (!(p > 0.0) || !(p < 1.0))
        throw Error("advance probability must lie in (0,1)");
    ProbBounds out;
    const double pn = std::pow(p, n);
    out.e_bound = double(n) / pn;
    out.gamma = 1.0 - pn;
    return out;
}

double ProbabilisticChain::p_min() const {
    double m = 1.0;
    for (double v : p)
        m = std::min(m, v);
    return m;
}

namespace {

// splitmix64: per-trial seed derivation.
std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

struct Xoshiro {
    std::uint64_t s[4];

    explicit Xoshiro(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& v : s)
            v = splitmix64(sm);
    }
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t next() {
        const std::uint64_t result = rotl(s[1] * 5, 7) * 9;
        const std::uint64_t t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = rotl(s[3], 45);
        return result;
    }
    double uniform() { return double(next() >> 11) * 0x1.0p-53; }
    std::uint64_t below(std::uint64_t n) { return next() % n; }
};

struct TrialResult {
    std::uint64_t transitions;
    std::uint64_t regressions;
};

TrialResult run_trial(const ProbabilisticChain& chain, RegressMode mode, std::uint64_t seed) {
    Xoshiro rng(seed);
    TrialResult r{0, 0};
    int region = 1;
    while (true) {
        ++r.transitions;
        if (rng.uniform() < chain.p[region - 1]) {
            if (region == chain.n)
                return r;
            ++region;
        } else {
            ++r.regressions;
            if (mode == RegressMode::WorstCase || region == 1)
                region = 1;
            else
                region = 1 + int(rng.below(std::uint64_t(region - 1)));
        }
    }
}

} // namespace

ChainStats monte_carlo_chain(const ProbabilisticChain& chain, std::uint64_t trials,
                             RegressMode mode, int max_k) {
    if (trials < 1)
        throw Error("at least one trial required");
    if (chain.n < 1 || int(chain.p.size()) != chain.n)
        throw Error("chain needs one advance probability per region");
    for (double v : chain.p)
        if (!(v > 0.0 && v <= 1.0))
            throw Error("advance probabilities must lie in (0,1]");

    std::vector<std::uint64_t> seeds(trials);
    std::uint64_t sm = chain.seed;
    for (auto& s : seeds)
        s = splitmix64(sm);

    // Integer accumulators keep the reduction deterministic under OpenMP.
    std::uint64_t total = 0;
    std::uint64_t total_sq = 0;
    std::vector<std::uint64_t> regress_le(max_k + 1, 0);

    const std::int64_t n = std::int64_t(trials);
#pragma omp parallel
    {
        std::uint64_t local_total = 0;
        std::uint64_t local_sq = 0;
        std::vector<std::uint64_t> local_le(max_k + 1, 0);
#pragma omp for schedule(static)
        for (std::int64_t i = 0; i < n; ++i) {
            const TrialResult r = run_trial(chain, mode, seeds[i]);
            local_total += r.transitions;
            local_sq += r.transitions * r.transitions;
            if (r.regressions <= std::uint64_t(max_k))
                for (int k = int(r.regressions); k <= max_k; ++k)
                    ++local_le[k];
        }
#pragma omp critical
        {
            total += local_total;
            total_sq += local_sq;
            for (int k = 0; k <= max_k; ++k)
                regress_le[k] += local_le[k];
        }
    }

    ChainStats stats;
    stats.trials = trials;
    stats.mean_transitions = double(total) / double(trials);
    const double var =
        (double(total_sq) - double(trials) * stats.mean_transitions * stats.mean_transitions) /
        double(trials > 1 ? trials - 1 : 1);
    stats.stderr_transitions = std::sqrt(std::max(var, 0.0) / double(trials));

    double pn = 1.0;
    for (int i = 0; i < chain.n; ++i)
        pn *= chain.p_min();
    stats.e_bound = double(chain.n) / pn;
    stats.gamma = 1.0 - pn;
    stats.e_bound_ok = stats.mean_transitions <= stats.e_bound + 3.0 * stats.stderr_transitions;

    stats.p_k.resize(max_k + 1);
    for (int k = 0; k <= max_k; ++k)
        stats.p_k[k] = double(regress_le[k]) / double(trials);
    return stats;
}

} // namespace btcalc
