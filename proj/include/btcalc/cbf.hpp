#pragma once

#include "btcalc/model.hpp"

#include <functional>
#include <string>
#include <vector>

namespace btcalc {

using Vec = std::vector<double>;
using ScalarFn = std::function<double(const Vec&)>;
using VecFn = std::function<Vec(const Vec&)>;
using MatFn = std::function<std::vector<Vec>(const Vec&)>; // n rows, m columns

class SafetyInfeasible : public Error {
public:
    using Error::Error;
};

struct Barrier {
    std::string name;
    ScalarFn h;
    VecFn grad; // dh/dx, length n
};

/// Control-affine continuous-time problem xdot = g0(x) + G(x) u with a box
/// control set, priority-ordered barriers, linear class-K alpha(s) = kappa*s
/// and one nominal controller per priority level (a single shared one is
/// allowed).
struct CbfProblem {
    int state_dim = 0;   // <= 4
    int control_dim = 0; // <= 3
    VecFn drift;         // g0
    MatFn control_matrix;
    Vec u_lo, u_hi;
    std::vector<Barrier> barriers;
    double kappa = 1.0;
    std::vector<VecFn> nominals; // size 1 or barriers.size()

    void validate() const;
    const VecFn& nominal_at(int i) const; // 1-based priority level
};

struct Halfspace {
    Vec a; // length m
    double b;
    // feasible iff a·u >= b
};

struct HalfspaceSet {
    std::vector<Halfspace> rows;
    Vec lo, hi;

    bool contains(const Vec& u, double tol = 1e-9) const;
};

/// Admissible controls for barrier i at x:
/// grad_h·G(x)·u >= -kappa*h(x) - grad_h·g0(x), intersected with the box.
HalfspaceSet uinv_halfspaces(const CbfProblem& p, const Vec& x, int i); // 1-based

/// Exact feasibility of a halfspace/box polyhedron by vertex enumeration
/// (the box keeps it bounded, so nonempty means some vertex is feasible).
std::optional<Vec> find_feasible_point(const HalfspaceSet& set);

struct PrefixResult {
    int count = 0;      // j: barriers 1..j kept
    HalfspaceSet set;   // their intersection with the box
};

/// Longest prefix j <= upto with a nonempty intersection. Throws
/// SafetyInfeasible when even the top-priority barrier admits no control.
PrefixResult feasible_prefix(const CbfProblem& p, const Vec& x, int upto = -1);

struct QpSolution {
    Vec u;
    std::vector<int> active; // row indices into the stacked constraint list
    Vec lambda;              // multipliers for the active rows
};

/// min ||u - w||^2 over the halfspaces and box, solved exactly by active-set
/// enumeration (dimensions are tiny). The minimizer is unique.
QpSolution solve_projection_qp(const HalfspaceSet& set, const Vec& w);

/// Eq-style filter: project the level-i nominal onto the prefix-feasible set.
Vec filter_control(const CbfProblem& p, const Vec& x, int i);

struct ContinuousTrace {
    double dt = 0;
    std::vector<double> t;
    std::vector<Vec> x;
    std::vector<Vec> u;
    std::vector<Vec> h;      // per-barrier values at each step
    std::vector<int> prefix; // active prefix per step
    bool infeasible = false; // stopped early: top barrier infeasible
};

/// Explicit Euler rollout applying filter_control at every step at the last
/// priority level. On safety infeasibility the partial trace is returned with
/// the flag set.
ContinuousTrace integrate(const CbfProblem& p, const Vec& x0, double duration, double dt);

std::string trace_csv(const ContinuousTrace& trace);

} // namespace btcalc
