#include "btcalc/cbf.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace btcalc {

namespace {

constexpr double kFeasTol = 1e-9;

double dot(const Vec& a, const Vec& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

/// Gaussian elimination with partial pivoting; false when singular.
bool solve_linear(std::vector<Vec> a, Vec b, Vec& out) {
    const int n = int(b.size());
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[pivot][col]))
                pivot = r;
        if (std::fabs(a[pivot][col]) < 1e-12)
            return false;
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (int r = 0; r < n; ++r) {
            if (r == col)
                continue;
            const double f = a[r][col] / a[col][col];
            for (int c = col; c < n; ++c)
                a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    out.resize(n);
    for (int i = 0; i < n; ++i)
        out[i] = b[i] / a[i][i];
    return true;
}

/// All constraints in "a·u >= b" form: barrier rows first, then box faces.
std::vector<Halfspace> stacked_constraints(const HalfspaceSet& set) {
    std::vector<Halfspace> rows = set.rows;
    const int m = int(set.lo.size());
    for (int k = 0; k < m; ++k) {
        Vec e(m, 0.0);
        e[k] = 1.0;
        rows.push_back({e, set.lo[k]}); // u_k >= lo_k
        Vec ne(m, 0.0);
        ne[k] = -1.0;
        rows.push_back({ne, -set.hi[k]}); // -u_k >= -hi_k
    }
    return rows;
}

bool satisfies_all(const std::vector<Halfspace>& rows, const Vec& u, double tol) {
    for (const auto& r : rows)
        if (dot(r.a, u) < r.b - tol)
            return false;
    return true;
}

void next_combination_done(std::vector<int>& idx, int n, bool& done) {
    const int k = int(idx.size());
    int i = k - 1;
    while (i >= 0 && idx[i] == n - k + i)
        --i;
    if (i < 0) {
        done = true;
        return;
    }
    ++idx[i];
    for (int j = i + 1; j < k; ++j)
        idx[j] = idx[j - 1] + 1;
}

} // namespace

void CbfProblem::validate() const {
    if (state_dim < 1 || state_dim > 4)
        throw Error("state dimension must be 1..4");
    if (control_dim < 1 || control_dim > 3)
        throw Error("control dimension must be 1..3");
    if (!(kappa > 0))
        throw Error("kappa must be positive");
    if (int(u_lo.size()) != control_dim || int(u_hi.size()) != control_dim)
        throw Error("control box dimension mismatch");
    for (int k = 0; k < control_dim; ++k)
        if (!(u_lo[k] <= u_hi[k]))
            throw Error("control box is empty");
    if (barriers.empty())
        throw Error("at least one barrier required");
    if (nominals.empty())
        throw Error("at least one nominal controller required");
    if (nominals.size() != 1 && nominals.size() != barriers.size())
        throw Error("nominal controllers: provide one shared or one per barrier");
}

const VecFn& CbfProblem::nominal_at(int i) const {
    if (nominals.size() == 1)
        return nominals[0];
    return nominals.at(i - 1);
}

bool HalfspaceSet::contains(const Vec& u, double tol) const {
    for (std::size_t k = 0; k < lo.size(); ++k)
        if (u[k] < lo[k] - tol || u[k] > hi[k] + tol)
            return false;
    for (const auto& r : rows)
        if (dot(r.a, u) < r.b - tol)
            return false;
    return true;
}

HalfspaceSet uinv_halfspaces(const CbfProblem& p, const Vec& x, int i) {
    p.validate();
    const Barrier& barrier = p.barriers.at(i - 1);
    const Vec g = barrier.grad(x);
    const Vec g0 = p.drift(x);
    const auto G = p.control_matrix(x);

    Vec a(p.control_dim, 0.0);
    for (int col = 0; col < p.control_dim; ++col)
        for (int row = 0; row < p.state_dim; ++row)
            a[col] += g[row] * G[row][col];
    const double b = -p.kappa * barrier.h(x) - dot(g, g0);

    HalfspaceSet set;
    set.lo = p.u_lo;
    set.hi = p.u_hi;
    set.rows.push_back({std::move(a), b});
    return set;
}

std::optional<Vec> find_feasible_point(const HalfspaceSet& set) {
    const int m = int(set.lo.size());
    const auto rows = stacked_constraints(set);

    // Cheap interior guesses first.
    Vec center(m);
    for (int k = 0; k < m; ++k)
        center[k] = 0.5 * (set.lo[k] + set.hi[k]);
    if (satisfies_all(rows, center, kFeasTol))
        return center;

    // The polyhedron is boxed, hence bounded: nonempty iff some vertex
    // (m tight, linearly independent constraints) is feasible.
    const int n = int(rows.size());
    std::vector<int> idx(m);
    for (int k = 0; k < m; ++k)
        idx[k] = k;
    bool done = false;
    while (!done) {
        std::vector<Vec> a(m, Vec(m));
        Vec b(m);
        for (int k = 0; k < m; ++k) {
            a[k] = rows[idx[k]].a;
            b[k] = rows[idx[k]].b;
        }
        Vec u;
        if (solve_linear(a, b, u) && satisfies_all(rows, u, kFeasTol))
            return u;
        next_combination_done(idx, n, done);
    }
    return std::nullopt;
}

PrefixResult feasible_prefix(const CbfProblem& p, const Vec& x, int upto) {
    p.validate();
    const int total = upto < 0 ? int(p.barriers.size()) : upto;

    PrefixResult result;
    result.set.lo = p.u_lo;
    result.set.hi = p.u_hi;

    for (int i = 1; i <= total; ++i) {
        HalfspaceSet candidate = result.set;
        candidate.rows.push_back(uinv_halfspaces(p, x, i).rows[0]);
        if (!find_feasible_point(candidate)) {
            if (i == 1)
                throw SafetyInfeasible(
                    "top-priority barrier '" + p.barriers[0].name +
                    "' admits no control inside the box");
            break; // prefixes are nested, so later ones are empty too
        }
        result.set = std::move(candidate);
        result.count = i;
    }
    return result;
}

QpSolution solve_projection_qp(const HalfspaceSet& set, const Vec& w) {
    const int m = int(set.lo.size());
    const auto rows = stacked_constraints(set);
    const int n = int(rows.size());

    // Unconstrained minimizer first, then active sets of growing size. The
    // QP is strictly convex, so the first KKT-consistent candidate is the
    // optimum.
    if (satisfies_all(rows, w, kFeasTol))
        return {w, {}, {}};

    for (int k = 1; k <= m; ++k) {
        std::vector<int> idx(k);
        for (int i = 0; i < k; ++i)
            idx[i] = i;
        bool done = false;
        while (!done) {
            // u = w + A^T lambda with A u = b  =>  (A A^T) lambda = b - A w
            std::vector<Vec> gram(k, Vec(k));
            Vec rhs(k);
            for (int r = 0; r < k; ++r) {
                for (int c = 0; c < k; ++c)
                    gram[r][c] = dot(rows[idx[r]].a, rows[idx[c]].a);
                rhs[r] = rows[idx[r]].b - dot(rows[idx[r]].a, w);
            }
            Vec lambda;
            if (solve_linear(gram, rhs, lambda)) {
                bool dual_ok = true;
                for (double l : lambda)
                    dual_ok = dual_ok && l >= -kFeasTol;
                if (dual_ok) {
                    Vec u = w;
                    for (int r = 0; r < k; ++r)
                        for (int c = 0; c < m; ++c)
                            u[c] += lambda[r] * rows[idx[r]].a[c];
                    if (satisfies_all(rows, u, kFeasTol))
                        return {u, idx, lambda};
                }
            }
            next_combination_done(idx, n, done);
        }
    }
    throw Error("projection QP found no KKT point (infeasible constraint set?)");
}

Vec filter_control(const CbfProblem& p, const Vec& x, int i) {
    const PrefixResult prefix = feasible_prefix(p, x, i);
    const Vec w = p.nominal_at(i)(x);
    return solve_projection_qp(prefix.set, w).u;
}

ContinuousTrace integrate(const CbfProblem& p, const Vec& x0, double duration, double dt) {
    p.validate();
    if (!(dt > 0) || duration < dt)
        throw Error("need dt > 0 and duration >= dt");

    ContinuousTrace trace;
    trace.dt = dt;
    const int level = int(p.barriers.size());
    const auto steps = std::uint64_t(std::llround(duration / dt));

    Vec x = x0;
    for (std::uint64_t k = 0; k <= steps; ++k) {
        Vec h(p.barriers.size());
        for (std::size_t b = 0; b < p.barriers.size(); ++b)
            h[b] = p.barriers[b].h(x);

        PrefixResult prefix;
        try {
            prefix = feasible_prefix(p, x, level);
        } catch (const SafetyInfeasible&) {
            trace.t.push_back(double(k) * dt);
            trace.x.push_back(x);
            trace.h.push_back(std::move(h));
            trace.u.push_back(Vec(p.control_dim, 0.0));
            trace.prefix.push_back(0);
            trace.infeasible = true;
            return trace;
        }
        const Vec w = p.nominal_at(level)(x);
        const Vec u = solve_projection_qp(prefix.set, w).u;

        trace.t.push_back(double(k) * dt);
        trace.x.push_back(x);
        trace.h.push_back(std::move(h));
        trace.u.push_back(u);
        trace.prefix.push_back(prefix.count);

        if (k == steps)
            break;
        const Vec g0 = p.drift(x);
        const auto G = p.control_matrix(x);
        for (int r = 0; r < p.state_dim; ++r) {
            double xdot = g0[r];
            for (int c = 0; c < p.control_dim; ++c)
                xdot += G[r][c] * u[c];
            x[r] += dt * xdot;
        }
    }
    return trace;
}

std::string trace_csv(const ContinuousTrace& trace) {
    std::ostringstream out;
    out.precision(12);
    out << "t";
    for (std::size_t i = 0; i < (trace.x.empty() ? 0 : trace.x[0].size()); ++i)
        out << ",x" << i + 1;
    for (std::size_t i = 0; i < (trace.u.empty() ? 0 : trace.u[0].size()); ++i)
        out << ",u" << i + 1;
    for (std::size_t i = 0; i < (trace.h.empty() ? 0 : trace.h[0].size()); ++i)
        out << ",h" << i + 1;
    out << ",prefix\n";
    for (std::size_t k = 0; k < trace.t.size(); ++k) {
        out << trace.t[k];
        for (double v : trace.x[k])
            out << "," << v;
        for (double v : trace.u[k])
            out << "," << v;
        for (double v : trace.h[k])
            out << "," << v;
        out << "," << trace.prefix[k] << "\n";
    }
    return out.str();
}

} // namespace btcalc
