#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "errors.hpp"

namespace edgecrit {

struct PI2Options {
    int order = 8;               // interior accuracy of the discretization
    int check_order = 10;        // independent stencils for derivatives / residual
    double t_step = 0.05;        // continuation in t from 0
    double L_start = 20;         // continuation in L upward
    int max_newton = 60;
    double damping_floor = 1.0 / 16;
    double pole_bound = 1e3;
    double residual_margin = 1;  // residual_norm is taken over [-L+margin, L-margin]
};

struct PI2Solution {
    double t = 0, L = 0;
    std::vector<double> grid, y, ys, yss, ysss, h;
    double residual_norm = 0;
    int newton_iterations = 0;  // last Newton solve

    double mesh() const { return grid[1] - grid[0]; }
};

struct Jet {
    double y = 0, ys = 0, yss = 0, ysss = 0;
};

// s -> +-inf branches: y ~ -+(6|s|)^{1/3} -+ (1/3) 6^{2/3} t |s|^{-1/3}
inline double asymptotic_y(double s, double t)
{
    const double a = std::abs(s), sg = s > 0 ? 1.0 : -1.0;
    return -sg * (std::cbrt(6 * a) + std::cbrt(36.0) / 3 * t / std::cbrt(a));
}

inline double asymptotic_ys(double s, double t)
{
    const double a = std::abs(s);
    return -(std::cbrt(6.0) / 3 / std::cbrt(a * a) - std::cbrt(36.0) / 9 * t / (a * std::cbrt(a)));
}

// fourth and fifth derivative implied by the equation
inline double pi2_y4(double s, double t, const Jet& j)
{
    return 240 * (t * j.y - s) - 40 * j.y * j.y * j.y - 10 * j.ys * j.ys - 20 * j.y * j.yss;
}

inline double pi2_y5(double /*s*/, double t, const Jet& j)
{
    return 240 * (t * j.ys - 1) - 120 * j.y * j.y * j.ys - 40 * j.ys * j.yss - 20 * j.y * j.ysss;
}

inline double pi2_y6(double s, double t, const Jet& j)
{
    return 240 * t * j.yss - 240 * j.y * j.ys * j.ys - 120 * j.y * j.y * j.yss - 40 * j.yss * j.yss -
           60 * j.ys * j.ysss - 20 * j.y * pi2_y4(s, t, j);
}

// s - t y + y^3/6 + (y_s^2 + 2 y y_ss)/24 + y_ssss/240
inline double pi2_residual(double s, double t, double y, double ys, double yss, double yssss)
{
    return s - t * y + y * y * y / 6 + (ys * ys + 2 * y * yss) / 24 + yssss / 240;
}

namespace detail {

// Fornberg's recursion: weights for derivative `d` at x0 from nodes x
inline std::vector<double> fd_weights(const std::vector<long double>& x, long double x0, int d)
{
    const int n = static_cast<int>(x.size());
    std::vector<std::vector<long double>> c(n, std::vector<long double>(d + 1, 0));
    long double c1 = 1, c4 = x[0] - x0;
    c[0][0] = 1;
    for (int i = 1; i < n; ++i) {
        int mn = std::min(i, d);
        long double c2 = 1, c5 = c4;
        c4 = x[i] - x0;
        for (int j = 0; j < i; ++j) {
            long double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) w[i] = static_cast<double>(c[i][d]);
    return w;
}

// banded derivative operator on a uniform grid; one-sided closures of the same width
struct FDOperator {
    int n = 0, width = 0;
    std::vector<int> lo;
    std::vector<std::vector<double>> w;

    FDOperator() = default;
    FDOperator(int n_, double h, int d, int width_) : n(n_), width(width_), lo(n_), w(n_)
    {
        const int half = width / 2;
        for (int i = 0; i < n; ++i) {
            lo[i] = std::min(std::max(i - half, 0), n - width);
            std::vector<long double> x(width);
            for (int k = 0; k < width; ++k) x[k] = lo[i] + k - i;
            w[i] = fd_weights(x, 0.0L, d);
            const double scale = std::pow(h, -d);
            for (auto& v : w[i]) v *= scale;
        }
    }

    std::vector<double> apply(const std::vector<double>& y) const
    {
        std::vector<double> r(n, 0.0);
        for (int i = 0; i < n; ++i) {
            double acc = 0;
            for (int k = 0; k < width; ++k) acc += w[i][k] * y[lo[i] + k];
            r[i] = acc;
        }
        return r;
    }
};

// central stencil width for derivative d at accuracy p
inline int stencil_width(int d, int p) { return 2 * ((d + 1) / 2) - 1 + p; }

inline std::vector<double> initial_guess(const std::vector<double>& s)
{
    std::vector<double> y(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) y[i] = -std::cbrt(6.0) * s[i] / std::cbrt(s[i] * s[i] + 1);
    return y;
}

struct NewtonResult {
    std::vector<double> y;
    int iterations = 0;
};

// discretized boundary value problem at fixed t
struct PI2System {
    const std::vector<double>& s;
    double t;
    int n;
    FDOperator D1, D2, D4;
    double bc[4];

    PI2System(const std::vector<double>& grid, double t_, int order)
        : s(grid), t(t_), n(static_cast<int>(grid.size()))
    {
        const double h = s[1] - s[0], L = s.back();
        D1 = FDOperator(n, h, 1, stencil_width(1, order));
        D2 = FDOperator(n, h, 2, stencil_width(2, order));
        D4 = FDOperator(n, h, 4, stencil_width(4, order));
        bc[0] = asymptotic_y(-L, t);
        bc[1] = asymptotic_ys(-L, t);
        bc[2] = asymptotic_ys(L, t);
        bc[3] = asymptotic_y(L, t);
    }

    Eigen::VectorXd residual(const std::vector<double>& v) const
    {
        auto v1 = D1.apply(v), v2 = D2.apply(v), v4 = D4.apply(v);
        Eigen::VectorXd F(n);
        for (int i = 0; i < n; ++i)
            F[i] = v4[i] - (240 * (t * v[i] - s[i]) - 40 * v[i] * v[i] * v[i] - 10 * v1[i] * v1[i] -
                            20 * v[i] * v2[i]);
        F[0] = v[0] - bc[0];
        F[1] = v1[0] - bc[1];
        F[n - 2] = v1[n - 1] - bc[2];
        F[n - 1] = v[n - 1] - bc[3];
        return F;
    }

    // derivative of the residual with respect to t
    Eigen::VectorXd residual_t(const std::vector<double>& v) const
    {
        const double L = s.back(), k = std::cbrt(36.0);
        Eigen::VectorXd G(n);
        for (int i = 0; i < n; ++i) G[i] = -240 * v[i];
        G[0] = -(k / 3 / std::cbrt(L));
        G[1] = -(k / 9 / (L * std::cbrt(L)));
        G[n - 2] = -(k / 9 / (L * std::cbrt(L)));
        G[n - 1] = k / 3 / std::cbrt(L);
        return G;
    }

    Eigen::SparseMatrix<double> jacobian(const std::vector<double>& y) const
    {
        auto y1 = D1.apply(y), y2 = D2.apply(y);
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<std::size_t>(n) * (D4.width + D1.width + D2.width + 1));
        auto add_row = [&](int i, int row_of_op, const FDOperator& op, double f) {
            for (int k = 0; k < op.width; ++k) trip.emplace_back(i, op.lo[row_of_op] + k, f * op.w[row_of_op][k]);
        };
        for (int i = 2; i < n - 2; ++i) {
            add_row(i, i, D4, 1.0);
            trip.emplace_back(i, i, -(240 * t - 120 * y[i] * y[i] - 20 * y2[i]));
            add_row(i, i, D1, 20 * y1[i]);
            add_row(i, i, D2, 20 * y[i]);
        }
        trip.emplace_back(0, 0, 1.0);
        add_row(1, 0, D1, 1.0);
        add_row(n - 2, n - 1, D1, 1.0);
        trip.emplace_back(n - 1, n - 1, 1.0);
        Eigen::SparseMatrix<double> J(n, n);
        J.setFromTriplets(trip.begin(), trip.end());
        J.makeCompressed();
        return J;
    }
};

using SparseSolver = Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>;

inline NewtonResult newton(const std::vector<double>& s, double t, std::vector<double> y, double tol,
                           const PI2Options& opt)
{
    const int n = static_cast<int>(s.size());
    PI2System sys(s, t, opt.order);
    SparseSolver lu;
    Eigen::VectorXd F = sys.residual(y);
    double prev_step = 1e300;
    int stalls = 0;
    for (int it = 1; it <= opt.max_newton; ++it) {
        lu.compute(sys.jacobian(y));
        if (lu.info() != Eigen::Success) throw NoConvergence("singular Newton matrix in solve_y");
        Eigen::VectorXd dy = lu.solve(-F);

        const double f0 = F.norm();
        double lam = 1;
        std::vector<double> trial(n);
        Eigen::VectorXd Ft;
        for (;;) {
            for (int i = 0; i < n; ++i) trial[i] = y[i] + lam * dy[i];
            Ft = sys.residual(trial);
            if (Ft.norm() < f0 || lam <= opt.damping_floor) break;
            lam /= 2;
        }
        // at the rounding floor the residual norm no longer decreases; take the full step
        if (lam < 1 && dy.lpNorm<Eigen::Infinity>() < 1e4 * tol) {
            lam = 1;
            for (int i = 0; i < n; ++i) trial[i] = y[i] + dy[i];
            Ft = sys.residual(trial);
        }
        y.swap(trial);
        F = Ft;
        double ymax = 0;
        for (double v : y) {
            if (!std::isfinite(v)) throw PoleSuspected("non-finite Newton iterate");
            ymax = std::max(ymax, std::abs(v));
        }
        if (ymax > opt.pole_bound) throw PoleSuspected("Newton iterate blew up (|y| > pole bound)");

        const double step = lam * dy.lpNorm<Eigen::Infinity>();
        if (step < tol) return {std::move(y), it};
        if (step < 1e3 * tol && step > 0.5 * prev_step) {
            if (++stalls >= 2) return {std::move(y), it};
        }
        prev_step = step;
    }
    throw NoConvergence("solve_y: Newton did not converge");
}

// Euler predictor for t-continuation: y(t + dt) ~ y(t) + dt * dy/dt
inline std::vector<double> tangent_predict(const std::vector<double>& s, double t, const std::vector<double>& y,
                                           double dt, const PI2Options& opt)
{
    PI2System sys(s, t, opt.order);
    SparseSolver lu;
    lu.compute(sys.jacobian(y));
    if (lu.info() != Eigen::Success) return y;
    Eigen::VectorXd yt = lu.solve(-sys.residual_t(y));
    std::vector<double> out(y);
    for (std::size_t i = 0; i < y.size(); ++i) out[i] += dt * yt[static_cast<Eigen::Index>(i)];
    return out;
}

inline std::vector<double> uniform_grid(double L, int n)
{
    std::vector<double> s(n);
    for (int i = 0; i < n; ++i) s[i] = -L + 2 * L * i / (n - 1);
    s[n - 1] = L;
    return s;
}

// Hermite interpolation on one cell of width H from m derivatives (0..m-1) at each end;
// returns the value and first two derivatives at fraction u
template <int M>
void hermite(double u, double H, const double* f0, const double* f1, double out[3])
{
    constexpr int N = 2 * M;
    Eigen::Matrix<double, N, 1> c;
    Eigen::Matrix<double, M, M> A;
    Eigen::Matrix<double, M, 1> rhs;
    double fact = 1, hp = 1;
    for (int j = 0; j < M; ++j) {
        if (j > 0) { fact *= j; hp *= H; }
        c[j] = f0[j] * hp / fact;
    }
    // conditions p^{(j)}(1) = f1[j] H^j for the upper coefficients
    hp = 1;
    for (int j = 0; j < M; ++j) {
        if (j > 0) hp *= H;
        double known = 0;
        for (int k = j; k < M; ++k) {
            double ff = 1;
            for (int q = 0; q < j; ++q) ff *= (k - q);
            known += ff * c[k];
        }
        rhs[j] = f1[j] * hp - known;
        for (int k = M; k < N; ++k) {
            double ff = 1;
            for (int q = 0; q < j; ++q) ff *= (k - q);
            A(j, k - M) = ff;
        }
    }
    c.template tail<M>() = A.partialPivLu().solve(rhs);
    double p0 = 0, p1 = 0, p2 = 0;
    for (int k = N - 1; k >= 0; --k) p0 = p0 * u + c[k];
    for (int k = N - 1; k >= 1; --k) p1 = p1 * u + k * c[k];
    for (int k = N - 1; k >= 2; --k) p2 = p2 * u + k * (k - 1) * c[k];
    out[0] = p0;
    out[1] = p1 / H;
    out[2] = p2 / (H * H);
}

inline void finalize(PI2Solution& sol, const PI2Options& opt)
{
    const int n = static_cast<int>(sol.grid.size());
    const double h = sol.mesh(), t = sol.t;
    const int p = opt.check_order;
    FDOperator E1(n, h, 1, stencil_width(1, p)), E2(n, h, 2, stencil_width(2, p)),
        E3(n, h, 3, stencil_width(3, p)), E4(n, h, 4, stencil_width(4, p));
    sol.ys = E1.apply(sol.y);
    sol.yss = E2.apply(sol.y);
    sol.ysss = E3.apply(sol.y);
    auto y4 = E4.apply(sol.y);
    sol.residual_norm = 0;
    for (int i = 0; i < n; ++i) {
        if (std::abs(sol.grid[i]) > sol.L - opt.residual_margin + 1e-12) continue;
        double r = pi2_residual(sol.grid[i], t, sol.y[i], sol.ys[i], sol.yss[i], y4[i]);
        sol.residual_norm = std::max(sol.residual_norm, std::abs(r));
    }
    // h' = -y, exact integration of the quintic Hermite interpolant
    sol.h.assign(n, 0.0);
    for (int i = 0; i + 1 < n; ++i) {
        double H = sol.grid[i + 1] - sol.grid[i];
        double I = H / 2 * (sol.y[i] + sol.y[i + 1]) + H * H / 10 * (sol.ys[i] - sol.ys[i + 1]) +
                   H * H * H / 120 * (sol.yss[i] + sol.yss[i + 1]);
        sol.h[i + 1] = sol.h[i] - I;
    }
}

// resample a solution onto a wider grid, asymptotic values outside the old range
inline std::vector<double> extend(const std::vector<double>& s_old, const std::vector<double>& y_old,
                                  const std::vector<double>& s_new, double t)
{
    std::vector<double> y(s_new.size());
    const double h = s_old[1] - s_old[0];
    for (std::size_t i = 0; i < s_new.size(); ++i) {
        double s = s_new[i];
        if (s < s_old.front() || s > s_old.back()) {
            y[i] = asymptotic_y(s, t);
            continue;
        }
        auto k = std::min<std::size_t>(static_cast<std::size_t>((s - s_old.front()) / h), s_old.size() - 2);
        double u = (s - s_old[k]) / h;
        y[i] = (1 - u) * y_old[k] + u * y_old[k + 1];
    }
    return y;
}

}  // namespace detail

// Solve at fixed t, optionally seeded by a solution on the same grid (t-continuation step).
inline PI2Solution solve_y_seeded(double t, double L, int n_points, double tol, const PI2Options& opt,
                                  const PI2Solution& seed)
{
    PI2Solution sol;
    sol.t = t;
    sol.L = L;
    sol.grid = detail::uniform_grid(L, n_points);
    auto y0 = seed.grid.size() == sol.grid.size() && seed.L == L
                  ? detail::tangent_predict(sol.grid, seed.t, seed.y, t - seed.t, opt)
                  : detail::extend(seed.grid, seed.y, sol.grid, t);
    auto res = detail::newton(sol.grid, t, std::move(y0), tol, opt);
    sol.y = std::move(res.y);
    sol.newton_iterations = res.iterations;
    detail::finalize(sol, opt);
    return sol;
}

inline PI2Solution solve_y(double t, double L, int n_points, double tol = 1e-10, const PI2Options& opt = {})
{
    if (L < 20) throw OutOfRange("solve_y requires L >= 20");
    if (n_points < 5) throw OutOfRange("solve_y: too few points");
    const double h = 2 * L / (n_points - 1);
    if (h > 0.05 + 1e-12) throw OutOfRange("solve_y: mesh must be <= 0.05");

    // L continuation at t = 0, same mesh
    double Lc = std::min(L, opt.L_start);
    int nc = static_cast<int>(std::lround(2 * Lc / h)) + 1;
    PI2Solution cur;
    cur.t = 0;
    cur.L = Lc;
    cur.grid = detail::uniform_grid(Lc, nc);
    auto first = detail::newton(cur.grid, 0.0, detail::initial_guess(cur.grid), tol, opt);
    cur.y = std::move(first.y);
    int iters = first.iterations;
    while (cur.L < L) {
        double Ln = std::min(L, 2 * cur.L);
        int nn = Ln == L ? n_points : static_cast<int>(std::lround(2 * Ln / h)) + 1;
        PI2Solution next;
        next.t = 0;
        next.L = Ln;
        next.grid = detail::uniform_grid(Ln, nn);
        auto r = detail::newton(next.grid, 0.0, detail::extend(cur.grid, cur.y, next.grid, 0.0), tol, opt);
        next.y = std::move(r.y);
        iters = r.iterations;
        cur = std::move(next);
    }
    if (static_cast<int>(cur.grid.size()) != n_points) {
        auto g = detail::uniform_grid(L, n_points);
        auto r = detail::newton(g, 0.0, detail::extend(cur.grid, cur.y, g, 0.0), tol, opt);
        cur.y = std::move(r.y);
        iters = r.iterations;
        cur.grid = g;
    }
    // t continuation
    const int steps = static_cast<int>(std::ceil(std::abs(t) / opt.t_step - 1e-12));
    for (int k = 1; k <= steps; ++k) {
        double tk = t * k / steps, tprev = t * (k - 1) / steps;
        auto r = detail::newton(cur.grid, tk, detail::tangent_predict(cur.grid, tprev, cur.y, tk - tprev, opt), tol, opt);
        cur.y = std::move(r.y);
        iters = r.iterations;
    }
    cur.t = t;
    cur.newton_iterations = iters;
    detail::finalize(cur, opt);
    return cur;
}

// Solve at the given mesh; when the residual exceeds target, also try half the mesh and keep
// whichever has the smaller residual (finer meshes lose to roundoff in the 4th derivative).
inline PI2Solution solve_y_refined(double t, double L, double mesh, double tol = 1e-10, double target = 1e-8,
                                   const PI2Options& opt = {})
{
    auto points = [&](double h) { return static_cast<int>(std::lround(2 * L / h)) + 1; };
    auto sol = solve_y(t, L, points(mesh), tol, opt);
    if (sol.residual_norm <= target) return sol;
    auto fine = solve_y(t, L, points(mesh / 2), tol, opt);
    return fine.residual_norm < sol.residual_norm ? fine : sol;
}

namespace detail {

inline std::size_t locate(const PI2Solution& sol, double s, double& u)
{
    const double lo = sol.grid.front(), hi = sol.grid.back();
    if (!(s >= lo - 1e-12 && s <= hi + 1e-12)) throw OutOfRange("evaluation outside [-L, L]");
    const double h = sol.mesh(), x = (s - lo) / h;
    const std::size_t n = sol.grid.size();
    double r = std::round(x);
    if (std::abs(x - r) < 1e-9) {  // snap to a node
        u = 0;
        return static_cast<std::size_t>(r);
    }
    auto k = std::min(static_cast<std::size_t>(std::max(0.0, std::floor(x))), n - 2);
    u = (s - sol.grid[k]) / h;
    return k;
}

}  // namespace detail

// piecewise quintic Hermite interpolation of the grid solution
inline Jet eval_y(const PI2Solution& sol, double s, double* y4 = nullptr)
{
    double u;
    const std::size_t k = detail::locate(sol, s, u);
    Jet jk{sol.y[k], sol.ys[k], sol.yss[k], sol.ysss[k]};
    if (u == 0.0) {
        if (y4) *y4 = pi2_y4(sol.grid[k], sol.t, jk);
        return jk;
    }
    const double h = sol.mesh();
    Jet jk1{sol.y[k + 1], sol.ys[k + 1], sol.yss[k + 1], sol.ysss[k + 1]};
    // each of y, y_s, y_ss, y_sss, y_ssss gets its own quintic Hermite fit from the next two derivatives
    const double s0 = sol.grid[k], s1 = sol.grid[k + 1], t = sol.t;
    const double d0[7] = {jk.y, jk.ys, jk.yss, jk.ysss, pi2_y4(s0, t, jk), pi2_y5(s0, t, jk), pi2_y6(s0, t, jk)};
    const double d1[7] = {jk1.y, jk1.ys, jk1.yss, jk1.ysss, pi2_y4(s1, t, jk1), pi2_y5(s1, t, jk1),
                          pi2_y6(s1, t, jk1)};
    double v[5];
    for (int m = 0; m < (y4 ? 5 : 4); ++m) {
        double out[3];
        detail::hermite<3>(u, h, d0 + m, d1 + m, out);
        v[m] = out[0];
    }
    if (y4) *y4 = v[4];
    return {v[0], v[1], v[2], v[3]};
}

inline double eval_h(const PI2Solution& sol, double s)
{
    double u;
    const std::size_t k = detail::locate(sol, s, u);
    // 5-point Gauss-Legendre is exact on the quintic interpolant
    if (u == 0.0) return sol.h[k];
    const double a = sol.grid[k], d = s - a;
    static const double gx[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831, 0.9061798459386640};
    static const double gw[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                                 0.2369268850561891};
    double acc = 0;
    for (int i = 0; i < 5; ++i) acc += gw[i] * eval_y(sol, a + d / 2 * (1 + gx[i])).y;
    return sol.h[k] - acc * d / 2;
}

}  // namespace edgecrit
