#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "potentials.hpp"
#include "quadrature.hpp"

namespace edgecrit {

template <class T>
struct SupportInterval {
    T a, b;
    T center() const { return (a + b) / T(2); }
    T half_width() const { return (b - a) / T(2); }
};

template <class T>
struct CriticalConstants {
    T c, c1, c2;
};

template <class T>
struct EquilibriumData {
    SupportInterval<T> support;
    Polynomial<T> h0, h1, h2;
    T ell = T(0);

    // R_+(x) = i * sqrt((x-a)(b-x)); the imaginary part is returned
    T sqrt_plus(const T& x) const
    {
        using std::sqrt;
        return sqrt((x - support.a) * (support.b - x));
    }
};

struct Check {
    std::string name;
    double value = 0;
    bool pass = false;
};

struct Report {
    std::vector<Check> checks;
    bool all_pass() const
    {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
    const Check* find(const std::string& n) const
    {
        for (const auto& c : checks)
            if (c.name == n) return &c;
        return nullptr;
    }
};

struct SupportOptions {
    int max_iter = 400;
    double step_tol = 1e-16;
    double min_width = 1e-8;
};

namespace detail {

// power series coefficients of (1 + g1 w + g2 w^2)^alpha up to w^n
template <class T>
std::vector<T> binomial_series(const T& g1, const T& g2, const T& alpha, int n)
{
    std::vector<T> e(n + 1, T(0));
    const T g[3] = {T(1), g1, g2};
    e[0] = T(1);
    for (int m = 1; m <= n; ++m) {
        T acc = T(0);
        for (int k = 1; k <= std::min(m, 2); ++k) acc += ((alpha + T(1)) * T(k) - T(m)) * g[k] * e[m - k];
        e[m] = acc / T(m);
    }
    return e;
}

}  // namespace detail

// One-cut endpoints from int V'(u)/sqrt = 0 and int u V'(u)/sqrt = 2 pi.
// The Newton solve runs in 50-digit binary floating point: at a singular edge
// the system has a multiple root and double precision would only give ~eps^{1/3}.
template <class T>
SupportInterval<T> solve_support(const RPoly& v0, SupportInterval<T> guess, const SupportOptions& opt = {})
{
    using W = boost::multiprecision::cpp_bin_float_50;
    using std::abs;
    const auto d1 = v0.derivative().template cast<W>();
    const auto d2 = v0.derivative().derivative().template cast<W>();
    const int nq = std::max(4, v0.degree() + 4);
    W m = (W(guess.a) + W(guess.b)) / 2, r = (W(guess.b) - W(guess.a)) / 2;
    if (!(r > 0)) throw DegenerateInterval("guess has a >= b");
    const W twopi = 2 * pi<W>();

    auto residual = [&](const W& mm, const W& rr, W* jac) {
        W F1 = chebyshev_integral<W>([&](const W& c) { return d1(mm + rr * c); }, nq);
        W F2 = chebyshev_integral<W>([&](const W& c) { return rr * c * d1(mm + rr * c); }, nq) - twopi;
        if (jac) {
            jac[0] = chebyshev_integral<W>([&](const W& c) { return d2(mm + rr * c); }, nq);
            jac[1] = chebyshev_integral<W>([&](const W& c) { return c * d2(mm + rr * c); }, nq);
            jac[2] = chebyshev_integral<W>([&](const W& c) { return rr * c * d2(mm + rr * c); }, nq);
            jac[3] = chebyshev_integral<W>(
                [&](const W& c) { return c * d1(mm + rr * c) + rr * c * c * d2(mm + rr * c); }, nq);
        }
        return std::pair<W, W>{F1, F2};
    };

    for (int it = 0; it < opt.max_iter; ++it) {
        W J[4];
        auto [F1, F2] = residual(m, r, J);
        W det = J[0] * J[3] - J[1] * J[2];
        if (det == 0) throw NoConvergence("singular Jacobian in solve_support");
        W dm = -(J[3] * F1 - J[1] * F2) / det;
        W dr = -(-J[2] * F1 + J[0] * F2) / det;
        W norm0 = abs(F1) + abs(F2);
        W lam = 1;
        for (int k = 0; k < 8; ++k) {
            W rr = r + lam * dr;
            if (rr > 0) {
                auto [G1, G2] = residual(m + lam * dm, rr, nullptr);
                if (abs(G1) + abs(G2) <= norm0 || k == 7) break;
            }
            lam /= 2;
        }
        m += lam * dm;
        r += lam * dr;
        if (r < W(opt.min_width)) throw DegenerateInterval("support collapsed in solve_support");
        if (abs(lam * dm) + abs(lam * dr) < W(opt.step_tol) * (1 + abs(m) + r))
            return {static_cast<T>(m - r), static_cast<T>(m + r)};
    }
    throw NoConvergence("solve_support exceeded iteration cap");
}

// polynomial part at infinity of V'(z)/R(z)
template <class T>
Polynomial<T> compute_h0(const Polynomial<T>& v0, const SupportInterval<T>& sup)
{
    auto vp = v0.derivative();
    const int d = vp.degree();
    if (d < 1) return {};
    // R(z) = z (1 + g1/z + g2/z^2)^{1/2}
    auto e = detail::binomial_series<T>(-(sup.a + sup.b), sup.a * sup.b, T(-1) / T(2), d);
    std::vector<T> h(d, T(0));
    for (int p = 0; p < d; ++p)
        for (int k = p + 1; k <= d; ++k) h[p] += vp.coeff(k) * e[k - 1 - p];
    return Polynomial<T>(std::move(h));
}

// polynomial part at infinity of R(z) V_j'(z)
template <class T>
Polynomial<T> compute_hj(const Polynomial<T>& vj, const SupportInterval<T>& sup)
{
    auto vp = vj.derivative();
    const int d = vp.degree();
    if (d < 0) return {};
    auto e = detail::binomial_series<T>(-(sup.a + sup.b), sup.a * sup.b, T(1) / T(2), d + 1);
    std::vector<T> h(d + 2, T(0));
    for (int p = 0; p <= d + 1; ++p)
        for (int k = std::max(0, p - 1); k <= d; ++k) h[p] += vp.coeff(k) * e[k + 1 - p];
    return Polynomial<T>(std::move(h));
}

template <class T>
EquilibriumData<T> build_equilibrium(const DeformedFamily& f, const SupportInterval<T>& guess)
{
    EquilibriumData<T> eq;
    eq.support = solve_support<T>(f.v0, guess);
    eq.h0 = compute_h0(f.v0.template cast<T>(), eq.support);
    eq.h1 = compute_hj(f.v1.template cast<T>(), eq.support);
    eq.h2 = compute_hj(f.v2.template cast<T>(), eq.support);
    return eq;
}

// d nu_{s,t} / dx on (a, b); nu_1, nu_2 are signed
template <class T>
T density(const EquilibriumData<T>& eq, const T& s, const T& t, const T& x)
{
    if (!(x > eq.support.a && x < eq.support.b)) throw OutOfSupport("x outside (a, b)");
    const T sq = eq.sqrt_plus(x);
    const T tp = T(2) * pi<T>();
    return eq.h0(x) * sq / tp - (s * eq.h1(x) + t * eq.h2(x)) / (tp * sq);
}

template <class T>
struct Moments {
    T mass, first_moment;
};

namespace detail {

template <class T>
int cheb_nodes_for(const EquilibriumData<T>& eq)
{
    return std::max({eq.h0.degree() + 4, eq.h1.degree() + 2, eq.h2.degree() + 2, 4}) + 2;
}

// dnu = f(phi) dphi under x = m + r cos phi; returns f as a function of cos phi
template <class T>
auto phi_density(const EquilibriumData<T>& eq, const T& s, const T& t)
{
    const T m = eq.support.center(), r = eq.support.half_width();
    return [&eq, s, t, m, r](const T& c) {
        const T x = m + r * c;
        const T tp = T(2) * pi<T>();
        return eq.h0(x) * r * r * (T(1) - c * c) / tp - (s * eq.h1(x) + t * eq.h2(x)) / tp;
    };
}

}  // namespace detail

template <class T>
Moments<T> measure_moments(const EquilibriumData<T>& eq, const T& s, const T& t)
{
    const int n = detail::cheb_nodes_for(eq) + 2;
    auto f = detail::phi_density(eq, s, t);
    const T m = eq.support.center(), r = eq.support.half_width();
    Moments<T> out;
    out.mass = chebyshev_integral<T>(f, n);
    out.first_moment = chebyshev_integral<T>([&](const T& c) { return (m + r * c) * f(c); }, n);
    return out;
}

// mass of nu_j alone (j = 0, 1, 2)
template <class T>
T component_mass(const EquilibriumData<T>& eq, int j)
{
    T s = T(0), t = T(0);
    if (j == 0) return measure_moments(eq, s, t).mass;
    auto f0 = measure_moments(eq, T(0), T(0)).mass;
    if (j == 1) return measure_moments(eq, T(1), T(0)).mass - f0;
    return measure_moments(eq, T(0), T(1)).mass - f0;
}

template <class T>
CriticalConstants<T> constants(const EquilibriumData<T>& eq)
{
    using std::pow;
    using std::sqrt;
    const T a = eq.support.a, b = eq.support.b;
    const T h0pp = eq.h0.derivative().derivative()(b);
    if (!(h0pp > 0)) throw AssumptionViolated("h0''(b) <= 0");
    CriticalConstants<T> k;
    k.c = pow(T(15) / T(2) * h0pp * sqrt(b - a), T(2) / T(7));
    k.c1 = eq.h1(b) / (sqrt(k.c) * sqrt(b - a));
    k.c2 = -eq.h2.derivative()(b) / (pow(k.c, T(3) / T(2)) * sqrt(b - a));
    return k;
}

// int_a^b sqrt((u-a)/(b-u)) V_2'(u) du
template <class T>
T critical_integral(const Polynomial<T>& v2, const SupportInterval<T>& sup)
{
    const T m = sup.center(), r = sup.half_width();
    auto d = v2.derivative();
    return chebyshev_integral<T>([&](const T& c) { return r * (T(1) + c) * d(m + r * c); },
                                 std::max(4, d.degree() + 3));
}

template <class T>
Report verify_assumptions(const DeformedFamily& f, const EquilibriumData<T>& eq, double tol = 1e-12,
                          int interior_samples = 400)
{
    using std::abs;
    Report rep;
    const T a = eq.support.a, b = eq.support.b;
    const auto d1 = eq.h0.derivative(), d2 = d1.derivative();
    const double h0a = to_double(eq.h0(a)), h0b = to_double(eq.h0(b)), h0pb = to_double(d1(b));
    const double h0ppb = to_double(d2(b));
    rep.checks.push_back({"h0(a)>0", h0a, h0a > 0});
    rep.checks.push_back({"h0(b)=0", std::abs(h0b), std::abs(h0b) < tol});
    rep.checks.push_back({"h0'(b)=0", std::abs(h0pb), std::abs(h0pb) < tol});
    rep.checks.push_back({"h0''(b)>0", h0ppb, h0ppb > 0});
    const double crit = to_double(critical_integral(f.v2.template cast<T>(), eq.support));
    rep.checks.push_back({"critical_condition", crit, std::abs(crit) < tol});
    const double m1 = to_double(component_mass(eq, 1)), m2 = to_double(component_mass(eq, 2));
    rep.checks.push_back({"zero_mass_nu1", m1, std::abs(m1) < tol});
    rep.checks.push_back({"zero_mass_nu2", m2, std::abs(m2) < tol});
    double minh = 1e300;
    for (int i = 1; i < interior_samples; ++i) {
        T x = a + (b - a) * T(i) / T(interior_samples);
        minh = std::min(minh, to_double(eq.h0(x)));
    }
    rep.checks.push_back({"nu0_interior_positive", minh, minh > 0});
    return rep;
}

struct VariationalReport {
    double ell = 0;
    double max_deviation = 0;
    std::vector<std::pair<double, double>> exterior;  // (x, E(x) - ell)
    bool pass = false;
    Report as_report(double tol) const
    {
        Report r;
        r.checks.push_back({"interior_constancy", max_deviation, max_deviation < tol});
        for (auto [x, e] : exterior) r.checks.push_back({"exterior_x=" + std::to_string(x), e, e < 0});
        return r;
    }
};

// U(x) = int log|x - u| dnu_{s,t}(u), closed form from the cosine expansion of the density in phi
template <class T>
T log_potential(const EquilibriumData<T>& eq, const T& s, const T& t, const T& x)
{
    using std::abs;
    using std::acos;
    using std::cos;
    using std::exp;
    using std::log;
    using std::sqrt;
    const int n = detail::cheb_nodes_for(eq) + 4;
    auto f = detail::phi_density(eq, s, t);
    const T p = pi<T>();
    std::vector<T> fk(n, T(0));
    for (int j = 0; j < n; ++j) {
        T phi = (T(2 * j + 1) * p) / T(2 * n);
        T v = f(cos(phi));
        for (int k = 0; k < n; ++k) fk[k] += v * cos(T(k) * phi);
    }
    fk[0] /= T(n);
    for (int k = 1; k < n; ++k) fk[k] *= T(2) / T(n);

    const T m = eq.support.center(), r = eq.support.half_width();
    const T X = (x - m) / r;
    const T ax = abs(X);
    T acc = log(r) * p * fk[0];
    if (ax <= T(1)) {
        T chi = acos(X);
        acc += -p * log(T(2)) * fk[0];
        for (int k = 1; k < n; ++k) acc += -p * cos(T(k) * chi) / T(k) * fk[k];
    } else {
        T eta = log(ax + sqrt(ax * ax - T(1)));
        T sg = X > 0 ? T(1) : T(-1);
        acc += p * (eta - log(T(2))) * fk[0];
        T q = T(1);
        for (int k = 1; k < n; ++k) {
            q *= sg * exp(-eta);
            acc += -p * q / T(k) * fk[k];
        }
    }
    return acc;
}

template <class T>
T variational_energy(const DeformedFamily& f, const EquilibriumData<T>& eq, const T& s, const T& t, const T& x)
{
    return T(2) * log_potential(eq, s, t, x) - eval_deformed(f, s, t, x);
}

template <class T>
VariationalReport variational_check(const DeformedFamily& f, const EquilibriumData<T>& eq, const T& s,
                                    const T& t, int interior_points, const std::vector<T>& exterior,
                                    double tol = 1e-8)
{
    const T a = eq.support.a, b = eq.support.b;
    std::vector<T> E;
    for (int i = 0; i < interior_points; ++i) {
        T x = a + (b - a) * (T(i) + T(1) / T(2)) / T(interior_points);
        E.push_back(variational_energy(f, eq, s, t, x));
    }
    T mean = T(0);
    for (auto& e : E) mean += e;
    mean /= T(static_cast<long>(E.size()));
    VariationalReport rep;
    rep.ell = to_double(mean);
    for (auto& e : E) rep.max_deviation = std::max(rep.max_deviation, std::abs(to_double(e - mean)));
    bool ext_ok = true;
    for (const auto& x : exterior) {
        double d = to_double(variational_energy(f, eq, s, t, x) - mean);
        rep.exterior.push_back({to_double(x), d});
        ext_ok = ext_ok && d < 0;
    }
    rep.pass = rep.max_deviation < tol && ext_ok;
    return rep;
}

}  // namespace edgecrit
