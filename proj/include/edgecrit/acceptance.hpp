#pragma once

// The acceptance battery (criteria 1-10) and a fast invariant suite.

#include <chrono>
#include <cstdarg>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "harness.hpp"
#include "oracles.hpp"

namespace edgecrit {

struct CriterionResult {
    int id = 0;
    std::string title;
    bool pass = false;
    std::string detail;
    double seconds = 0;
};

namespace accept {

inline std::string fmt(const char* f, ...)
{
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

// collects named sub-checks into one criterion
struct Collector {
    bool pass = true;
    std::string detail;
    void check(bool ok, const std::string& what)
    {
        pass = pass && ok;
        if (!detail.empty()) detail += "; ";
        detail += (ok ? "" : "FAIL ") + what;
    }
};

inline double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline std::vector<double> linspace(double a, double b, int n)
{
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
    return v;
}

inline double max_coeff_err(const Polynomial<double>& p, const std::vector<double>& exact)
{
    double e = 0;
    const int d = std::max<int>(p.degree(), int(exact.size()) - 1);
    for (int k = 0; k <= d; ++k) e = std::max(e, std::abs(p.coeff(k) - (k < int(exact.size()) ? exact[k] : 0.0)));
    return e;
}

// polynomial interpolating h_by_pv(V') at Chebyshev points, for an independent h_j
inline Polynomial<double> h_from_pv(const Polynomial<double>& vp, double a, double b, int deg)
{
    const int m = deg + 1;
    Eigen::MatrixXd A(m, m);
    Eigen::VectorXd y(m);
    for (int i = 0; i < m; ++i) {
        const double x = (a + b) / 2 + (b - a) / 2 * std::cos((2 * i + 1) * M_PI / (2 * m));
        for (int k = 0; k < m; ++k) A(i, k) = std::pow(x, k);
        y(i) = oracle::h_by_pv(vp, a, b, x);
    }
    Eigen::VectorXd c = A.colPivHouseholderQr().solve(y);
    return Polynomial<double>(std::vector<double>(c.data(), c.data() + m));
}

inline DeformedFamily hermite_family()
{
    DeformedFamily f;
    f.v0 = RPoly({Rational(0), Rational(0), Rational(1)});
    f.check_confinement = false;
    return f;
}

}  // namespace accept

inline CriterionResult criterion_1()
{
    using namespace accept;
    auto t0 = std::chrono::steady_clock::now();
    Collector c;
    auto f = build_example_family();
    auto sup = solve_support<double>(f.v0, {-3.0, 3.0});
    const double es = std::max(std::abs(sup.a + 2), std::abs(sup.b - 2));
    c.check(es < 1e-10, fmt("support (%.15g, %.15g) err %.2e", sup.a, sup.b, es));
    auto eq = build_equilibrium<double>(f, {-3.0, 3.0});
    const double e0 = max_coeff_err(eq.h0, {0.8, -0.8, 0.2});
    const double e1 = max_coeff_err(eq.h1, {0, 1});
    const double e2 = max_coeff_err(eq.h2, {0, -12, 0, 3});
    c.check(std::max({e0, e1, e2}) < 1e-12, fmt("h coefficient err %.2e %.2e %.2e", e0, e1, e2));
    const double sec = seconds_since(t0);
    c.check(sec < 1, fmt("%.3fs", sec));
    return {1, "example reproduction", c.pass, c.detail, sec};
}

inline CriterionResult criterion_2()
{
    using namespace accept;
    auto t0 = std::chrono::steady_clock::now();
    Collector c;
    auto f = build_example_family();
    auto eq = build_equilibrium<double>(f, {-3.0, 3.0});
    auto k = constants(eq);
    const double C = std::pow(6.0, 2.0 / 7), C1 = std::sqrt(2.0) * std::pow(6.0, -1.0 / 7),
                 C2 = -12 * std::pow(6.0, -3.0 / 7);
    c.check(std::abs(k.c - C) < 1e-12, fmt("c = %.15g (err %.2e)", k.c, std::abs(k.c - C)));
    c.check(std::abs(k.c1 - C1) < 1e-12, fmt("c1 = %.15g vs sqrt2*6^(-1/7) = %.15g (err %.2e)", k.c1, C1,
                                             std::abs(k.c1 - C1)));
    c.check(std::abs(k.c2 - C2) < 1e-12, fmt("c2 = %.15g (err %.2e)", k.c2, std::abs(k.c2 - C2)));

    // the same constants from h_j re-derived by principal-value quadrature
    const double a = eq.support.a, b = eq.support.b;
    // h0 enters through sqrt((u-a)(b-u)), so it is checked by the variational equality instead
    double ev = 0;
    for (double x : linspace(a + 0.05, b - 0.05, 9))
        ev = std::max(ev, std::abs(2 * oracle::pv_psi_0(eq.h0, a, b, x) - f.v0.cast<double>().derivative()(x)));
    c.check(ev < 1e-12, fmt("h0 satisfies 2 PV int psi0/(x-u) = V0' to %.2e", ev));
    auto h1 = h_from_pv(f.v1.cast<double>().derivative(), a, b, 1);
    auto h2 = h_from_pv(f.v2.cast<double>().derivative(), a, b, 3);
    const double oc1 = h1(b) / (std::sqrt(k.c) * std::sqrt(b - a));
    const double oc2 = -h2.derivative()(b) / (std::pow(k.c, 1.5) * std::sqrt(b - a));
    const double od = std::max(std::abs(oc1 - k.c1), std::abs(oc2 - k.c2));
    c.check(od < 1e-12, fmt("PV oracle agrees with the implementation to %.2e", od));
    const double sec = seconds_since(t0);
    c.check(sec < 1, fmt("%.3fs", sec));
    return {2, "critical constants", c.pass, c.detail, sec};
}

inline CriterionResult criterion_3()
{
    using namespace accept;
    auto t0 = std::chrono::steady_clock::now();
    Collector c;
    auto f = build_example_family();
    auto eq = build_equilibrium<double>(f, {-3.0, 3.0});
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-0.5, 0.5);
    double em = 0;
    for (int i = 0; i < 20; ++i) {
        const double s = U(rng), t = U(rng);
        em = std::max(em, std::abs(measure_moments(eq, s, t).mass - 1));
    }
    c.check(em < 1e-12, fmt("mass err %.2e over 20 (s,t)", em));
    const double m1 = std::abs(component_mass(eq, 1)), m2 = std::abs(component_mass(eq, 2));
    c.check(std::max(m1, m2) < 1e-12, fmt("nu1, nu2 mass %.2e %.2e", m1, m2));
    auto vr = variational_check<double>(f, eq, 0.0, 0.0, 200, {-3.0, 3.0}, 1e-8);
    c.check(vr.max_deviation < 1e-8, fmt("interior constancy %.2e", vr.max_deviation));
    bool ext = vr.exterior.size() == 2;
    for (auto [x, e] : vr.exterior) ext = ext && e < 0;
    c.check(ext, fmt("exterior E-ell at -3, 3: %.4g %.4g", vr.exterior.at(0).second, vr.exterior.at(1).second));

    DeformedFamily sc;
    sc.v0 = RPoly({Rational(0), Rational(0), Rational(1, 2)});
    sc.check_confinement = false;
    auto eqs = build_equilibrium<double>(sc, {-1.0, 1.0});
    auto vs = variational_check<double>(sc, eqs, 0.0, 0.0, 200, {}, 1e-8);
    const double target = -(1 + 2 * std::log(2.0));
    c.check(std::abs(vs.ell - target) < 1e-8,
            fmt("semicircle ell = %.12g vs -(1+2ln2) = %.12g", vs.ell, target));
    return {3, "measure properties", c.pass, c.detail, seconds_since(t0)};
}

inline CriterionResult criterion_4()
{
    using namespace accept;
    auto t0 = std::chrono::steady_clock::now();
    Collector c;
    const double L = 40, mesh = 0.02;
    auto sol = solve_y(0.0, L, int(2 * L / mesh) + 1, 1e-10);
    const double sec = seconds_since(t0);
    c.check(sol.residual_norm < 1e-8, fmt("residual on [-39,39] %.2e", sol.residual_norm));
    auto big = solve_y(0.0, 2 * L, int(4 * L / mesh) + 1, 1e-10);
    const double dy = std::abs(eval_y(sol, 0).y - eval_y(big, 0).y);
    c.check(dy < 5e-4, fmt("y(0,0) = %.10f, L-doubling change %.2e", eval_y(sol, 0).y, dy));
    const double bl = std::abs(sol.y.front() - asymptotic_y(-L, 0)), br = std::abs(sol.y.back() - asymptotic_y(L, 0));
    c.check(std::max(bl, br) < 2 / L, fmt("boundary mismatch %.2e %.2e", bl, br));
    c.check(sec < 30, fmt("%.2fs", sec));
    return {4, "P_I^2 solver", c.pass, c.detail, seconds_since(t0)};
}

inline CriterionResult criterion_5(double s0 = 0, double t0 = 0)
{
    using namespace accept;
    auto start = std::chrono::steady_clock::now();
    Collector c;
    auto sol = solve_y_refined(t0, 40, 0.02);
    auto us = linspace(-8, 4, 25);
    LaxConfig ray;
    ray.path = PathKind::Ray;
    auto pr = phi_values(us, s0, t0, sol, ray);
    auto pl = phi_values(us, s0, t0, sol);
    c.check(pr.reality_defect < 1e-6, fmt("reality defect %.2e", pr.reality_defect));
    const double wd = std::max(pr.wronskian_drift, pl.wronskian_drift);
    c.check(wd < 1e-9, fmt("Wronskian drift %.2e", wd));

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> Z(-3, 3), S(-4, 4);
    double zc = 0;
    for (int i = 0; i < 10; ++i) {
        std::complex<double> z(Z(rng), Z(rng));
        zc = std::max(zc, zero_curvature_residual(z, S(rng), t0, sol));
    }
    c.check(zc < 1e-7, fmt("zero curvature %.2e", zc));

    const double dl = 2e-3;
    double ds = 0;
    for (auto [u, v] : {std::pair{-1.0, 0.5}, std::pair{-3.0, -2.0}, std::pair{0.0, 0.0}, std::pair{2.0, -5.0}}) {
        auto K = [&](double s) { return crit_kernel(u, v, s0 + s, t0, sol).k; };
        const double dk = (K(-2 * dl) - 8 * K(-dl) + 8 * K(dl) - K(2 * dl)) / (12 * dl);
        auto p = phi_values({u, v}, s0, t0, sol).values;
        const double pred = -(p[0].real_form(1) * p[1].real_form(1)).real() / (2 * M_PI);
        ds = std::max(ds, std::abs(dk - pred));
    }
    c.check(ds < 1e-5, fmt("dK/ds identity %.2e", ds));
    const double sec = seconds_since(start);
    c.check(sec < 120, fmt("%.1fs", sec));
    return {5, "Lax integrity", c.pass, c.detail, sec};
}

inline CriterionResult criterion_6()
{
    using namespace accept;
    auto start = std::chrono::steady_clock::now();
    Collector c;
    auto g = linspace(-8, 4, 9);
    LaxConfig ray;
    ray.path = PathKind::Ray;
    for (auto [s0, t0] : {std::pair{0.0, 0.0}, std::pair{1.0, 0.0}, std::pair{0.0, 1.0}}) {
        auto sol = solve_y_refined(t0, 40, 0.02);
        auto ks = kernel_grid(g, g, s0, t0, sol, ray);
        double asym = 0, im = 0, dmin = 1e300;
        for (std::size_t i = 0; i < g.size(); ++i)
            for (std::size_t j = 0; j < g.size(); ++j) {
                const auto& kij = ks[i * g.size() + j];
                asym = std::max(asym, std::abs(kij.k - ks[j * g.size() + i].k));
                im = std::max(im, std::abs(kij.imag));
                if (i == j) dmin = std::min(dmin, kij.k);
            }
        c.check(asym < 1e-10 && im < 1e-8 && dmin >= -1e-8,
                fmt("(%g,%g): asym %.1e imag %.1e min diag %.4g", s0, t0, asym, im, dmin));
    }
    return {6, "kernel structure", c.pass, c.detail, seconds_since(start)};
}

inline CriterionResult criterion_7()
{
    using namespace accept;
    auto start = std::chrono::steady_clock::now();
    Collector c;
    auto h = recurrence_table(hermite_family(), 1, 0, 0, {}, 40);
    double ea = 0;
    for (int k = 1; k <= 40; ++k) ea = std::max(ea, std::abs(h.a[k] - std::sqrt(k / 2.0)));
    for (int k = 0; k <= 40; ++k) ea = std::max(ea, std::abs(h.b[k]));
    c.check(ea < 1e-10, fmt("Hermite a_k, b_k err %.2e (k <= 40)", ea));

    auto tab = recurrence_table(build_example_family(), 64, 0, 0);
    auto rule = composite_gauss<long double>(tab.lo, tab.hi, 600, gauss_legendre<long double>(20));
    double eo = 0;
    for (int j = 0; j <= 16; ++j)
        for (int k = j; k <= 16; ++k) {
            long double acc = 0;
            for (std::size_t i = 0; i < rule.x.size(); ++i)
                acc += rule.w[i] * (long double)weighted_eval(tab, j, rule.x[i]) * weighted_eval(tab, k, rule.x[i]);
            eo = std::max(eo, std::abs(double(acc) - (j == k ? 1.0 : 0.0)));
        }
    c.check(eo < 1e-10, fmt("orthonormality err %.2e (j,k <= 16, n = 64)", eo));

    // precision, nodes and truncation window all doubled
    PrecisionConfig dbl;
    dbl.digits = 2 * tab.cfg.digits;
    dbl.quad_nodes = 2 * tab.cfg.quad_nodes;
    dbl.truncation_margin = 2 * tab.cfg.margin();
    dbl.window_extra = 1.0;
    dbl.validate = false;
    auto t2 = recurrence_table(build_example_family(), 64, 0, 0, dbl);
    double di = 0;
    for (int k = 0; k <= 64; ++k) di = std::max({di, std::abs(tab.a[k] - t2.a[k]), std::abs(tab.b[k] - t2.b[k])});
    c.check(di < 1e-12, fmt("doubling invariance %.2e (built-in validation %.2e)", di, tab.validation_delta));

    auto t256 = std::chrono::steady_clock::now();
    auto big = recurrence_table(build_example_family(), 256, 0, 0);
    const double sec = seconds_since(t256);
    c.check(sec < 600 && big.validation_delta < 1e-12,
            fmt("n = 256 at %d digits: %.1fs, validation %.2e", big.cfg.digits, sec, big.validation_delta));
    return {7, "orthopoly engine", c.pass, c.detail, seconds_since(start)};
}

inline CriterionResult criterion_8(Workspace& ws)
{
    using namespace accept;
    auto start = std::chrono::steady_clock::now();
    Collector c;
    for (auto [s0, t0] : {std::pair{0.0, 0.0}, std::pair{1.0, 0.0}, std::pair{0.0, 1.0}}) {
        auto r = recurrence_experiment(ws, s0, t0);
        std::string ra, rb;
        for (const auto& row : r.rows) {
            ra += fmt(" %.3g", row[7]);
            rb += fmt(" %.3g", row[8]);
        }
        const bool ok_a = r.flag("a_monotone") && r.flag("a_below_correction") && r.flag("a_slope_in_range");
        const bool ok_b = r.flag("b_monotone") && r.flag("b_below_correction") && r.flag("b_slope_in_range");
        c.check(ok_a, fmt("(%g,%g) a residuals%s slope %.3f", s0, t0, ra.c_str(), r.metric("a_slope")));
        c.check(ok_b, fmt("(%g,%g) b residuals%s slope %.3f", s0, t0, rb.c_str(), r.metric("b_slope")));
    }
    return {8, "recurrence coefficients vs P_I^2", c.pass, c.detail, seconds_since(start)};
}

inline CriterionResult criterion_9(Workspace& ws)
{
    using namespace accept;
    auto start = std::chrono::steady_clock::now();
    Collector c;
    auto r = kernel_experiment(ws, 0, 0);
    c.check(r.flag("decreasing_every_point"), "error decreasing at every probe point");
    c.check(r.flag("slope_in_range"), fmt("slope %.3f, max err at n = %d: %.3g", r.metric("slope"),
                                          ws.config().kernel_n_list.back(), r.metric("max_err_last")));
    return {9, "critical kernel limit", c.pass, c.detail, seconds_since(start)};
}

inline CriterionResult criterion_10(Workspace& ws)
{
    using namespace accept;
    auto start = std::chrono::steady_clock::now();
    Collector c;
    auto r = bulk_and_airy_experiment(ws);
    std::string b, e;
    for (int n : ws.config().sanity_n_list) {
        b += fmt(" %.3g", r.metric("bulk_max_err_n" + std::to_string(n)));
        e += fmt(" %.3g", r.metric("edge_max_err_n" + std::to_string(n)));
    }
    c.check(r.flag("bulk_below_tol") && r.flag("bulk_decreasing"), "bulk sine max err" + b);
    c.check(r.flag("edge_below_tol") && r.flag("edge_decreasing"), "edge Airy max err" + e);
    return {10, "bulk and regular-edge limits", c.pass, c.detail, seconds_since(start)};
}

// runs the selected criteria (all when empty); the callback sees each result as it completes
inline std::vector<CriterionResult> run_acceptance(const ExperimentConfig& cfg, std::vector<int> which = {},
                                                   const std::function<void(const CriterionResult&)>& on_result = {})
{
    if (which.empty()) which = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    std::unique_ptr<Workspace> ws;
    auto need_ws = [&]() -> Workspace& {
        if (!ws) ws = std::make_unique<Workspace>(cfg);
        return *ws;
    };
    std::vector<CriterionResult> out;
    for (int id : which) {
        CriterionResult r;
        try {
            switch (id) {
                case 1: r = criterion_1(); break;
                case 2: r = criterion_2(); break;
                case 3: r = criterion_3(); break;
                case 4: r = criterion_4(); break;
                case 5: r = criterion_5(); break;
                case 6: r = criterion_6(); break;
                case 7: r = criterion_7(); break;
                case 8: r = criterion_8(need_ws()); break;
                case 9: r = criterion_9(need_ws()); break;
                case 10: r = criterion_10(need_ws()); break;
                default: throw ConfigError("no criterion " + std::to_string(id));
            }
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            r = {id, "criterion " + std::to_string(id), false, std::string("exception: ") + e.what(), 0};
        }
        if (on_result) on_result(r);
        out.push_back(r);
    }
    return out;
}

inline std::string format_result(const CriterionResult& r)
{
    return accept::fmt("[%s] %2d %s (%.1fs): ", r.pass ? "PASS" : "FAIL", r.id, r.title.c_str(), r.seconds) +
           r.detail;
}

// Sub-second checks of the implementation against independent oracles. Unlike the
// acceptance battery these compare against re-derived values, not the literal closed forms.
inline std::vector<CriterionResult> fast_suite()
{
    using namespace accept;
    std::vector<CriterionResult> out;
    auto run = [&](const char* name, auto fn) {
        auto t0 = std::chrono::steady_clock::now();
        Collector c;
        try {
            fn(c);
        } catch (const std::exception& e) {
            c.check(false, std::string("exception: ") + e.what());
        }
        out.push_back({int(out.size()) + 1, name, c.pass, c.detail, seconds_since(t0)});
    };
    auto f = build_example_family();
    auto eq = build_equilibrium<double>(f, {-3.0, 3.0});
    run("example support and h_j", [&](Collector& c) {
        const double a = eq.support.a, b = eq.support.b;
        c.check(std::abs(a + 2) < 1e-10 && std::abs(b - 2) < 1e-10, fmt("support (%.12g, %.12g)", a, b));
        double e = 0;
        for (double x : linspace(-1.9, 1.9, 9)) {
            e = std::max(e, std::abs(2 * oracle::pv_psi_0(eq.h0, a, b, x) - f.v0.cast<double>().derivative()(x)));
            e = std::max(e, std::abs(eq.h2(x) - oracle::h_by_pv(f.v2.cast<double>().derivative(), a, b, x)));
        }
        c.check(e < 1e-10, fmt("h_j vs PV quadrature %.2e", e));
    });
    run("critical constants vs PV oracle", [&](Collector& c) {
        auto k = constants(eq);
        const double a = eq.support.a, b = eq.support.b;
        auto h1 = h_from_pv(f.v1.cast<double>().derivative(), a, b, 1);
        const double oc1 = h1(b) / (std::sqrt(k.c) * std::sqrt(b - a));
        c.check(std::abs(k.c - std::pow(6.0, 2.0 / 7)) < 1e-12, fmt("c = %.15g", k.c));
        c.check(std::abs(k.c1 - oc1) < 1e-12, fmt("c1 = %.15g (oracle %.15g)", k.c1, oc1));
        c.check(std::abs(k.c2 + 12 * std::pow(6.0, -3.0 / 7)) < 1e-12, fmt("c2 = %.15g", k.c2));
    });
    run("measure mass and variational equality", [&](Collector& c) {
        const double em = std::abs(measure_moments(eq, 0.3, -0.2).mass - 1);
        c.check(em < 1e-12, fmt("mass err %.2e", em));
        auto vr = variational_check<double>(f, eq, 0.0, 0.0, 100, {-3.0, 3.0}, 1e-8);
        c.check(vr.pass, fmt("interior constancy %.2e", vr.max_deviation));
        DeformedFamily sc;
        sc.v0 = RPoly({Rational(0), Rational(0), Rational(1, 2)});
        sc.check_confinement = false;
        auto vs = variational_check<double>(sc, build_equilibrium<double>(sc, {-1.0, 1.0}), 0.0, 0.0, 100, {}, 1e-8);
        c.check(std::abs(vs.ell + 1) < 1e-10, fmt("semicircle ell = %.12g (exact -1)", vs.ell));
    });
    run("Airy and sine kernels", [&](Collector& c) {
        const double h = 1e-3;
        double e = 0;
        for (double x : linspace(-8, 8, 17))
            e = std::max(e, std::abs((airy(x + h).ai - 2 * airy(x).ai + airy(x - h).ai) / (h * h) - x * airy(x).ai));
        c.check(e < 1e-5, fmt("Ai'' - x Ai by differences %.2e", e));
        c.check(std::abs(sine_kernel(0, 1)) < 1e-15, "sine kernel zero at 1");
    });
    run("Hermite recurrence (short)", [&](Collector& c) {
        auto t = recurrence_table(hermite_family(), 1, 0, 0, {}, 12);
        double e = 0;
        for (int k = 1; k <= 12; ++k) e = std::max(e, std::abs(t.a[k] - std::sqrt(k / 2.0)));
        c.check(e < 1e-12, fmt("a_k err %.2e", e));
    });
    return out;
}

}  // namespace edgecrit
