#include <catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include <edgecrit/orthopoly.hpp>

#include <edgecrit/oracles.hpp>

using namespace edgecrit;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

DeformedFamily hermite()
{
    DeformedFamily f;
    f.v0 = RPoly({Rational(0), Rational(0), Rational(1)});
    f.check_confinement = false;
    return f;
}

const RecurrenceTable& example(int n)
{
    static std::map<int, RecurrenceTable> cache;
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, recurrence_table(build_example_family(), n, 0, 0)).first;
    return it->second;
}

// int f(x) dx over the table window in long double
template <class F>
long double integrate(const RecurrenceTable& tab, F f, int panels = 400)
{
    auto rule = composite_gauss<long double>(tab.lo, tab.hi, panels, gauss_legendre<long double>(20));
    long double acc = 0;
    for (std::size_t i = 0; i < rule.x.size(); ++i) acc += rule.w[i] * f(rule.x[i]);
    return acc;
}

}  // namespace

TEST_CASE("Hermite recurrence")
{
    auto tab = recurrence_table(hermite(), 1, 0, 0, {}, 40);
    for (int k = 1; k <= 40; ++k) CHECK_THAT(tab.a[k], WithinAbs(std::sqrt(k / 2.0), 1e-10));
    for (int k = 0; k <= 40; ++k) CHECK_THAT(tab.b[k], WithinAbs(0, 1e-10));
    CHECK(tab.validation_delta >= 0);
    CHECK(tab.validation_delta < 1e-12);
    // p_0 = pi^{-1/4}, p_2(1) = H_2(1) / sqrt(2^2 2! sqrt(pi))
    CHECK_THAT(orthonormal_eval(tab, 0, 0.3), WithinAbs(std::pow(M_PI, -0.25), 1e-14));
    CHECK_THAT(tab.kappa(0), WithinRel(std::pow(M_PI, -0.25), 1e-12));
    CHECK_THAT(orthonormal_eval(tab, 2, 1.0), WithinAbs(1 / (std::sqrt(2.0) * std::pow(M_PI, 0.25)), 1e-13));
    // kappa_k = 2^{k/2} / sqrt(2^k k! sqrt(pi)) for the orthonormal Hermite polynomials
    CHECK_THAT(tab.kappa(5), WithinRel(std::sqrt(std::pow(2.0, 5) / (120 * std::sqrt(M_PI))), 1e-10));
    // the text columns keep the working precision
    {
        detail::PrecisionScope scope(80);
        mpfr_float a3(tab.a_text[3]);
        CHECK(abs(a3 - sqrt(mpfr_float(3) / 2)) < mpfr_float("1e-45"));
    }
}

TEST_CASE("even potential gives b_k = 0")
{
    DeformedFamily f;
    f.v0 = RPoly({Rational(0), Rational(0), Rational(-1), Rational(0), Rational(1, 4)});
    f.v1 = RPoly({Rational(0), Rational(1)});
    auto tab = recurrence_table(f, 24, 0, 0);
    for (int k = 0; k <= 24; ++k) CHECK(std::abs(tab.b[k]) < 1e-14);
    for (int k = 1; k <= 24; ++k) CHECK(tab.a[k] > 0);
}

TEST_CASE("example family: limits and positivity")
{
    const auto& tab = example(64);
    CHECK(std::abs(tab.a[64] - 1) < 0.5);
    CHECK(std::abs(tab.b[64]) < 0.5);
    for (int k = 1; k <= 64; ++k) CHECK(tab.a[k] > 0);
    CHECK(tab.validation_delta < 1e-12);
    CHECK(tab.lo < -2);
    CHECK(tab.hi > 2);
}

TEST_CASE("orthonormality by independent quadrature")
{
    const auto& tab = example(16);
    for (int j = 0; j <= 12; ++j)
        for (int k = j; k <= 12; ++k) {
            auto v = integrate(tab, [&](long double x) { return (long double)weighted_eval(tab, j, x) * weighted_eval(tab, k, x); });
            CHECK_THAT(double(v), WithinAbs(j == k ? 1.0 : 0.0, 1e-10));
        }
}

TEST_CASE("Stieltjes agrees with Lanczos on the same discrete measure")
{
    const int n = 16;
    const auto& tab = example(n);
    detail::PrecisionScope scope(tab.cfg.digits + 10);
    auto poly = build_example_family().v0;
    auto d = detail::discretize(poly.coeffs(), n, tab.lo, tab.hi, tab.vmin, tab.cfg.quad_nodes / tab.cfg.panel_order,
                                tab.cfg.panel_order);
    std::vector<mpfr_float> w(d.sw.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = d.sw[i] * d.sw[i];
    std::vector<mpfr_float> alpha, beta;
    oracle::lanczos_rkpw(d.x, w, alpha, beta);
    for (int k = 0; k <= n; ++k) CHECK_THAT(tab.b[k], WithinAbs(static_cast<double>(alpha[k]), 1e-12));
    for (int k = 1; k <= n; ++k) CHECK_THAT(tab.a[k], WithinAbs(static_cast<double>(sqrt(beta[k])), 1e-12));
    CHECK_THAT(tab.log_mu0, WithinAbs(static_cast<double>(log(beta[0])), 1e-12));
}

TEST_CASE("precision, node and window invariance at n = 64")
{
    const auto& base = example(64);
    PrecisionConfig hi;
    hi.digits = 100;
    hi.quad_nodes = 2 * base.cfg.quad_nodes + 40;
    hi.validate = false;
    auto t2 = recurrence_table(build_example_family(), 64, 0, 0, hi);
    PrecisionConfig wide;
    wide.window_extra = 1.0;
    wide.validate = false;
    auto t3 = recurrence_table(build_example_family(), 64, 0, 0, wide);
    for (int k = 1; k <= 64; ++k) {
        CHECK(std::abs(base.a[k] - t2.a[k]) < 1e-12);
        CHECK(std::abs(base.a[k] - t3.a[k]) < 1e-12);
    }
    for (int k = 0; k <= 64; ++k) {
        CHECK(std::abs(base.b[k] - t2.b[k]) < 1e-12);
        CHECK(std::abs(base.b[k] - t3.b[k]) < 1e-12);
    }
}

TEST_CASE("deformed weights")
{
    auto tab = recurrence_table(build_example_family(), 32, 0.05, -0.02);
    CHECK(tab.s == 0.05);
    for (int k = 1; k <= 32; ++k) CHECK(tab.a[k] > 0);
    CHECK(tab.validation_delta < 1e-12);
}

TEST_CASE("Christoffel-Darboux kernel")
{
    const auto& tab = example(16);
    auto sum_form = [&](double x, double y) {
        long double acc = 0;
        for (int k = 0; k < 16; ++k) acc += (long double)weighted_eval(tab, k, x) * weighted_eval(tab, k, y);
        return double(acc);
    };
    for (double x : {-1.7, -0.4, 0.0, 0.9, 1.95})
        for (double y : {-1.2, 0.0, 0.3, 2.1}) {
            CHECK(cd_kernel(tab, x, y) == cd_kernel(tab, y, x));
            CHECK_THAT(cd_kernel(tab, x, y), WithinAbs(sum_form(x, y), 1e-12));
        }
    for (double x : {-1.7, 0.0, 1.2}) {
        CHECK_THAT(cd_kernel(tab, x, x), WithinAbs(sum_form(x, x), 1e-12));
        CHECK_THAT(cd_kernel(tab, x, x + 1e-9), WithinAbs(sum_form(x, x + 1e-9), 1e-12));
        CHECK(cd_kernel(tab, x, x) > 0);
    }
    // reproducing property
    for (auto [x, y] : {std::pair{-0.5, 0.7}, std::pair{1.1, 1.1}, std::pair{-1.9, 0.2}}) {
        auto v = integrate(tab, [&](long double u) { return (long double)cd_kernel(tab, x, u) * cd_kernel(tab, u, y); });
        CHECK_THAT(double(v), WithinAbs(cd_kernel(tab, x, y), 1e-8));
    }
    // trace is n
    CHECK_THAT(double(integrate(tab, [&](long double u) { return (long double)cd_kernel(tab, u, u); })),
               WithinAbs(16, 1e-9));
}

TEST_CASE("one-point density approaches the equilibrium density at 0")
{
    const double target = 4 / (5 * M_PI);
    double prev = 1;
    for (int n : {16, 32, 64}) {
        const double err = std::abs(cd_kernel(example(n), 0, 0) / n - target);
        CHECK(err < prev);
        prev = err;
    }
    CHECK(prev < 2e-3);
}

TEST_CASE("argument checks")
{
    PrecisionConfig low;
    low.digits = 20;
    CHECK_THROWS_AS(recurrence_table(build_example_family(), 8, 0, 0, low), ConfigError);
    CHECK_THROWS_AS(recurrence_table(build_example_family(), 0, 0, 0), OutOfRange);
    DeformedFamily bad = build_example_family();
    bad.v0 = RPoly({Rational(0), Rational(0), Rational(0), Rational(1)});
    CHECK_THROWS_AS(recurrence_table(bad, 8, 0, 0), InvalidFamily);
    CHECK_THROWS_AS(orthonormal_eval(example(16), 17, 0.0), OutOfRange);
}
