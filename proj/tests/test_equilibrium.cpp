#include <catch_amalgamated.hpp>

#include <random>

#include <edgecrit/equilibrium.hpp>

#include <edgecrit/oracles.hpp>

using namespace edgecrit;
using Catch::Matchers::WithinAbs;

namespace {

DeformedFamily single(RPoly v0)
{
    DeformedFamily f;
    f.v0 = std::move(v0);
    f.check_confinement = false;
    return f;
}

EquilibriumData<double> example_eq()
{
    return build_equilibrium<double>(build_example_family(), {-3.0, 3.0});
}

}  // namespace

TEST_CASE("solve_support: example, semicircle, quartic")
{
    auto s = solve_support<double>(build_example_family().v0, {-3.0, 3.0});
    CHECK_THAT(s.a, WithinAbs(-2.0, 1e-10));
    CHECK_THAT(s.b, WithinAbs(2.0, 1e-10));

    auto sc = solve_support<double>(RPoly({0, 0, Rational(1, 2)}), {-1.0, 1.0});
    CHECK_THAT(sc.a, WithinAbs(-2.0, 1e-13));
    CHECK_THAT(sc.b, WithinAbs(2.0, 1e-13));

    auto q = solve_support<double>(RPoly({0, 0, 0, 0, Rational(1, 4)}), {-1.0, 1.0});
    const double e = std::pow(16.0 / 3.0, 0.25);
    CHECK_THAT(q.a, WithinAbs(-e, 1e-13));
    CHECK_THAT(q.b, WithinAbs(e, 1e-13));
}

TEST_CASE("solve_support: quartic oracle by quadrature of the moment conditions")
{
    auto q = solve_support<double>(RPoly({0, 0, 0, 0, Rational(1, 4)}), {-1.0, 1.0});
    // midpoint rule in phi on the two moment conditions
    const int n = 20000;
    double F1 = 0, F2 = 0;
    for (int k = 0; k < n; ++k) {
        double phi = (k + 0.5) * M_PI / n, u = q.a + (q.b - q.a) * (1 + std::cos(phi)) / 2;
        F1 += u * u * u;
        F2 += u * u * u * u;
    }
    F1 *= M_PI / n;
    F2 *= M_PI / n;
    CHECK(std::abs(F1) < 1e-10);
    CHECK(std::abs(F2 - 2 * M_PI) < 1e-10);
}

TEST_CASE("solve_support errors")
{
    CHECK_THROWS_AS(solve_support<double>(RPoly({0, 0, 1}), {1.0, -1.0}), DegenerateInterval);
    SupportOptions o;
    o.max_iter = 1;
    CHECK_THROWS_AS(solve_support<double>(build_example_family().v0, {-3.0, 3.0}, o), NoConvergence);
}

TEST_CASE("h polynomials for the example")
{
    auto eq = example_eq();
    std::vector<double> h0 = {0.8, -0.8, 0.2}, h1 = {0, 1}, h2 = {0, -12, 0, 3};
    REQUIRE(eq.h0.degree() == 2);
    REQUIRE(eq.h1.degree() == 1);
    REQUIRE(eq.h2.degree() == 3);
    for (int k = 0; k <= 2; ++k) CHECK_THAT(eq.h0.coeff(k), WithinAbs(h0[k], 1e-12));
    for (int k = 0; k <= 1; ++k) CHECK_THAT(eq.h1.coeff(k), WithinAbs(h1[k], 1e-12));
    for (int k = 0; k <= 3; ++k) CHECK_THAT(eq.h2.coeff(k), WithinAbs(h2[k], 1e-12));
    CHECK_THAT(eq.h2(2.0), WithinAbs(0.0, 1e-12));
}

TEST_CASE("h0 for semicircles")
{
    auto h = compute_h0(Polynomial<double>{0, 0, 0.5}, SupportInterval<double>{-2, 2});
    REQUIRE(h.degree() == 0);
    CHECK_THAT(h.coeff(0), WithinAbs(1.0, 1e-15));
    auto sup = solve_support<double>(RPoly({Rational(1, 2), -1, Rational(1, 2)}), {-0.5, 2.0});
    CHECK_THAT(sup.a, WithinAbs(-1.0, 1e-12));
    CHECK_THAT(sup.b, WithinAbs(3.0, 1e-12));
    auto ht = compute_h0(Polynomial<double>{0.5, -1, 0.5}, sup);
    REQUIRE(ht.degree() == 0);
    CHECK_THAT(ht.coeff(0), WithinAbs(1.0, 1e-12));
}

TEST_CASE("hj special cases")
{
    CHECK(compute_hj(Polynomial<double>{3.5}, SupportInterval<double>{-1, 4}).is_zero());
    auto h1 = compute_hj(Polynomial<double>{0, 1}, SupportInterval<double>{-2, 2});
    CHECK_THAT(h1(2.0), WithinAbs(2.0, 1e-15));
    CHECK_THAT(oracle::h_by_pv(Polynomial<double>{1}, -2, 2, 0.7), WithinAbs(0.7, 1e-13));
}

TEST_CASE("polynomial part equals PV quadrature on random instances")
{
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(-1, 1);
    std::uniform_int_distribution<int> deg(1, 8);
    double worst = 0;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> c(deg(rng) + 1);
        for (auto& x : c) x = u(rng);
        Polynomial<double> v(c);
        double a = 2 * u(rng) - 0.5, b = a + 0.5 + 2 * std::abs(u(rng));
        SupportInterval<double> sup{a, b};
        auto h = compute_hj(v, sup);
        auto vp = v.derivative();
        for (int k = 0; k < 33; ++k) {
            double x = (a + b) / 2 + (b - a) / 2 * std::cos((k + 0.5) * M_PI / 33);
            worst = std::max(worst, std::abs(h(x) - oracle::h_by_pv(vp, a, b, x)));
        }
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("density signs satisfy the variational equality 2 PV int psi_j/(x-u) = V_j'")
{
    auto eq = example_eq();
    auto f = build_example_family();
    for (double x : {-1.7, -0.3, 0.4, 1.9}) {
        CHECK_THAT(2 * oracle::pv_psi_0(eq.h0, -2, 2, x), WithinAbs(f.v0.derivative().cast<double>()(x), 1e-12));
        CHECK_THAT(2 * oracle::pv_psi_j(eq.h1, -2, 2, x), WithinAbs(f.v1.derivative().cast<double>()(x), 1e-12));
        CHECK_THAT(2 * oracle::pv_psi_j(eq.h2, -2, 2, x), WithinAbs(f.v2.derivative().cast<double>()(x), 1e-12));
    }
}

TEST_CASE("density examples")
{
    auto eq = example_eq();
    CHECK_THAT(density(eq, 0.0, 0.0, 0.0), WithinAbs(4 / (5 * M_PI), 1e-14));
    CHECK_THAT(density(eq, 0.1, 0.0, 0.0), WithinAbs(4 / (5 * M_PI), 1e-14));
    double prev = 1;
    for (int k = 2; k <= 12; k += 2) {
        double v = std::abs(density(eq, 0.0, 0.7, 2 - std::pow(10.0, -k)));
        CHECK(v < prev);
        prev = v;
    }
    CHECK(prev < 1e-5);
    CHECK_THROWS_AS(density(eq, 0.0, 0.0, 2.5), OutOfSupport);
    CHECK_THROWS_AS(density(eq, 0.0, 0.0, -2.0), OutOfSupport);
}

TEST_CASE("measure moments")
{
    auto eq = example_eq();
    CHECK_THAT(measure_moments(eq, 0.0, 0.0).mass, WithinAbs(1.0, 1e-12));
    CHECK_THAT(measure_moments(eq, 0.3, -0.2).mass, WithinAbs(1.0, 1e-12));
    CHECK_THAT(component_mass(eq, 1), WithinAbs(0.0, 1e-14));
    CHECK_THAT(component_mass(eq, 2), WithinAbs(0.0, 1e-13));
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (int i = 0; i < 20; ++i) CHECK_THAT(measure_moments(eq, u(rng), u(rng)).mass, WithinAbs(1.0, 1e-12));
}

TEST_CASE("critical constants")
{
    auto k = constants(example_eq());
    CHECK_THAT(k.c, WithinAbs(std::pow(6.0, 2.0 / 7), 1e-12));
    // h1(b) / (c^{1/2} (b-a)^{1/2}) = 2 / (6^{1/7} * 2)
    CHECK_THAT(k.c1, WithinAbs(std::pow(6.0, -1.0 / 7), 1e-12));
    CHECK_THAT(k.c2, WithinAbs(-12 * std::pow(6.0, -3.0 / 7), 1e-12));
    auto semi = build_equilibrium<double>(single(RPoly({0, 0, Rational(1, 2)})), {-1.0, 1.0});
    CHECK_THROWS_AS(constants(semi), AssumptionViolated);
}

TEST_CASE("verify_assumptions")
{
    auto f = build_example_family();
    auto eq = example_eq();
    auto rep = verify_assumptions(f, eq);
    for (const auto& c : rep.checks) INFO(c.name << " " << c.value);
    CHECK(rep.all_pass());
    CHECK(std::abs(rep.find("critical_condition")->value) < 1e-12);

    auto g = f;
    g.v2 = RPoly({0, 1});
    auto eqg = build_equilibrium<double>(g, {-3.0, 3.0});
    auto rg = verify_assumptions(g, eqg);
    CHECK_FALSE(rg.find("critical_condition")->pass);
    CHECK_THAT(rg.find("critical_condition")->value, WithinAbs(2 * M_PI, 1e-12));

    auto semi = single(RPoly({0, 0, Rational(1, 2)}));
    auto eqs = build_equilibrium<double>(semi, {-1.0, 1.0});
    auto rs = verify_assumptions(semi, eqs);
    CHECK_FALSE(rs.find("h0''(b)>0")->pass);
}

TEST_CASE("edge exponent 5/2")
{
    auto eq = example_eq();
    auto k = constants(eq);
    const double target = std::pow(k.c, 3.5) / (30 * M_PI);
    CHECK_THAT(target, WithinAbs(1 / (5 * M_PI), 1e-14));
    for (int j = 2; j <= 5; ++j) {
        double d = std::pow(10.0, -j);
        double ratio = density(eq, 0.0, 0.0, 2 - d) / std::pow(d, 2.5) / target;
        CHECK(std::abs(ratio - 1) < 2 * std::pow(10.0, -j / 2.0));
    }
}

TEST_CASE("variational conditions")
{
    auto f = build_example_family();
    auto eq = example_eq();
    auto rep = variational_check(f, eq, 0.0, 0.0, 200, std::vector<double>{-3.0, 3.0});
    CHECK(rep.max_deviation < 1e-8);
    CHECK(rep.pass);
    for (auto [x, e] : rep.exterior) {
        INFO("x=" << x << " E-ell=" << e);
        CHECK(e < 0);
    }
    auto rep2 = variational_check(f, eq, 0.2, -0.1, 200, std::vector<double>{-3.0, 3.0});
    CHECK(rep2.max_deviation < 1e-8);

    auto semi = single(RPoly({0, 0, Rational(1, 2)}));
    auto eqs = build_equilibrium<double>(semi, {-1.0, 1.0});
    auto rs = variational_check(semi, eqs, 0.0, 0.0, 200, std::vector<double>{3.0});
    // 2 int log|x-u| dsigma(u) - x^2/2 = -1 on [-2, 2]
    CHECK_THAT(rs.ell, WithinAbs(-1.0, 1e-8));
    CHECK(rs.max_deviation < 1e-12);
}

TEST_CASE("log potential against high-precision reference values")
{
    // adaptive quadrature at 25 digits, density (2-u)^2 sqrt(4-u^2)/(10 pi)
    auto eq = example_eq();
    CHECK_THAT(log_potential(eq, 0.0, 0.0, -1.3), WithinAbs(-0.85666416666666665087, 1e-13));
    CHECK_THAT(log_potential(eq, 0.0, 0.0, 0.5), WithinAbs(0.059895833333333333333, 1e-13));
    CHECK_THAT(log_potential(eq, 0.0, 0.0, 2.7), WithinAbs(1.2257251956351068578, 1e-13));
}
