#include <catch_amalgamated.hpp>

#include <cmath>

#include <edgecrit/lax.hpp>

using namespace edgecrit;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using cd = std::complex<double>;

namespace {

const PI2Solution& base()
{
    static const PI2Solution s = solve_y(0.0, 20, 4001, 1e-10);
    return s;
}

std::vector<double> grid5() { return {-6, -3, -1, 0.5, 2}; }

}  // namespace

TEST_CASE("theta")
{
    CHECK_THAT(theta(cd(1), 0.0, 0.0).real(), WithinAbs(1.0 / 105, 1e-15));
    auto v = theta(cd(1), 0.7, -0.4);
    CHECK_THAT(v.real(), WithinAbs(1.0 / 105 + 0.4 / 3 + 0.7, 1e-14));
    CHECK(v.imag() == 0);
    CHECK(std::abs(theta(cd(1e-300), 0.3, 0.2)) < 1e-140);
    CHECK_THROWS_AS(theta(cd(-1), 0.0, 0.0), BranchCut);
    CHECK_THROWS_AS(theta(cd(0), 0.0, 0.0), BranchCut);
    // continuous from above the cut
    CHECK(std::abs(theta(cd(-1, 1e-300), 0.0, 0.0) - cd(0, -1.0 / 105)) < 1e-12);
}

TEST_CASE("U is trace free and matches the P_I^2 jet")
{
    auto j = lax_jet<double>(base(), 0.0, 0.0);
    LaxU<double> U(j);
    auto [al, be, ga] = U.entries(cd(2, 1));
    // the (2,2) entry is -alpha by construction; spot-check the leading coefficients
    CHECK(U.b2 == 8.0 / 240);
    CHECK(U.g3 == 8.0 / 240);
    CHECK_THAT(U.a1, WithinAbs(-4 * j.ys / 240, 1e-15));
    CHECK(std::isfinite(std::abs(al + be + ga)));
}

TEST_CASE("formal series reproduces theta and the zeta^{-1/4} prefactor")
{
    for (auto [s, t] : {std::pair{0.0, 0.0}, std::pair{0.0, 1.0}, std::pair{1.0, 0.0}}) {
        auto sol = t == 0.0 ? base() : solve_y(t, 20, 2001, 1e-9);
        auto j = lax_jet<double>(sol, s, t);
        FormalSeries<double> fs(j, 40);
        CHECK_THAT(fs.log_coeff, WithinAbs(-0.5, 1e-12));
        // d/dlambda(-theta) = -lambda^6/15 + t lambda^2 - s
        CHECK_THAT(fs.positive[6], WithinAbs(-1.0 / 15, 1e-14));
        CHECK_THAT(fs.positive[2], WithinAbs(t, 1e-12));
        CHECK_THAT(fs.positive[0], WithinAbs(-s, 1e-12));
        for (int p : {1, 3, 4, 5}) CHECK_THAT(fs.positive[p], WithinAbs(0, 1e-12));
        CHECK(fs.w[0] == -1);
        // second coefficient of the log series is y/2
        CHECK_THAT(fs.d[2], WithinAbs(j.y / 2, 1e-12));
        CHECK_THAT(fs.w[2], WithinAbs(j.y, 1e-12));
    }
}

TEST_CASE("phi: reality, path independence, Wronskian")
{
    std::vector<double> us{-8, -6, -4, -2, -1, 0, 0.5, 1, 2, 3, 4};
    auto real = phi_values(us, 0, 0, base());
    LaxConfig rc;
    rc.path = PathKind::Ray;
    auto ray = phi_values(us, 0, 0, base(), rc);
    CHECK(real.wronskian_drift < 1e-9);
    CHECK(ray.wronskian_drift < 1e-9);
    CHECK(ray.reality_defect < 1e-6);
    for (std::size_t i = 0; i < us.size(); ++i) {
        const auto& a = real.values[i];
        const auto& b = ray.values[i];
        CHECK(std::abs(a.real_form(1).imag()) <= 1e-6 * std::abs(a.phi1));
        CHECK(std::abs(b.real_form(1).imag()) <= 1e-6 * std::abs(b.phi1));
        CHECK(std::abs(b.real_form(2).imag()) <= 1e-6 * std::abs(b.phi2));
        const double tol = a.est_error + b.est_error;
        CHECK(std::abs(a.phi1 - b.phi1) <= tol * std::abs(a.phi1));
        CHECK(std::abs(a.phi2 - b.phi2) <= tol * std::abs(a.phi2));
        // derivatives come from U
        CHECK(std::isfinite(std::abs(a.dphi1)));
    }
}

TEST_CASE("phi: seed radius does not matter")
{
    LaxConfig c;
    c.R = 10;
    c.R_check = 30;
    c.jet_tol = 0;
    auto v = phi_values({-3, 0, 2}, 0, 0, base(), c);
    for (const auto& x : v.values) CHECK(x.est_error < 1e-9);
    auto w = phi_values({-3, 0, 2}, 0, 0, base());
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(v.values[i].phi1 - w.values[i].phi1) < 1e-9);
}

TEST_CASE("phi at large zeta follows the asymptotics")
{
    auto v = phi_values({30}, 0, 0, base()).values[0];
    const double ratio = v.stripped1.real() * std::sqrt(2) * std::pow(30.0, 0.25);
    CHECK(std::abs(ratio - 1) < 2 / std::sqrt(30.0));
    // and the first correction is -h/sqrt(zeta)
    FormalSeries<double> fs(lax_jet<double>(base(), 0, 0), 60);
    CHECK_THAT(ratio, WithinAbs(1 - fs.h() / std::sqrt(30.0), 0.02));
}

TEST_CASE("phi: extended precision agrees")
{
    LaxConfig c;
    c.extended = true;
    c.rtol = 1e-16;
    auto a = phi_values({-5, 0, 3}, 0, 0, base(), c);
    auto b = phi_values({-5, 0, 3}, 0, 0, base());
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(std::abs(a.values[i].phi1 - b.values[i].phi1) < 1e-9 * std::abs(b.values[i].phi1));
}

TEST_CASE("kernel: symmetry, reality, nonnegative diagonal")
{
    auto g = grid5();
    LaxConfig rc;
    rc.path = PathKind::Ray;
    auto ks = kernel_grid(g, g, 0, 0, base(), rc);
    for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t j = 0; j < g.size(); ++j) {
            const auto& kij = ks[i * g.size() + j];
            const auto& kji = ks[j * g.size() + i];
            CHECK(std::abs(kij.k - kji.k) < 1e-12);
            CHECK(std::abs(kij.imag) < 1e-8);
            if (i == j) CHECK(kij.k >= -1e-8);
        }
    auto a = crit_kernel(-1, 0.5, 0, 0, base());
    auto b = crit_kernel(0.5, -1, 0, 0, base());
    CHECK(a.k == b.k);
    for (double u : {-6.0, -4.0, -2.0, 0.0, 2.0}) CHECK(crit_kernel(u, u, 0, 0, base()).k > 0);
    CHECK_THROWS_AS(crit_kernel(-9, 0, 0, 0, base()), OutOfRange);
}

TEST_CASE("kernel: near-diagonal form is continuous")
{
    LaxConfig c;
    for (double u : {-3.0, 0.0, 1.5})
        for (double d : {2e-3, 5e-3, 1e-2}) {
            c.switch_threshold = 1e-3;
            auto direct = crit_kernel(u, u + d, 0, 0, base(), c).k;
            c.switch_threshold = 1.0;
            auto taylor = crit_kernel(u, u + d, 0, 0, base(), c).k;
            CHECK_THAT(taylor, WithinAbs(direct, 1e-10));
        }
}

TEST_CASE("kernel: s-derivative identity")
{
    const double dl = 2e-3;
    for (auto [u, v] : {std::pair{-1.0, 0.5}, std::pair{-3.0, -2.0}, std::pair{0.0, 0.0}}) {
        auto K = [&](double s) { return crit_kernel(u, v, s, 0, base()).k; };
        const double dk = (K(-2 * dl) - 8 * K(-dl) + 8 * K(dl) - K(2 * dl)) / (12 * dl);
        auto p = phi_values({u, v}, 0, 0, base()).values;
        const double pred = -(p[0].real_form(1) * p[1].real_form(1)).real() / (2 * M_PI);
        CHECK_THAT(dk, WithinAbs(pred, 1e-5));
    }
}

TEST_CASE("zero curvature")
{
    CHECK(zero_curvature_residual(cd(1, 1), 0.3, 0.0, base()) < 1e-7);
    for (double r : {0.5, 2.0, 5.0, 10.0})
        for (double a : {0.0, 1.0, 2.5}) {
            cd z = std::polar(r, a);
            CHECK(zero_curvature_residual(z, -1.7, 0.0, base()) / (1 + r * r * r) < 1e-7);
        }
    // y = sin s is not a solution
    LaxJet<double> m;
    const double s = 0.4;
    m.s = s;
    m.y = std::sin(s);
    m.ys = std::cos(s);
    m.yss = -std::sin(s);
    m.ysss = -std::cos(s);
    m.y4 = std::sin(s);
    for (cd z : {cd(0), cd(1, 1), cd(-2, 0.5)}) CHECK(zero_curvature_residual(z, m) > 0.1);
    CHECK_THROWS_AS(zero_curvature_residual(cd(1), 25.0, 0.0, base()), OutOfRange);
}

TEST_CASE("calibration of h")
{
    auto c = calibrate_h(0, 0, base());
    CHECK(c.discrepancy_plain >= 10 * c.discrepancy_corrected);
    CHECK_THAT(c.h_grid + c.offset, WithinAbs(c.h_series, 1e-12));
    // the extracted coefficient tends to the series value
    CHECK(std::abs(c.extracted_h[1] - c.h_series) < std::abs(c.extracted_h[0] - c.h_series));
    CHECK_THAT(c.extracted_h[1], WithinRel(c.h_series, 0.05));
    // independent of the probe point
    auto c2 = calibrate_h(0, 0, base(), -2.0);
    CHECK_THAT(c2.offset, WithinAbs(c.offset, 1e-3));
    CHECK_THAT(c2.extracted_h[0], WithinAbs(c.extracted_h[0], 1e-3));
    // dh/ds = -y for the calibrated h
    const double ds = 1e-3;
    auto hc = [&](double s) {
        auto k = calibrate_h(s, 0, base());
        return eval_h(base(), s) + k.offset;
    };
    const double dh = (hc(0.3 + ds) - hc(0.3 - ds)) / (2 * ds);
    CHECK_THAT(dh, WithinAbs(-eval_y(base(), 0.3).y, 1e-4));
}
