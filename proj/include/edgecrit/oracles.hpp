#pragma once

// Independent reference computations for the tests and the acceptance checks.

#include <cmath>
#include <vector>

#include "equilibrium.hpp"

namespace oracle {

// h_j(x) = -(1/pi) PV int_a^b sqrt((u-a)(b-u)) V'(u) / (u - x) du, by subtraction
// plus Gauss-Chebyshev (second kind) on the smooth remainder.
inline double h_by_pv(const edgecrit::Polynomial<double>& vp, double a, double b, double x, int n = 64)
{
    const double m = (a + b) / 2, r = (b - a) / 2;
    const double X = (x - m) / r;
    double smooth = 0;
    for (int k = 1; k <= n; ++k) {
        double th = k * M_PI / (n + 1), c = std::cos(th), w = M_PI / (n + 1) * std::sin(th) * std::sin(th);
        double u = m + r * c;
        smooth += w * (vp(u) - vp(x)) / (c - X);
    }
    // PV int_{-1}^{1} sqrt(1-c^2)/(c - X) dc = -pi X
    double pv = r * (smooth + vp(x) * (-M_PI * X));
    return -pv / M_PI;
}

// PV int_a^b psi(u)/(x-u) du for psi = -h/(2 pi sqrt((u-a)(b-u)))
inline double pv_psi_j(const edgecrit::Polynomial<double>& h, double a, double b, double x, int n = 64)
{
    const double m = (a + b) / 2, r = (b - a) / 2;
    const double X = (x - m) / r;
    double acc = 0;
    for (int k = 1; k <= n; ++k) {
        double c = std::cos((2 * k - 1) * M_PI / (2 * n));
        acc += (h(m + r * c) - h(x)) / (X - c);
    }
    acc *= M_PI / n / r;
    return -acc / (2 * M_PI);
}

// PV int_a^b psi0(u)/(x-u) du for psi0 = h0 sqrt((u-a)(b-u))/(2 pi)
inline double pv_psi_0(const edgecrit::Polynomial<double>& h0, double a, double b, double x, int n = 64)
{
    const double m = (a + b) / 2, r = (b - a) / 2;
    const double X = (x - m) / r;
    double acc = 0;
    for (int k = 1; k <= n; ++k) {
        double th = k * M_PI / (n + 1), c = std::cos(th), w = M_PI / (n + 1) * std::sin(th) * std::sin(th);
        acc += w * (h0(m + r * c) - h0(x)) / (X - c);
    }
    // PV int sqrt(1-c^2)/(X - c) dc = pi X
    acc += h0(x) * M_PI * X;
    return r * acc / (2 * M_PI);
}

// Recurrence coefficients of a discrete measure sum_i w_i delta(x - x_i) by the Lanczos-type
// RKPW update (Gragg-Harrod), one node at a time. Returns alpha_k and beta_k (beta_0 = mass,
// beta_k = a_k^2 for the monic recurrence).
template <class T>
void lanczos_rkpw(const std::vector<T>& x, const std::vector<T>& w, std::vector<T>& alpha, std::vector<T>& beta)
{
    const std::size_t N = x.size();
    std::vector<T> p0(x), p1(N, T(0));
    p1[0] = w[0];
    for (std::size_t n = 0; n + 1 < N; ++n) {
        T pn = w[n + 1], gam = 1, sig = 0, t = 0, xlam = x[n + 1];
        for (std::size_t k = 0; k <= n + 1; ++k) {
            T rho = p1[k] + pn;
            T tmp = gam * rho;
            T tsig = sig;
            if (rho <= 0) {
                gam = 1;
                sig = 0;
            } else {
                gam = p1[k] / rho;
                sig = pn / rho;
            }
            T tk = sig * (p0[k] - xlam) - gam * t;
            p0[k] = p0[k] - (tk - t);
            t = tk;
            if (sig <= 0)
                pn = tsig * p1[k];
            else
                pn = t * t / sig;
            p1[k] = tmp;
        }
    }
    alpha = p0;
    beta = p1;
}

}  // namespace oracle
