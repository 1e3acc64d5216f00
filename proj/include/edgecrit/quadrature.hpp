#pragma once

#include <cmath>
#include <vector>

#include "scalar.hpp"

namespace edgecrit {

// int_0^pi f(cos phi) dphi, exact for polynomial f of degree < 2n
template <class T, class F>
T chebyshev_integral(F&& f, int n)
{
    T sum = T(0);
    const T p = pi<T>();
    for (int k = 1; k <= n; ++k) {
        T c = cos((T(2 * k - 1) * p) / T(2 * n));
        sum += f(c);
    }
    return sum * p / T(n);
}

template <class T>
struct GaussRule {
    std::vector<T> x, w;  // on [-1, 1]
};

// Gauss-Legendre nodes by Newton on P_n, at the working precision of T
template <class T>
GaussRule<T> gauss_legendre(int n)
{
    using std::cos;
    using std::abs;
    GaussRule<T> g;
    g.x.assign(n, T(0));
    g.w.assign(n, T(0));
    const T p = pi<T>();
    const T eps = std::numeric_limits<T>::epsilon();
    for (int i = 0; i < (n + 1) / 2; ++i) {
        T z = cos(p * (T(i) + T(3) / T(4)) / (T(n) + T(1) / T(2)));
        T dp = T(0);
        for (int it = 0; it < 100; ++it) {
            T p0 = T(1), p1 = z;
            for (int k = 2; k <= n; ++k) {
                T p2 = ((T(2 * k - 1)) * z * p1 - T(k - 1) * p0) / T(k);
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) { p1 = z; p0 = T(1); }
            dp = T(n) * (z * p1 - p0) / (z * z - T(1));
            T dz = p1 / dp;
            z -= dz;
            if (abs(dz) <= T(4) * eps * abs(z) + eps) {
                // one more evaluation for the weight
                p0 = T(1); p1 = z;
                for (int k = 2; k <= n; ++k) {
                    T p2 = ((T(2 * k - 1)) * z * p1 - T(k - 1) * p0) / T(k);
                    p0 = p1;
                    p1 = p2;
                }
                dp = T(n) * (z * p1 - p0) / (z * z - T(1));
                break;
            }
        }
        g.x[i] = -z;
        g.x[n - 1 - i] = z;
        g.w[i] = g.w[n - 1 - i] = T(2) / ((T(1) - z * z) * dp * dp);
    }
    return g;
}

// composite rule on [lo, hi] with equal panels
template <class T>
GaussRule<T> composite_gauss(const T& lo, const T& hi, int panels, const GaussRule<T>& base)
{
    GaussRule<T> r;
    const int m = static_cast<int>(base.x.size());
    r.x.reserve(static_cast<std::size_t>(panels) * m);
    r.w.reserve(static_cast<std::size_t>(panels) * m);
    const T width = (hi - lo) / T(panels);
    for (int p = 0; p < panels; ++p) {
        T a = lo + width * T(p);
        T half = width / T(2), mid = a + half;
        for (int i = 0; i < m; ++i) {
            r.x.push_back(mid + half * base.x[i]);
            r.w.push_back(half * base.w[i]);
        }
    }
    return r;
}

}  // namespace edgecrit
