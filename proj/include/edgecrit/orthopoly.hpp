#pragma once

#include <algorithm>
#include <cmath>
#include <mutex>
#include <string>
#include <vector>

#include <boost/multiprecision/mpfr.hpp>

#include "errors.hpp"
#include "potentials.hpp"
#include "quadrature.hpp"

namespace edgecrit {

using mpfr_float = boost::multiprecision::mpfr_float;

struct PrecisionConfig {
    int digits = 50;
    double truncation_margin = 0;  // weight cutoff exponent (base 10); 0 means digits + 5
    int quad_nodes = 0;            // total Gauss-Legendre nodes; 0 means automatic
    int panel_order = 20;
    bool validate = true;          // rerun with doubled digits and nodes
    double validate_tol = 1e-12;
    double window_extra = 0;       // widen the truncation window by this much on each side

    double margin() const { return truncation_margin > 0 ? truncation_margin : digits + 5; }
};

struct RecurrenceTable {
    int n = 0;       // weight e^{-n V_{s,t}}
    int count = 0;   // coefficients computed up to this index
    double s = 0, t = 0;
    std::vector<double> a;          // a[1..count]; a[0] = 0
    std::vector<double> b;          // b[0..count]
    std::vector<double> log_kappa;  // log of leading coefficients, 0..count
    std::vector<std::string> a_text, b_text;  // full working precision
    PrecisionConfig cfg;            // as used (nodes and margin resolved)
    double lo = 0, hi = 0;          // truncation window
    double vmin = 0;                // reference minimum of V_{s,t}
    double log_mu0 = 0;             // log of int e^{-n (V - vmin)}
    double validation_delta = -1;   // max change under the doubling rerun; -1 if not run
    std::vector<long double> v;     // coefficients of V_{s,t}

    double kappa(int k) const { return std::exp(log_kappa.at(k)); }

    long double potential(long double x) const
    {
        long double r = 0;
        for (auto it = v.rbegin(); it != v.rend(); ++it) r = r * x + *it;
        return r;
    }
};

namespace detail {

inline std::mutex& mpfr_mutex()
{
    static std::mutex m;
    return m;
}

// mpfr's default precision is process-wide in this Boost; hold the lock while it is changed
struct PrecisionScope {
    std::lock_guard<std::mutex> lock;
    unsigned old;
    explicit PrecisionScope(int digits) : lock(mpfr_mutex()), old(mpfr_float::default_precision())
    {
        mpfr_float::default_precision(digits);
    }
    ~PrecisionScope() { mpfr_float::default_precision(old); }
};

struct Window {
    double lo, hi, vmin;
};

// [lo, hi] outside of which n (V - vmin) exceeds margin ln 10
inline Window truncation_window(const std::vector<long double>& v, int n, double margin)
{
    auto V = [&](double x) {
        long double r = 0;
        for (auto it = v.rbegin(); it != v.rend(); ++it) r = r * x + *it;
        return static_cast<double>(r);
    };
    const double thr = margin * std::log(10.0) / n;
    for (double R = 8; R <= 1024; R *= 2) {
        const int m = 40000;
        double vmin = V(-R);
        for (int i = 0; i <= m; ++i) vmin = std::min(vmin, V(-R + 2 * R * i / m));
        int first = -1, last = -1;
        for (int i = 0; i <= m; ++i)
            if (V(-R + 2 * R * i / m) - vmin <= thr) {
                if (first < 0) first = i;
                last = i;
            }
        if (first == 0 || last == m) continue;
        auto cross = [&](double in, double out) {
            for (int it = 0; it < 200; ++it) {
                double mid = 0.5 * (in + out);
                (V(mid) - vmin <= thr ? in : out) = mid;
            }
            return out;
        };
        const double h = 2 * R / m;
        return {cross(-R + first * h, -R + (first - 1) * h), cross(-R + last * h, -R + (last + 1) * h), vmin};
    }
    throw OutOfRange("weight is not confined within |x| <= 1024");
}

struct Discrete {
    std::vector<mpfr_float> x, sw;  // nodes and square roots of the weights
};

inline Discrete discretize(const std::vector<Rational>& vq, int n, double lo, double hi, double vmin, int panels,
                           int order)
{
    auto base = gauss_legendre<mpfr_float>(order);
    auto rule = composite_gauss<mpfr_float>(mpfr_float(lo), mpfr_float(hi), panels, base);
    std::vector<mpfr_float> c;
    for (const auto& q : vq) c.push_back(from_rational<mpfr_float>(q));
    Discrete d;
    d.x = std::move(rule.x);
    d.sw.resize(d.x.size());
    const mpfr_float nv(n), vm(vmin), half(0.5);
    for (std::size_t i = 0; i < d.x.size(); ++i) {
        mpfr_float V = 0;
        for (auto it = c.rbegin(); it != c.rend(); ++it) V = V * d.x[i] + *it;
        d.sw[i] = sqrt(rule.w[i]) * exp(-half * nv * (V - vm));
    }
    return d;
}

struct StieltjesOut {
    std::vector<mpfr_float> a, b;
    mpfr_float mu0;
};

// discretized Stieltjes on the vectors q_k(x_i) sqrt(w_i), kept normalized
inline StieltjesOut stieltjes(const Discrete& d, int count)
{
    const std::size_t N = d.x.size();
    StieltjesOut r;
    r.a.assign(count + 1, mpfr_float(0));
    r.b.assign(count + 1, mpfr_float(0));
    mpfr_float mu = 0;
    for (const auto& w : d.sw) mu += w * w;
    r.mu0 = mu;
    std::vector<mpfr_float> prev(N, mpfr_float(0)), cur(N), next(N);
    const mpfr_float inv = 1 / sqrt(mu);
    for (std::size_t i = 0; i < N; ++i) cur[i] = d.sw[i] * inv;
    const mpfr_float floor = pow(mpfr_float(10), -static_cast<int>(mpfr_float::default_precision()) / 2);
    for (int k = 0; k <= count; ++k) {
        mpfr_float bk = 0;
        for (std::size_t i = 0; i < N; ++i) bk += d.x[i] * cur[i] * cur[i];
        r.b[k] = bk;
        if (k == count) break;
        mpfr_float nrm = 0;
        for (std::size_t i = 0; i < N; ++i) {
            next[i] = (d.x[i] - bk) * cur[i];
            if (k > 0) next[i] -= r.a[k] * prev[i];
            nrm += next[i] * next[i];
        }
        if (!(nrm > floor * floor)) throw NonPositiveNorm("norm collapsed at k=" + std::to_string(k + 1));
        mpfr_float ak = sqrt(nrm);
        r.a[k + 1] = ak;
        const mpfr_float ia = 1 / ak;
        for (std::size_t i = 0; i < N; ++i) next[i] *= ia;
        std::swap(prev, cur);
        std::swap(cur, next);
    }
    return r;
}

inline int auto_nodes(int count, int order) { return order * std::max(32, count + 32); }

// The weight alone understates the window: p_k^2 grows like |x|^{2k}. Widen each end until every
// normalized q_k^2 at the cut is below 10^{-margin}, using a long double Stieltjes pass.
inline Window adapt_window(const std::vector<long double>& v, int n, int count, double margin, Window w, int nodes,
                           int order)
{
    auto base = gauss_legendre<long double>(order);
    const long double thr = std::pow(10.0L, -static_cast<long double>(margin));
    for (int iter = 0; iter < 60; ++iter) {
        auto rule = composite_gauss<long double>(w.lo, w.hi, std::max(1, nodes / order), base);
        const std::size_t N = rule.x.size();
        std::vector<long double> sw(N), prev(N, 0), cur(N), next(N);
        long double mu = 0;
        for (std::size_t i = 0; i < N; ++i) {
            long double V = 0;
            for (auto it = v.rbegin(); it != v.rend(); ++it) V = V * rule.x[i] + *it;
            sw[i] = std::sqrt(rule.w[i]) * std::exp(-0.5L * n * (V - w.vmin));
            mu += sw[i] * sw[i];
        }
        for (std::size_t i = 0; i < N; ++i) cur[i] = sw[i] / std::sqrt(mu);
        // pointwise density q_k^2 / w_i at the two end nodes
        long double left = cur[0] * cur[0] / rule.w[0], right = cur[N - 1] * cur[N - 1] / rule.w[N - 1];
        long double ak = 0;
        for (int k = 0; k < count; ++k) {
            long double bk = 0;
            for (std::size_t i = 0; i < N; ++i) bk += rule.x[i] * cur[i] * cur[i];
            long double nrm = 0;
            for (std::size_t i = 0; i < N; ++i) {
                next[i] = (rule.x[i] - bk) * cur[i] - ak * prev[i];
                nrm += next[i] * next[i];
            }
            ak = std::sqrt(nrm);
            for (std::size_t i = 0; i < N; ++i) next[i] /= ak;
            std::swap(prev, cur);
            std::swap(cur, next);
            left = std::max(left, cur[0] * cur[0] / rule.w[0]);
            right = std::max(right, cur[N - 1] * cur[N - 1] / rule.w[N - 1]);
        }
        if (left <= thr && right <= thr) return w;
        const double step = 0.125 * (w.hi - w.lo);
        if (left > thr) w.lo -= step;
        if (right > thr) w.hi += step;
    }
    throw QuadratureFailure("truncation window did not settle");
}

}  // namespace detail

// Recurrence coefficients of the orthonormal polynomials for e^{-n V_{s,t}}, indices up to count (default n)
inline RecurrenceTable recurrence_table(const DeformedFamily& f, int n, double s, double t,
                                        PrecisionConfig cfg = {}, int count = -1)
{
    if (n < 1) throw OutOfRange("n must be >= 1");
    if (cfg.digits < 30) throw ConfigError("digits must be >= 30");
    if (count < 0) count = n;
    f.validate();
    // V_{s,t} with exact s, t from their double values
    auto poly = f.v0 + Rational(s) * f.v1 + Rational(t) * f.v2;
    std::vector<Rational> vq = poly.coeffs();
    RecurrenceTable tab;
    tab.n = n;
    tab.count = count;
    tab.s = s;
    tab.t = t;
    for (const auto& q : vq) tab.v.push_back(static_cast<long double>(q));
    cfg.truncation_margin = cfg.margin();
    if (cfg.quad_nodes <= 0) cfg.quad_nodes = detail::auto_nodes(count, cfg.panel_order);
    auto win = detail::truncation_window(tab.v, n, cfg.truncation_margin);
    win = detail::adapt_window(tab.v, n, count, cfg.truncation_margin, win, cfg.quad_nodes, cfg.panel_order);
    win.lo -= cfg.window_extra;
    win.hi += cfg.window_extra;
    tab.lo = win.lo;
    tab.hi = win.hi;
    tab.vmin = win.vmin;

    auto run = [&](int digits, int nodes, RecurrenceTable* out) {
        detail::PrecisionScope scope(digits + 10);
        const int panels = std::max(1, nodes / cfg.panel_order);
        auto d = detail::discretize(vq, n, win.lo, win.hi, win.vmin, panels, cfg.panel_order);
        auto st = detail::stieltjes(d, count);
        std::vector<double> a(count + 1), b(count + 1);
        for (int k = 0; k <= count; ++k) {
            a[k] = static_cast<double>(st.a[k]);
            b[k] = static_cast<double>(st.b[k]);
        }
        if (out) {
            out->a = a;
            out->b = b;
            out->log_mu0 = static_cast<double>(log(st.mu0));
            out->log_kappa.assign(count + 1, 0);
            mpfr_float lk = mpfr_float(n) * mpfr_float(win.vmin) / 2 - log(st.mu0) / 2;
            out->log_kappa[0] = static_cast<double>(lk);
            for (int k = 1; k <= count; ++k) {
                lk -= log(st.a[k]);
                out->log_kappa[k] = static_cast<double>(lk);
            }
            out->a_text.clear();
            out->b_text.clear();
            for (int k = 0; k <= count; ++k) {
                out->a_text.push_back(st.a[k].str(digits));
                out->b_text.push_back(st.b[k].str(digits));
            }
        }
        return std::pair{a, b};
    };

    auto base = run(cfg.digits, cfg.quad_nodes, &tab);
    for (int k = 1; k <= count; ++k)
        if (!(tab.a[k] > 0)) throw NonPositiveNorm("a_" + std::to_string(k) + " is not positive");
    if (cfg.validate) {
        auto check = run(2 * cfg.digits, 2 * cfg.quad_nodes, nullptr);
        double delta = 0;
        for (int k = 0; k <= count; ++k) {
            delta = std::max(delta, std::abs(base.first[k] - check.first[k]));
            delta = std::max(delta, std::abs(base.second[k] - check.second[k]));
        }
        tab.validation_delta = delta;
        if (delta > cfg.validate_tol)
            throw PrecisionExhausted("doubling digits and nodes moved the coefficients by " + std::to_string(delta));
    }
    tab.cfg = cfg;
    return tab;
}

namespace detail {

// unnormalized chain r_k with r_0 = 1 (so p_k = kappa_0 r_k), optionally with x-derivatives
inline void chain(const RecurrenceTable& tab, int upto, long double x, std::vector<long double>& r,
                  std::vector<long double>* dr = nullptr)
{
    if (upto > tab.count) throw OutOfRange("degree beyond the table");
    r.assign(upto + 1, 0);
    r[0] = 1;
    if (dr) dr->assign(upto + 1, 0);
    for (int k = 0; k < upto; ++k) {
        const long double a1 = tab.a[k + 1];
        long double nx = (x - tab.b[k]) * r[k] - (k > 0 ? tab.a[k] * r[k - 1] : 0.0L);
        r[k + 1] = nx / a1;
        if (dr) {
            long double nd = r[k] + (x - tab.b[k]) * (*dr)[k] - (k > 0 ? tab.a[k] * (*dr)[k - 1] : 0.0L);
            (*dr)[k + 1] = nd / a1;
        }
    }
}

// kappa_0 e^{-n V(x)/2}
inline long double weight_factor(const RecurrenceTable& tab, long double x)
{
    return std::exp(-0.5L * tab.n * (tab.potential(x) - tab.vmin) - 0.5L * tab.log_mu0);
}

}  // namespace detail

inline double orthonormal_eval(const RecurrenceTable& tab, int k, double x)
{
    if (k < 0) throw OutOfRange("negative degree");
    std::vector<long double> r;
    detail::chain(tab, k, x, r);
    return static_cast<double>(std::exp(static_cast<long double>(tab.log_kappa[0])) * r[k]);
}

// p_k(x) e^{-n V(x)/2}
inline double weighted_eval(const RecurrenceTable& tab, int k, double x)
{
    std::vector<long double> r;
    detail::chain(tab, k, x, r);
    return static_cast<double>(detail::weight_factor(tab, x) * r[k]);
}

// K_n(x, y) = e^{-nV(x)/2} e^{-nV(y)/2} sum_{k<n} p_k(x) p_k(y), via Christoffel-Darboux
inline double cd_kernel(const RecurrenceTable& tab, double x, double y)
{
    const int n = tab.n;
    if (n > tab.count) throw OutOfRange("table too short for the kernel");
    if (x > y) std::swap(x, y);
    std::vector<long double> rx, ry, dx;
    const long double gx = detail::weight_factor(tab, x), gy = detail::weight_factor(tab, y);
    if (x == y) {
        detail::chain(tab, n, x, rx, &dx);
        return static_cast<double>(gx * gx * tab.a[n] * (dx[n] * rx[n - 1] - rx[n] * dx[n - 1]));
    }
    detail::chain(tab, n, x, rx);
    detail::chain(tab, n, y, ry);
    if (std::abs(x - y) < 1e-6) {
        long double acc = 0;
        for (int k = 0; k < n; ++k) acc += rx[k] * ry[k];
        return static_cast<double>(gx * gy * acc);
    }
    return static_cast<double>(gx * gy * tab.a[n] * (rx[n] * ry[n - 1] - ry[n] * rx[n - 1]) /
                               (static_cast<long double>(x) - y));
}

}  // namespace edgecrit
