#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <mutex>
#include <string>
#include <tuple>
#include <vector>

#include <boost/math/special_functions/airy.hpp>
#include <json.hpp>

#include "edgecrit_module_hashes.hpp"
#include "equilibrium.hpp"
#include "lax.hpp"
#include "orthopoly.hpp"
#include "pi2.hpp"
#include "potentials.hpp"

namespace edgecrit {

struct AiryValue {
    double x = 0, ai = 0, ai_prime = 0;
};

inline AiryValue airy(double x)
{
    if (!(std::abs(x) <= 12)) throw OutOfRange("airy: |x| must be <= 12");
    return {x, boost::math::airy_ai(x), boost::math::airy_ai_prime(x)};
}

inline double airy_kernel(double u, double v)
{
    auto A = airy(u), B = airy(v);
    if (u == v) return A.ai_prime * A.ai_prime - u * A.ai * A.ai;
    return (A.ai * B.ai_prime - B.ai * A.ai_prime) / (u - v);
}

inline double sine_kernel(double u, double v)
{
    if (u == v) return 1;
    return std::sin(M_PI * (u - v)) / (M_PI * (u - v));
}

struct Tolerances {
    double a_slope_lo = -0.65, a_slope_hi = -0.25;
    double k_slope_lo = -0.35, k_slope_hi = -0.03;
    double symmetry = 1e-10;
    double correction_ratio = 0.3;  // relative tolerance on the b/a correction ratio 2
    double bulk = 0.02, edge = 0.05;
};

struct ExperimentConfig {
    DeformedFamily family = build_example_family();
    std::vector<int> n_list{32, 64, 128, 256};
    std::vector<int> kernel_n_list{64, 128, 256};
    std::vector<int> sanity_n_list{64, 128, 256};
    int sanity_n = 128;
    double s0 = 0, t0 = 0;
    std::vector<double> u_grid{-4, -2, 0, 1}, v_grid{-4, -2, 0, 1};
    std::vector<double> bulk_grid{-1, -0.5, 0, 0.5, 1};
    std::vector<double> edge_grid{-2, -1, 0, 1, 2};
    PrecisionConfig precision;
    double pi2_t = 0, pi2_L = 40, pi2_mesh = 0.02, pi2_tol = 1e-10;
    LaxConfig lax;
    Tolerances tol;
    int jobs = 1;
    std::string output_dir = ".";

    void validate() const
    {
        auto ascending = [](const std::vector<int>& v) {
            for (std::size_t i = 1; i < v.size(); ++i)
                if (v[i] <= v[i - 1]) return false;
            return !v.empty() && v.front() >= 1;
        };
        if (!ascending(n_list) || !ascending(kernel_n_list) || !ascending(sanity_n_list))
            throw ConfigError("n lists must be ascending and positive");
        if (jobs < 1) throw ConfigError("jobs must be >= 1");
        if (precision.digits < 30) throw ConfigError("digits must be >= 30");
        if (pi2_L < 20 || pi2_mesh <= 0 || pi2_mesh > 0.05) throw ConfigError("pi2 L >= 20 and 0 < mesh <= 0.05");
        family.validate();
    }
};

namespace detail {

template <class T>
void take(const nlohmann::json& j, const char* key, T& out)
{
    if (j.contains(key)) out = j.at(key).get<T>();
}

inline void reject_unknown(const nlohmann::json& j, const std::vector<std::string>& known, const std::string& where)
{
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find(known.begin(), known.end(), it.key()) == known.end())
            throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

}  // namespace detail

inline nlohmann::json to_json(const PrecisionConfig& p)
{
    return {{"digits", p.digits},           {"truncation_margin", p.truncation_margin},
            {"quad_nodes", p.quad_nodes},   {"panel_order", p.panel_order},
            {"validate", p.validate},       {"validate_tol", p.validate_tol},
            {"window_extra", p.window_extra}};
}

inline PrecisionConfig precision_from_json(const nlohmann::json& j, PrecisionConfig p = {})
{
    detail::reject_unknown(j, {"digits", "truncation_margin", "quad_nodes", "panel_order", "validate", "validate_tol",
                               "window_extra"},
                           "precision");
    detail::take(j, "digits", p.digits);
    detail::take(j, "truncation_margin", p.truncation_margin);
    detail::take(j, "quad_nodes", p.quad_nodes);
    detail::take(j, "panel_order", p.panel_order);
    detail::take(j, "validate", p.validate);
    detail::take(j, "validate_tol", p.validate_tol);
    detail::take(j, "window_extra", p.window_extra);
    return p;
}

inline nlohmann::json to_json(const LaxConfig& c)
{
    return {{"R", c.R},
            {"R_check", c.R_check},
            {"path", c.path == PathKind::Ray ? "ray" : "real"},
            {"ray_angle", c.ray_angle},
            {"junction", c.junction},
            {"series_terms", c.series_terms},
            {"rtol", c.rtol},
            {"switch_threshold", c.switch_threshold},
            {"extended", c.extended},
            {"jet_tol", c.jet_tol},
            {"window", {c.window_lo, c.window_hi}}};
}

inline LaxConfig lax_from_json(const nlohmann::json& j, LaxConfig c = {})
{
    detail::reject_unknown(j, {"R", "R_check", "path", "ray_angle", "junction", "series_terms", "rtol",
                               "switch_threshold", "extended", "jet_tol", "window"},
                           "lax");
    detail::take(j, "R", c.R);
    detail::take(j, "R_check", c.R_check);
    if (j.contains("path")) {
        auto p = j.at("path").get<std::string>();
        if (p == "ray")
            c.path = PathKind::Ray;
        else if (p == "real")
            c.path = PathKind::RealAxis;
        else
            throw ConfigError("lax.path must be 'real' or 'ray'");
    }
    detail::take(j, "ray_angle", c.ray_angle);
    detail::take(j, "junction", c.junction);
    detail::take(j, "series_terms", c.series_terms);
    detail::take(j, "rtol", c.rtol);
    detail::take(j, "switch_threshold", c.switch_threshold);
    detail::take(j, "extended", c.extended);
    detail::take(j, "jet_tol", c.jet_tol);
    if (j.contains("window")) {
        auto w = j.at("window").get<std::vector<double>>();
        if (w.size() != 2 || !(w[0] < w[1])) throw ConfigError("lax.window must be [lo, hi]");
        c.window_lo = w[0];
        c.window_hi = w[1];
    }
    if (c.R < 4 || c.R_check <= c.R) throw ConfigError("lax needs 4 <= R < R_check");
    return c;
}

inline nlohmann::json to_json(const Tolerances& t)
{
    return {{"a_slope", {t.a_slope_lo, t.a_slope_hi}},
            {"k_slope", {t.k_slope_lo, t.k_slope_hi}},
            {"symmetry", t.symmetry},
            {"correction_ratio", t.correction_ratio},
            {"bulk", t.bulk},
            {"edge", t.edge}};
}

inline Tolerances tolerances_from_json(const nlohmann::json& j, Tolerances t = {})
{
    detail::reject_unknown(j, {"a_slope", "k_slope", "symmetry", "correction_ratio", "bulk", "edge"}, "tolerances");
    if (j.contains("a_slope")) {
        auto v = j.at("a_slope").get<std::vector<double>>();
        if (v.size() != 2) throw ConfigError("a_slope must be [lo, hi]");
        t.a_slope_lo = v[0];
        t.a_slope_hi = v[1];
    }
    if (j.contains("k_slope")) {
        auto v = j.at("k_slope").get<std::vector<double>>();
        if (v.size() != 2) throw ConfigError("k_slope must be [lo, hi]");
        t.k_slope_lo = v[0];
        t.k_slope_hi = v[1];
    }
    detail::take(j, "symmetry", t.symmetry);
    detail::take(j, "correction_ratio", t.correction_ratio);
    detail::take(j, "bulk", t.bulk);
    detail::take(j, "edge", t.edge);
    return t;
}

inline nlohmann::json to_json(const ExperimentConfig& c)
{
    return {{"family", family_to_json(c.family)},
            {"n_list", c.n_list},
            {"kernel_n_list", c.kernel_n_list},
            {"sanity_n_list", c.sanity_n_list},
            {"sanity_n", c.sanity_n},
            {"s0", c.s0},
            {"t0", c.t0},
            {"u_grid", c.u_grid},
            {"v_grid", c.v_grid},
            {"bulk_grid", c.bulk_grid},
            {"edge_grid", c.edge_grid},
            {"precision", to_json(c.precision)},
            {"pi2", {{"t", c.pi2_t}, {"L", c.pi2_L}, {"mesh", c.pi2_mesh}, {"tol", c.pi2_tol}}},
            {"lax", to_json(c.lax)},
            {"tolerances", to_json(c.tol)},
            {"jobs", c.jobs},
            {"output_dir", c.output_dir}};
}

inline ExperimentConfig experiment_from_json(const nlohmann::json& j, ExperimentConfig c = {})
{
    try {
        detail::reject_unknown(j, {"family", "n_list", "kernel_n_list", "sanity_n_list", "sanity_n", "s0", "t0",
                                   "u_grid", "v_grid", "bulk_grid", "edge_grid", "precision", "pi2", "lax",
                                   "tolerances", "jobs", "output_dir"},
                               "config");
        if (j.contains("family")) c.family = family_from_json(j.at("family"));
        detail::take(j, "n_list", c.n_list);
        detail::take(j, "kernel_n_list", c.kernel_n_list);
        detail::take(j, "sanity_n_list", c.sanity_n_list);
        detail::take(j, "sanity_n", c.sanity_n);
        detail::take(j, "s0", c.s0);
        detail::take(j, "t0", c.t0);
        detail::take(j, "u_grid", c.u_grid);
        detail::take(j, "v_grid", c.v_grid);
        detail::take(j, "bulk_grid", c.bulk_grid);
        detail::take(j, "edge_grid", c.edge_grid);
        if (j.contains("precision")) c.precision = precision_from_json(j.at("precision"), c.precision);
        if (j.contains("pi2")) {
            const auto& p = j.at("pi2");
            detail::reject_unknown(p, {"L", "mesh", "tol", "t"}, "pi2");
            detail::take(p, "t", c.pi2_t);
            detail::take(p, "L", c.pi2_L);
            detail::take(p, "mesh", c.pi2_mesh);
            detail::take(p, "tol", c.pi2_tol);
        }
        if (j.contains("lax")) c.lax = lax_from_json(j.at("lax"), c.lax);
        if (j.contains("tolerances")) c.tol = tolerances_from_json(j.at("tolerances"), c.tol);
        detail::take(j, "jobs", c.jobs);
        detail::take(j, "output_dir", c.output_dir);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(e.what());
    } catch (const InvalidFamily& e) {
        throw ConfigError(e.what());
    }
    c.validate();
    return c;
}

// Shared state for the experiments: equilibrium data, P_I^2 solutions by t0, recurrence tables by (n, s, t).
class Workspace {
public:
    explicit Workspace(ExperimentConfig cfg) : cfg_(std::move(cfg))
    {
        cfg_.validate();
        eq_ = build_equilibrium<double>(cfg_.family, {-3.0, 3.0});
        k_ = constants(eq_);
    }

    const ExperimentConfig& config() const { return cfg_; }
    const EquilibriumData<double>& equilibrium() const { return eq_; }
    const CriticalConstants<double>& critical() const { return k_; }

    // per-n deformation parameters
    std::pair<double, double> schedule(int n, double s0, double t0) const
    {
        return {s0 / (k_.c1 * std::pow(double(n), 6.0 / 7)), t0 / (k_.c2 * std::pow(double(n), 4.0 / 7))};
    }

    const PI2Solution& pi2(double t0)
    {
        {
            std::lock_guard<std::mutex> g(m_);
            auto it = sols_.find(t0);
            if (it != sols_.end()) return it->second;
        }
        auto sol = solve_y_refined(t0, cfg_.pi2_L, cfg_.pi2_mesh, cfg_.pi2_tol);
        std::lock_guard<std::mutex> g(m_);
        return sols_.emplace(t0, std::move(sol)).first->second;
    }

    const RecurrenceTable& table(int n, double s, double t)
    {
        auto key = std::make_tuple(n, s, t);
        {
            std::lock_guard<std::mutex> g(m_);
            auto it = tables_.find(key);
            if (it != tables_.end()) return it->second;
        }
        auto tab = recurrence_table(cfg_.family, n, s, t, cfg_.precision);
        std::lock_guard<std::mutex> g(m_);
        return tables_.emplace(key, std::move(tab)).first->second;
    }

    // build the tables for the given (n, s, t) list concurrently, bounded by cfg.jobs
    void prefetch(const std::vector<std::tuple<int, double, double>>& items)
    {
        std::size_t i = 0;
        while (i < items.size()) {
            std::vector<std::future<void>> batch;
            for (int j = 0; j < cfg_.jobs && i < items.size(); ++j, ++i) {
                auto [n, s, t] = items[i];
                batch.push_back(std::async(std::launch::async, [this, n, s, t] { table(n, s, t); }));
            }
            for (auto& f : batch) f.get();
        }
    }

private:
    ExperimentConfig cfg_;
    EquilibriumData<double> eq_;
    CriticalConstants<double> k_;
    std::mutex m_;
    std::map<double, PI2Solution> sols_;
    std::map<std::tuple<int, double, double>, RecurrenceTable> tables_;
};

struct ComparisonReport {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::map<std::string, double> metrics;
    std::map<std::string, bool> flags;
    nlohmann::json config;

    bool pass() const
    {
        for (const auto& [k, v] : flags)
            if (!v) return false;
        return true;
    }
    double metric(const std::string& k) const { return metrics.at(k); }
    bool flag(const std::string& k) const { return flags.at(k); }
};

// least-squares slope of log|y| against log n over the last three points
inline double loglog_slope(const std::vector<int>& n, const std::vector<double>& y)
{
    const std::size_t m = std::min<std::size_t>(3, n.size());
    if (m < 2) return std::nan("");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = n.size() - m; i < n.size(); ++i) {
        double X = std::log(double(n[i])), Y = std::log(std::abs(y[i]));
        sx += X;
        sy += Y;
        sxx += X * X;
        sxy += X * Y;
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

inline bool strictly_decreasing(const std::vector<double>& v)
{
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(std::abs(v[i]) < std::abs(v[i - 1]))) return false;
    return true;
}

inline std::string point_tag(double s0, double t0)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "s%g_t%g", s0, t0);
    return buf;
}

// Recurrence coefficients against y(s0, t0) n^{-2/7} corrections
inline ComparisonReport recurrence_experiment(Workspace& ws, double s0, double t0)
{
    const auto& cfg = ws.config();
    const auto& k = ws.critical();
    const auto sup = ws.equilibrium().support;
    const double a_lim = (sup.b - sup.a) / 4, b_lim = (sup.b + sup.a) / 2;
    const auto& sol = ws.pi2(t0);
    const double y0 = eval_y(sol, s0).y;

    std::vector<std::tuple<int, double, double>> items;
    for (int n : cfg.n_list) {
        auto [s, t] = ws.schedule(n, s0, t0);
        items.emplace_back(n, s, t);
    }
    ws.prefetch(items);

    ComparisonReport r;
    r.name = "recurrence_" + point_tag(s0, t0);
    r.columns = {"n",      "s",      "t",      "a_n",          "b_n",          "a_pred",   "b_pred",
                 "a_err",  "b_err",  "a_corr", "b_corr",       "a_pred_sharp", "b_pred_sharp", "est_error",
                 "a_pass", "b_pass"};
    r.config = to_json(cfg);
    r.config["s0"] = s0;
    r.config["t0"] = t0;
    std::vector<double> ra, rb, ca, cb;
    double sched = 0;
    for (int n : cfg.n_list) {
        auto [s, t] = ws.schedule(n, s0, t0);
        sched = std::max({sched, std::abs(k.c1 * std::pow(double(n), 6.0 / 7) * s - s0),
                          std::abs(k.c2 * std::pow(double(n), 4.0 / 7) * t - t0)});
        const auto& tab = ws.table(n, s, t);
        const double np = std::pow(double(n), -2.0 / 7);
        const double corr_a = y0 * np / (2 * k.c), corr_b = y0 * np / k.c;
        // sharp form: y at the scaled variables recovered from (s, t)
        const double s_sharp = k.c1 * std::pow(double(n), 6.0 / 7) * s;
        const double y_sharp = eval_y(sol, s_sharp).y;
        const double ea = tab.a[n] - (a_lim + corr_a), eb = tab.b[n] - (b_lim + corr_b);
        ra.push_back(ea);
        rb.push_back(eb);
        ca.push_back(corr_a);
        cb.push_back(corr_b);
        // row tolerance: the correction plus the O(n^{-3/7}) remainder allowance
        const double rem = 0.5 * std::pow(double(n), -3.0 / 7);
        const bool pa = std::abs(ea) < std::abs(corr_a) + rem;
        const bool pb = std::abs(eb) < std::abs(corr_b) + rem;
        r.rows.push_back({double(n), s, t, tab.a[n], tab.b[n], a_lim + corr_a, b_lim + corr_b, ea, eb, corr_a, corr_b,
                          a_lim + y_sharp * np / (2 * k.c), b_lim + y_sharp * np / k.c,
                          std::max(tab.validation_delta, 0.0), double(pa), double(pb)});
    }
    r.metrics["y"] = y0;
    r.metrics["a_slope"] = loglog_slope(cfg.n_list, ra);
    r.metrics["b_slope"] = loglog_slope(cfg.n_list, rb);
    r.metrics["schedule_roundtrip"] = sched;
    // observed ratio of the two n^{-2/7} corrections at the largest n
    r.metrics["correction_ratio"] =
        (r.rows.back()[4] - b_lim) / (r.rows.back()[3] - a_lim);
    r.flags["a_monotone"] = strictly_decreasing(ra);
    r.flags["b_monotone"] = strictly_decreasing(rb);
    bool below_a = true, below_b = true, remainder_a = true;
    for (std::size_t i = 0; i < cfg.n_list.size(); ++i) {
        if (cfg.n_list[i] < 64) continue;
        below_a = below_a && std::abs(ra[i]) < std::abs(ca[i]);
        below_b = below_b && std::abs(rb[i]) < std::abs(cb[i]);
        remainder_a = remainder_a && std::abs(ra[i]) < std::abs(ca[i]) + 0.5 * std::pow(double(cfg.n_list[i]), -3.0 / 7);
    }
    r.flags["a_below_correction"] = below_a;
    r.flags["b_below_correction"] = below_b;
    r.flags["a_within_remainder"] = remainder_a;
    auto in = [](double x, double lo, double hi) { return x >= lo && x <= hi; };
    r.flags["a_slope_in_range"] = in(r.metrics["a_slope"], cfg.tol.a_slope_lo, cfg.tol.a_slope_hi);
    r.flags["b_slope_in_range"] = in(r.metrics["b_slope"], cfg.tol.a_slope_lo, cfg.tol.a_slope_hi);
    r.flags["correction_ratio_near_2"] = std::abs(r.metrics["correction_ratio"] / 2 - 1) <= cfg.tol.correction_ratio;
    r.flags["schedule_consistent"] = sched <= 1e-12 * (1 + std::abs(s0) + std::abs(t0));
    return r;
}

inline ComparisonReport recurrence_experiment(Workspace& ws)
{
    return recurrence_experiment(ws, ws.config().s0, ws.config().t0);
}

// Scaled Christoffel-Darboux kernel near b against K^{crit,III}
inline ComparisonReport kernel_experiment(Workspace& ws, double s0, double t0)
{
    const auto& cfg = ws.config();
    const auto& k = ws.critical();
    const double b = ws.equilibrium().support.b;
    const auto& sol = ws.pi2(t0);
    auto pred = kernel_grid(cfg.u_grid, cfg.v_grid, s0, t0, sol, cfg.lax);

    std::vector<std::tuple<int, double, double>> items;
    for (int n : cfg.kernel_n_list) {
        auto [s, t] = ws.schedule(n, s0, t0);
        items.emplace_back(n, s, t);
    }
    ws.prefetch(items);

    ComparisonReport r;
    r.name = "kernel_" + point_tag(s0, t0);
    r.columns = {"n", "u", "v", "k_obs", "k_pred", "err", "est_error", "pass"};
    r.config = to_json(cfg);
    r.config["s0"] = s0;
    r.config["t0"] = t0;
    const std::size_t P = pred.size();
    std::vector<std::vector<double>> err(P);
    std::vector<double> maxerr;
    double asym = 0;
    for (int n : cfg.kernel_n_list) {
        auto [s, t] = ws.schedule(n, s0, t0);
        const auto& tab = ws.table(n, s, t);
        const double scale = k.c * std::pow(double(n), 2.0 / 7);
        auto obs = [&](double u, double v) { return cd_kernel(tab, b + u / scale, b + v / scale) / scale; };
        double m = 0;
        for (std::size_t i = 0; i < P; ++i) {
            const double u = pred[i].u, v = pred[i].v;
            const double ko = obs(u, v);
            asym = std::max(asym, std::abs(ko - obs(v, u)));
            const double e = std::abs(ko - pred[i].k);
            const bool ok = err[i].empty() || e < err[i].back();
            err[i].push_back(e);
            m = std::max(m, e);
            r.rows.push_back({double(n), u, v, ko, pred[i].k, e, pred[i].est_error, double(ok)});
        }
        maxerr.push_back(m);
    }
    bool every = true;
    for (const auto& e : err) every = every && strictly_decreasing(e);
    r.metrics["slope"] = loglog_slope(cfg.kernel_n_list, maxerr);
    r.metrics["max_err_last"] = maxerr.back();
    r.metrics["symmetry"] = asym;
    r.flags["decreasing_every_point"] = every;
    r.flags["slope_in_range"] = r.metrics["slope"] >= cfg.tol.k_slope_lo && r.metrics["slope"] <= cfg.tol.k_slope_hi;
    r.flags["symmetric"] = asym <= cfg.tol.symmetry;
    return r;
}

inline ComparisonReport kernel_experiment(Workspace& ws)
{
    return kernel_experiment(ws, ws.config().s0, ws.config().t0);
}

// Sine kernel at x* = 0 and the Airy kernel at the regular edge a, undeformed weight
inline ComparisonReport bulk_and_airy_experiment(Workspace& ws)
{
    const auto& cfg = ws.config();
    const auto& eq = ws.equilibrium();
    const double xs = 0;
    const double rho = density(eq, 0.0, 0.0, xs);
    const double a = eq.support.a;
    const double ca = std::pow(eq.h0(a) * std::sqrt(eq.support.b - a) / 2, 2.0 / 3);

    std::vector<std::tuple<int, double, double>> items;
    for (int n : cfg.sanity_n_list) items.emplace_back(n, 0.0, 0.0);
    ws.prefetch(items);

    ComparisonReport r;
    r.name = "bulk_edge";
    r.columns = {"region", "n", "u", "v", "k_obs", "k_pred", "err", "pass"};  // region: 0 bulk, 1 edge
    r.config = to_json(cfg);
    std::vector<double> eb, ee;
    for (int n : cfg.sanity_n_list) {
        const auto& tab = ws.table(n, 0.0, 0.0);
        double mb = 0, me = 0;
        const double sb = rho * n, se = ca * std::pow(double(n), 2.0 / 3);
        for (double u : cfg.bulk_grid)
            for (double v : cfg.bulk_grid) {
                const double ko = cd_kernel(tab, xs + u / sb, xs + v / sb) / sb;
                const double kp = sine_kernel(u, v);
                const double e = std::abs(ko - kp);
                mb = std::max(mb, e);
                r.rows.push_back({0, double(n), u, v, ko, kp, e, double(e < cfg.tol.bulk)});
            }
        for (double u : cfg.edge_grid)
            for (double v : cfg.edge_grid) {
                const double ko = cd_kernel(tab, a - u / se, a - v / se) / se;
                const double kp = airy_kernel(u, v);
                const double e = std::abs(ko - kp);
                me = std::max(me, e);
                r.rows.push_back({1, double(n), u, v, ko, kp, e, double(e < cfg.tol.edge)});
            }
        eb.push_back(mb);
        ee.push_back(me);
        r.metrics["bulk_max_err_n" + std::to_string(n)] = mb;
        r.metrics["edge_max_err_n" + std::to_string(n)] = me;
    }
    r.metrics["rho"] = rho;
    r.metrics["edge_scale"] = ca;
    auto at = [&](const std::vector<double>& v) {
        for (std::size_t i = 0; i < cfg.sanity_n_list.size(); ++i)
            if (cfg.sanity_n_list[i] == cfg.sanity_n) return v[i];
        throw ConfigError("sanity_n must be one of sanity_n_list");
    };
    r.flags["bulk_below_tol"] = at(eb) < cfg.tol.bulk;
    r.flags["edge_below_tol"] = at(ee) < cfg.tol.edge;
    r.flags["bulk_decreasing"] = strictly_decreasing(eb);
    r.flags["edge_decreasing"] = strictly_decreasing(ee);
    return r;
}

inline std::string format_number(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline nlohmann::json report_to_json(const ComparisonReport& r)
{
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows) rows.push_back(row);
    nlohmann::json hashes = nlohmann::json::object();
    for (const auto& [k, v] : module_hashes()) hashes[k] = v;
    return {{"name", r.name},       {"columns", r.columns}, {"rows", rows},
            {"metrics", r.metrics}, {"flags", r.flags},     {"pass", r.pass()},
            {"config", r.config},   {"module_hashes", hashes}};
}

// structural check of a serialized report
inline void validate_report_json(const nlohmann::json& j)
{
    auto need = [&](const char* k, bool ok) {
        if (!j.contains(k) || !ok) throw ConfigError(std::string("report field '") + k + "' missing or mistyped");
    };
    need("name", j.contains("name") && j["name"].is_string());
    need("columns", j.contains("columns") && j["columns"].is_array());
    need("rows", j.contains("rows") && j["rows"].is_array());
    need("metrics", j.contains("metrics") && j["metrics"].is_object());
    need("flags", j.contains("flags") && j["flags"].is_object());
    need("pass", j.contains("pass") && j["pass"].is_boolean());
    need("config", j.contains("config") && j["config"].is_object());
    need("module_hashes", j.contains("module_hashes") && j["module_hashes"].is_object());
    const std::size_t w = j["columns"].size();
    for (const auto& row : j["rows"])
        if (!row.is_array() || row.size() != w) throw ConfigError("report row width does not match columns");
    for (auto it = j["flags"].begin(); it != j["flags"].end(); ++it)
        if (!it->is_boolean()) throw ConfigError("report flags must be booleans");
}

inline ComparisonReport report_from_json(const nlohmann::json& j)
{
    validate_report_json(j);
    ComparisonReport r;
    r.name = j["name"];
    r.columns = j["columns"].get<std::vector<std::string>>();
    for (const auto& row : j["rows"]) {
        std::vector<double> v;
        for (const auto& x : row) v.push_back(x.is_null() ? std::nan("") : x.get<double>());
        r.rows.push_back(v);
    }
    for (auto it = j["metrics"].begin(); it != j["metrics"].end(); ++it)
        r.metrics[it.key()] = it->is_null() ? std::nan("") : it->get<double>();
    for (auto it = j["flags"].begin(); it != j["flags"].end(); ++it) r.flags[it.key()] = it->get<bool>();
    r.config = j["config"];
    return r;
}

inline std::string report_csv(const ComparisonReport& r)
{
    std::string out;
    for (std::size_t i = 0; i < r.columns.size(); ++i) out += (i ? "," : "") + r.columns[i];
    out += "\n";
    for (const auto& row : r.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + format_number(row[i]);
        out += "\n";
    }
    return out;
}

// writes <dir>/<name>.csv and <dir>/<name>.json
inline void emit_report(const ComparisonReport& r, const std::string& dir)
{
    std::filesystem::create_directories(dir);
    const auto base = std::filesystem::path(dir) / r.name;
    std::ofstream csv(base.string() + ".csv", std::ios::binary);
    std::ofstream js(base.string() + ".json", std::ios::binary);
    if (!csv || !js) throw Error("cannot write report to " + dir);
    csv << report_csv(r);
    js << report_to_json(r).dump(2) << "\n";
}

}  // namespace edgecrit
