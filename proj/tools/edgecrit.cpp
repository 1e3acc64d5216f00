// edgecrit: command-line front end. Exit codes: 0 ok, 1 computation/acceptance failure, 2 config error.
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include <edgecrit/acceptance.hpp>

using namespace edgecrit;
using nlohmann::json;

namespace {

struct Options {
    std::string config_path;
    std::optional<int> jobs, digits;
    std::string out;

    // equilibrium
    int density_grid = 0;
    std::string density_out;
    // pi2
    std::optional<std::string> t, L, mesh;
    std::optional<int> n_intervals;
    // kernel / report
    std::optional<std::string> s0, t0;
    std::string u_grid, v_grid, experiment = "all";
    // recurrence
    int n = 0, count = -1;
    std::string s = "0", t_rec = "0";
    // verify
    std::string suite = "fast";
    std::vector<int> criteria;
};

double parse_real(const std::string& v, const char* what)
{
    std::size_t pos = 0;
    double x = 0;
    try {
        x = std::stod(v, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != v.size() || v.empty()) throw ConfigError(std::string("not a number for ") + what + ": '" + v + "'");
    return x;
}

// "a:b:N" (N points, endpoints included) or "x1,x2,..."
std::vector<double> parse_grid(const std::string& g, const char* what)
{
    std::vector<double> out;
    if (g.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(g);
        for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
        if (parts.size() != 3) throw ConfigError(std::string(what) + " must be start:stop:count");
        const double a = parse_real(parts[0], what), b = parse_real(parts[1], what);
        const int m = static_cast<int>(parse_real(parts[2], what));
        if (m < 1) throw ConfigError(std::string(what) + " count must be >= 1");
        for (int i = 0; i < m; ++i) out.push_back(m == 1 ? a : a + (b - a) * i / (m - 1));
    } else {
        std::stringstream ss(g);
        for (std::string p; std::getline(ss, p, ',');) out.push_back(parse_real(p, what));
    }
    if (out.empty()) throw ConfigError(std::string(what) + " is empty");
    return out;
}

ExperimentConfig load_config(const Options& o)
{
    json j = json::object();
    if (!o.config_path.empty()) {
        std::ifstream f(o.config_path);
        if (!f) throw ConfigError("cannot read config " + o.config_path);
        try {
            j = json::parse(f);
        } catch (const json::exception& e) {
            throw ConfigError(std::string("config is not valid JSON: ") + e.what());
        }
    }
    // file < environment < flags
    if (const char* env = std::getenv("EDGECRIT_DIGITS")) {
        j["precision"]["digits"] = static_cast<int>(parse_real(env, "EDGECRIT_DIGITS"));
    }
    if (o.digits) j["precision"]["digits"] = *o.digits;
    if (o.jobs) j["jobs"] = *o.jobs;
    if (o.t) j["pi2"]["t"] = parse_real(*o.t, "--t");
    if (o.L) j["pi2"]["L"] = parse_real(*o.L, "--L");
    if (o.mesh) j["pi2"]["mesh"] = parse_real(*o.mesh, "--mesh");
    if (o.n_intervals) {
        if (*o.n_intervals < 1) throw ConfigError("--n must be positive");
        const double L = j.contains("pi2") && j["pi2"].contains("L") ? j["pi2"]["L"].get<double>() : 40.0;
        j["pi2"]["mesh"] = 2 * L / *o.n_intervals;
    }
    if (o.s0) j["s0"] = parse_real(*o.s0, "--s0");
    if (o.t0) j["t0"] = parse_real(*o.t0, "--t0");
    if (!o.u_grid.empty()) j["u_grid"] = parse_grid(o.u_grid, "--u-grid");
    if (!o.v_grid.empty()) j["v_grid"] = parse_grid(o.v_grid, "--v-grid");
    return experiment_from_json(j);
}

// opens --out or stdout
struct Sink {
    std::ofstream file;
    std::ostream* os = &std::cout;
    explicit Sink(const std::string& path)
    {
        if (path.empty() || path == "-") return;
        auto parent = std::filesystem::path(path).parent_path();
        if (!parent.empty()) std::filesystem::create_directories(parent);
        file.open(path, std::ios::binary);
        if (!file) throw Error("cannot write " + path);
        os = &file;
    }
    std::ostream& operator*() { return *os; }
};

std::string num(double x) { return format_number(x); }

json poly_json(const Polynomial<double>& p)
{
    json a = json::array();
    for (int k = 0; k <= p.degree(); ++k) a.push_back(p.coeff(k));
    return a;
}

int run_equilibrium(const Options& o)
{
    auto cfg = load_config(o);
    auto eq = build_equilibrium<double>(cfg.family, {-3.0, 3.0});
    auto k = constants(eq);
    auto rep = verify_assumptions(cfg.family, eq);
    json checks = json::array();
    for (const auto& c : rep.checks) checks.push_back({{"name", c.name}, {"value", c.value}, {"pass", c.pass}});
    json hashes = json::object();
    for (const auto& [m, h] : module_hashes()) hashes[m] = h;
    json out = {{"support", {eq.support.a, eq.support.b}},
                {"h0", poly_json(eq.h0)},
                {"h1", poly_json(eq.h1)},
                {"h2", poly_json(eq.h2)},
                {"constants", {{"c", k.c}, {"c1", k.c1}, {"c2", k.c2}}},
                {"assumptions", {{"all_pass", rep.all_pass()}, {"checks", checks}}},
                {"config", to_json(cfg)},
                {"module_hashes", hashes}};
    {
        Sink sink(o.out.empty() ? (std::filesystem::path(cfg.output_dir) / "eq.json").string() : o.out);
        *sink << out.dump(2) << "\n";
    }
    if (o.density_grid > 0) {
        std::string path = o.density_out;
        if (path.empty()) path = (std::filesystem::path(cfg.output_dir) / "density.csv").string();
        Sink sink(path);
        *sink << "# config: " << to_json(cfg).dump() << "\n";
        *sink << "x,rho0,psi1,psi2\n";
        const double a = eq.support.a, b = eq.support.b;
        const int m = o.density_grid;
        for (int i = 0; i < m; ++i) {
            const double x = a + (b - a) * (i + 0.5) / m;
            const double r0 = density(eq, 0.0, 0.0, x);
            *sink << num(x) << "," << num(r0) << "," << num(density(eq, 1.0, 0.0, x) - r0) << ","
                  << num(density(eq, 0.0, 1.0, x) - r0) << "\n";
        }
    }
    return rep.all_pass() ? 0 : 1;
}

int run_pi2(const Options& o)
{
    auto cfg = load_config(o);
    const int pts = static_cast<int>(std::lround(2 * cfg.pi2_L / cfg.pi2_mesh)) + 1;
    auto sol = solve_y(cfg.pi2_t, cfg.pi2_L, pts, cfg.pi2_tol);
    Sink sink(o.out);
    *sink << "# config: " << to_json(cfg).dump() << "\n";
    *sink << "s,y,ys,yss,ysss,h\n";
    for (std::size_t i = 0; i < sol.grid.size(); ++i)
        *sink << num(sol.grid[i]) << "," << num(sol.y[i]) << "," << num(sol.ys[i]) << "," << num(sol.yss[i]) << ","
              << num(sol.ysss[i]) << "," << num(sol.h[i]) << "\n";
    std::fprintf(stderr, "residual %.3g on [%g, %g]\n", sol.residual_norm, -cfg.pi2_L + 1, cfg.pi2_L - 1);
    return 0;
}

int run_kernel(const Options& o)
{
    auto cfg = load_config(o);
    auto sol = solve_y_refined(cfg.t0, cfg.pi2_L, cfg.pi2_mesh, cfg.pi2_tol);
    auto ks = kernel_grid(cfg.u_grid, cfg.v_grid, cfg.s0, cfg.t0, sol, cfg.lax);
    Sink sink(o.out);
    *sink << "# config: " << to_json(cfg).dump() << "\n";
    *sink << "u,v,K,est_error\n";
    for (const auto& k : ks) *sink << num(k.u) << "," << num(k.v) << "," << num(k.k) << "," << num(k.est_error) << "\n";
    return 0;
}

int run_recurrence(const Options& o)
{
    auto cfg = load_config(o);
    if (o.n < 1) throw ConfigError("--n must be >= 1");
    const double s = parse_real(o.s, "--s"), t = parse_real(o.t_rec, "--t");
    auto tab = recurrence_table(cfg.family, o.n, s, t, cfg.precision, o.count);
    Sink sink(o.out);
    json echo = to_json(cfg);
    echo["n"] = o.n;
    echo["s"] = s;
    echo["t"] = t;
    *sink << "# config: " << echo.dump() << "\n";
    *sink << "k,a_k,b_k\n";
    for (int k = 0; k <= tab.count; ++k) *sink << k << "," << tab.a_text[k] << "," << tab.b_text[k] << "\n";
    std::fprintf(stderr, "digits %d, validation delta %.3g\n", tab.cfg.digits, tab.validation_delta);
    return 0;
}

int run_verify(const Options& o)
{
    auto cfg = load_config(o);
    bool ok = true;
    if (o.suite == "fast") {
        for (const auto& r : fast_suite()) {
            std::printf("%s\n", format_result(r).c_str());
            ok = ok && r.pass;
        }
    } else if (o.suite == "all") {
        run_acceptance(cfg, o.criteria, [&](const CriterionResult& r) {
            std::printf("%s\n", format_result(r).c_str());
            std::fflush(stdout);
            ok = ok && r.pass;
        });
    } else {
        throw ConfigError("--suite must be fast or all");
    }
    return ok ? 0 : 1;
}

int run_report(const Options& o)
{
    auto cfg = load_config(o);
    const std::string dir = o.out.empty() ? cfg.output_dir : o.out;
    const auto& e = o.experiment;
    if (e != "all" && e != "recurrence" && e != "kernel" && e != "bulk")
        throw ConfigError("--experiment must be recurrence, kernel, bulk or all");
    Workspace ws(cfg);
    bool ok = true;
    auto emit = [&](const ComparisonReport& r) {
        emit_report(r, dir);
        std::printf("%s %s\n", r.pass() ? "PASS" : "FAIL", r.name.c_str());
        for (const auto& [k, v] : r.flags)
            if (!v) std::printf("  flag %s false\n", k.c_str());
        ok = ok && r.pass();
    };
    if (e == "all" || e == "recurrence") emit(recurrence_experiment(ws));
    if (e == "all" || e == "kernel") emit(kernel_experiment(ws));
    if (e == "all" || e == "bulk") emit(bulk_and_airy_experiment(ws));
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"edgecrit: critical edge asymptotics of orthogonal polynomial ensembles"};
    app.require_subcommand(1);
    Options o;
    auto common = [&](CLI::App* c) {
        c->add_option("--config", o.config_path, "JSON config (flags override it)");
        c->add_option("--jobs", o.jobs, "parallel work items");
        c->add_option("--digits", o.digits, "working decimal digits");
        c->add_option("--out", o.out, "output path");
    };
    auto* eq = app.add_subcommand("equilibrium", "support, h_j, constants and assumption checks");
    common(eq);
    eq->add_option("--density-grid", o.density_grid, "also write N density samples");
    eq->add_option("--density-out", o.density_out, "density CSV path");

    auto* pi = app.add_subcommand("pi2", "real pole-free P_I^2 solution on [-L, L]");
    common(pi);
    pi->add_option("--t", o.t);
    pi->add_option("--L", o.L);
    pi->add_option("--mesh", o.mesh);
    pi->add_option("--n", o.n_intervals, "number of mesh intervals (overrides --mesh)");

    auto* ke = app.add_subcommand("kernel", "K^{crit,III} on a (u, v) grid");
    common(ke);
    ke->add_option("--s0", o.s0);
    ke->add_option("--t0", o.t0);
    ke->add_option("--u-grid", o.u_grid, "start:stop:count or comma list");
    ke->add_option("--v-grid", o.v_grid, "start:stop:count or comma list");

    auto* re = app.add_subcommand("recurrence", "recurrence coefficients for exp(-n V_{s,t})");
    common(re);
    re->add_option("--n", o.n)->required();
    re->add_option("--s", o.s);
    re->add_option("--t", o.t_rec);
    re->add_option("--count", o.count, "number of coefficients (default n)");

    auto* ve = app.add_subcommand("verify", "invariant suite (fast) or the acceptance battery (all)");
    common(ve);
    ve->add_option("--suite", o.suite);
    ve->add_option("--criteria", o.criteria, "subset of acceptance criteria")->delimiter(',');

    auto* rp = app.add_subcommand("report", "run experiments and write CSV + JSON reports");
    common(rp);
    rp->add_option("--experiment", o.experiment, "recurrence | kernel | bulk | all");
    rp->add_option("--s0", o.s0);
    rp->add_option("--t0", o.t0);
    rp->add_option("--u-grid", o.u_grid);
    rp->add_option("--v-grid", o.v_grid);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    try {
        if (*eq) return run_equilibrium(o);
        if (*pi) return run_pi2(o);
        if (*ke) return run_kernel(o);
        if (*re) return run_recurrence(o);
        if (*ve) return run_verify(o);
        if (*rp) return run_report(o);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
