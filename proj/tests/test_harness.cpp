#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <edgecrit/harness.hpp>

using namespace edgecrit;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ExperimentConfig small()
{
    ExperimentConfig c;
    c.n_list = {16, 32, 64};
    c.kernel_n_list = {16, 32};
    c.sanity_n_list = {16, 32};
    c.sanity_n = 32;
    c.u_grid = c.v_grid = {-2, 0};
    c.jobs = 2;
    return c;
}

Workspace& shared()
{
    static Workspace ws(small());
    return ws;
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("airy values")
{
    // Ai(0) = 3^{-2/3}/Gamma(2/3), Ai'(0) = -3^{-1/3}/Gamma(1/3)
    auto a = airy(0);
    CHECK_THAT(a.ai, WithinRel(std::pow(3.0, -2.0 / 3) / std::tgamma(2.0 / 3), 1e-14));
    CHECK_THAT(a.ai_prime, WithinRel(-std::pow(3.0, -1.0 / 3) / std::tgamma(1.0 / 3), 1e-14));
    CHECK_THAT(airy(-2.338107410459767).ai, WithinAbs(0, 1e-14));  // first zero
    CHECK_THROWS_AS(airy(12.5), OutOfRange);
    CHECK_THROWS_AS(airy(-13), OutOfRange);
    // Ai'' = x Ai gives the diagonal as the limit
    const double u = 0.7, d = 1e-5;
    CHECK_THAT(airy_kernel(u - d, u + d), WithinAbs(airy_kernel(u, u), 1e-9));
    CHECK_THAT(airy_kernel(-1, 2), WithinAbs(airy_kernel(2, -1), 1e-15));
}

TEST_CASE("airy satisfies Ai'' = x Ai and decays for x >= 0")
{
    const double h = 1e-3;
    for (double x = -11.5; x <= 11.5; x += 0.5) {
        const double d2 = (airy(x + h).ai - 2 * airy(x).ai + airy(x - h).ai) / (h * h);
        CHECK(std::abs(d2 - x * airy(x).ai) < 1e-6 * (1 + std::abs(x)));
        // Ai' by central difference
        CHECK_THAT(airy(x).ai_prime, WithinAbs((airy(x + h).ai - airy(x - h).ai) / (2 * h), 1e-6 * (1 + std::abs(x))));
    }
    double prev = airy(0).ai;
    for (double x = 0.25; x <= 12; x += 0.25) {
        auto v = airy(x);
        CHECK(v.ai > 0);
        CHECK(v.ai < prev);
        prev = v.ai;
    }
}

TEST_CASE("sine kernel")
{
    CHECK(sine_kernel(0.3, 0.3) == 1);
    CHECK_THAT(sine_kernel(0, 1), WithinAbs(0, 1e-16));
    CHECK_THAT(sine_kernel(0, 0.5), WithinAbs(2 / M_PI, 1e-15));
}

TEST_CASE("config json round trip and unknown keys")
{
    auto c = small();
    c.s0 = 0.25;
    c.lax.path = PathKind::Ray;
    c.precision.digits = 60;
    auto j = to_json(c);
    auto d = experiment_from_json(j);
    CHECK(to_json(d) == j);
    CHECK(d.lax.path == PathKind::Ray);

    auto bad = j;
    bad["bogus"] = 1;
    CHECK_THROWS_AS(experiment_from_json(bad), ConfigError);
    bad = j;
    bad["lax"]["R2"] = 3;
    CHECK_THROWS_AS(experiment_from_json(bad), ConfigError);
    bad = j;
    bad["n_list"] = {64, 32};
    CHECK_THROWS_AS(experiment_from_json(bad), ConfigError);
    bad = j;
    bad["jobs"] = "two";
    CHECK_THROWS_AS(experiment_from_json(bad), ConfigError);
    bad = j;
    bad["precision"]["digits"] = 20;
    CHECK_THROWS_AS(experiment_from_json(bad), ConfigError);
    // partial config keeps the defaults
    auto p = experiment_from_json(nlohmann::json{{"t0", 1.0}});
    CHECK(p.t0 == 1.0);
    CHECK(p.n_list == ExperimentConfig{}.n_list);
}

TEST_CASE("schedule inverts to (s0, t0)")
{
    auto& ws = shared();
    const auto& k = ws.critical();
    CHECK_THAT(k.c, WithinRel(std::pow(6.0, 2.0 / 7), 1e-12));
    for (int n : {32, 256}) {
        auto [s, t] = ws.schedule(n, 0.5, -1.0);
        CHECK_THAT(k.c1 * std::pow(double(n), 6.0 / 7) * s, WithinAbs(0.5, 1e-14));
        CHECK_THAT(k.c2 * std::pow(double(n), 4.0 / 7) * t, WithinAbs(-1.0, 1e-14));
    }
}

TEST_CASE("recurrence experiment structure")
{
    auto& ws = shared();
    auto r = recurrence_experiment(ws, 0, 0);
    REQUIRE(r.rows.size() == 3);
    CHECK(r.rows[0].size() == r.columns.size());
    CHECK(r.columns[0] == "n");
    for (const auto& row : r.rows) {
        // predictions share the limits; the correction ratio is exactly 2
        CHECK_THAT(row[10] / row[9], WithinAbs(2, 1e-14));
        CHECK_THAT(row[7], WithinAbs(row[3] - row[5], 1e-15));
        // s0 = 0: the sharp and plain predictions coincide
        CHECK_THAT(row[11], WithinAbs(row[5], 1e-15));
    }
    CHECK(r.metric("schedule_roundtrip") < 1e-12);
    CHECK(r.flag("schedule_consistent"));
    CHECK_THAT(r.metric("y"), WithinAbs(-0.4151721005, 1e-8));
    // the cached table is reused
    auto [s, t] = ws.schedule(64, 0, 0);
    CHECK(&ws.table(64, s, t) == &ws.table(64, s, t));
}

TEST_CASE("kernel experiment structure")
{
    auto& ws = shared();
    auto r = kernel_experiment(ws, 0, 0);
    CHECK(r.rows.size() == 2 * 4);
    CHECK(r.metric("symmetry") < 1e-10);
    CHECK(r.flag("symmetric"));
    for (const auto& row : r.rows) CHECK(std::isfinite(row[5]));
}

TEST_CASE("bulk and edge sanity")
{
    auto& ws = shared();
    auto r = bulk_and_airy_experiment(ws);
    CHECK_THAT(r.metric("rho"), WithinRel(4 / (5 * M_PI), 1e-12));
    CHECK_THAT(r.metric("edge_scale"), WithinRel(std::pow(16.0 / 5, 2.0 / 3), 1e-12));
    CHECK(r.metric("edge_max_err_n32") < r.metric("edge_max_err_n16"));
    CHECK(r.metric("edge_max_err_n32") < 0.1);
    auto c = small();
    c.sanity_n = 48;
    Workspace w2(c);
    CHECK_THROWS_AS(bulk_and_airy_experiment(w2), ConfigError);
}

TEST_CASE("report output is deterministic and round-trips")
{
    auto& ws = shared();
    auto r = recurrence_experiment(ws, 0, 0);
    auto dir = std::filesystem::temp_directory_path() / "edgecrit_harness_test";
    std::filesystem::remove_all(dir);
    emit_report(r, (dir / "a").string());
    emit_report(recurrence_experiment(ws, 0, 0), (dir / "b").string());
    const auto name = r.name + ".csv";
    CHECK(slurp(dir / "a" / name) == slurp(dir / "b" / name));
    CHECK(slurp(dir / "a" / (r.name + ".json")) == slurp(dir / "b" / (r.name + ".json")));

    auto j = nlohmann::json::parse(slurp(dir / "a" / (r.name + ".json")));
    REQUIRE_NOTHROW(validate_report_json(j));
    CHECK(j["module_hashes"].contains("orthopoly"));
    CHECK(j["config"]["s0"] == 0.0);
    auto back = report_from_json(j);
    CHECK(back.rows == r.rows);
    CHECK(back.flags == r.flags);
    CHECK(back.pass() == r.pass());

    auto broken = j;
    broken["rows"][0].erase(0);
    CHECK_THROWS_AS(validate_report_json(broken), ConfigError);
    broken = j;
    broken.erase("module_hashes");
    CHECK_THROWS_AS(validate_report_json(broken), ConfigError);

    // the csv has one header and one line per row, numbers at full precision
    auto csv = slurp(dir / "a" / name);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + long(r.rows.size()));
    CHECK(csv.find(format_number(r.rows[0][3])) != std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST_CASE("slope helper")
{
    std::vector<int> n{32, 64, 128, 256};
    std::vector<double> y;
    for (int k : n) y.push_back(3 * std::pow(double(k), -2.0 / 7));
    CHECK_THAT(loglog_slope(n, y), WithinAbs(-2.0 / 7, 1e-12));
    CHECK(strictly_decreasing(y));
    CHECK_FALSE(strictly_decreasing({1.0, 1.0}));
}
