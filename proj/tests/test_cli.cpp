#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "sgmvar/cli.hpp"
#include "sgmvar/model_io.hpp"
#include "sgmvar/series.hpp"
#include "sgmvar/structural.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace sgmvar;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Workspace {
    fs::path dir;
    Workspace() {
        dir = fs::temp_directory_path() / ("sgmvar_cli_" + std::to_string(std::random_device{}()));
        fs::create_directories(dir);
    }
    ~Workspace() { fs::remove_all(dir); }
    std::string path(const std::string& name) const { return (dir / name).string(); }
    std::string write(const std::string& name, const std::string& text) const {
        std::ofstream(dir / name, std::ios::binary) << text;
        return path(name);
    }
};

ModelParameters structural_fixture() {
    auto m = testing::gmvar12_fixture();
    m.structural = normalize_W(decompose_two_regime(m.regimes[0].omega, m.regimes[1].omega));
    return m;
}

}  // namespace

TEST_CASE("usage errors exit with code 1") {
    CHECK(run({}).code == cli::kExitUsage);
    CHECK(run({"estimate"}).code == cli::kExitUsage);
    CHECK(run({"estimate", "--data", "/nonexistent.csv", "--config", "/nonexistent.json"}).code == cli::kExitUsage);
    CHECK(run({"frobnicate"}).code == cli::kExitUsage);
    const auto help = run({"--help"});
    CHECK(help.code == cli::kExitOk);
    CHECK(help.out.find("simulate") != std::string::npos);
}

TEST_CASE("transform reproduces a hand-computed fixture") {
    Workspace ws;
    const auto data = ws.write("data.csv", "t,x\n1,100\n2,110\n3,99\n4,99\n5,120\n");
    const auto man = ws.write("manifest.json", R"({"transforms": [{"column": "x", "op": "log_diff_100"}]})");
    const auto r = run({"transform", "--data", data, "--config", man, "--out", ws.path("out")});
    REQUIRE(r.code == 0);
    const auto f = load_csv(ws.path("out/data_out.csv"));
    REQUIRE(f.T() == 4);
    CHECK(f.values(0, 0) == doctest::Approx(100 * std::log(1.1)).epsilon(1e-14));
    CHECK(f.values(1, 0) == doctest::Approx(100 * std::log(99.0 / 110.0)).epsilon(1e-14));
    CHECK(f.values(2, 0) == 0.0);
    CHECK(f.values(3, 0) == doctest::Approx(100 * std::log(120.0 / 99.0)).epsilon(1e-14));
    CHECK(slurp(data) == "t,x\n1,100\n2,110\n3,99\n4,99\n5,120\n");
}

TEST_CASE("simulate, diagnose and estimate chain through files") {
    Workspace ws;
    const auto model = ws.path("model.json");
    save_model(testing::gmvar12_fixture(), model);
    const std::string before = slurp(model);

    auto r = run({"simulate", "--model", model, "--length", "150", "--seed", "3", "--out", ws.path("sim"), "--quiet"});
    REQUIRE(r.code == 0);
    const auto path = load_csv(ws.path("sim/path.csv"));
    CHECK(path.T() == 151);
    CHECK(path.index.front() == "0");
    const auto regimes = load_csv(ws.path("sim/regimes.csv"));
    CHECK(regimes.T() == 150);
    CHECK(regimes.names.front() == "regime");

    r = run({"diagnose", "--model", model, "--data", ws.path("sim/path.csv"), "--lags", "5", "--out", ws.path("diag")});
    REQUIRE(r.code == 0);
    CHECK(load_csv(ws.path("diag/residuals.csv")).T() == 150);
    const auto summary = read_json_file(ws.path("diag/summary.json"));
    CHECK(summary["shape"].size() == 2);
    CHECK(fs::exists(ws.path("diag/correlograms.csv")));

    const auto cfg = ws.write("est.json", R"({"p": 1, "M": 2, "rounds": 1, "ga": {"population_size": 30, "generations": 10}})");
    r = run({"estimate", "--data", ws.path("sim/path.csv"), "--config", cfg, "--out", ws.path("est"), "--threads", "1",
             "--quiet"});
    REQUIRE(r.code == 0);
    const auto fitted = load_model(ws.path("est/model.json"));
    CHECK(fitted.dims == Dimensions{2, 1, 2});
    const auto report = read_json_file(ws.path("est/report.json"));
    CHECK(report["rounds"].size() == 1);
    CHECK(report.contains("criteria"));
    CHECK(slurp(model) == before);
}

TEST_CASE("girf output is byte-identical for a fixed seed") {
    Workspace ws;
    const auto model = ws.path("model.json");
    save_model(structural_fixture(), model);
    const auto spec = ws.write("girf.json", R"({"shock": 1, "horizon": 4, "R1": 20, "R2": 3})");
    REQUIRE(run({"girf", "--model", model, "--spec", spec, "--seed", "7", "--out", ws.path("a"), "--quiet"}).code == 0);
    REQUIRE(run({"girf", "--model", model, "--spec", spec, "--seed", "7", "--out", ws.path("b"), "--quiet"}).code == 0);
    const std::string a = slurp(ws.path("a/girf.csv"));
    CHECK(a == slurp(ws.path("b/girf.csv")));
    CHECK(a.rfind("horizon,series,statistic,value\n", 0) == 0);
    REQUIRE(run({"girf", "--model", model, "--spec", spec, "--seed", "8", "--out", ws.path("c"), "--quiet"}).code == 0);
    CHECK(a != slurp(ws.path("c/girf.csv")));
}

TEST_CASE("decompose and check-id") {
    Workspace ws;
    const auto model = ws.path("reduced.json");
    save_model(testing::gmvar12_fixture(), model);
    auto r = run({"decompose", "--model", model, "--out", ws.path("dec")});
    REQUIRE(r.code == 0);
    const auto dec = load_model(ws.path("dec/model.json"));
    REQUIRE(dec.structural.has_value());
    CHECK(dec.structural->lambdas[0][0] <= dec.structural->lambdas[0][1]);

    auto withpattern = testing::gmvar12_fixture();
    StructuralParams s;
    s.W = testing::mat(2, 2, {1.0, -0.5, 0.5, 1.0});
    s.lambdas = {testing::vec({0.5, 2.0})};
    s.pattern = ConstraintPattern::from_rows({"+-", "++"}, 1);
    for (int k = 0; k < 2; ++k) withpattern.regimes[k].omega = s.omega(k);
    withpattern.structural = s;
    save_model(withpattern, ws.path("pattern.json"));
    r = run({"check-id", "--model", ws.path("pattern.json"), "--out", ws.path("id")});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("Identified") != std::string::npos);
    CHECK(read_json_file(ws.path("id/identification.json"))["verdict"] == "Identified");

    r = run({"check-id", "--model", ws.path("dec/model.json"), "--out", ws.path("id2")});
    CHECK(r.code == cli::kExitFailure);
}

TEST_CASE("computation errors exit with code 2 and never overwrite inputs") {
    Workspace ws;
    auto m = testing::gmvar12_fixture();
    const auto model = ws.path("model.json");
    save_model(m, model);
    const auto spec = ws.write("girf.json", R"({"shock": 1, "R1": 5})");
    CHECK(run({"girf", "--model", model, "--spec", spec, "--out", ws.path("g")}).code == cli::kExitFailure);

    const auto r = run({"decompose", "--model", model, "--out", ws.dir.string()});
    CHECK(r.code == cli::kExitUsage);
    CHECK(r.err.find("overwrite") != std::string::npos);

    ws.write("broken.csv", "t,a,b\n1,2\n");
    const auto d = run({"diagnose", "--model", model, "--data", ws.path("broken.csv"), "--out", ws.path("x")});
    CHECK(d.code == cli::kExitFailure);
    CHECK(d.err.find("broken.csv") != std::string::npos);
}
