#include <doctest.h>

#include <clocale>
#include <fstream>
#include <sstream>

#include "filmhom/cli.hpp"

using namespace filmhom;
using namespace filmhom::cli;
namespace fs = std::filesystem;

namespace {

struct Workspace {
    fs::path dir;
    explicit Workspace(const std::string& name) {
        dir = fs::temp_directory_path() / ("filmhom_cli_" + name + "_" + std::to_string(::getpid()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Workspace() { fs::remove_all(dir); }

    fs::path config(const std::string& name, const nlohmann::json& j) const {
        const fs::path p = dir / (name + ".json");
        std::ofstream(p) << j.dump();
        return p;
    }
};

int run_cmd(const std::string& cmd, const fs::path& config, const fs::path& out, std::vector<std::string> extra = {}) {
    std::vector<std::string> args{cmd, "--config", config.string(), "--out", out.string()};
    args.insert(args.end(), extra.begin(), extra.end());
    return run(args);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::vector<std::string>> csv_rows(const fs::path& p) {
    std::istringstream in(read_csv_body(p));
    std::vector<std::vector<std::string>> rows;
    std::string line;
    std::getline(in, line); // header
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("number formatting") {
    CHECK(format_real(0.1) == "0.1");
    CHECK(format_real(2.0) == "2");
    CHECK(format_real(1.0 / 3.0) == "0.333333333333");
    CHECK(format_real(-0.0) == "0");
    CHECK(format_real(1.23456789012345e-20) == "1.23456789012e-20");
    const char* old = std::setlocale(LC_ALL, "de_DE.UTF-8");
    CHECK(format_real(0.5) == "0.5");
    if (old) std::setlocale(LC_ALL, "C");
}

TEST_CASE("config hash ignores key order") {
    const auto a = nlohmann::json::parse(R"({"grid":{"N":8},"profile":{"builtin":"sin2-stripe"}})");
    const auto b = nlohmann::json::parse(R"({"profile":{"builtin":"sin2-stripe"},"grid":{"N":8}})");
    const auto c = nlohmann::json::parse(R"({"profile":{"builtin":"sin2-stripe"},"grid":{"N":16}})");
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a) != config_hash(c));
    CHECK(config_hash(a).size() == 16);
}

TEST_CASE("config validation") {
    using nlohmann::json;
    CHECK_NOTHROW(parse_config(json::object()));
    CHECK_THROWS_AS(parse_config(json::parse(R"({"energy":{"p":1.0}})")), ConfigError);
    CHECK_THROWS_AS(parse_config(json::parse(R"({"energy":{"gamma":2,"beta":1}})")), ConfigError);
    CHECK_THROWS_AS(parse_config(json::parse(R"({"gamma":{"eps":[0.25,0.5]}})")), ConfigError);
    CHECK_THROWS_AS(parse_config(json::parse(R"({"dims":{"n":4}})")), ConfigError);
    CHECK_THROWS_AS(parse_config(json::parse(R"({"sweep":{"t":[1.0]}})")), ConfigError);
    CHECK_THROWS_AS(parse_config(json::parse(R"({"profile":{"builtin":"nope"}})")), ConfigError);
    CHECK_THROWS_AS(parse_config(json::parse(R"({"energy":{"kind":"quadratic_form","A":[[1,0],[0,1]]}})")), ConfigError);
    CHECK_THROWS_AS(parse_config(json::parse(R"({"grid":{"N":"many"}})")), ConfigError);
    CHECK_THROWS_AS(parse_config(json::parse(R"([1,2])")), ConfigError);
    const RunConfig cfg = parse_config(json::parse(
        R"({"profile":{"builtin":"sin2-stripe","dim":1},"energy":{"kind":"quadratic_form","A":[[2,0],[0,1]]}})"));
    CHECK(cfg.energy().kind_name() == "quadratic_form");
    CHECK(cfg.dim() == 1);
}

TEST_CASE("shipped example configs parse") {
    int seen = 0;
    for (const auto& e : fs::directory_iterator(FILMHOM_CONFIG_DIR)) {
        if (e.path().extension() != ".json") continue;
        CAPTURE(e.path().string());
        const RunConfig cfg = load_config(e.path());
        CHECK(cfg.N > 0);
        CHECK_NOTHROW(cfg.profile());
        CHECK_NOTHROW(cfg.energy());
        ++seen;
    }
    CHECK(seen >= 4);
}

TEST_CASE("probes are seeded") {
    const auto j = nlohmann::json::parse(R"({"sweep":{"F":[[1,2,3]],"random_F":{"count":4,"seed":9}}})");
    const RunConfig cfg = parse_config(j);
    const auto a = cfg.probes(3), b = cfg.probes(3);
    REQUIRE(a.size() == 5);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
    CHECK_THROWS_AS(cfg.probes(2), ConfigError);
}

TEST_CASE("parallel_for keeps index order and propagates errors") {
    std::vector<int> out(100);
    parallel_for(out.size(), 4, [&](std::size_t i) { out[i] = int(i * i); });
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == int(i * i));
    CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                        if (i == 7) throw ResolutionError("boom");
                    }),
                    ResolutionError);
}

TEST_CASE("mask command") {
    Workspace ws("mask");
    const auto cfg = ws.config("prod", {{"profile", {{"builtin", "sin2-product"}}}, {"grid", {{"N", 32}}}});
    REQUIRE(run_cmd("mask", cfg, ws.dir / "prod", {"--reproducible"}) == kSuccess);
    const auto rows = csv_rows(ws.dir / "prod" / "mask.csv");
    REQUIRE(rows.size() == 9);
    for (const auto& r : rows) {
        const double t = std::stod(r[0]), theta = std::stod(r[1]);
        if (t < 0.5) CHECK(theta == 1.0);
        if (t > 0.5) CHECK(theta < 1.0);
    }
    CHECK(fs::exists(ws.dir / "prod" / "masks" / "mask_008.txt"));

    const auto flat = ws.config("flat", {{"profile", {{"constant", true}}}, {"grid", {{"N", 16}}}});
    REQUIRE(run_cmd("mask", flat, ws.dir / "flat") == kSuccess);
    for (const auto& r : csv_rows(ws.dir / "flat" / "mask.csv")) CHECK(r[1] == "1");
}

TEST_CASE("sampled profile file round trip through the CLI") {
    Workspace ws("roundtrip");
    const auto orig = ws.config("orig", {{"profile", {{"builtin", "sin2-product"}}},
                                         {"grid", {{"N", 25}}},
                                         {"output", {{"save_profile", true}}}});
    REQUIRE(run_cmd("mask", orig, ws.dir / "a", {"--reproducible"}) == kSuccess);
    fs::copy_file(ws.dir / "a" / "profile.txt", ws.dir / "saved.txt");
    const auto saved = ws.config("saved", {{"profile", {{"file", "saved.txt"}}}, {"grid", {{"N", 25}}}});
    REQUIRE(run_cmd("mask", saved, ws.dir / "b", {"--reproducible"}) == kSuccess);
    CHECK(read_csv_body(ws.dir / "a" / "mask.csv") == read_csv_body(ws.dir / "b" / "mask.csv"));
    for (int i = 0; i < 9; ++i) {
        const std::string name = "mask_00" + std::to_string(i) + ".txt";
        CHECK(slurp(ws.dir / "a" / "masks" / name) == slurp(ws.dir / "b" / "masks" / name));
    }
}

TEST_CASE("phi sweep is deterministic across job counts") {
    Workspace ws("phi");
    const auto cfg = ws.config("phi", {{"profile", {{"builtin", "sin2-stripe"}}},
                                       {"grid", {{"N", 16}}},
                                       {"energy", {{"p", 3.0}}},
                                       {"sweep", {{"t", {0.2, 0.6, 0.8}}, {"random_F", {{"count", 3}, {"seed", 4}}}}}});
    REQUIRE(run_cmd("phi", cfg, ws.dir / "a", {"--reproducible", "--jobs", "1"}) == kSuccess);
    REQUIRE(run_cmd("phi", cfg, ws.dir / "b", {"--reproducible", "--jobs", "4"}) == kSuccess);
    CHECK(slurp(ws.dir / "a" / "phi.csv") == slurp(ws.dir / "b" / "phi.csv"));
    const auto summary = nlohmann::json::parse(slurp(ws.dir / "a" / "phi_summary.json"));
    CHECK(summary["monotone_in_t"] == true);
    const std::string header = read_csv_body(ws.dir / "a" / "phi.csv").substr(0, 48);
    CHECK(header.rfind("t,F11,F12,value,theta,converged,iterations,N", 0) == 0);

    REQUIRE(run_cmd("phi", cfg, ws.dir / "c") == kSuccess);
    CHECK(slurp(ws.dir / "c" / "phi.csv").find("generated=") != std::string::npos);
    CHECK(read_csv_body(ws.dir / "a" / "phi.csv") == read_csv_body(ws.dir / "c" / "phi.csv"));
}

TEST_CASE("psi oracle column and full-mask rows") {
    Workspace ws("psi");
    const auto cfg = ws.config("psi", {{"profile", {{"builtin", "sin2-product"}}},
                                       {"grid", {{"N", 12}}},
                                       {"sweep", {{"t", {0.3, 0.7}}, {"F", {{{1.0, 2.0, 0.5}}}}}}});
    REQUIRE(run_cmd("psi", cfg, ws.dir, {"--oracle", "--reproducible"}) == kSuccess);
    const auto rows = csv_rows(ws.dir / "psi.csv");
    REQUIRE(rows.size() == 2);
    CHECK(std::stod(rows[0][4]) == doctest::Approx(1.0 + 4.0 + 0.25).epsilon(1e-10));
    CHECK(rows[0].size() == 11);
    const auto summary = nlohmann::json::parse(slurp(ws.dir / "psi_summary.json"));
    CHECK(summary["max_oracle_discrepancy"].get<double>() <= 1e-8);
}

TEST_CASE("whom with the growing-cube oracle") {
    Workspace ws("whom");
    const auto cfg = ws.config("whom", {{"profile", {{"builtin", "sin2-stripe"}}},
                                        {"grid", {{"N", 6}}},
                                        {"oracle", {{"cube_T", 1}}},
                                        {"sweep", {{"t", {0.75}}, {"F", {{{1.0, 1.0, 1.0}}}}}}});
    REQUIRE(run_cmd("whom", cfg, ws.dir, {"--oracle", "--reproducible"}) == kSuccess);
    const auto rows = csv_rows(ws.dir / "whom.csv");
    REQUIRE(rows.size() == 1);
    CHECK(std::stod(rows[0][8]) >= std::stod(rows[0][4]) - 1e-10);
}

TEST_CASE("thresholds command") {
    Workspace ws("thresholds");
    const auto cfg = ws.config("s", {{"profile", {{"builtin", "sin2-stripe"}}}, {"grid", {{"N", 64}}}});
    REQUIRE(run_cmd("thresholds", cfg, ws.dir, {"--reproducible"}) == kSuccess);
    const auto j = nlohmann::json::parse(slurp(ws.dir / "thresholds.json"));
    CHECK(j["t"][0].get<double>() == doctest::Approx(0.5).epsilon(0.05));
    CHECK(j["t"][1].get<double>() == doctest::Approx(1.0).epsilon(0.05));
    CHECK(j["intervals"][1]["xi"][0][1].get<double>() == doctest::Approx(1.0));
}

TEST_CASE("film command") {
    Workspace ws("film");
    const auto cfg = ws.config("f", {{"profile", {{"constant", true}}},
                                     {"grid", {{"N", 8}}},
                                     {"film", {{"Fbar", {{{1.0, 1.0}}, {{0.5, 0.0}}}}}}});
    REQUIRE(run_cmd("film", cfg, ws.dir, {"--reproducible", "--jobs", "2"}) == kSuccess);
    const auto rows = csv_rows(ws.dir / "film.csv");
    REQUIRE(rows.size() == 2);
    CHECK(std::stod(rows[0][2]) == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(std::stod(rows[0][3]) == doctest::Approx(4.0).epsilon(1e-6));
    CHECK(std::stod(rows[1][2]) == doctest::Approx(0.25).epsilon(1e-6));
    CHECK(fs::exists(ws.dir / "film_nodes.csv"));
}

TEST_CASE("exit codes") {
    Workspace ws("codes");
    const auto checker = ws.config("c", {{"profile", {{"builtin", "checkerboard"}}}, {"film", {{"Fbar", {{{1.0, 0.0}}}}}}});
    CHECK(run_cmd("film", checker, ws.dir / "c") == kConfigError);
    CHECK(run_cmd("mask", ws.dir / "missing.json", ws.dir / "m") == kConfigError);
    std::ofstream(ws.dir / "broken.json") << "{not json";
    CHECK(run_cmd("mask", ws.dir / "broken.json", ws.dir / "m") == kConfigError);
    CHECK(run({"frobnicate", "--config", "x"}) == kConfigError);

    const auto coarse = ws.config("g", {{"profile", {{"builtin", "sin2-stripe"}, {"dim", 1}}},
                                        {"grid", {{"N", 8}}},
                                        {"film", {{"Fbar", {{{1.0}}}}}},
                                        {"gamma", {{"eps", {0.5, 0.25}}, {"cells_per_delta", 2}}}});
    CHECK(run_cmd("gamma", coarse, ws.dir / "g") == kResolutionError);
    CHECK(fs::exists(ws.dir / "g" / "gamma.json"));

    const auto strict = ws.config("k", {{"profile", {{"builtin", "sin2-stripe"}}},
                                        {"grid", {{"N", 16}}},
                                        {"thresholds", {{"coercivity_floor", 10.0}}}});
    CHECK(run_cmd("thresholds", strict, ws.dir / "k") == kStructuralInconsistency);

    const auto starved = ws.config("n", {{"profile", {{"builtin", "sin2-stripe"}}},
                                         {"grid", {{"N", 16}}},
                                         {"energy", {{"p", 3.0}}},
                                         {"solver", {{"max_iterations", 1}}},
                                         {"sweep", {{"t", {0.75}}, {"F", {{{1.0, 0.3}}}}}}});
    CHECK(run_cmd("phi", starved, ws.dir / "n") == kNonConvergence);
}

}
