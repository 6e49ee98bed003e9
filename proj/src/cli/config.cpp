#include "filmhom/cli.hpp"

#include <fstream>
#include <random>

namespace filmhom::cli {

using nlohmann::json;

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

const json& section(const json& j, const char* key) {
    static const json empty = json::object();
    if (!j.contains(key)) return empty;
    const json& s = j.at(key);
    if (!s.is_object()) throw ConfigError(std::string("config section '") + key + "' must be an object");
    return s;
}

// Nested arrays are rows; a flat array is a single row.
Eigen::MatrixXd parse_matrix(const json& j, const std::string& what) {
    if (!j.is_array() || j.empty()) throw ConfigError(what + " must be a non-empty array");
    std::vector<std::vector<double>> rows;
    try {
        if (j.front().is_array())
            rows = j.get<std::vector<std::vector<double>>>();
        else
            rows.push_back(j.get<std::vector<double>>());
    } catch (const json::exception&) {
        throw ConfigError(what + " must be an array of numbers or of numeric rows");
    }
    const std::size_t cols = rows.front().size();
    Eigen::MatrixXd M(rows.size(), cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != cols) throw ConfigError(what + " has ragged rows");
        for (std::size_t c = 0; c < cols; ++c) M(r, c) = rows[r][c];
    }
    return M;
}

std::vector<Eigen::MatrixXd> parse_matrix_list(const json& j, const std::string& what) {
    std::vector<Eigen::MatrixXd> out;
    if (j.is_null()) return out;
    if (!j.is_array()) throw ConfigError(what + " must be a list of matrices");
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(parse_matrix(j[i], what + "[" + std::to_string(i) + "]"));
    return out;
}

std::vector<double> parse_t_grid(const json& j) {
    if (j.is_null()) return {};
    if (j.is_array()) return j.get<std::vector<double>>();
    if (j.is_object()) {
        const double from = get_or(j, "from", 0.0), to = get_or(j, "to", 0.9);
        const int count = get_or(j, "count", 10);
        if (count < 1) throw ConfigError("t grid count must be positive");
        std::vector<double> t;
        for (int i = 0; i < count; ++i) t.push_back(count == 1 ? from : from + (to - from) * i / (count - 1));
        return t;
    }
    throw ConfigError("sweep.t must be a list or {from, to, count}");
}

} // namespace

Profile RunConfig::profile() const {
    const ProfileSpec& s = profile_spec;
    if (s.kind == "constant") return Profile::constant(s.dim);
    if (s.kind == "file") return load_sampled_profile(s.path);
    return Profile::builtin(s.name, s.dim, s.floor);
}

int RunConfig::dim() const { return profile_spec.dim; }

EnergyDensity RunConfig::energy() const {
    const int n = dim() + 1;
    const EnergySpec& e = energy_spec;
    EnergyDensity W = [&] {
        if (e.kind == "p_norm_power") return EnergyDensity::p_norm_power(e.p, m, n);
        if (e.kind == "frobenius_power") return EnergyDensity::frobenius_power(e.p, m, n);
        if (e.kind == "quadratic_form") {
            const int size = m * n;
            if (int(e.A.size()) != size * size)
                throw ConfigError("energy.A must hold " + std::to_string(size * size) + " entries for m=" +
                                  std::to_string(m) + ", n=" + std::to_string(n));
            Eigen::MatrixXd A(size, size);
            for (int i = 0; i < size; ++i)
                for (int j = 0; j < size; ++j) A(i, j) = e.A[std::size_t(i * size + j)];
            return EnergyDensity::quadratic_form(A, m, n);
        }
        throw ConfigError("unknown energy kind '" + e.kind + "'");
    }();
    if (e.gamma || e.beta) W = W.with_growth(e.gamma.value_or(W.gamma()), e.beta.value_or(W.beta()));
    return W;
}

CellOptions RunConfig::cell_options() const { return CellOptions{solver, vertical_layers}; }

FilmOptions RunConfig::film_options() const {
    FilmOptions f;
    f.N = N;
    f.cell.solver = solver;
    f.cell.vertical_layers = 1;
    f.quad = quad;
    f.quad.bisect_tol = bisect_tol;
    return f;
}

std::vector<Eigen::MatrixXd> RunConfig::probes(int cols) const {
    std::vector<Eigen::MatrixXd> out;
    for (const auto& F : F_probes) {
        if (F.rows() != m || F.cols() != cols)
            throw ConfigError("F probe is " + std::to_string(F.rows()) + "x" + std::to_string(F.cols()) +
                              ", this command needs " + std::to_string(m) + "x" + std::to_string(cols));
        out.push_back(F);
    }
    std::mt19937_64 rng(random_F.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int k = 0; k < random_F.count; ++k) {
        Eigen::MatrixXd F(m, cols);
        for (int i = 0; i < F.size(); ++i) F(i) = random_F.scale * normal(rng);
        out.push_back(F);
    }
    return out;
}

RunConfig parse_config(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    RunConfig cfg;
    cfg.source = j;

    const json& prof = section(j, "profile");
    ProfileSpec& ps = cfg.profile_spec;
    ps.dim = get_or(prof, "dim", 2);
    if (prof.contains("file")) {
        ps.kind = "file";
        ps.path = prof.at("file").get<std::string>();
    } else if (get_or(prof, "constant", false)) {
        ps.kind = "constant";
        ps.name = "constant";
    } else {
        ps.name = get_or<std::string>(prof, "builtin", "sin2-product");
        ps.floor = get_or(prof, "floor", 0.5);
    }
    const Profile profile = cfg.profile();
    ps.dim = profile.dim();

    const json& en = section(j, "energy");
    EnergySpec& es = cfg.energy_spec;
    es.kind = get_or<std::string>(en, "kind", "p_norm_power");
    es.p = get_or(en, "p", 2.0);
    if (en.contains("gamma")) es.gamma = en.at("gamma").get<double>();
    if (en.contains("beta")) es.beta = en.at("beta").get<double>();
    if (en.contains("A")) {
        const Eigen::MatrixXd A = parse_matrix(en.at("A"), "energy.A");
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> R = A;
        es.A.assign(R.data(), R.data() + R.size());
    }
    if (!(es.p > 1.0)) throw ConfigError("energy.p must be > 1");
    if (es.gamma && es.beta && !(*es.gamma <= *es.beta)) throw ConfigError("energy needs gamma <= beta");

    const json& dims = section(j, "dims");
    cfg.m = get_or(dims, "m", 1);
    if (cfg.m < 1 || cfg.m > kMaxDim) throw ConfigError("dims.m must lie in [1, 3]");
    if (dims.contains("n") && dims.at("n").get<int>() != cfg.dim() + 1)
        throw ConfigError("dims.n must equal profile dim + 1 = " + std::to_string(cfg.dim() + 1));
    cfg.energy(); // validates the energy spec against the dimensions

    const json& grid = section(j, "grid");
    cfg.N = get_or(grid, "N", 64);
    cfg.vertical_layers = get_or(grid, "vertical_layers", 0);
    if (cfg.N < 2) throw ConfigError("grid.N must be at least 2");
    if (cfg.vertical_layers < 0) throw ConfigError("grid.vertical_layers must be >= 0");

    const json& sol = section(j, "solver");
    cfg.solver.method = parse_solver_method(get_or<std::string>(sol, "method", "auto"));
    cfg.solver.cg_tolerance = get_or(sol, "cg_tolerance", cfg.solver.cg_tolerance);
    cfg.solver.descent_tolerance = get_or(sol, "descent_tolerance", cfg.solver.descent_tolerance);
    cfg.solver.max_iterations = get_or(sol, "max_iterations", cfg.solver.max_iterations);
    cfg.solver.smoothing = get_or(sol, "smoothing", cfg.solver.smoothing);
    cfg.solver.history = get_or(sol, "history", cfg.solver.history);
    if (!(cfg.solver.cg_tolerance > 0.0) || !(cfg.solver.descent_tolerance > 0.0))
        throw ConfigError("solver tolerances must be positive");

    const json& sweep = section(j, "sweep");
    cfg.t_grid = parse_t_grid(sweep.contains("t") ? sweep.at("t") : json());
    for (double t : cfg.t_grid)
        if (!(std::abs(t) < 1.0)) throw ConfigError("sweep t values must satisfy |t| < 1");
    cfg.F_probes = parse_matrix_list(sweep.contains("F") ? sweep.at("F") : json(), "sweep.F");
    if (sweep.contains("random_F")) {
        const json& r = sweep.at("random_F");
        cfg.random_F.count = get_or(r, "count", 0);
        cfg.random_F.seed = get_or<std::uint64_t>(r, "seed", 1);
        cfg.random_F.scale = get_or(r, "scale", 1.0);
        if (cfg.random_F.count < 0) throw ConfigError("sweep.random_F.count must be >= 0");
    }

    const json& th = section(j, "thresholds");
    cfg.bisect_tol = get_or(th, "bisect_tol", 1e-6);
    cfg.confirm_kernels = get_or(th, "confirm", true);
    cfg.coercivity_floor = get_or(th, "coercivity_floor", 1e-3);
    if (!(cfg.bisect_tol > 0.0)) throw ConfigError("thresholds.bisect_tol must be positive");

    const json& q = section(j, "quadrature");
    cfg.quad.initial_nodes = get_or(q, "initial_nodes", cfg.quad.initial_nodes);
    cfg.quad.rel_tol = get_or(q, "rel_tol", cfg.quad.rel_tol);
    cfg.quad.abs_tol = get_or(q, "abs_tol", cfg.quad.abs_tol);
    cfg.quad.max_levels = get_or(q, "max_levels", cfg.quad.max_levels);
    cfg.quad.split_at_thresholds = get_or(q, "split_at_thresholds", cfg.quad.split_at_thresholds);

    const json& film = section(j, "film");
    cfg.film_Fbar = parse_matrix_list(film.contains("Fbar") ? film.at("Fbar") : json(), "film.Fbar");
    cfg.omega = get_or(film, "omega", std::vector<double>(std::size_t(cfg.dim()), 1.0));
    if (int(cfg.omega.size()) != cfg.dim()) throw ConfigError("film.omega needs one side length per in-plane axis");
    for (double L : cfg.omega)
        if (!(L > 0.0)) throw ConfigError("film.omega side lengths must be positive");

    const json& gm = section(j, "gamma");
    cfg.gamma.eps = get_or(gm, "eps", std::vector<double>{});
    cfg.gamma.delta_exponent = get_or(gm, "delta_exponent", 2.0);
    cfg.gamma.cells_per_delta = get_or(gm, "cells_per_delta", 8);
    cfg.gamma.transverse_cells = get_or(gm, "transverse_cells", 32);
    for (std::size_t i = 0; i < cfg.gamma.eps.size(); ++i) {
        if (!(cfg.gamma.eps[i] > 0.0)) throw ConfigError("gamma.eps values must be positive");
        if (i > 0 && !(cfg.gamma.eps[i] < cfg.gamma.eps[i - 1])) throw ConfigError("gamma.eps schedule must be decreasing");
    }

    cfg.cube_T = get_or(section(j, "oracle"), "cube_T", 2);
    if (cfg.cube_T < 1) throw ConfigError("oracle.cube_T must be >= 1");

    const json& out = section(j, "output");
    cfg.write_csv = get_or(out, "csv", true);
    cfg.write_json = get_or(out, "json", true);
    cfg.save_profile = get_or(out, "save_profile", false);
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    // Relative profile paths resolve against the config's directory.
    json resolved = j;
    if (j.is_object() && j.contains("profile") && j["profile"].is_object() && j["profile"].contains("file") &&
        j["profile"]["file"].is_string()) {
        const std::filesystem::path file = j["profile"]["file"].get<std::string>();
        if (file.is_relative() && std::filesystem::exists(path.parent_path() / file))
            resolved["profile"]["file"] = (path.parent_path() / file).string();
    }
    RunConfig cfg = parse_config(resolved);
    cfg.source = j;
    return cfg;
}

} // namespace filmhom::cli
