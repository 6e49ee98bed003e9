#include "filmhom/cli.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

namespace filmhom::cli {

using nlohmann::json;

namespace {

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream out;
    out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return out.str();
}

std::string preamble(const std::string& command, const RunConfig& cfg, const RunContext& ctx) {
    std::string s = "filmhom " + command + " config_hash=" + config_hash(cfg.source) + " N=" + std::to_string(cfg.N);
    if (!ctx.reproducible) s += " generated=" + utc_timestamp();
    return s;
}

json meta(const std::string& command, const RunConfig& cfg, const RunContext& ctx) {
    json m = {
        {"command", command},
        {"config_hash", config_hash(cfg.source)},
        {"N", cfg.N},
        {"vertical_layers", cfg.vertical_layers},
        {"m", cfg.m},
        {"dim", cfg.dim()},
        {"profile", cfg.profile_spec.kind == "builtin" ? cfg.profile_spec.name : cfg.profile_spec.kind},
        {"tolerances",
         {{"cg", cfg.solver.cg_tolerance},
          {"descent", cfg.solver.descent_tolerance},
          {"smoothing", cfg.solver.smoothing},
          {"bisect", cfg.bisect_tol},
          {"quadrature_rel", cfg.quad.rel_tol},
          {"quadrature_abs", cfg.quad.abs_tol}}},
        {"reproducible", ctx.reproducible},
    };
    if (!ctx.reproducible) m["generated"] = utc_timestamp();
    return m;
}

std::vector<std::string> matrix_header(const std::string& prefix, int rows, int cols) {
    std::vector<std::string> h;
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) h.push_back(prefix + std::to_string(i + 1) + std::to_string(j + 1));
    return h;
}

void append_matrix(std::vector<std::string>& row, const Eigen::MatrixXd& F) {
    for (int i = 0; i < F.rows(); ++i)
        for (int j = 0; j < F.cols(); ++j) row.push_back(format_real(F(i, j)));
}

json matrix_json(const Eigen::MatrixXd& F) {
    json rows = json::array();
    for (int i = 0; i < F.rows(); ++i) {
        json r = json::array();
        for (int j = 0; j < F.cols(); ++j) r.push_back(F(i, j));
        rows.push_back(r);
    }
    return rows;
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

void prepare_out(const RunContext& ctx) {
    std::error_code ec;
    std::filesystem::create_directories(ctx.out_dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + ctx.out_dir.string() + ": " + ec.message());
}

void emit(const std::string& name, const CsvTable& table, const json& report, const RunConfig& cfg,
          const RunContext& ctx, const std::string& command) {
    if (cfg.write_csv) write_csv(ctx.out_dir / (name + ".csv"), table, preamble(command, cfg, ctx));
    if (cfg.write_json && !report.is_null()) write_json(ctx.out_dir / (name + ".json"), report);
}

std::vector<double> t_grid_or(const RunConfig& cfg, std::vector<double> fallback) {
    return cfg.t_grid.empty() ? fallback : cfg.t_grid;
}

/// Sweep over the product of t values and probes.
struct SweepTask {
    std::size_t t_index;
    std::size_t F_index;
};

std::vector<SweepTask> sweep_tasks(std::size_t nt, std::size_t nF) {
    std::vector<SweepTask> tasks;
    for (std::size_t f = 0; f < nF; ++f)
        for (std::size_t i = 0; i < nt; ++i) tasks.push_back({i, f});
    return tasks;
}

/// phi, psi and w_hom are non-increasing as |t| grows (E_t shrinks).
bool monotone_in_t(const std::vector<double>& t, const std::vector<double>& values, double tol) {
    std::vector<std::size_t> order(t.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return std::abs(t[a]) < std::abs(t[b]); });
    for (std::size_t k = 1; k < order.size(); ++k)
        if (values[order[k]] > values[order[k - 1]] + tol * (1.0 + std::abs(values[order[k - 1]]))) return false;
    return true;
}

struct SweepOutcome {
    std::vector<HomogenizedSample> samples;
    std::vector<double> oracle; // NaN when not requested
};

int finish_sweep(const std::string& command, const RunConfig& cfg, const RunContext& ctx,
                 const std::vector<double>& ts, const std::vector<Eigen::MatrixXd>& probes,
                 const std::vector<SweepTask>& tasks, const SweepOutcome& outcome, const std::string& oracle_name) {
    const int rows = cfg.m, cols = int(probes.front().cols());
    CsvTable table;
    table.header = {"t"};
    for (auto& h : matrix_header("F", rows, cols)) table.header.push_back(h);
    for (const char* h : {"value", "theta", "converged", "iterations", "N"}) table.header.push_back(h);
    const bool with_oracle = !oracle_name.empty();
    if (with_oracle) {
        table.header.push_back(oracle_name);
        table.header.push_back("oracle_diff");
    }

    bool all_converged = true;
    double max_residual = 0.0, max_discrepancy = 0.0;
    std::map<std::size_t, std::pair<std::vector<double>, std::vector<double>>> by_probe;
    for (std::size_t k = 0; k < tasks.size(); ++k) {
        const HomogenizedSample& s = outcome.samples[k];
        std::vector<std::string> row{format_real(s.t)};
        append_matrix(row, s.F);
        row.push_back(format_real(s.value));
        row.push_back(format_real(s.theta));
        row.push_back(s.report.converged ? "1" : "0");
        row.push_back(std::to_string(s.report.iterations));
        row.push_back(std::to_string(s.N));
        if (with_oracle) {
            const double diff = std::abs(outcome.oracle[k] - s.value);
            row.push_back(format_real(outcome.oracle[k]));
            row.push_back(format_real(diff));
            max_discrepancy = std::max(max_discrepancy, diff);
        }
        table.rows.push_back(std::move(row));
        all_converged = all_converged && s.report.converged;
        max_residual = std::max(max_residual, s.report.residual);
        by_probe[tasks[k].F_index].first.push_back(s.t);
        by_probe[tasks[k].F_index].second.push_back(s.value);
    }

    bool monotone = true;
    json per_probe = json::array();
    for (const auto& [f, tv] : by_probe) {
        const bool ok = monotone_in_t(tv.first, tv.second, 1e-8);
        monotone = monotone && ok;
        per_probe.push_back({{"F", matrix_json(probes[f])}, {"monotone_in_t", ok}});
    }
    json report = {
        {"meta", meta(command, cfg, ctx)},
        {"t", ts},
        {"samples", tasks.size()},
        {"monotone_in_t", monotone},
        {"probes", per_probe},
        {"all_converged", all_converged},
        {"max_residual", max_residual},
    };
    if (with_oracle) report["max_oracle_discrepancy"] = max_discrepancy;
    if (cfg.write_csv) write_csv(ctx.out_dir / (command + ".csv"), table, preamble(command, cfg, ctx));
    if (cfg.write_json) write_json(ctx.out_dir / (command + "_summary.json"), report);
    if (!all_converged) {
        std::cerr << "filmhom " << command << ": some cell solves did not converge\n";
        return kNonConvergence;
    }
    return kSuccess;
}

} // namespace

int cmd_mask(const RunConfig& cfg, const RunContext& ctx) {
    prepare_out(ctx);
    const Profile profile = cfg.profile();
    const std::vector<double> ts = t_grid_or(cfg, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9});
    if (cfg.save_profile) {
        std::ofstream out(ctx.out_dir / "profile.txt");
        write_sampled_profile(out, profile, cfg.N);
    }

    std::vector<CellMask> masks(ts.size());
    std::vector<TorusComponents> comps(ts.size());
    parallel_for(ts.size(), ctx.jobs, [&](std::size_t i) {
        masks[i] = superlevel_mask(profile, ts[i], cfg.N);
        comps[i] = torus_components(masks[i]);
    });

    std::filesystem::create_directories(ctx.out_dir / "masks");
    CsvTable table;
    table.header = {"t", "theta", "components", "wrap_rank", "N"};
    json entries = json::array();
    for (std::size_t i = 0; i < ts.size(); ++i) {
        table.rows.push_back({format_real(ts[i]), format_real(masks[i].area_fraction), std::to_string(comps[i].count),
                              std::to_string(comps[i].rank), std::to_string(cfg.N)});
        json lattice = json::array();
        for (const auto& z : comps[i].wrap_lattice) lattice.push_back(std::vector<int>(z.data(), z.data() + z.size()));
        entries.push_back({{"t", ts[i]},
                           {"theta", masks[i].area_fraction},
                           {"components", comps[i].count},
                           {"wrap_rank", comps[i].rank},
                           {"wrap_lattice", lattice}});

        // One text row per line of axis 1, axis 0 along the row.
        std::ostringstream name;
        name << "mask_" << std::setw(3) << std::setfill('0') << i << ".txt";
        std::ofstream out(ctx.out_dir / "masks" / name.str(), std::ios::binary);
        const CellMask& mk = masks[i];
        const int lines = mk.dim == 2 ? mk.resolution : 1;
        for (int r = 0; r < lines; ++r) {
            for (int c = 0; c < mk.resolution; ++c) out << (mk(c, r) ? '1' : '0');
            out << '\n';
        }
    }
    emit("mask", table, {{"meta", meta("mask", cfg, ctx)}, {"entries", entries}}, cfg, ctx, "mask");
    return kSuccess;
}

int cmd_phi(const RunConfig& cfg, const RunContext& ctx) {
    prepare_out(ctx);
    const Profile profile = cfg.profile();
    const std::vector<double> ts = t_grid_or(cfg, {0.3});
    const auto probes = cfg.probes(cfg.dim());
    if (probes.empty()) throw ConfigError("phi needs F probes (sweep.F or sweep.random_F)");
    const auto tasks = sweep_tasks(ts.size(), probes.size());
    SweepOutcome outcome;
    outcome.samples.resize(tasks.size());
    parallel_for(tasks.size(), ctx.jobs, [&](std::size_t k) {
        outcome.samples[k] =
            phi_sharp(profile, ts[tasks[k].t_index], probes[tasks[k].F_index], cfg.N, cfg.energy_spec.p, cfg.cell_options());
    });
    return finish_sweep("phi", cfg, ctx, ts, probes, tasks, outcome, "");
}

int cmd_psi(const RunConfig& cfg, const RunContext& ctx) {
    prepare_out(ctx);
    const Profile profile = cfg.profile();
    const std::vector<double> ts = t_grid_or(cfg, {0.3});
    const auto probes = cfg.probes(cfg.dim() + 1);
    if (probes.empty()) throw ConfigError("psi needs F probes (sweep.F or sweep.random_F)");
    const auto tasks = sweep_tasks(ts.size(), probes.size());
    SweepOutcome outcome;
    outcome.samples.resize(tasks.size());
    outcome.oracle.assign(tasks.size(), std::nan(""));
    bool oracle_converged = true;
    std::vector<std::uint8_t> oracle_ok(tasks.size(), 1);
    parallel_for(tasks.size(), ctx.jobs, [&](std::size_t k) {
        const double t = ts[tasks[k].t_index];
        const auto& F = probes[tasks[k].F_index];
        outcome.samples[k] = psi(profile, t, F, cfg.N, cfg.energy_spec.p, cfg.cell_options());
        if (ctx.oracle) {
            const HomogenizedSample o = psi_cylinder_oracle(profile, t, F, cfg.N, cfg.energy_spec.p, cfg.cell_options());
            outcome.oracle[k] = o.value;
            oracle_ok[k] = o.report.converged;
        }
    });
    for (auto ok : oracle_ok) oracle_converged = oracle_converged && ok;
    const int code = finish_sweep("psi", cfg, ctx, ts, probes, tasks, outcome, ctx.oracle ? "psi_cylinder" : "");
    if (code == kSuccess && !oracle_converged) {
        std::cerr << "filmhom psi: some cylinder oracle solves did not converge\n";
        return kNonConvergence;
    }
    return code;
}

int cmd_whom(const RunConfig& cfg, const RunContext& ctx) {
    prepare_out(ctx);
    const Profile profile = cfg.profile();
    const EnergyDensity W = cfg.energy();
    const std::vector<double> ts = t_grid_or(cfg, {0.3});
    const auto probes = cfg.probes(cfg.dim() + 1);
    if (probes.empty()) throw ConfigError("whom needs F probes (sweep.F or sweep.random_F)");
    const auto tasks = sweep_tasks(ts.size(), probes.size());
    SweepOutcome outcome;
    outcome.samples.resize(tasks.size());
    outcome.oracle.assign(tasks.size(), std::nan(""));
    std::vector<std::uint8_t> oracle_ok(tasks.size(), 1);
    parallel_for(tasks.size(), ctx.jobs, [&](std::size_t k) {
        const double t = ts[tasks[k].t_index];
        const auto& F = probes[tasks[k].F_index];
        outcome.samples[k] = w_hom(profile, t, F, W, cfg.N, cfg.cell_options());
        if (ctx.oracle) {
            const DirichletSolution o = w_hom_cube_oracle(profile, t, F, W, cfg.cube_T, cfg.N, cfg.solver);
            outcome.oracle[k] = o.value;
            oracle_ok[k] = o.report.converged;
        }
    });
    const int code = finish_sweep("whom", cfg, ctx, ts, probes, tasks, outcome,
                                  ctx.oracle ? "cube_T" + std::to_string(cfg.cube_T) : "");
    for (auto ok : oracle_ok)
        if (code == kSuccess && !ok) {
            std::cerr << "filmhom whom: some growing-cube solves did not converge\n";
            return kNonConvergence;
        }
    return code;
}

int cmd_thresholds(const RunConfig& cfg, const RunContext& ctx) {
    prepare_out(ctx);
    const Profile profile = cfg.profile();
    KernelOptions kopts;
    kopts.p = cfg.energy_spec.p;
    kopts.m = cfg.m;
    kopts.confirm = cfg.confirm_kernels;
    kopts.coercivity_floor = cfg.coercivity_floor;
    kopts.cell = cfg.cell_options();
    const ThresholdReport report = thresholds(profile, cfg.N, cfg.bisect_tol, kopts);

    CsvTable table;
    table.header = {"lo", "hi", "k", "kernel_dim", "wrap_rank", "confirmed"};
    json intervals = json::array();
    for (const auto& iv : report.intervals) {
        table.rows.push_back({format_real(iv.lo), format_real(iv.hi), std::to_string(iv.k), std::to_string(iv.kernel_dim),
                              std::to_string(iv.wrap_rank), iv.confirmed ? "1" : "0"});
        json xi = json::array();
        for (const auto& v : iv.xi) xi.push_back(vector_json(v));
        intervals.push_back({{"lo", iv.lo},
                             {"hi", iv.hi},
                             {"k", iv.k},
                             {"kernel_dim", iv.kernel_dim},
                             {"wrap_rank", iv.wrap_rank},
                             {"xi", xi},
                             {"confirmed", iv.confirmed}});
    }
    json j = {{"meta", meta("thresholds", cfg, ctx)},
              {"t", report.thresholds},
              {"dim", report.dim},
              {"m", report.m},
              {"bisect_tol", report.bisect_tol},
              {"intervals", intervals}};
    emit("thresholds", table, j, cfg, ctx, "thresholds");
    return kSuccess;
}

int cmd_film(const RunConfig& cfg, const RunContext& ctx) {
    prepare_out(ctx);
    const Profile profile = cfg.profile();
    const EnergyDensity W = cfg.energy();
    validate_film_inputs(profile, W);
    if (cfg.film_Fbar.empty()) throw ConfigError("film needs film.Fbar probes");
    for (const auto& F : cfg.film_Fbar)
        if (F.rows() != cfg.m || F.cols() != cfg.dim())
            throw ConfigError("film.Fbar probes must be " + std::to_string(cfg.m) + "x" + std::to_string(cfg.dim()));
    const FilmOptions fopts = cfg.film_options();

    std::vector<FilmDensityEntry> entries(cfg.film_Fbar.size());
    parallel_for(entries.size(), ctx.jobs, [&](std::size_t i) {
        try {
            entries[i] = w_bar(profile, W, cfg.film_Fbar[i], fopts);
        } catch (const QuadratureError& e) {
            entries[i] = e.best;
        }
    });

    CsvTable table;
    table.header = matrix_header("Fbar", cfg.m, cfg.dim());
    for (const char* h : {"value", "membrane_min", "levels", "nodes", "converged", "N"}) table.header.push_back(h);
    CsvTable nodes;
    nodes.header = {"probe", "t", "weight", "w_tilde"};
    for (int r = 0; r < cfg.m; ++r) nodes.header.push_back("argmin" + std::to_string(r + 1));

    bool all_converged = true;
    json jentries = json::array();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const FilmDensityEntry& e = entries[i];
        const double membrane = membrane_min_value(cfg.omega, e.value);
        std::vector<std::string> row;
        append_matrix(row, e.Fbar);
        row.push_back(format_real(e.value));
        row.push_back(format_real(membrane));
        row.push_back(std::to_string(e.levels));
        row.push_back(std::to_string(e.nodes.size()));
        row.push_back(e.converged ? "1" : "0");
        row.push_back(std::to_string(cfg.N));
        table.rows.push_back(std::move(row));
        all_converged = all_converged && e.converged;

        json argmins = json::array();
        for (std::size_t k = 0; k < e.nodes.size(); ++k) {
            std::vector<std::string> nrow{std::to_string(i), format_real(e.nodes[k]), format_real(e.weights[k]),
                                          format_real(e.samples[k])};
            for (int r = 0; r < e.argmins[k].size(); ++r) nrow.push_back(format_real(e.argmins[k][r]));
            nodes.rows.push_back(std::move(nrow));
            argmins.push_back(vector_json(e.argmins[k]));
        }
        jentries.push_back({{"Fbar", matrix_json(e.Fbar)},
                            {"value", e.value},
                            {"membrane_min", membrane},
                            {"breakpoints", e.breakpoints},
                            {"nodes", e.nodes},
                            {"weights", e.weights},
                            {"samples", e.samples},
                            {"argmins", argmins},
                            {"levels", e.levels},
                            {"history", e.history},
                            {"converged", e.converged}});
    }
    json j = {{"meta", meta("film", cfg, ctx)},
              {"omega", cfg.omega},
              {"quadrature",
               {{"initial_nodes", cfg.quad.initial_nodes},
                {"rel_tol", cfg.quad.rel_tol},
                {"abs_tol", cfg.quad.abs_tol},
                {"max_levels", cfg.quad.max_levels},
                {"split_at_thresholds", cfg.quad.split_at_thresholds}}},
              {"entries", jentries}};
    emit("film", table, j, cfg, ctx, "film");
    if (cfg.write_csv) write_csv(ctx.out_dir / "film_nodes.csv", nodes, preamble("film", cfg, ctx));
    if (!all_converged) {
        std::cerr << "filmhom film: t-quadrature did not converge for some probes (best estimates written)\n";
        return kNonConvergence;
    }
    return kSuccess;
}

int cmd_gamma(const RunConfig& cfg, const RunContext& ctx) {
    prepare_out(ctx);
    const Profile profile = cfg.profile();
    const EnergyDensity W = cfg.energy();
    validate_film_inputs(profile, W);
    if (cfg.film_Fbar.size() != 1) throw ConfigError("gamma needs exactly one boundary gradient in film.Fbar");
    if (cfg.gamma.eps.empty()) throw ConfigError("gamma needs a non-empty gamma.eps schedule");
    const Eigen::MatrixXd& Fbar = cfg.film_Fbar.front();
    if (Fbar.rows() != cfg.m || Fbar.cols() != cfg.dim())
        throw ConfigError("film.Fbar must be " + std::to_string(cfg.m) + "x" + std::to_string(cfg.dim()));

    GammaOptions gopts;
    gopts.grid.omega = cfg.omega;
    gopts.grid.cells_per_delta = cfg.gamma.cells_per_delta;
    gopts.grid.transverse_cells = cfg.gamma.transverse_cells;
    gopts.delta_exponent = cfg.gamma.delta_exponent;
    gopts.film = cfg.film_options();
    gopts.solver = cfg.solver;
    const GammaCheckReport report = gamma_check(profile, W, BoundaryDatum::linear(Fbar), cfg.gamma.eps, gopts);

    CsvTable table;
    table.header = {"eps", "delta", "minimum", "scaled", "target", "gap", "converged", "iterations"};
    json jentries = json::array();
    bool all_converged = true;
    for (const auto& e : report.entries) {
        table.rows.push_back({format_real(e.eps), format_real(e.delta), format_real(e.minimum), format_real(e.scaled),
                              format_real(report.target), format_real(e.gap), e.report.converged ? "1" : "0",
                              std::to_string(e.report.iterations)});
        jentries.push_back({{"eps", e.eps},
                            {"delta", e.delta},
                            {"minimum", e.minimum},
                            {"scaled", e.scaled},
                            {"gap", e.gap},
                            {"converged", e.report.converged},
                            {"iterations", e.report.iterations}});
        all_converged = all_converged && e.report.converged;
    }
    json j = {{"meta", meta("gamma", cfg, ctx)},
              {"target", report.target},
              {"w_bar", report.w_bar},
              {"omega", cfg.omega},
              {"delta_exponent", cfg.gamma.delta_exponent},
              {"cells_per_delta", cfg.gamma.cells_per_delta},
              {"transverse_cells", cfg.gamma.transverse_cells},
              {"entries", jentries},
              {"trend_nonincreasing", report.trend_nonincreasing},
              {"aborted", report.aborted},
              {"error", report.error}};
    emit("gamma", table, j, cfg, ctx, "gamma");
    if (report.aborted) {
        std::cerr << "filmhom gamma: " << report.error << " (partial report written)\n";
        return kResolutionError;
    }
    if (!all_converged) {
        std::cerr << "filmhom gamma: some direct minimizations did not converge\n";
        return kNonConvergence;
    }
    return kSuccess;
}

int run(const std::vector<std::string>& args) {
    CLI::App app{"Homogenized densities for thin films with oscillating profiles"};
    app.require_subcommand(1);
    std::string config_path;
    RunContext ctx;
    std::string out_dir = ".";
    app.add_option("--config", config_path, "JSON run configuration")->required();
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--jobs", ctx.jobs, "Worker threads")->check(CLI::PositiveNumber);
    app.add_flag("--reproducible", ctx.reproducible, "Omit timestamps from outputs");
    app.add_flag("--oracle", ctx.oracle, "Also run the independent oracle solves");
    app.fallthrough();

    const std::map<std::string, std::pair<std::string, int (*)(const RunConfig&, const RunContext&)>> commands = {
        {"mask", {"Superlevel masks, area fractions and wrap reports", cmd_mask}},
        {"phi", {"In-plane cell formula over (t, Fbar) probes", cmd_phi}},
        {"psi", {"Cylinder density psi over (t, F) probes", cmd_psi}},
        {"thresholds", {"Degeneracy thresholds and kernels", cmd_thresholds}},
        {"whom", {"Cylinder cell formula for the configured energy", cmd_whom}},
        {"film", {"Thin-film density table", cmd_film}},
        {"gamma", {"Convergence check of scaled film minima", cmd_gamma}},
    };
    for (const auto& [name, entry] : commands) app.add_subcommand(name, entry.first);

    std::vector<std::string> argv_store{"filmhom"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_store) argv.push_back(a.data());
    try {
        app.parse(int(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kSuccess : kConfigError;
    }

    const std::string name = app.get_subcommands().front()->get_name();
    ctx.out_dir = out_dir;
    try {
        const RunConfig cfg = load_config(config_path);
        return commands.at(name).second(cfg, ctx);
    } catch (const ConfigError& e) {
        std::cerr << "filmhom " << name << ": config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const ResolutionError& e) {
        std::cerr << "filmhom " << name << ": resolution error: " << e.what() << '\n';
        return kResolutionError;
    } catch (const StructuralInconsistency& e) {
        std::cerr << "filmhom " << name << ": structural inconsistency: " << e.what() << '\n';
        return kStructuralInconsistency;
    } catch (const ConvergenceError& e) {
        std::cerr << "filmhom " << name << ": non-convergence: " << e.what() << '\n';
        return kNonConvergence;
    } catch (const std::invalid_argument& e) {
        std::cerr << "filmhom " << name << ": config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "filmhom " << name << ": config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "filmhom " << name << ": I/O error: " << e.what() << '\n';
        return kConfigError;
    }
}

} // namespace filmhom::cli
