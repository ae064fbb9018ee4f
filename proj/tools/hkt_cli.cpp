#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <string>
#include <vector>

#include "../tests/acceptance/criteria.hpp"
#include "hkt/collocation.hpp"
#include "hkt/diagrams.hpp"
#include "hkt/errors.hpp"
#include "hkt/fokker_planck.hpp"
#include "hkt/grid.hpp"
#include "hkt/hybrid.hpp"
#include "hkt/io.hpp"

namespace fs = std::filesystem;
using namespace hkt;

namespace {

enum Exit { ok = 0, usage = 1, numerical = 2, validation = 3 };

struct Common {
    std::string config;
    std::uint64_t seed = 0;
    std::string out;
    std::vector<std::string> sets;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config, "JSON run configuration");
    sub->add_option("--seed", c.seed, "master seed (overrides config)");
    sub->add_option("--out", c.out, "output directory (overrides config)");
    sub->add_option("--set", c.sets, "override a config field, key=value");
}

RunConfig resolve(const Common& c, const CLI::App* sub) {
    RunConfig cfg = c.config.empty() ? RunConfig{} : load_run_config(c.config);
    if (!c.sets.empty()) {
        auto j = nlohmann::json::parse(dump_run_config(cfg));
        for (const auto& kv : c.sets) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw ConfigError("--set: expected key=value, got '" + kv + "'");
            const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
            auto parsed = nlohmann::json::parse(value, nullptr, false);
            j[key] = parsed.is_discarded() ? nlohmann::json(value) : parsed;
        }
        cfg = parse_run_config(j.dump());
    }
    if (sub->count("--seed")) cfg.seed = c.seed;
    if (sub->count("--out")) cfg.out_dir = c.out;
    cfg.validate();
    fs::create_directories(cfg.out_dir);
    return cfg;
}

std::ofstream open_out(const RunConfig& cfg, const std::string& name) {
    std::ofstream os(fs::path(cfg.out_dir) / name);
    if (!os) throw ConfigError("out_dir: cannot write " + (fs::path(cfg.out_dir) / name).string());
    return os;
}

GridDistribution start(const RunConfig& cfg) {
    return initial_condition(VelocityGrid(cfg.n_x, cfg.n_y, cfg.model.epsilon));
}

int fp_solve(const RunConfig& cfg) {
    FpRunLog log;
    const GridDistribution g = evolve_fp(start(cfg), cfg.model, cfg.solver, cfg.horizon, &log);
    auto d = open_out(cfg, "density.csv");
    write_csv(d, g);
    auto l = open_out(cfg, "fp_log.csv");
    log.write_csv(l);
    std::printf("fp-solve: t=%g steps=%zu mass=%.15g min=%.3e\n", cfg.horizon, log.rows.size(), g.mass(),
                g.min_value());
    return ok;
}

int hybrid(const RunConfig& cfg) {
    const HybridState s =
        evolve_hybrid(start(cfg), cfg.theta, cfg.model, cfg.solver, cfg.hybrid, cfg.horizon, cfg.seed);
    auto d = open_out(cfg, "density.csv");
    write_csv(d, s.dist);
    auto m = open_out(cfg, "moments.csv");
    write_moment_log(m, s.moment_log);
    const MomentSet mm = moments(s.dist);
    std::printf("hybrid: theta=%g steps=%zu u_x=%.6f u_y=%.6f\n", cfg.theta, s.steps, mm.u_x, mm.u_y);
    return ok;
}

int uq(const RunConfig& cfg) {
    const auto sol =
        run_ensemble(start(cfg), cfg.model, cfg.solver, cfg.hybrid, gauss_legendre(cfg.m), cfg.horizon, cfg.seed);
    auto e = open_out(cfg, "expected.csv");
    write_csv(e, expected_distribution(sol));
    const VarianceField var = theta_variance_distribution(sol);
    auto v = open_out(cfg, "variance.csv");
    write_csv(v, var.values);
    std::vector<UqRow> rows;
    for (MomentKind k : {MomentKind::u_x, MomentKind::u_y, MomentKind::E_x, MomentKind::E_y}) {
        rows.push_back({cfg.m, "mean_" + to_string(k), expected_moment(sol, k)});
        rows.push_back({cfg.m, "var_" + to_string(k), theta_variance_moment(sol, k)});
    }
    auto u = open_out(cfg, "uq.csv");
    write_uq_csv(u, rows);
    std::printf("uq: m=%zu floor_correction=%.3e\n", cfg.m, var.floor_correction);
    return ok;
}

int diagram(const RunConfig& cfg) {
    SweepSetup s;
    s.n_x = cfg.n_x;
    s.n_y = cfg.n_y;
    s.horizon = cfg.horizon;
    s.seed = cfg.seed;
    s.solver = cfg.solver;
    s.hybrid = cfg.hybrid;
    s.quad = gauss_legendre(cfg.m);
    const auto pts = diagram_sweep(cfg.rho_grid, cfg.model, s);
    auto d = open_out(cfg, "diagram.csv");
    write_diagram_csv(d, pts);
    auto a = open_out(cfg, "analytic.csv");
    a << "rho,uy_bar,Ey_bar,var_Ey,halfwidth\n";
    for (double rho : cfg.rho_grid) {
        const auto y = analytic_y_diagram(rho, cfg.model);
        char buf[160];
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", rho, y.uy_bar, y.Ey_bar, y.var_Ey,
                      y.halfwidth);
        a << buf;
    }
    std::vector<AggregatedSample> empirical;
    if (!cfg.trajectories.empty())
        empirical = ingest_trajectories(cfg.trajectories, {cfg.dt_window, cfg.dx_window, cfg.lane_count, cfg.road_length});
    auto ys = open_out(cfg, "y_diagram.svg");
    y_diagram_plot(pts, empirical).write(ys);
    auto xs = open_out(cfg, "x_diagram.svg");
    x_diagram_plot(pts, empirical).write(xs);
    std::size_t unsettled = 0;
    for (const auto& p : pts) unsettled += !p.equilibrated;
    std::printf("diagram: %zu points, %zu not equilibrated\n", pts.size(), unsettled);
    return ok;
}

int ingest(const RunConfig& cfg, const std::string& input) {
    const std::string path = input.empty() ? cfg.trajectories : input;
    if (path.empty()) throw ConfigError("trajectories: no input file given");
    const auto samples = ingest_trajectories(path, {cfg.dt_window, cfg.dx_window, cfg.lane_count, cfg.road_length});
    auto o = open_out(cfg, "aggregated.csv");
    write_aggregated_csv(o, samples);
    std::printf("ingest: %zu samples\n", samples.size());
    return ok;
}

int validate(const RunConfig& cfg, const std::vector<int>& ids) {
    std::vector<int> run = ids;
    if (run.empty())
        for (int k = 1; k <= 9; ++k) run.push_back(k);
    auto o = open_out(cfg, "validate.txt");
    bool all = true;
    for (int id : run) {
        if (id < 1 || id > 9) throw ConfigError("criteria: ids must lie in 1..9");
        const auto r = acceptance::run_timed(id, cfg.seed);
        const std::string line = acceptance::format_line(r);
        std::printf("%s\n", line.c_str());
        std::fflush(stdout);
        o << line << "\n";
        all = all && r.pass;
    }
    return all ? ok : validation;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hybrid stochastic kinetic traffic model"};
    app.require_subcommand(1);
    Common c;
    std::string input;
    std::vector<int> ids;
    auto* fp = app.add_subcommand("fp-solve", "single Fokker-Planck run");
    auto* hy = app.add_subcommand("hybrid", "single-theta hybrid run");
    auto* uqc = app.add_subcommand("uq", "collocation ensemble with expected and variance fields");
    auto* dg = app.add_subcommand("diagram", "density sweep with analytic overlay");
    auto* in = app.add_subcommand("ingest", "trajectory aggregation");
    auto* va = app.add_subcommand("validate", "acceptance suite");
    for (auto* s : {fp, hy, uqc, dg, in, va}) add_common(s, c);
    in->add_option("--input", input, "trajectory CSV (overrides config)");
    va->add_option("--criteria", ids, "subset of criteria to run")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return usage;
    }

    try {
        CLI::App* sub = app.get_subcommands().front();
        const RunConfig cfg = resolve(c, sub);
        if (sub == fp) return fp_solve(cfg);
        if (sub == hy) return hybrid(cfg);
        if (sub == uqc) return uq(cfg);
        if (sub == dg) return diagram(cfg);
        if (sub == in) return ingest(cfg, input);
        return validate(cfg, ids);
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return numerical;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "invalid configuration: %s\n", e.what());
        return validation;
    } catch (const DomainError& e) {
        std::fprintf(stderr, "invalid input: %s\n", e.what());
        return validation;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return validation;
    }
}
