#include "hkt/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "hkt/errors.hpp"

namespace hkt {

namespace {

using json = nlohmann::json;

template <class T>
void read_field(const json& j, const char* key, T& out) {
    auto it = j.find(key);
    if (it == j.end()) return;
    try {
        out = it->template get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string(key) + ": wrong type");
    }
}

template <class Parse, class T>
void read_enum(const json& j, const char* key, T& out, Parse parse) {
    std::string s;
    read_field(j, key, s);
    if (!s.empty()) out = parse(s);
}

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "alpha",       "delta",      "dv_jump",   "kappa",          "sigma2",      "epsilon",   "beta_mode",
        "beta0",       "vbar_d",     "lambda",    "rho",            "wx_mode",     "target_mode", "flux_variant",
        "stepper",     "dt_policy",  "dt_value",  "steady_tol",     "t_max",       "n_particles", "y_path",
        "p_interact",  "log_every",  "noise_law", "noise_variance", "n_x",         "n_y",       "m",
        "horizon",     "seed",       "out_dir",   "rho_grid",       "theta",       "trajectories", "dt_window",
        "dx_window",   "lane_count", "road_length"};
    return keys;
}

NoiseLaw parse_noise_law(const std::string& s) {
    if (s == "two-point") return NoiseLaw::two_point;
    if (s == "uniform") return NoiseLaw::uniform;
    throw ConfigError("noise_law: unknown value '" + s + "'");
}

}  // namespace

void RunConfig::validate() const {
    model.validate();
    solver.validate();
    if (n_x == 0) throw ConfigError("n_x: must be >= 1");
    if (n_y == 0) throw ConfigError("n_y: must be >= 1");
    if (m == 0) throw ConfigError("m: must be >= 1");
    if (!(horizon > 0.0)) throw ConfigError("horizon: must be > 0");
    if (hybrid.n_particles == 0) throw ConfigError("n_particles: must be >= 1");
    if (!(hybrid.p_interact >= 0.0 && hybrid.p_interact <= 1.0))
        throw ConfigError("p_interact: mu rho dtau must lie in [0,1]");
    if (std::abs(theta) > 1.0) throw ConfigError("theta: must lie in [-1,1]");
    for (double r : rho_grid)
        if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("rho_grid: entries must lie in [0,1]");
    if (model.beta_mode == BetaMode::linear_in_ux && model.beta0 > 1.0)
        throw ConfigError("beta0: beta0 * u_x must stay in [0,1]");
    if (model.wx_mode == ReferenceMode::binary && model.target_mode == TargetMode::mean_speed)
        throw ConfigError("target_mode: mean-speed targets require wx_mode = mean-field");
    if (!(dt_window > 0.0)) throw ConfigError("dt_window: must be > 0");
    if (!(dx_window > 0.0)) throw ConfigError("dx_window: must be > 0");
    if (lane_count == 0) throw ConfigError("lane_count: must be >= 1");
    if (!(road_length > 0.0)) throw ConfigError("road_length: must be > 0");
}

RunConfig parse_run_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: malformed JSON (") + e.what() + ")");
    }
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known_keys().count(it.key())) throw ConfigError(it.key() + ": unknown configuration key");

    RunConfig c;
    auto& p = c.model;
    read_field(j, "alpha", p.alpha);
    read_field(j, "delta", p.delta);
    read_field(j, "dv_jump", p.dv_jump);
    read_field(j, "kappa", p.kappa);
    read_field(j, "sigma2", p.sigma2);
    read_field(j, "epsilon", p.epsilon);
    read_enum(j, "beta_mode", p.beta_mode, parse_beta_mode);
    read_field(j, "beta0", p.beta0);
    read_field(j, "vbar_d", p.vbar_d);
    read_field(j, "lambda", p.lambda);
    read_field(j, "rho", p.rho);
    read_enum(j, "wx_mode", p.wx_mode, parse_reference_mode);
    read_enum(j, "target_mode", p.target_mode, parse_target_mode);

    auto& s = c.solver;
    read_enum(j, "flux_variant", s.flux, parse_flux_variant);
    read_enum(j, "stepper", s.stepper, parse_stepper);
    read_enum(j, "dt_policy", s.dt_policy, parse_dt_policy);
    read_field(j, "dt_value", s.dt_value);
    read_field(j, "steady_tol", s.steady_tol);
    read_field(j, "t_max", s.t_max);

    read_field(j, "n_particles", c.hybrid.n_particles);
    read_enum(j, "y_path", c.hybrid.y_path, parse_y_path);
    read_field(j, "p_interact", c.hybrid.p_interact);
    read_field(j, "log_every", c.hybrid.log_every);
    read_enum(j, "noise_law", c.noise.law, parse_noise_law);
    read_field(j, "noise_variance", c.noise.variance);

    read_field(j, "n_x", c.n_x);
    read_field(j, "n_y", c.n_y);
    read_field(j, "m", c.m);
    read_field(j, "horizon", c.horizon);
    read_field(j, "seed", c.seed);
    read_field(j, "out_dir", c.out_dir);
    read_field(j, "rho_grid", c.rho_grid);
    read_field(j, "theta", c.theta);
    read_field(j, "trajectories", c.trajectories);
    read_field(j, "dt_window", c.dt_window);
    read_field(j, "dx_window", c.dx_window);
    read_field(j, "lane_count", c.lane_count);
    read_field(j, "road_length", c.road_length);
    return c;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_run_config(ss.str());
}

std::string dump_run_config(const RunConfig& c) {
    const auto& p = c.model;
    const auto& s = c.solver;
    json j{
        {"alpha", p.alpha},
        {"delta", p.delta},
        {"dv_jump", p.dv_jump},
        {"kappa", p.kappa},
        {"sigma2", p.sigma2},
        {"epsilon", p.epsilon},
        {"beta_mode", to_string(p.beta_mode)},
        {"beta0", p.beta0},
        {"vbar_d", p.vbar_d},
        {"lambda", p.lambda},
        {"rho", p.rho},
        {"wx_mode", to_string(p.wx_mode)},
        {"target_mode", to_string(p.target_mode)},
        {"flux_variant", to_string(s.flux)},
        {"stepper", to_string(s.stepper)},
        {"dt_policy", to_string(s.dt_policy)},
        {"dt_value", s.dt_value},
        {"steady_tol", s.steady_tol},
        {"t_max", s.t_max},
        {"n_particles", c.hybrid.n_particles},
        {"y_path", to_string(c.hybrid.y_path)},
        {"p_interact", c.hybrid.p_interact},
        {"log_every", c.hybrid.log_every},
        {"noise_law", c.noise.law == NoiseLaw::two_point ? "two-point" : "uniform"},
        {"noise_variance", c.noise.variance},
        {"n_x", c.n_x},
        {"n_y", c.n_y},
        {"m", c.m},
        {"horizon", c.horizon},
        {"seed", c.seed},
        {"out_dir", c.out_dir},
        {"rho_grid", c.rho_grid},
        {"theta", c.theta},
        {"trajectories", c.trajectories},
        {"dt_window", c.dt_window},
        {"dx_window", c.dx_window},
        {"lane_count", c.lane_count},
        {"road_length", c.road_length},
    };
    return j.dump(2) + "\n";
}

std::vector<TrajectoryRecord> read_trajectories(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("trajectories: empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "vehicle_id,t,x,y") throw ConfigError("trajectories: expected header 'vehicle_id,t,x,y'");
    std::vector<TrajectoryRecord> out;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        TrajectoryRecord r;
        std::string t, x, y;
        if (!std::getline(ss, r.vehicle_id, ',') || !std::getline(ss, t, ',') || !std::getline(ss, x, ',') ||
            !std::getline(ss, y))
            throw ConfigError("trajectories: malformed line " + std::to_string(lineno));
        try {
            r.t = std::stod(t);
            r.x = std::stod(x);
            r.y = std::stod(y);
        } catch (const std::exception&) {
            throw ConfigError("trajectories: non-numeric field on line " + std::to_string(lineno));
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<AggregatedSample> aggregate_trajectories(const std::vector<TrajectoryRecord>& records,
                                                     const IngestOptions& o) {
    std::map<std::string, std::vector<const TrajectoryRecord*>> by_vehicle;
    for (const auto& r : records) by_vehicle[r.vehicle_id].push_back(&r);

    struct Bin {
        std::set<std::string> vehicles;
        double sx = 0.0, sy = 0.0;
        std::size_t n = 0;
    };
    std::map<std::pair<long, long>, Bin> bins;
    for (const auto& [id, recs] : by_vehicle) {
        for (std::size_t k = 0; k + 1 < recs.size(); ++k) {
            const auto& a = *recs[k];
            const auto& b = *recs[k + 1];
            const double dt = b.t - a.t;
            if (!(dt > 0.0)) throw ConfigError("trajectories: timestamps of vehicle " + id + " are not increasing");
            if (a.x < 0.0 || a.x >= o.road_length) continue;
            const auto key = std::pair{static_cast<long>(std::floor(a.t / o.dt_window)),
                                       static_cast<long>(std::floor(a.x / o.dx_window))};
            Bin& bin = bins[key];
            bin.vehicles.insert(id);
            bin.sx += (b.x - a.x) / dt;
            bin.sy += (b.y - a.y) / dt;
            ++bin.n;
        }
    }

    std::vector<AggregatedSample> out;
    double max_rho = 0.0, max_ux = 0.0, max_uy = 0.0;
    for (const auto& [key, bin] : bins) {
        AggregatedSample s;
        s.time_bin = key.first;
        s.space_bin = key.second;
        s.density = static_cast<double>(bin.vehicles.size()) / (o.dx_window * static_cast<double>(o.lane_count));
        s.ux = bin.sx / static_cast<double>(bin.n);
        s.uy = bin.sy / static_cast<double>(bin.n);
        max_rho = std::max(max_rho, s.density);
        max_ux = std::max(max_ux, std::abs(s.ux));
        max_uy = std::max(max_uy, std::abs(s.uy));
        out.push_back(s);
    }
    for (auto& s : out) {
        s.rho_norm = max_rho > 0.0 ? s.density / max_rho : 0.0;
        s.ux_norm = max_ux > 0.0 ? s.ux / max_ux : 0.0;
        s.uy_norm = max_uy > 0.0 ? s.uy / max_uy : 0.0;
    }
    return out;
}

std::vector<AggregatedSample> ingest_trajectories(const std::string& path, const IngestOptions& options) {
    std::ifstream is(path);
    if (!is) throw ConfigError("trajectories: cannot open '" + path + "'");
    return aggregate_trajectories(read_trajectories(is), options);
}

void write_aggregated_csv(std::ostream& os, const std::vector<AggregatedSample>& samples) {
    os << "time_bin,space_bin,density,ux,uy,rho_norm,ux_norm,uy_norm\n";
    char buf[256];
    for (const auto& s : samples) {
        std::snprintf(buf, sizeof buf, "%ld,%ld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.time_bin, s.space_bin,
                      s.density, s.ux, s.uy, s.rho_norm, s.ux_norm, s.uy_norm);
        os << buf;
    }
}

void SvgPlot::write(std::ostream& os) const {
    constexpr double W = 480, H = 360, L = 60, R = 20, T = 30, B = 50;
    auto px = [&](double x) { return L + (x - x_min) / (x_max - x_min) * (W - L - R); };
    auto py = [&](double y) { return H - B - (y - y_min) / (y_max - y_min) * (H - T - B); };
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" font-family=\"sans-serif\" "
                  "font-size=\"12\">\n",
                  W, H);
    os << buf << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof buf,
                  "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" stroke=\"black\"/>\n", L, T,
                  W - L - R, H - T - B);
    os << buf;
    for (int k = 0; k <= 4; ++k) {
        const double fx = x_min + (x_max - x_min) * k / 4.0, fy = y_min + (y_max - y_min) * k / 4.0;
        std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">%.2f</text>\n", px(fx),
                      H - B + 16, fx);
        os << buf;
        std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" text-anchor=\"end\">%.2f</text>\n", L - 6, py(fy) + 4,
                      fy);
        os << buf;
    }
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">", W / 2, H - 12);
    os << buf << x_label << "</text>\n";
    std::snprintf(buf, sizeof buf, "<text x=\"14\" y=\"%g\" transform=\"rotate(-90 14 %g)\" text-anchor=\"middle\">",
                  H / 2, H / 2);
    os << buf << y_label << "</text>\n";
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"18\" text-anchor=\"middle\">", W / 2);
    os << buf << title << "</text>\n";

    for (const auto& s : series) {
        if (s.scatter) {
            for (std::size_t k = 0; k < s.x.size(); ++k) {
                std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"2.5\" fill=\"%s\"/>\n", px(s.x[k]),
                              py(s.y[k]), s.color.c_str());
                os << buf;
            }
            continue;
        }
        os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\"";
        if (s.dashed) os << " stroke-dasharray=\"5,4\"";
        os << " points=\"";
        for (std::size_t k = 0; k < s.x.size(); ++k) {
            std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", k ? " " : "", px(s.x[k]), py(s.y[k]));
            os << buf;
        }
        os << "\"/>\n";
    }
    os << "</svg>\n";
}

SvgPlot y_diagram_plot(const std::vector<DiagramPoint>& points, const std::vector<AggregatedSample>& empirical) {
    SvgPlot plot{"lateral speed-density diagram", "rho", "u_y", 0.0, 1.0, -1.0, 1.0, {}};
    if (!empirical.empty()) {
        SvgSeries e{{}, {}, "#999999", true, false};
        for (const auto& s : empirical) {
            e.x.push_back(s.rho_norm);
            e.y.push_back(s.uy_norm);
        }
        plot.series.push_back(e);
    }
    SvgSeries mean{{}, {}, "red", false, false}, lo{{}, {}, "black", false, true}, hi{{}, {}, "black", false, true};
    for (const auto& p : points) {
        mean.x.push_back(p.rho);
        mean.y.push_back(p.uy_bar_inf);
        lo.x.push_back(p.rho);
        lo.y.push_back(p.band_lo);
        hi.x.push_back(p.rho);
        hi.y.push_back(p.band_hi);
    }
    plot.series.push_back(mean);
    plot.series.push_back(lo);
    plot.series.push_back(hi);
    return plot;
}

SvgPlot x_diagram_plot(const std::vector<DiagramPoint>& points, const std::vector<AggregatedSample>& empirical) {
    SvgPlot plot{"longitudinal speed-density diagram", "rho", "u_x", 0.0, 1.0, 0.0, 1.0, {}};
    if (!empirical.empty()) {
        SvgSeries e{{}, {}, "#999999", true, false};
        for (const auto& s : empirical) {
            e.x.push_back(s.rho_norm);
            e.y.push_back(s.ux_norm);
        }
        plot.series.push_back(e);
    }
    SvgSeries mean{{}, {}, "red", false, false};
    for (const auto& p : points) {
        mean.x.push_back(p.rho);
        mean.y.push_back(p.ux_inf);
    }
    plot.series.push_back(mean);
    return plot;
}

}  // namespace hkt
