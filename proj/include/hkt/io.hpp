#pragma once

// Run configuration, trajectory ingestion and static SVG output.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hkt/diagrams.hpp"
#include "hkt/fokker_planck.hpp"
#include "hkt/hybrid.hpp"
#include "hkt/model.hpp"

namespace hkt {

struct RunConfig {
    ModelParams model;
    SolverConfig solver;
    HybridOptions hybrid;
    NoiseSpec noise;
    std::size_t n_x = 100;
    std::size_t n_y = 40;
    std::size_t m = 5;
    double horizon = 100.0;
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    std::vector<double> rho_grid{0.1, 0.3, 0.5, 0.7, 0.9};
    double theta = 0.0;
    std::string trajectories;
    double dt_window = 5.0;
    double dx_window = 100.0;
    std::size_t lane_count = 5;
    double road_length = 640.0;

    /// Cross-field checks; throws ConfigError naming the offending field.
    void validate() const;
    bool operator==(const RunConfig&) const = default;
};

/// Flat JSON object; every key is optional and unknown keys are rejected.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);
std::string dump_run_config(const RunConfig& cfg);

struct TrajectoryRecord {
    std::string vehicle_id;
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
};

std::vector<TrajectoryRecord> read_trajectories(std::istream& is);

struct AggregatedSample {
    long time_bin = 0;
    long space_bin = 0;
    double density = 0.0;  ///< vehicles per metre per lane
    double ux = 0.0, uy = 0.0;  ///< m/s
    double rho_norm = 0.0;
    double ux_norm = 0.0;
    double uy_norm = 0.0;
};

struct IngestOptions {
    double dt_window = 5.0;
    double dx_window = 100.0;
    std::size_t lane_count = 5;
    double road_length = 640.0;
};

/// Forward-difference speeds per vehicle, binned by (time window, space window),
/// then normalised by the dataset maxima. Throws ConfigError on non-increasing
/// timestamps within a vehicle.
std::vector<AggregatedSample> aggregate_trajectories(const std::vector<TrajectoryRecord>& records,
                                                     const IngestOptions& options);
std::vector<AggregatedSample> ingest_trajectories(const std::string& path, const IngestOptions& options);

void write_aggregated_csv(std::ostream& os, const std::vector<AggregatedSample>& samples);

struct SvgSeries {
    std::vector<double> x, y;
    std::string color = "black";
    bool scatter = false;
    bool dashed = false;
};

struct SvgPlot {
    std::string title, x_label, y_label;
    double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
    std::vector<SvgSeries> series;

    void write(std::ostream& os) const;
};

/// y-diagram: mean lateral speed with the dispersion band, optional empirical scatter.
SvgPlot y_diagram_plot(const std::vector<DiagramPoint>& points, const std::vector<AggregatedSample>& empirical = {});
/// x-diagram: equilibrium longitudinal mean speed against density.
SvgPlot x_diagram_plot(const std::vector<DiagramPoint>& points, const std::vector<AggregatedSample>& empirical = {});

}  // namespace hkt
