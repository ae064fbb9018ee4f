#include "hkt/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "hkt/errors.hpp"

namespace hkt {

VelocityGrid::VelocityGrid(std::size_t n_x, std::size_t n_y, double epsilon)
    : n_x_(n_x), n_y_(n_y), epsilon_(epsilon) {
    if (n_x == 0 || n_y == 0) throw DomainError("VelocityGrid: cell counts must be positive");
    if (!(epsilon > 0.0 && epsilon <= 1.0)) throw DomainError("VelocityGrid: epsilon outside (0,1]");
    dv_x_ = 1.0 / static_cast<double>(n_x);
    dv_y_ = 2.0 * epsilon / static_cast<double>(n_y);
}

std::size_t VelocityGrid::x_cell(double v_x) const {
    const double k = std::floor(v_x / dv_x_);
    if (k <= 0.0) return 0;
    return std::min(static_cast<std::size_t>(k), n_x_ - 1);
}

std::size_t VelocityGrid::y_cell(double v_y) const {
    const double k = std::floor((v_y + epsilon_) / dv_y_);
    if (k <= 0.0) return 0;
    return std::min(static_cast<std::size_t>(k), n_y_ - 1);
}

GridDistribution::GridDistribution(VelocityGrid grid) : grid_(grid), values_(grid.size(), 0.0) {}

GridDistribution::GridDistribution(VelocityGrid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) throw DomainError("GridDistribution: value count does not match grid");
}

std::span<const double> GridDistribution::row(std::size_t j) const {
    return std::span<const double>(values_).subspan(j * grid_.n_x(), grid_.n_x());
}

std::span<double> GridDistribution::row(std::size_t j) {
    return std::span<double>(values_).subspan(j * grid_.n_x(), grid_.n_x());
}

double GridDistribution::mass() const {
    return std::accumulate(values_.begin(), values_.end(), 0.0) * grid_.cell_area();
}

double GridDistribution::row_mass(std::size_t j) const {
    const auto r = row(j);
    return std::accumulate(r.begin(), r.end(), 0.0) * grid_.cell_area();
}

void GridDistribution::normalize() {
    const double m = mass();
    if (!(m > 0.0) || !std::isfinite(m)) throw NumericalError("normalize: distribution has no mass");
    for (double& v : values_) v /= m;
}

double GridDistribution::min_value() const { return *std::min_element(values_.begin(), values_.end()); }

GridDistribution initial_condition(const VelocityGrid& grid) {
    GridDistribution g(grid, std::vector<double>(grid.size(), 1.0 / (2.0 * grid.epsilon())));
    g.normalize();
    return g;
}

MomentSet moments(const GridDistribution& dist) {
    const auto& grid = dist.grid();
    MomentSet m;
    for (std::size_t j = 0; j < grid.n_y(); ++j) {
        const double vy = grid.y_center(j);
        const auto r = dist.row(j);
        double row_sum = 0.0;
        for (std::size_t i = 0; i < grid.n_x(); ++i) {
            const double vx = grid.x_center(i);
            m.u_x += vx * r[i];
            m.E_x += vx * vx * r[i];
            row_sum += r[i];
        }
        m.u_y += vy * row_sum;
        m.E_y += vy * vy * row_sum;
    }
    const double a = grid.cell_area();
    m.u_x *= a;
    m.u_y *= a;
    m.E_x *= a;
    m.E_y *= a;
    return m;
}

std::vector<double> marginal_x(const GridDistribution& dist) {
    const auto& grid = dist.grid();
    std::vector<double> out(grid.n_x(), 0.0);
    for (std::size_t j = 0; j < grid.n_y(); ++j) {
        const auto r = dist.row(j);
        for (std::size_t i = 0; i < grid.n_x(); ++i) out[i] += r[i];
    }
    for (double& v : out) v *= grid.dv_y();
    return out;
}

std::vector<double> marginal_y(const GridDistribution& dist) {
    const auto& grid = dist.grid();
    std::vector<double> out(grid.n_y(), 0.0);
    for (std::size_t j = 0; j < grid.n_y(); ++j) {
        const auto r = dist.row(j);
        out[j] = std::accumulate(r.begin(), r.end(), 0.0) * grid.dv_x();
    }
    return out;
}

double rel_L1_error(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DomainError("rel_L1_error: size mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        num += std::abs(a[k] - b[k]);
        den += std::abs(b[k]);
    }
    if (den == 0.0) throw DomainError("rel_L1_error: reference is identically zero");
    return num / den;
}

std::vector<double> restrict_1d(std::span<const double> fine, std::size_t n_coarse) {
    if (n_coarse == 0 || fine.size() % n_coarse != 0)
        throw DomainError("restrict_1d: fine grid is not an integer refinement");
    const std::size_t r = fine.size() / n_coarse;
    std::vector<double> out(n_coarse, 0.0);
    for (std::size_t c = 0; c < n_coarse; ++c) {
        double s = 0.0;
        for (std::size_t k = 0; k < r; ++k) s += fine[c * r + k];
        out[c] = s / static_cast<double>(r);
    }
    return out;
}

GridDistribution restrict_to(const GridDistribution& fine, const VelocityGrid& coarse) {
    const auto& fg = fine.grid();
    if (fg.epsilon() != coarse.epsilon() || fg.n_x() % coarse.n_x() != 0 || fg.n_y() % coarse.n_y() != 0)
        throw DomainError("restrict_to: grids are not aligned refinements");
    const std::size_t rx = fg.n_x() / coarse.n_x();
    const std::size_t ry = fg.n_y() / coarse.n_y();
    GridDistribution out(coarse);
    for (std::size_t j = 0; j < fg.n_y(); ++j)
        for (std::size_t i = 0; i < fg.n_x(); ++i) out(i / rx, j / ry) += fine(i, j);
    const double inv = 1.0 / static_cast<double>(rx * ry);
    for (double& v : out.values()) v *= inv;
    return out;
}

double rel_L1_error(const GridDistribution& dist, const GridDistribution& reference) {
    if (dist.grid() == reference.grid()) return rel_L1_error(dist.values(), reference.values());
    const GridDistribution r = restrict_to(reference, dist.grid());
    return rel_L1_error(dist.values(), r.values());
}

std::size_t cells_for_points(std::size_t points) {
    if (points < 2) throw DomainError("cells_for_points: need at least two points");
    return points - 1;
}

void write_csv(std::ostream& os, const GridDistribution& dist) {
    const auto& g = dist.grid();
    os << "v_x_center,v_y_center,value\n";
    char buf[96];
    for (std::size_t j = 0; j < g.n_y(); ++j)
        for (std::size_t i = 0; i < g.n_x(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", g.x_center(i), g.y_center(j), dist(i, j));
            os << buf;
        }
}

GridDistribution read_csv(std::istream& is, double epsilon) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("v_x_center", 0) != 0)
        throw DomainError("read_csv: missing density header");
    std::vector<double> ys, values;
    std::size_t n_x = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        double vx = 0, vy = 0, val = 0;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &vx, &vy, &val) != 3)
            throw DomainError("read_csv: malformed row '" + line + "'");
        if (ys.empty() || vy != ys.back()) ys.push_back(vy);
        if (ys.size() == 1) ++n_x;
        values.push_back(val);
    }
    if (ys.empty()) throw DomainError("read_csv: no rows");
    return GridDistribution(VelocityGrid(n_x, ys.size(), epsilon), std::move(values));
}

void write_binary(std::ostream& os, const GridDistribution& dist) {
    const auto& g = dist.grid();
    const std::uint64_t nx = g.n_x(), ny = g.n_y();
    const double eps = g.epsilon(), mass = dist.mass();
    os.write(reinterpret_cast<const char*>(&nx), sizeof nx);
    os.write(reinterpret_cast<const char*>(&ny), sizeof ny);
    os.write(reinterpret_cast<const char*>(&eps), sizeof eps);
    os.write(reinterpret_cast<const char*>(&mass), sizeof mass);
    os.write(reinterpret_cast<const char*>(dist.values().data()),
             static_cast<std::streamsize>(dist.values().size() * sizeof(double)));
}

GridDistribution read_binary(std::istream& is) {
    std::uint64_t nx = 0, ny = 0;
    double eps = 0, mass = 0;
    is.read(reinterpret_cast<char*>(&nx), sizeof nx);
    is.read(reinterpret_cast<char*>(&ny), sizeof ny);
    is.read(reinterpret_cast<char*>(&eps), sizeof eps);
    is.read(reinterpret_cast<char*>(&mass), sizeof mass);
    if (!is) throw DomainError("read_binary: truncated header");
    VelocityGrid grid(nx, ny, eps);
    std::vector<double> values(grid.size());
    is.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!is) throw DomainError("read_binary: truncated payload");
    return GridDistribution(grid, std::move(values));
}

void save_csv(const std::string& path, const GridDistribution& dist) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    write_csv(os, dist);
}

void save_binary(const std::string& path, const GridDistribution& dist) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path);
    write_binary(os, dist);
}

GridDistribution load_binary(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    return read_binary(is);
}

}  // namespace hkt
