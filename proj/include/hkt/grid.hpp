#pragma once

// Uniform cell-centred velocity grid on [0,1] x [-eps, eps] and densities on it.
//
// Storage is row-major with the v_y index outermost: value(i, j) lives at
// j * n_x + i, so each v_y row is a contiguous 1D density in v_x.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace hkt {

class VelocityGrid {
public:
    VelocityGrid(std::size_t n_x, std::size_t n_y, double epsilon = 1.0);

    std::size_t n_x() const { return n_x_; }
    std::size_t n_y() const { return n_y_; }
    std::size_t size() const { return n_x_ * n_y_; }
    double epsilon() const { return epsilon_; }
    double dv_x() const { return dv_x_; }
    double dv_y() const { return dv_y_; }
    double cell_area() const { return dv_x_ * dv_y_; }

    double x_center(std::size_t i) const { return (static_cast<double>(i) + 0.5) * dv_x_; }
    double y_center(std::size_t j) const { return -epsilon_ + (static_cast<double>(j) + 0.5) * dv_y_; }
    /// Interface k in [0, n_x]; k = 0 and k = n_x are the domain endpoints.
    double x_interface(std::size_t k) const { return static_cast<double>(k) * dv_x_; }
    double y_interface(std::size_t k) const { return -epsilon_ + static_cast<double>(k) * dv_y_; }

    /// Cell containing v (clamped to the domain).
    std::size_t x_cell(double v_x) const;
    std::size_t y_cell(double v_y) const;

    std::size_t index(std::size_t i, std::size_t j) const { return j * n_x_ + i; }

    bool operator==(const VelocityGrid& o) const {
        return n_x_ == o.n_x_ && n_y_ == o.n_y_ && epsilon_ == o.epsilon_;
    }

private:
    std::size_t n_x_, n_y_;
    double epsilon_, dv_x_, dv_y_;
};

/// Non-negative density per unit velocity-area on a VelocityGrid.
class GridDistribution {
public:
    explicit GridDistribution(VelocityGrid grid);
    GridDistribution(VelocityGrid grid, std::vector<double> values);

    const VelocityGrid& grid() const { return grid_; }
    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }
    std::span<const double> row(std::size_t j) const;
    std::span<double> row(std::size_t j);

    double& operator()(std::size_t i, std::size_t j) { return values_[grid_.index(i, j)]; }
    double operator()(std::size_t i, std::size_t j) const { return values_[grid_.index(i, j)]; }

    /// Sum of values times cell area.
    double mass() const;
    double row_mass(std::size_t j) const;
    /// Rescale to unit mass. Throws NumericalError on zero mass.
    void normalize();
    double min_value() const;

private:
    VelocityGrid grid_;
    std::vector<double> values_;
};

struct MomentSet {
    double u_x = 0.0, u_y = 0.0, E_x = 0.0, E_y = 0.0;
};

/// Product density 1_[0,1](v_x) * uniform on [-eps, eps], renormalized on the grid.
GridDistribution initial_condition(const VelocityGrid& grid);

/// Midpoint-rule moments.
MomentSet moments(const GridDistribution& dist);

/// Marginals: 1D densities with unit mass when dist has unit mass.
std::vector<double> marginal_x(const GridDistribution& dist);
std::vector<double> marginal_y(const GridDistribution& dist);

/// sum |a - b| / sum |b| over a common grid.
double rel_L1_error(std::span<const double> a, std::span<const double> b);

/// Conservative restriction of a cell-centred 1D density from n_fine cells onto
/// n_coarse cells (n_fine must be an integer multiple of n_coarse). Cell averages.
std::vector<double> restrict_1d(std::span<const double> fine, std::size_t n_coarse);

/// Conservative restriction of a 2D density onto a coarser aligned grid.
GridDistribution restrict_to(const GridDistribution& fine, const VelocityGrid& coarse);

/// rel_L1_error after restricting `reference` to the grid of `dist`.
double rel_L1_error(const GridDistribution& dist, const GridDistribution& reference);

/// Number of finite-volume cells corresponding to a vertex-counted grid of
/// `points` points; makes 21/41/81/161/321-point grids exact refinements.
std::size_t cells_for_points(std::size_t points);

// Serialization. CSV columns: v_x_center,v_y_center,value.
void write_csv(std::ostream& os, const GridDistribution& dist);
GridDistribution read_csv(std::istream& is, double epsilon);
// Binary: header (u64 n_x, u64 n_y, f64 epsilon, f64 mass) followed by n_x*n_y f64 row-major values.
void write_binary(std::ostream& os, const GridDistribution& dist);
GridDistribution read_binary(std::istream& is);

void save_csv(const std::string& path, const GridDistribution& dist);
void save_binary(const std::string& path, const GridDistribution& dist);
GridDistribution load_binary(const std::string& path);

}  // namespace hkt
