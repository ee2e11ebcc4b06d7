#pragma once

#include <functional>
#include <vector>

namespace bcw {

/// Uniform nodes x_i = i/(n_x - 1) covering [0, 1].
class SpatialGrid {
public:
    explicit SpatialGrid(int n_x);

    int size() const { return n_x_; }
    double dx() const { return dx_; }
    double x(int i) const { return i == n_x_ - 1 ? 1.0 : i * dx_; }
    std::vector<double> nodes() const;

    /// Grid with half the spacing (2(n_x - 1) + 1 nodes); shares every node of this grid.
    SpatialGrid refined() const { return SpatialGrid(2 * (n_x_ - 1) + 1); }

    bool operator==(const SpatialGrid&) const = default;

private:
    int n_x_;
    double dx_;
};

/// Uniform time levels t_k = k dt, k = 0 .. n_t - 1.
class TimeGrid {
public:
    TimeGrid(int n_t, double dt);

    /// Smallest grid with step dt whose last level reaches t_end.
    static TimeGrid covering(double t_end, double dt);

    int size() const { return n_t_; }
    double dt() const { return dt_; }
    double t(int k) const { return k * dt_; }
    double t_max() const { return (n_t_ - 1) * dt_; }

    /// Index of the level nearest to t (clamped to the grid).
    int index_of(double t) const;

    /// Grid with step dt / factor spanning the same interval.
    TimeGrid refined(int factor) const { return TimeGrid(factor * (n_t_ - 1) + 1, dt_ / factor); }

    bool operator==(const TimeGrid&) const = default;

private:
    int n_t_;
    double dt_;
};

/// Potential q(x_i) sampled on a SpatialGrid.
struct PotentialGrid {
    std::vector<double> values;

    static PotentialGrid zero(const SpatialGrid& grid);
    static PotentialGrid sample(const SpatialGrid& grid, const std::function<double(double)>& q);
};

/// Wave speed c(x_i) > 0 sampled on a SpatialGrid.
struct SpeedProfile {
    std::vector<double> values;

    static SpeedProfile constant(const SpatialGrid& grid, double c = 1.0);
    static SpeedProfile sample(const SpatialGrid& grid, const std::function<double(double)>& c);
};

/// C-infinity bump exp(1 - 1/(1 - tau^2)) on (lo, hi), peak 1 at the midpoint.
double smooth_bump(double x, double lo, double hi);

/// The reference compactly supported potential shape: smooth_bump on (0.2, 0.8).
double reference_bump(double x);

} // namespace bcw
