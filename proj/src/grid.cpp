#include "bcw/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bcw/errors.hpp"

namespace bcw {

SpatialGrid::SpatialGrid(int n_x) : n_x_(n_x), dx_(0.0) {
    if (n_x < 3) {
        std::ostringstream os;
        os << "spatial grid needs at least 3 nodes, got " << n_x;
        throw PreconditionError(os.str());
    }
    dx_ = 1.0 / (n_x - 1);
}

std::vector<double> SpatialGrid::nodes() const {
    std::vector<double> xs(n_x_);
    for (int i = 0; i < n_x_; ++i) xs[i] = x(i);
    return xs;
}

TimeGrid::TimeGrid(int n_t, double dt) : n_t_(n_t), dt_(dt) {
    if (n_t < 3) throw PreconditionError("time grid needs at least 3 levels");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw PreconditionError("time step must be positive and finite");
}

TimeGrid TimeGrid::covering(double t_end, double dt) {
    if (!(dt > 0.0)) throw PreconditionError("time step must be positive");
    const int steps = static_cast<int>(std::ceil(t_end / dt - 1e-9));
    return TimeGrid(std::max(steps, 2) + 1, dt);
}

int TimeGrid::index_of(double t) const {
    const long k = std::lround(t / dt_);
    return static_cast<int>(std::clamp<long>(k, 0, n_t_ - 1));
}

PotentialGrid PotentialGrid::zero(const SpatialGrid& grid) {
    return PotentialGrid{std::vector<double>(grid.size(), 0.0)};
}

PotentialGrid PotentialGrid::sample(const SpatialGrid& grid, const std::function<double(double)>& q) {
    PotentialGrid p{std::vector<double>(grid.size())};
    for (int i = 0; i < grid.size(); ++i) p.values[i] = q(grid.x(i));
    return p;
}

SpeedProfile SpeedProfile::constant(const SpatialGrid& grid, double c) {
    return SpeedProfile{std::vector<double>(grid.size(), c)};
}

SpeedProfile SpeedProfile::sample(const SpatialGrid& grid, const std::function<double(double)>& c) {
    SpeedProfile p{std::vector<double>(grid.size())};
    for (int i = 0; i < grid.size(); ++i) p.values[i] = c(grid.x(i));
    return p;
}

double smooth_bump(double x, double lo, double hi) {
    const double tau = (2.0 * x - (lo + hi)) / (hi - lo);
    if (tau <= -1.0 || tau >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - tau * tau));
}

double reference_bump(double x) { return smooth_bump(x, 0.2, 0.8); }

} // namespace bcw
