#pragma once

#include <optional>
#include <vector>

#include "bcw/array2d.hpp"
#include "bcw/grid.hpp"
#include "bcw/source.hpp"

namespace bcw {

/// Space-time solution u(t_k, x_i), rows indexed by time.
struct WaveField {
    Array2D u;
    SpatialGrid sg;
    TimeGrid tg;
    /// Coefficients the field was computed with (needed by boundary stencils).
    PotentialGrid q;
    SpeedProfile c;
};

struct ForwardOptions {
    /// Interior forcing S(t_k, x_i) added to the right-hand side; shape n_t x n_x.
    const Array2D* forcing = nullptr;
    /// Initial displacement with zero velocity. Requires f == 0 and zero end values.
    std::vector<double> initial_displacement;
};

/// Courant number max_i c_i dt / dx.
double cfl_number(const SpeedProfile& c, const SpatialGrid& sg, const TimeGrid& tg);

/// Leapfrog solve of u_tt - c^2 u_xx + q u = S with u(t,0) = f, u(t,1) = 0.
WaveField solve_forward(const PotentialGrid& q, const SpeedProfile& c, const SourceSignal& f, const SpatialGrid& sg,
                        const TimeGrid& tg, const ForwardOptions& options = {});

enum class DtnStencil {
    /// (-3u_0 + 4u_1 - u_2) / (2dx).
    OneSided3,
    /// (u_1 - u_0)/dx - (dx/2) u_xx(t,0), with u_xx taken from the equation and a
    /// centered second time difference of the boundary samples.
    SummationByParts,
};

struct DtnTrace {
    std::vector<double> samples;
};

DtnTrace dtn_trace(const WaveField& field, const SourceSignal& f, DtnStencil stencil = DtnStencil::OneSided3);

/// Boundary flux of a field row set from boundary samples and the first interior columns.
/// Shared by dtn_trace and the matrix assembly, which only keeps three columns.
double dtn_sample(DtnStencil stencil, int k, double dx, double dt, double q0, double c0,
                  const std::vector<double>& boundary, double u1, double u2);

/// Travel time rho(x) = int_0^x dy / c(y) and its inverse r(t).
struct TravelTimeProfile {
    std::vector<double> rho;
    /// r sampled on the uniform grid t_m = m * dt_table, m = 0 .. size-1, last node at rho(1).
    std::vector<double> r_table;
    double dt_table = 0.0;
    double dx = 0.0;

    /// r(t), clamped to [0, 1].
    double r_of_t(double t) const;
    /// rho at an arbitrary x by linear interpolation.
    double rho_at(double x) const;
    double total() const { return rho.back(); }
};

TravelTimeProfile travel_time(const SpeedProfile& c);

/// Integration window of an energy trace.
struct EnergyWindow {
    enum class Kind {
        Global,
        /// [center - (half_width - t), center + (half_width - t)] intersected with [0, 1].
        Diamond,
        /// [r(t - t0), 1]: the region ahead of a front launched from x = 0 at t0.
        Front,
    };

    Kind kind = Kind::Global;
    double center = 0.5;
    double half_width = 0.5;
    double t0 = 0.0;
    std::optional<TravelTimeProfile> travel;

    static EnergyWindow global() { return {}; }
    static EnergyWindow diamond(double center, double half_width);
    static EnergyWindow front(TravelTimeProfile tt, double t0 = 0.0);
};

struct EnergyTrace {
    std::vector<double> values;
    /// True where the window was empty at that level (value reported as 0).
    std::vector<bool> degenerate;
    EnergyWindow::Kind kind = EnergyWindow::Kind::Global;
};

/// E(t) = 1/2 int_window c^-2 u_t^2 + u_x^2 + c^-2 q u^2 dx.
EnergyTrace energy_trace(const WaveField& field, const PotentialGrid& q, const SpeedProfile& c,
                         const EnergyWindow& window = EnergyWindow::global());

/// max |u| over points strictly beyond the causal front of f (margin 3dx), over max |u|.
double finite_speed_leakage(const WaveField& field, const SourceSignal& f, const TravelTimeProfile& tt);

} // namespace bcw
