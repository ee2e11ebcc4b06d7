#pragma once

#include <span>
#include <vector>

#include "bcw/grid.hpp"

namespace bcw {

/// Analytic pulse shape used to generate boundary sources.
///
/// Bump is the C-infinity profile exp(1 - 1/(1 - tau^2)); CubicBSpline is the
/// C2 cardinal cubic B-spline stretched over [lo, hi] (four knot intervals).
/// Both have peak value `amplitude`. Derivatives are exact, so oracles can
/// differentiate sources symbolically.
struct Pulse {
    enum class Shape { Bump, CubicBSpline };

    Shape shape = Shape::Bump;
    double lo = 0.0;
    double hi = 1.0;
    double amplitude = 1.0;

    double value(double t) const;
    double derivative(double t) const;
    double second_derivative(double t) const;
};

/// Boundary source f(t_k) with its declared support window.
struct SourceSignal {
    std::vector<double> samples;
    double t_lo = 0.0;
    double t_hi = 0.0;
    /// Generator components when the source is a sum of analytic pulses.
    std::vector<Pulse> pulses;

    double value(double t) const;
    double derivative(double t) const;
    bool is_zero() const;
};

SourceSignal zero_source(const TimeGrid& grid);

/// Samples a sum of pulses; the support window is the hull of the pulse supports.
SourceSignal make_source(const TimeGrid& grid, std::vector<Pulse> pulses);

SourceSignal make_bump_source(const TimeGrid& grid, double lo, double hi, double amplitude = 1.0);

/// alpha*f + beta*g on a shared grid.
SourceSignal combine(double alpha, const SourceSignal& f, double beta, const SourceSignal& g);

/// Checks sample count against the grid and the compatibility f(t_0) = f(t_1) = 0.
void require_compatible(const SourceSignal& f, const TimeGrid& grid);

} // namespace bcw
