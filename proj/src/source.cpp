#include "bcw/source.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "bcw/errors.hpp"

namespace bcw {

namespace {

// Value and first two derivatives of exp(1 - 1/(1 - tau^2)) in tau.
struct Jet {
    double v, d1, d2;
};

Jet bump_jet(double tau) {
    if (tau <= -1.0 || tau >= 1.0) return {0.0, 0.0, 0.0};
    const double p = 1.0 / (1.0 - tau * tau);
    const double g = std::exp(1.0 - p);
    const double t2 = tau * tau;
    return {g, g * (-2.0 * tau * p * p), g * (4.0 * t2 * p * p * p * p - 2.0 * p * p - 8.0 * t2 * p * p * p)};
}

// Cardinal cubic B-spline on u in [0, 4], scaled to peak 1.
Jet spline_jet(double u) {
    constexpr double scale = 1.5;
    if (u <= 0.0 || u >= 4.0) return {0.0, 0.0, 0.0};
    if (u < 1.0) return {scale * u * u * u / 6.0, scale * u * u / 2.0, scale * u};
    if (u < 2.0)
        return {scale * (-3.0 * u * u * u + 12.0 * u * u - 12.0 * u + 4.0) / 6.0,
                scale * (-9.0 * u * u + 24.0 * u - 12.0) / 6.0, scale * (-18.0 * u + 24.0) / 6.0};
    if (u < 3.0)
        return {scale * (3.0 * u * u * u - 24.0 * u * u + 60.0 * u - 44.0) / 6.0,
                scale * (9.0 * u * u - 48.0 * u + 60.0) / 6.0, scale * (18.0 * u - 48.0) / 6.0};
    const double w = 4.0 - u;
    return {scale * w * w * w / 6.0, -scale * w * w / 2.0, scale * w};
}

Jet pulse_jet(const Pulse& p, double t) {
    const double width = p.hi - p.lo;
    if (p.shape == Pulse::Shape::Bump) {
        const double dtau = 2.0 / width;
        const Jet j = bump_jet((2.0 * t - (p.lo + p.hi)) / width);
        return {p.amplitude * j.v, p.amplitude * j.d1 * dtau, p.amplitude * j.d2 * dtau * dtau};
    }
    const double du = 4.0 / width;
    const Jet j = spline_jet((t - p.lo) * du);
    return {p.amplitude * j.v, p.amplitude * j.d1 * du, p.amplitude * j.d2 * du * du};
}

} // namespace

double Pulse::value(double t) const { return pulse_jet(*this, t).v; }
double Pulse::derivative(double t) const { return pulse_jet(*this, t).d1; }
double Pulse::second_derivative(double t) const { return pulse_jet(*this, t).d2; }

double SourceSignal::value(double t) const {
    double s = 0.0;
    for (const auto& p : pulses) s += p.value(t);
    return s;
}

double SourceSignal::derivative(double t) const {
    double s = 0.0;
    for (const auto& p : pulses) s += p.derivative(t);
    return s;
}

bool SourceSignal::is_zero() const {
    return std::all_of(samples.begin(), samples.end(), [](double v) { return v == 0.0; });
}

SourceSignal zero_source(const TimeGrid& grid) {
    return SourceSignal{std::vector<double>(grid.size(), 0.0), 0.0, 0.0, {}};
}

SourceSignal make_source(const TimeGrid& grid, std::vector<Pulse> pulses) {
    SourceSignal f = zero_source(grid);
    if (pulses.empty()) return f;
    f.t_lo = std::numeric_limits<double>::infinity();
    f.t_hi = -std::numeric_limits<double>::infinity();
    for (const auto& p : pulses) {
        if (!(p.hi > p.lo)) throw PreconditionError("pulse support must have positive width");
        f.t_lo = std::min(f.t_lo, p.lo);
        f.t_hi = std::max(f.t_hi, p.hi);
    }
    f.pulses = std::move(pulses);
    for (int k = 0; k < grid.size(); ++k) f.samples[k] = f.value(grid.t(k));
    return f;
}

SourceSignal make_bump_source(const TimeGrid& grid, double lo, double hi, double amplitude) {
    return make_source(grid, {Pulse{Pulse::Shape::Bump, lo, hi, amplitude}});
}

SourceSignal combine(double alpha, const SourceSignal& f, double beta, const SourceSignal& g) {
    if (f.samples.size() != g.samples.size()) throw PreconditionError("sources live on different time grids");
    SourceSignal out;
    out.samples.resize(f.samples.size());
    for (std::size_t k = 0; k < f.samples.size(); ++k) out.samples[k] = alpha * f.samples[k] + beta * g.samples[k];
    const bool f_on = alpha != 0.0 && !f.is_zero();
    const bool g_on = beta != 0.0 && !g.is_zero();
    if (f_on && g_on) {
        out.t_lo = std::min(f.t_lo, g.t_lo);
        out.t_hi = std::max(f.t_hi, g.t_hi);
    } else if (f_on) {
        out.t_lo = f.t_lo;
        out.t_hi = f.t_hi;
    } else if (g_on) {
        out.t_lo = g.t_lo;
        out.t_hi = g.t_hi;
    }
    for (auto p : f.pulses) {
        p.amplitude *= alpha;
        if (p.amplitude != 0.0) out.pulses.push_back(p);
    }
    for (auto p : g.pulses) {
        p.amplitude *= beta;
        if (p.amplitude != 0.0) out.pulses.push_back(p);
    }
    return out;
}

void require_compatible(const SourceSignal& f, const TimeGrid& grid) {
    if (static_cast<int>(f.samples.size()) != grid.size()) {
        std::ostringstream os;
        os << "source has " << f.samples.size() << " samples but the time grid has " << grid.size() << " levels";
        throw PreconditionError(os.str());
    }
    for (double v : f.samples)
        if (!std::isfinite(v)) throw PreconditionError("source contains non-finite samples");
    if (f.samples[0] != 0.0 || f.samples[1] != 0.0)
        throw PreconditionError("source must vanish on the first two time levels (zero initial data)");
}

} // namespace bcw
