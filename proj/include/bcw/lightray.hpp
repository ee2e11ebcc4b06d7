#pragma once

#include <array>
#include <complex>
#include <functional>
#include <vector>

namespace bcw {

/// q(t, x1, x2) sampled on [0, T] x [-X, X]^2, t_k = k dt, x_i = -X + i dx.
class SpacetimePotential {
public:
    SpacetimePotential(int nt, int nx, double dt, double dx, std::vector<double> values);

    /// Samples fn on nt x nx x nx nodes; rejects fields that do not vanish on the two-cell boundary shell.
    static SpacetimePotential sample(const std::function<double(double, double, double)>& fn, int nt, int nx, double T,
                                     double X);

    int nt() const { return nt_; }
    int nx() const { return nx_; }
    double dt() const { return dt_; }
    double dx() const { return dx_; }
    double T() const { return (nt_ - 1) * dt_; }
    double X() const { return 0.5 * (nx_ - 1) * dx_; }
    double t(int k) const { return k * dt_; }
    double x(int i) const { return -X() + i * dx_; }
    double at(int k, int i, int j) const { return values_[(static_cast<std::size_t>(k) * nx_ + i) * nx_ + j]; }
    const std::vector<double>& values() const { return values_; }

    /// Trilinear interpolation; zero outside the box.
    double interpolate(double t, double x1, double x2) const;

    /// Grid-aligned translation by (d1, d2) cells, zero fill.
    SpacetimePotential shifted(int d1, int d2) const;

private:
    int nt_, nx_;
    double dt_, dx_;
    std::vector<double> values_;
};

using Vec2 = std::array<double, 2>;
using cplx = std::complex<double>;

/// Integral of q along s -> (s, y + s v), s in [0, T], composite trapezoid with step min(dt, dx)/2.
double light_ray_transform(const SpacetimePotential& q, const Vec2& y, const Vec2& v);

/// -(dt)^2 + |dx|^2 for the ray tangent (1, v).
double minkowski_norm(const Vec2& v);

/// Transform for fixed v on the square y-grid y_ab = (y_lo + a dy, y_lo + b dy).
struct RayData {
    Vec2 v{};
    double y_lo = 0.0;
    double dy = 0.0;
    int ny = 0;
    std::vector<double> values;

    double at(int a, int b) const { return values[static_cast<std::size_t>(a) * ny + b]; }
};

/// Rays over the y-grid [-(X + T), X + T]^2 with spacing dx, enough to cover the shadow of the box.
RayData ray_data(const SpacetimePotential& q, const Vec2& v, int workers = 1);

struct SpectralSample {
    double tau = 0.0;
    Vec2 eta{};
    cplx value;
};

/// Riemann sum of e^{-i eta . y} L(y, v) over the y-grid; tau = -eta . v.
SpectralSample fourier_slice(const RayData& L, const Vec2& eta);

/// Unit v with -eta . v = a |eta|: v = -(a/|eta|) eta + sqrt(1 - a^2) w, w = eta/|eta| turned by +90 degrees.
Vec2 direction_for(double a, const Vec2& eta);

/// Riemann sum of e^{-i(tau t + eta . x)} q over the grid.
cplx direct_transform(const SpacetimePotential& q, double tau, const Vec2& eta);

struct ConeOptions {
    /// Band |eta| <= band_fraction * pi / dx.
    double band_fraction = 0.5;
    int workers = 1;
};

struct SliceResidual {
    double tau = 0.0;
    Vec2 eta{};
    double abs_err = 0.0;
    /// abs_err over the largest |q^| on the band.
    double rel_err = 0.0;
};

struct ConeRecovery {
    /// Frequencies on the symmetric DFT grid: tau_m = m 2pi/(nt dt), eta_p = p 2pi/(nx dx).
    std::vector<int> m_tau, m_eta;
    /// mask[(m, p1, p2)] in row-major order over (m_tau, m_eta, m_eta).
    std::vector<bool> mask;
    std::vector<SpectralSample> samples;
    std::vector<SliceResidual> residuals;
    /// Inverse DFT of the sliced spectrum on the cone, and of the direct DFT on the same cone.
    std::vector<double> q_cone, q_cone_ref;
    double slice_rel_err = 0.0;
    double recovery_rel_err = 0.0;
    /// max |Q(tau, eta) - conj Q(-tau, -eta)| over sliced samples, relative to max |Q|.
    double hermitian_defect = 0.0;
    /// max |Im q_cone| relative to max |q_cone|.
    double imaginary_residue = 0.0;
    /// 1 - |q - q_cone|^2 / |q|^2.
    double energy_recovery = 0.0;
    bool cone_admissible = true;
};

/// Fills q^ on the band-limited spacelike cone from slices of ray data, zero elsewhere, and inverts.
/// Needs odd nt and nx so the symmetric frequency grid is a complete DFT grid.
ConeRecovery invert_on_cone(const SpacetimePotential& q, const ConeOptions& options = {});

/// n = 1 analogue: integral of q along the null line s -> (s, y + s v), v = +-1, s in [t_lo, t_hi], by
/// composite trapezoid with n steps.
double null_line_integral_1d(const std::function<double(double, double)>& q, double y, int v, double t_lo, double t_hi,
                             int n);

/// exp(1 - 1/(1 - (r/radius)^2)) with r the space-time distance to the center.
double radial_bump(double t, double x1, double x2, double t0, double radius);

/// C-infinity plateau: 1 on [lo + ramp, hi - ramp], 0 outside (lo, hi).
double smooth_plateau(double t, double lo, double hi, double ramp);

} // namespace bcw
