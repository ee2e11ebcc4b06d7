#include "bcw/lightray.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "bcw/errors.hpp"
#include "bcw/parallel.hpp"

namespace bcw {

namespace {

constexpr cplx I(0.0, 1.0);

double norm2(const Vec2& v) {
    return std::hypot(v[0], v[1]);
}

void require_unit(const Vec2& v) {
    if (!std::isfinite(v[0]) || !std::isfinite(v[1]) || std::abs(v[0] * v[0] + v[1] * v[1] - 1.0) > 1e-12)
        throw PreconditionError("ray direction must be a unit vector");
}

std::vector<int> symmetric_indices(int n) {
    std::vector<int> m(n);
    for (int i = 0; i < n; ++i) m[i] = i - (n - 1) / 2;
    return m;
}

using Cube = std::vector<cplx>;

// out[a][b][c] = sum E0(a,i) E1(b,j) E2(c,k) in[i][j][k]; E_d stored row-major (out_d x in_d).
Cube separable(const Cube& in, std::array<int, 3> nin, std::array<int, 3> nout, const std::vector<cplx>& E0,
               const std::vector<cplx>& E1, const std::vector<cplx>& E2) {
    Cube s1(static_cast<std::size_t>(nout[0]) * nin[1] * nin[2]);
    for (int a = 0; a < nout[0]; ++a)
        for (int i = 0; i < nin[0]; ++i) {
            const cplx e = E0[static_cast<std::size_t>(a) * nin[0] + i];
            for (int jk = 0; jk < nin[1] * nin[2]; ++jk)
                s1[static_cast<std::size_t>(a) * nin[1] * nin[2] + jk] += e * in[static_cast<std::size_t>(i) * nin[1] * nin[2] + jk];
        }
    Cube s2(static_cast<std::size_t>(nout[0]) * nout[1] * nin[2]);
    for (int a = 0; a < nout[0]; ++a)
        for (int b = 0; b < nout[1]; ++b)
            for (int j = 0; j < nin[1]; ++j) {
                const cplx e = E1[static_cast<std::size_t>(b) * nin[1] + j];
                for (int k = 0; k < nin[2]; ++k)
                    s2[(static_cast<std::size_t>(a) * nout[1] + b) * nin[2] + k] +=
                        e * s1[(static_cast<std::size_t>(a) * nin[1] + j) * nin[2] + k];
            }
    Cube out(static_cast<std::size_t>(nout[0]) * nout[1] * nout[2]);
    for (int ab = 0; ab < nout[0] * nout[1]; ++ab)
        for (int c = 0; c < nout[2]; ++c) {
            cplx s = 0.0;
            for (int k = 0; k < nin[2]; ++k)
                s += E2[static_cast<std::size_t>(c) * nin[2] + k] * s2[static_cast<std::size_t>(ab) * nin[2] + k];
            out[static_cast<std::size_t>(ab) * nout[2] + c] = s;
        }
    return out;
}

// E(freq index, node index) = exp(sign i omega_m x_n).
std::vector<cplx> exponential(const std::vector<double>& omega, const std::vector<double>& nodes, double sign) {
    std::vector<cplx> E(omega.size() * nodes.size());
    for (std::size_t m = 0; m < omega.size(); ++m)
        for (std::size_t n = 0; n < nodes.size(); ++n) E[m * nodes.size() + n] = std::exp(sign * I * (omega[m] * nodes[n]));
    return E;
}

std::vector<cplx> transpose(const std::vector<cplx>& E, int rows, int cols) {
    std::vector<cplx> T(E.size());
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) T[static_cast<std::size_t>(c) * rows + r] = E[static_cast<std::size_t>(r) * cols + c];
    return T;
}

} // namespace

SpacetimePotential::SpacetimePotential(int nt, int nx, double dt, double dx, std::vector<double> values)
    : nt_(nt), nx_(nx), dt_(dt), dx_(dx), values_(std::move(values)) {
    if (nt < 6 || nx < 6 || !(dt > 0.0) || !(dx > 0.0)) throw PreconditionError("space-time grid too small");
    if (values_.size() != static_cast<std::size_t>(nt) * nx * nx)
        throw PreconditionError("potential array does not match the grid");
    double peak = 0.0, shell = 0.0;
    for (int k = 0; k < nt; ++k)
        for (int i = 0; i < nx; ++i)
            for (int j = 0; j < nx; ++j) {
                const double v = at(k, i, j);
                if (!std::isfinite(v)) throw PreconditionError("potential contains non-finite values");
                peak = std::max(peak, std::abs(v));
                const bool edge = k < 2 || k >= nt - 2 || i < 2 || i >= nx - 2 || j < 2 || j >= nx - 2;
                if (edge) shell = std::max(shell, std::abs(v));
            }
    if (shell > 1e-12 * peak) throw PreconditionError("potential must vanish on the two-cell boundary shell");
}

SpacetimePotential SpacetimePotential::sample(const std::function<double(double, double, double)>& fn, int nt, int nx,
                                              double T, double X) {
    if (!(T > 0.0) || !(X > 0.0) || nt < 2 || nx < 2) throw PreconditionError("bad space-time box");
    const double dt = T / (nt - 1), dx = 2.0 * X / (nx - 1);
    std::vector<double> v(static_cast<std::size_t>(nt) * nx * nx);
    for (int k = 0; k < nt; ++k)
        for (int i = 0; i < nx; ++i)
            for (int j = 0; j < nx; ++j)
                v[(static_cast<std::size_t>(k) * nx + i) * nx + j] = fn(k * dt, -X + i * dx, -X + j * dx);
    return SpacetimePotential(nt, nx, dt, dx, std::move(v));
}

double SpacetimePotential::interpolate(double t, double x1, double x2) const {
    const double ft = t / dt_, f1 = (x1 + X()) / dx_, f2 = (x2 + X()) / dx_;
    if (!(ft >= 0.0 && ft <= nt_ - 1 && f1 >= 0.0 && f1 <= nx_ - 1 && f2 >= 0.0 && f2 <= nx_ - 1)) return 0.0;
    const int k = std::min(static_cast<int>(ft), nt_ - 2);
    const int i = std::min(static_cast<int>(f1), nx_ - 2);
    const int j = std::min(static_cast<int>(f2), nx_ - 2);
    const double wt = ft - k, w1 = f1 - i, w2 = f2 - j;
    double s = 0.0;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c)
                s += (a ? wt : 1.0 - wt) * (b ? w1 : 1.0 - w1) * (c ? w2 : 1.0 - w2) * at(k + a, i + b, j + c);
    return s;
}

SpacetimePotential SpacetimePotential::shifted(int d1, int d2) const {
    std::vector<double> v(values_.size(), 0.0);
    for (int k = 0; k < nt_; ++k)
        for (int i = 0; i < nx_; ++i)
            for (int j = 0; j < nx_; ++j) {
                const int si = i - d1, sj = j - d2;
                if (si >= 0 && si < nx_ && sj >= 0 && sj < nx_)
                    v[(static_cast<std::size_t>(k) * nx_ + i) * nx_ + j] = at(k, si, sj);
            }
    return SpacetimePotential(nt_, nx_, dt_, dx_, std::move(v));
}

double light_ray_transform(const SpacetimePotential& q, const Vec2& y, const Vec2& v) {
    require_unit(v);
    const double T = q.T();
    const double step = 0.5 * std::min(q.dt(), q.dx());
    const int n = static_cast<int>(std::ceil(T / step - 1e-9));
    const double ds = T / n;
    double sum = 0.0;
    for (int m = 0; m <= n; ++m) {
        const double s = m * ds;
        const double w = (m == 0 || m == n) ? 0.5 : 1.0;
        sum += w * q.interpolate(s, y[0] + s * v[0], y[1] + s * v[1]);
    }
    return sum * ds;
}

double minkowski_norm(const Vec2& v) {
    return -1.0 + v[0] * v[0] + v[1] * v[1];
}

RayData ray_data(const SpacetimePotential& q, const Vec2& v, int workers) {
    require_unit(v);
    RayData L;
    L.v = v;
    L.dy = q.dx();
    const int half = static_cast<int>(std::ceil((q.X() + q.T()) / q.dx()));
    L.ny = 2 * half + 1;
    L.y_lo = -half * L.dy;
    L.values.assign(static_cast<std::size_t>(L.ny) * L.ny, 0.0);
    parallel_for(L.ny, workers, [&](int a) {
        for (int b = 0; b < L.ny; ++b)
            L.values[static_cast<std::size_t>(a) * L.ny + b] =
                light_ray_transform(q, {L.y_lo + a * L.dy, L.y_lo + b * L.dy}, v);
    });
    return L;
}

SpectralSample fourier_slice(const RayData& L, const Vec2& eta) {
    double peak = 0.0, edge = 0.0;
    for (int a = 0; a < L.ny; ++a)
        for (int b = 0; b < L.ny; ++b) {
            const double v = std::abs(L.at(a, b));
            peak = std::max(peak, v);
            if (a == 0 || b == 0 || a == L.ny - 1 || b == L.ny - 1) edge = std::max(edge, v);
        }
    if (edge > 1e-8 * peak) {
        std::ostringstream os;
        os << "ray data do not decay at the edge of the y-grid (" << edge / peak << " of the peak)";
        throw PreconditionError(os.str());
    }
    std::vector<cplx> e1(L.ny), e2(L.ny);
    for (int a = 0; a < L.ny; ++a) {
        const double y = L.y_lo + a * L.dy;
        e1[a] = std::exp(-I * (eta[0] * y));
        e2[a] = std::exp(-I * (eta[1] * y));
    }
    cplx sum = 0.0;
    for (int a = 0; a < L.ny; ++a) {
        cplx row = 0.0;
        for (int b = 0; b < L.ny; ++b) row += e2[b] * L.at(a, b);
        sum += e1[a] * row;
    }
    SpectralSample s;
    s.eta = eta;
    s.value = sum * L.dy * L.dy;
    const double tau = -(eta[0] * L.v[0] + eta[1] * L.v[1]);
    const double bound = norm2(eta);
    // -eta . v can leave [-|eta|, |eta|] by a rounding error only; snap it back.
    if (std::abs(tau) > bound * (1.0 + 1e-12))
        throw PipelineFault("slice frequency left the spacelike cone");
    s.tau = std::clamp(tau, -bound, bound);
    return s;
}

Vec2 direction_for(double a, const Vec2& eta) {
    if (!(a >= -1.0 && a <= 1.0)) throw PreconditionError("a must lie in [-1, 1]");
    const double n = norm2(eta);
    if (!(n > 0.0)) throw PreconditionError("eta must be nonzero");
    const Vec2 u{eta[0] / n, eta[1] / n};
    const Vec2 w{-u[1], u[0]};
    const double c = std::sqrt(std::max(0.0, 1.0 - a * a));
    return {-a * u[0] + c * w[0], -a * u[1] + c * w[1]};
}

cplx direct_transform(const SpacetimePotential& q, double tau, const Vec2& eta) {
    std::vector<cplx> e1(q.nx()), e2(q.nx());
    for (int i = 0; i < q.nx(); ++i) {
        e1[i] = std::exp(-I * (eta[0] * q.x(i)));
        e2[i] = std::exp(-I * (eta[1] * q.x(i)));
    }
    cplx sum = 0.0;
    for (int k = 0; k < q.nt(); ++k) {
        cplx plane = 0.0;
        for (int i = 0; i < q.nx(); ++i) {
            cplx row = 0.0;
            for (int j = 0; j < q.nx(); ++j) row += e2[j] * q.at(k, i, j);
            plane += e1[i] * row;
        }
        sum += std::exp(-I * (tau * q.t(k))) * plane;
    }
    return sum * q.dt() * q.dx() * q.dx();
}

ConeRecovery invert_on_cone(const SpacetimePotential& q, const ConeOptions& o) {
    const int nt = q.nt(), nx = q.nx();
    if (nt % 2 == 0 || nx % 2 == 0) throw PreconditionError("cone inversion needs odd grid sizes");
    if (!(o.band_fraction > 0.0) || o.band_fraction > 1.0) throw PreconditionError("band fraction must be in (0, 1]");
    ConeRecovery rec;
    rec.m_tau = symmetric_indices(nt);
    rec.m_eta = symmetric_indices(nx);
    const double dtau = 2.0 * std::numbers::pi / (nt * q.dt());
    const double deta = 2.0 * std::numbers::pi / (nx * q.dx());
    const double band = o.band_fraction * std::numbers::pi / q.dx();

    std::vector<double> tau(nt), eta(nx), tn(nt), xn(nx);
    for (int m = 0; m < nt; ++m) tau[m] = rec.m_tau[m] * dtau;
    for (int p = 0; p < nx; ++p) eta[p] = rec.m_eta[p] * deta;
    for (int k = 0; k < nt; ++k) tn[k] = q.t(k);
    for (int i = 0; i < nx; ++i) xn[i] = q.x(i);

    auto index = [&](int m, int p1, int p2) { return (static_cast<std::size_t>(m) * nx + p1) * nx + p2; };
    rec.mask.assign(static_cast<std::size_t>(nt) * nx * nx, false);
    std::vector<std::size_t> cone;
    for (int m = 0; m < nt; ++m)
        for (int p1 = 0; p1 < nx; ++p1)
            for (int p2 = 0; p2 < nx; ++p2) {
                const double en = std::hypot(eta[p1], eta[p2]);
                if (en <= band && std::abs(tau[m]) <= en) {
                    rec.mask[index(m, p1, p2)] = true;
                    cone.push_back(index(m, p1, p2));
                }
            }

    // Slices: one ray-data set per cone frequency.
    rec.samples.resize(cone.size());
    parallel_for(static_cast<int>(cone.size()), o.workers, [&](int c) {
        const std::size_t id = cone[c];
        const int m = static_cast<int>(id / (static_cast<std::size_t>(nx) * nx));
        const int p1 = static_cast<int>((id / nx) % nx);
        const int p2 = static_cast<int>(id % nx);
        const Vec2 e{eta[p1], eta[p2]};
        const double en = std::hypot(e[0], e[1]);
        const Vec2 v = en > 0.0 ? direction_for(std::clamp(tau[m] / en, -1.0, 1.0), e) : Vec2{1.0, 0.0};
        SpectralSample s = fourier_slice(ray_data(q, v), e);
        s.tau = en > 0.0 ? s.tau : 0.0;
        rec.samples[c] = s;
    });

    // Direct DFT of q on the whole symmetric grid.
    Cube qc(q.values().begin(), q.values().end());
    const Cube Q = separable(qc, {nt, nx, nx}, {nt, nx, nx}, exponential(tau, tn, -1.0), exponential(eta, xn, -1.0),
                             exponential(eta, xn, -1.0));
    const double cell = q.dt() * q.dx() * q.dx();

    Cube sliced(Q.size()), direct(Q.size());
    double qmax = 0.0;
    for (std::size_t c = 0; c < cone.size(); ++c) qmax = std::max(qmax, std::abs(Q[cone[c]] * cell));
    double worst = 0.0;
    for (std::size_t c = 0; c < cone.size(); ++c) {
        const cplx ref = Q[cone[c]] * cell;
        sliced[cone[c]] = rec.samples[c].value;
        direct[cone[c]] = ref;
        const double err = std::abs(rec.samples[c].value - ref);
        rec.residuals.push_back({rec.samples[c].tau, rec.samples[c].eta, err, qmax > 0.0 ? err / qmax : 0.0});
        worst = std::max(worst, err);
        const double en = std::hypot(rec.samples[c].eta[0], rec.samples[c].eta[1]);
        rec.cone_admissible = rec.cone_admissible && std::abs(rec.samples[c].tau) <= en;
    }
    rec.slice_rel_err = qmax > 0.0 ? worst / qmax : 0.0;

    // Hermitian cross-check: the mask is symmetric under (m, p) -> (-m, -p).
    double herm = 0.0;
    for (std::size_t c = 0; c < cone.size(); ++c) {
        const std::size_t id = cone[c];
        const int m = static_cast<int>(id / (static_cast<std::size_t>(nx) * nx));
        const int p1 = static_cast<int>((id / nx) % nx);
        const int p2 = static_cast<int>(id % nx);
        const std::size_t mirror = index(nt - 1 - m, nx - 1 - p1, nx - 1 - p2);
        herm = std::max(herm, std::abs(sliced[id] - std::conj(sliced[mirror])));
    }
    rec.hermitian_defect = qmax > 0.0 ? herm / qmax : 0.0;

    // Inverse DFT; the symmetric grid with odd sizes is complete, so 1/(N cell) inverts the forward sum.
    const double norm = 1.0 / (static_cast<double>(nt) * nx * nx * cell);
    const auto Et = transpose(exponential(tau, tn, 1.0), nt, nt);
    const auto Ex = transpose(exponential(eta, xn, 1.0), nx, nx);
    const Cube back = separable(sliced, {nt, nx, nx}, {nt, nx, nx}, Et, Ex, Ex);
    const Cube back_ref = separable(direct, {nt, nx, nx}, {nt, nx, nx}, Et, Ex, Ex);
    rec.q_cone.resize(back.size());
    rec.q_cone_ref.resize(back.size());
    double num = 0.0, den = 0.0, im = 0.0, re = 0.0, miss = 0.0, total = 0.0;
    for (std::size_t n = 0; n < back.size(); ++n) {
        rec.q_cone[n] = back[n].real() * norm;
        rec.q_cone_ref[n] = back_ref[n].real() * norm;
        im = std::max(im, std::abs(back[n].imag() * norm));
        re = std::max(re, std::abs(rec.q_cone[n]));
        num += (rec.q_cone[n] - rec.q_cone_ref[n]) * (rec.q_cone[n] - rec.q_cone_ref[n]);
        den += rec.q_cone_ref[n] * rec.q_cone_ref[n];
        const double qv = q.values()[n];
        miss += (qv - rec.q_cone[n]) * (qv - rec.q_cone[n]);
        total += qv * qv;
    }
    rec.recovery_rel_err = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
    rec.imaginary_residue = re > 0.0 ? im / re : im;
    rec.energy_recovery = total > 0.0 ? 1.0 - miss / total : 1.0;
    return rec;
}

double null_line_integral_1d(const std::function<double(double, double)>& q, double y, int v, double t_lo, double t_hi,
                             int n) {
    if (v != 1 && v != -1) throw PreconditionError("null direction in one dimension is +1 or -1");
    if (n < 1 || !(t_hi > t_lo)) throw PreconditionError("bad quadrature range");
    const double ds = (t_hi - t_lo) / n;
    double sum = 0.0;
    for (int m = 0; m <= n; ++m) {
        const double s = t_lo + m * ds;
        sum += ((m == 0 || m == n) ? 0.5 : 1.0) * q(s, y + v * s);
    }
    return sum * ds;
}

double radial_bump(double t, double x1, double x2, double t0, double radius) {
    const double r2 = ((t - t0) * (t - t0) + x1 * x1 + x2 * x2) / (radius * radius);
    return r2 < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - r2)) : 0.0;
}

double smooth_plateau(double t, double lo, double hi, double ramp) {
    auto psi = [](double z) { return z > 0.0 ? std::exp(-1.0 / z) : 0.0; };
    auto step = [&](double z) {
        const double a = psi(z), b = psi(1.0 - z);
        return a / (a + b);
    };
    if (t <= lo || t >= hi) return 0.0;
    return step((t - lo) / ramp) * step((hi - t) / ramp);
}

} // namespace bcw
