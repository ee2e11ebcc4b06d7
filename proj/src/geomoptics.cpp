#include "bcw/geomoptics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "bcw/array2d.hpp"
#include "bcw/errors.hpp"
#include "bcw/wave1d.hpp"

namespace bcw {

namespace {

constexpr cplx I(0.0, 1.0);

int steps_for(double length, double h) {
    return static_cast<int>(std::lround(length / h));
}

// Phase t - x1 at node (k, i), written through k - i so it is constant along diagonals to the bit.
double phase_at(const GOGrid& g, int k, int i) {
    return (k - i) * g.h - g.x1_lo;
}

double weight_per_node(const GOGrid& g) {
    return g.h * g.h * (g.dim == 2 ? g.h2 : 1.0);
}

} // namespace

PlaneWavePhase PlaneWavePhase::make(std::vector<double> v) {
    if (v.empty() || v.size() > 3) throw PreconditionError("phase direction needs 1 to 3 components");
    double n2 = 0.0;
    for (double c : v) n2 += c * c;
    if (std::abs(n2 - 1.0) > 1e-12) throw PreconditionError("phase direction must be a unit vector");
    return PlaneWavePhase{std::move(v)};
}

double PlaneWavePhase::value(double t, const std::vector<double>& x) const {
    if (x.size() != v.size()) throw PreconditionError("point dimension does not match the phase");
    double s = t;
    for (std::size_t d = 0; d < v.size(); ++d) s += v[d] * x[d];
    return s;
}

double PlaneWavePhase::eikonal_residual() const {
    double n2 = 0.0;
    for (double c : v) n2 += c * c;
    return 1.0 - n2;
}

GOGrid GOGrid::box1d(double T, double x1_lo, double x1_hi, double h, int pad) {
    if (!(h > 0.0) || !(T > 0.0) || !(x1_hi > x1_lo)) throw PreconditionError("degenerate ansatz box");
    GOGrid g;
    g.dim = 1;
    g.h = h;
    g.nt = steps_for(T, h) + 1;
    g.x1_lo = x1_lo;
    g.n1 = steps_for(x1_hi - x1_lo, h) + 1;
    g.pad = pad;
    return g;
}

GOGrid GOGrid::box2d(double T, double x1_lo, double x1_hi, double x2_lo, double x2_hi, double h, double h2, int pad) {
    GOGrid g = box1d(T, x1_lo, x1_hi, h, pad);
    if (!(h2 > 0.0) || !(x2_hi > x2_lo)) throw PreconditionError("degenerate ansatz box");
    g.dim = 2;
    g.x2_lo = x2_lo;
    g.h2 = h2;
    g.n2 = steps_for(x2_hi - x2_lo, h2) + 1;
    return g;
}

cplx wave_operator(const ComplexField& a, const GOGrid& g, const SpacetimeFunction& q, int k, int i, int m) {
    const double ih2 = 1.0 / (g.h * g.h);
    const cplx c = a.get(k, i, m);
    cplx box = (a.get(k + 1, i, m) + a.get(k - 1, i, m) - a.get(k, i + 1, m) - a.get(k, i - 1, m)) * ih2;
    if (g.dim == 2) box -= (a.get(k, i, m + 1) - 2.0 * c + a.get(k, i, m - 1)) / (g.h2 * g.h2);
    return box + q(g.t(k), g.x1(i), g.x2(m)) * c;
}

ComplexField transport_step(const ComplexField& a_prev, int prev_lo, int prev_hi, const SpacetimeFunction& q,
                            const GOGrid& g, int& lo, int& hi) {
    lo = prev_lo + 1;
    hi = prev_hi - 1;
    if (lo > 0 || hi < g.nt - 1) throw PreconditionError("not enough padding rows for another transport level");
    ComplexField src(g);
    for (int k = lo; k <= hi; ++k)
        for (int i = 0; i < g.n1; ++i)
            for (int m = 0; m < g.n2; ++m) src.at(k, i, m) = wave_operator(a_prev, g, q, k, i, m);

    ComplexField a(g);
    const cplx w = 0.25 * I * g.h;
    for (int k = 1; k <= hi; ++k)
        for (int i = 0; i < g.n1; ++i)
            for (int m = 0; m < g.n2; ++m)
                a.at(k, i, m) = a.get(k - 1, i - 1, m) + w * (src.at(k, i, m) + src.get(k - 1, i - 1, m));
    for (int k = -1; k >= lo; --k)
        for (int i = 0; i < g.n1; ++i)
            for (int m = 0; m < g.n2; ++m)
                a.at(k, i, m) = a.get(k + 1, i + 1, m) - w * (src.get(k + 1, i + 1, m) + src.at(k, i, m));
    return a;
}

AmplitudeStack build_amplitudes(int N, const Profile& chi, double chi_half_width, const Profile& eta,
                                const SpacetimeFunction& q, const GOGrid& g, double tau0) {
    if (N < 0) throw PreconditionError("ansatz order must be nonnegative");
    if (g.pad < N + 1) throw PreconditionError("ansatz grid needs at least N + 1 padding rows");
    if (2.0 * chi_half_width / g.h < 8.0) {
        std::ostringstream os;
        os << "chi is resolved by " << 2.0 * chi_half_width / g.h << " points; need h <= " << chi_half_width / 4.0;
        throw PreconditionError(os.str());
    }
    AmplitudeStack st;
    st.grid = g;
    st.tau0 = tau0;
    ComplexField a0(g);
    double peak = 0.0, edge = 0.0;
    for (int k = -g.pad; k < g.nt + g.pad; ++k)
        for (int i = 0; i < g.n1; ++i)
            for (int m = 0; m < g.n2; ++m) {
                const double v = chi(phase_at(g, k, i) - tau0) * (g.dim == 2 ? eta(g.x2(m)) : 1.0);
                a0.at(k, i, m) = v;
                peak = std::max(peak, std::abs(v));
                const bool boundary = i == 0 || i == g.n1 - 1 || (g.dim == 2 && (m == 0 || m == g.n2 - 1));
                if (boundary) edge = std::max(edge, std::abs(v));
            }
    if (edge > 1e-12 * std::max(peak, 1e-300)) throw PreconditionError("ansatz support reaches the edge of the box");
    st.a.push_back(std::move(a0));
    st.lo.push_back(-g.pad);
    st.hi.push_back(g.nt - 1 + g.pad);
    for (int j = 1; j <= N; ++j) {
        int lo = 0, hi = 0;
        st.a.push_back(transport_step(st.a.back(), st.lo.back(), st.hi.back(), q, g, lo, hi));
        st.lo.push_back(lo);
        st.hi.push_back(hi);
    }
    return st;
}

cplx GOAnsatz::amplitude(int k, int i, int m) const {
    cplx s = 0.0;
    double p = 1.0;
    for (const auto& a : amps.a) {
        s += p * a.at(k, i, m);
        p /= sigma;
    }
    return s;
}

cplx GOAnsatz::value(int k, int i, int m) const {
    return std::exp(I * (sigma * phase_at(amps.grid, k, i))) * amplitude(k, i, m);
}

GOAnsatz build_ansatz(double sigma, int N, const Profile& chi, double chi_half_width, const Profile& eta,
                      const SpacetimeFunction& q, const GOGrid& g, double tau0) {
    if (!(sigma > 0.0)) throw PreconditionError("sigma must be positive");
    GOAnsatz an;
    an.sigma = sigma;
    an.phase = PlaneWavePhase::make(g.dim == 1 ? std::vector<double>{-1.0} : std::vector<double>{-1.0, 0.0});
    an.amps = build_amplitudes(N, chi, chi_half_width, eta, q, g, tau0);
    return an;
}

double residual_norm(const GOAnsatz& an, const SpacetimeFunction& q) {
    const GOGrid& g = an.amps.grid;
    const int N = an.amps.order();
    // G = sum_j sigma^-j (box_h + q) a_j on the physical rows.
    ComplexField G(g);
    double p = 1.0;
    for (int j = 0; j <= N; ++j) {
        for (int k = 0; k < g.nt; ++k)
            for (int i = 0; i < g.n1; ++i)
                for (int m = 0; m < g.n2; ++m) G.at(k, i, m) += p * wave_operator(an.amps.a[j], g, q, k, i, m);
        p /= an.sigma;
    }
    const cplx drift = 2.0 * I * an.sigma / g.h;
    double sum = 0.0;
    for (int k = 1; k < g.nt; ++k)
        for (int i = 1; i < g.n1; ++i)
            for (int m = 0; m < g.n2; ++m) {
                const cplx R = 0.5 * (G.at(k, i, m) + G.at(k - 1, i - 1, m)) +
                               drift * (an.amplitude(k, i, m) - an.amplitude(k - 1, i - 1, m));
                sum += std::norm(R);
            }
    return std::sqrt(sum * weight_per_node(g));
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw PreconditionError("slope fit needs two or more points");
    const double n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw PreconditionError("slope fit needs positive data");
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ResidualScaling residual_scaling(const Profile& chi, double chi_half_width, const Profile& eta,
                                 const SpacetimeFunction& q, int N, const std::vector<double>& sigma_list,
                                 const GOGrid& g, double tau0) {
    if (sigma_list.size() < 2) throw PreconditionError("residual scaling needs two or more sigma values");
    const double smax = *std::max_element(sigma_list.begin(), sigma_list.end());
    const double wavelength = 2.0 * std::numbers::pi / smax;
    if (wavelength / g.h < 10.0 - 1e-9) {
        std::ostringstream os;
        os << "grid gives " << wavelength / g.h << " points per wavelength at sigma = " << smax
           << "; need h <= " << wavelength / 10.0;
        throw PreconditionError(os.str());
    }
    // The amplitudes do not depend on sigma; build them once.
    GOAnsatz an = build_ansatz(sigma_list.front(), N, chi, chi_half_width, eta, q, g, tau0);
    ResidualScaling rs;
    for (double s : sigma_list) {
        an.sigma = s;
        rs.sigma.push_back(s);
        rs.norm.push_back(residual_norm(an, q));
    }
    bool positive = true;
    for (double v : rs.norm) positive = positive && v > 0.0;
    rs.slope = positive ? loglog_slope(rs.sigma, rs.norm) : 0.0;
    return rs;
}

std::vector<cplx> remainder_at_T(const GOAnsatz& an, const Profile& q) {
    const GOGrid& g = an.amps.grid;
    if (g.dim != 1) throw PreconditionError("remainder solve is implemented in one space dimension");
    const int N = an.amps.order();
    // Map [x1_lo, x1_hi] onto [0, 1]; unit speed becomes c = 1/L and dt = dx gives lambda = 1.
    const double L = (g.n1 - 1) * g.h;
    const SpatialGrid sg(g.n1);
    const TimeGrid tg(g.nt, g.h);
    const PotentialGrid qg = PotentialGrid::sample(sg, [&](double xi) { return q(g.x1_lo + L * xi); });
    const SpeedProfile c = SpeedProfile::constant(sg, 1.0 / L);
    const SpacetimeFunction qs = [&](double, double x, double) { return q(x); };

    Array2D re(g.nt, g.n1), im(g.nt, g.n1);
    const double scale = std::pow(an.sigma, -N);
    for (int k = 0; k < g.nt; ++k)
        for (int i = 1; i + 1 < g.n1; ++i) {
            const cplx R = std::exp(I * (an.sigma * phase_at(g, k, i))) * scale *
                           wave_operator(an.amps.a[N], g, qs, k, i, 0);
            re(k, i) = -R.real();
            im(k, i) = -R.imag();
        }
    const SourceSignal zero = zero_source(tg);
    ForwardOptions opt;
    opt.forcing = &re;
    const WaveField wr = solve_forward(qg, c, zero, sg, tg, opt);
    opt.forcing = &im;
    const WaveField wi = solve_forward(qg, c, zero, sg, tg, opt);
    std::vector<cplx> r(g.n1);
    for (int i = 0; i < g.n1; ++i) r[i] = cplx(wr.u(g.nt - 1, i), wi.u(g.nt - 1, i));
    return r;
}

RemainderNorms remainder_norms(const GOAnsatz& an, const Profile& q) {
    const std::vector<cplx> r = remainder_at_T(an, q);
    const double h = an.amps.grid.h;
    double s0 = 0.0, s1 = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        s0 += std::norm(r[i]) * h;
        if (i + 1 < r.size()) s1 += std::norm((r[i + 1] - r[i]) / h) * h;
    }
    return {an.sigma, std::sqrt(s0), std::sqrt(s0 + s1)};
}

NonvanishingCertificate certify_nonvanishing(double x0, double T, const Profile& q, const CertifyOptions& o) {
    if (!(T > 0.0)) throw PreconditionError("T must be positive");
    if (!(o.sigma_start > 0.0) || o.sigma_max < o.sigma_start) throw PreconditionError("bad sigma range");
    const double w = o.chi_half_width;
    const Profile chi = [&](double tau) { return o.chi_peak * smooth_bump(tau, -w, w); };
    const Profile one = [](double) { return 1.0; };
    const SpacetimeFunction qs = [&](double, double x, double) { return q(x); };
    const double tau0 = T - x0;

    NonvanishingCertificate cert;
    for (double sigma = o.sigma_start; sigma <= o.sigma_max * (1.0 + 1e-12); sigma *= 2.0) {
        cert.sigma_tried.push_back(sigma);
        const double h_target = std::min(2.0 * std::numbers::pi / (10.0 * sigma), w / 4.0);
        const int nT = static_cast<int>(std::ceil(T / h_target));
        const double h = T / nT;
        const int pad = o.N + 1;
        // x0 sits on a node; the box keeps reflections from its walls out of the cone of (T, x0).
        const int left = static_cast<int>(std::ceil((T + w + o.margin + pad * h) / h));
        const int right = static_cast<int>(std::ceil((T + o.margin + pad * h) / h));
        GOGrid g = GOGrid::box1d(T, x0 - left * h, x0 + right * h, h, pad);
        g.nt = nT + 1;
        g.n1 = left + right + 1;
        const GOAnsatz an = build_ansatz(sigma, o.N, chi, w, one, qs, g, tau0);
        const std::vector<cplx> r = remainder_at_T(an, q);
        const cplx A = an.amplitude(nT, left);
        const cplx u = an.value(nT, left) + r[left];
        cert.sigma = sigma;
        cert.ansatz_abs = std::abs(A);
        cert.u_abs = std::abs(u);
        cert.x.resize(g.n1);
        cert.u0.resize(g.n1);
        cert.u1.resize(g.n1);
        for (int i = 0; i < g.n1; ++i) {
            cert.x[i] = g.x1(i);
            cert.u0[i] = an.value(0, i);
            const cplx At = (an.amplitude(1, i) - an.amplitude(-1, i)) / (2.0 * h);
            cert.u1[i] = std::exp(I * (sigma * phase_at(g, 0, i))) * (I * sigma * an.amplitude(0, i) + At);
        }
        // A(T, x0) = chi(0) + O(1/sigma); a vanishing chi(0) certifies nothing.
        if (std::abs(chi(0.0)) > 1e-8 && cert.u_abs >= 0.5 * cert.ansatz_abs) {
            cert.certified = true;
            return cert;
        }
    }
    return cert;
}

double conjugation_defect(const std::function<double(double, double)>& phi, const std::function<cplx(double, double)>& a,
                          double sigma, double h, double T, double x_lo, double x_hi) {
    const int nt = steps_for(T, h);
    const int nx = steps_for(x_hi - x_lo, h);
    if (nt < 2 || nx < 2) throw PreconditionError("conjugation grid too coarse");
    auto e = [&](double t, double x) { return std::exp(I * (sigma * phi(t, x))); };
    const double ih2 = 1.0 / (h * h);
    double worst = 0.0;
    for (int k = 1; k < nt; ++k)
        for (int i = 1; i < nx; ++i) {
            const double t = k * h, x = x_lo + i * h;
            auto w = [&](double tt, double xx) { return e(tt, xx) * a(tt, xx); };
            const cplx lhs =
                std::conj(e(t, x)) * (w(t + h, x) + w(t - h, x) - w(t, x + h) - w(t, x - h)) * ih2;
            const cplx a0 = a(t, x);
            const cplx box_a = (a(t + h, x) + a(t - h, x) - a(t, x + h) - a(t, x - h)) * ih2;
            const cplx at = (a(t + h, x) - a(t - h, x)) / (2.0 * h);
            const cplx ax = (a(t, x + h) - a(t, x - h)) / (2.0 * h);
            const double pt = (phi(t + h, x) - phi(t - h, x)) / (2.0 * h);
            const double px = (phi(t, x + h) - phi(t, x - h)) / (2.0 * h);
            const double box_p = (phi(t + h, x) + phi(t - h, x) - phi(t, x + h) - phi(t, x - h)) * ih2;
            const cplx rhs = box_a + I * sigma * (2.0 * pt * at - 2.0 * px * ax + box_p * a0) -
                             sigma * sigma * (pt * pt - px * px) * a0;
            worst = std::max(worst, std::abs(lhs - rhs));
        }
    return worst;
}

} // namespace bcw
