#pragma once

#include <complex>
#include <functional>
#include <vector>

#include "bcw/grid.hpp"

namespace bcw {

using cplx = std::complex<double>;
using Profile = std::function<double(double)>;
/// q(t, x1, x2); x2 is ignored in one space dimension.
using SpacetimeFunction = std::function<double(double, double, double)>;

/// phi(t, x) = t + v . x with |v| = 1.
struct PlaneWavePhase {
    std::vector<double> v;

    static PlaneWavePhase make(std::vector<double> v);
    double value(double t, const std::vector<double>& x) const;
    /// |d_t phi|^2 - |grad phi|^2.
    double eikonal_residual() const;
};

/// Space-time box for the ansatz. The time step equals the x1 step, so the rays
/// t - x1 = const run along grid diagonals.
struct GOGrid {
    int dim = 1;
    double h = 0.01;
    int nt = 0;
    double x1_lo = 0.0;
    int n1 = 0;
    double x2_lo = 0.0;
    double h2 = 1.0;
    int n2 = 1;
    /// Extra rows below t = 0 and above t_max, consumed one per transport level.
    int pad = 0;

    double t(int k) const { return k * h; }
    double x1(int i) const { return x1_lo + i * h; }
    double x2(int m) const { return dim == 1 ? 0.0 : x2_lo + m * h2; }
    int rows() const { return nt + 2 * pad; }
    double t_max() const { return (nt - 1) * h; }

    /// Box [0, T] x [x1_lo, x1_hi] (x [x2_lo, x2_hi] when dim = 2).
    static GOGrid box1d(double T, double x1_lo, double x1_hi, double h, int pad);
    static GOGrid box2d(double T, double x1_lo, double x1_hi, double x2_lo, double x2_hi, double h, double h2, int pad);
};

/// Complex samples on the padded grid; row r holds t = (r - pad) h.
class ComplexField {
public:
    ComplexField() = default;
    explicit ComplexField(const GOGrid& g) : rows_(g.rows()), n1_(g.n1), n2_(g.n2), pad_(g.pad), data_(rows_ * n1_ * n2_) {}

    cplx& at(int k, int i, int m = 0) { return data_[(static_cast<std::size_t>(k + pad_) * n1_ + i) * n2_ + m]; }
    cplx at(int k, int i, int m = 0) const { return data_[(static_cast<std::size_t>(k + pad_) * n1_ + i) * n2_ + m]; }
    /// Zero outside the stored box.
    cplx get(int k, int i, int m = 0) const {
        if (k < -pad_ || k >= rows_ - pad_ || i < 0 || i >= n1_ || m < 0 || m >= n2_) return 0.0;
        return at(k, i, m);
    }

private:
    int rows_ = 0, n1_ = 0, n2_ = 0, pad_ = 0;
    std::vector<cplx> data_;
};

/// Amplitudes a_0 .. a_N of the ansatz along the ray family t - x1 = tau0.
struct AmplitudeStack {
    GOGrid grid;
    double tau0 = 0.0;
    std::vector<ComplexField> a;
    /// Row range [lo[j], hi[j]] on which a_j is available.
    std::vector<int> lo, hi;

    int order() const { return static_cast<int>(a.size()) - 1; }
};

/// (box_h + q) a at row k, the discrete wave operator with d_t^2 - d_x1^2 - d_x2^2.
cplx wave_operator(const ComplexField& a, const GOGrid& g, const SpacetimeFunction& q, int k, int i, int m);

/// a_j from a_{j-1}: d_s a_j = (i/2)(box + q) a_{j-1}, a_j = 0 on t = 0, integrated
/// along grid diagonals with the trapezoid rule (rows below t = 0 by the same rule run backwards).
ComplexField transport_step(const ComplexField& a_prev, int prev_lo, int prev_hi, const SpacetimeFunction& q,
                            const GOGrid& g, int& lo, int& hi);

/// a_0 = chi(t - x1 - tau0) eta(x2) and N transport levels.
AmplitudeStack build_amplitudes(int N, const Profile& chi, double chi_half_width, const Profile& eta,
                                const SpacetimeFunction& q, const GOGrid& g, double tau0 = 0.0);

struct GOAnsatz {
    double sigma = 0.0;
    PlaneWavePhase phase;
    AmplitudeStack amps;

    /// A = sum_j sigma^-j a_j.
    cplx amplitude(int k, int i, int m = 0) const;
    /// e^{i sigma phi} A.
    cplx value(int k, int i, int m = 0) const;
};

GOAnsatz build_ansatz(double sigma, int N, const Profile& chi, double chi_half_width, const Profile& eta,
                      const SpacetimeFunction& q, const GOGrid& g, double tau0 = 0.0);

/// L2((0,T) x box) norm of (box + q)(e^{i sigma phi} A), phase differentiated exactly and A by
/// differences at the diagonal midpoints.
double residual_norm(const GOAnsatz& ansatz, const SpacetimeFunction& q);

struct ResidualScaling {
    std::vector<double> sigma;
    std::vector<double> norm;
    double slope = 0.0;
};

/// Least-squares slope of log residual vs log sigma. Needs >= 10 points per wavelength at the
/// largest sigma.
ResidualScaling residual_scaling(const Profile& chi, double chi_half_width, const Profile& eta,
                                 const SpacetimeFunction& q, int N, const std::vector<double>& sigma_list,
                                 const GOGrid& g, double tau0 = 0.0);

struct RemainderNorms {
    double sigma = 0.0;
    double l2 = 0.0;
    double h1 = 0.0;
};

/// Solves (box + q) r = -(box + q)(e^{i sigma phi} A) with zero Cauchy data by the leapfrog
/// solver (real and imaginary parts separately) and returns r(T, .) on the x1 grid.
/// Requires dim = 1 and a time-independent potential q(x).
std::vector<cplx> remainder_at_T(const GOAnsatz& ansatz, const Profile& q);

RemainderNorms remainder_norms(const GOAnsatz& ansatz, const Profile& q);

struct NonvanishingCertificate {
    bool certified = false;
    double sigma = 0.0;
    double u_abs = 0.0;
    double ansatz_abs = 0.0;
    /// Initial data (e^{i sigma phi} A, d_t(e^{i sigma phi} A)) at t = 0 on the x1 grid.
    std::vector<double> x;
    std::vector<cplx> u0, u1;
    std::vector<double> sigma_tried;
};

struct CertifyOptions {
    int N = 2;
    double chi_half_width = 0.1;
    /// chi(0) = chi_peak; zero makes the certificate impossible.
    double chi_peak = 1.0;
    double sigma_start = 8.0;
    double sigma_max = 512.0;
    double margin = 0.3;
};

/// Builds the ansatz on the ray through (T, x0), solves for the remainder and checks
/// |u(T, x0)| >= |A(T, x0)| / 2, doubling sigma until it holds or sigma_max is passed.
NonvanishingCertificate certify_nonvanishing(double x0, double T, const Profile& q, const CertifyOptions& options = {});

/// max |e^{-i sigma phi} box_h(e^{i sigma phi} a) - [box_h a + i sigma(2 phi_t a_t - 2 grad phi . grad a
/// + (box phi) a) - sigma^2 (phi_t^2 - |grad phi|^2) a]| over interior nodes of a 1+1 grid with
/// step h, all derivatives by centered differences.
double conjugation_defect(const std::function<double(double, double)>& phi, const std::function<cplx(double, double)>& a,
                          double sigma, double h, double T, double x_lo, double x_hi);

/// Fitted slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

} // namespace bcw
