#include "bcw/connecting.hpp"

#include <cmath>
#include <sstream>

#include "bcw/errors.hpp"
#include "bcw/parallel.hpp"

namespace bcw {

std::vector<double> DtnMatrix::apply(const std::vector<double>& f) const {
    if (static_cast<int>(f.size()) != size()) throw PreconditionError("source length does not match the DtN matrix");
    const Eigen::Map<const Eigen::VectorXd> fv(f.data(), size());
    Eigen::VectorXd out = entries * fv;
    return {out.data(), out.data() + out.size()};
}

namespace {

// Flux response to the boundary sequence `boundary` on a grid with unit speed,
// started at the first nonzero boundary level (everything before is zero).
void march_column(const std::vector<double>& qv, double dx, double dt, DtnStencil stencil,
                  const std::vector<double>& boundary, int onset, std::vector<double>& flux) {
    const int nx = static_cast<int>(qv.size());
    const int nt = static_cast<int>(boundary.size());
    std::vector<double> um(nx, 0.0), uc(nx, 0.0), up(nx, 0.0);
    const double l2 = dt * dt / (dx * dx);
    const double dt2 = dt * dt;
    const double q0 = qv[0];
    std::fill(flux.begin(), flux.end(), 0.0);
    // The summation-by-parts stencil reads one boundary level ahead.
    const int first = std::max(onset - 1, 0);
    // Interior nodes beyond the light cone stay zero; track the active extent.
    int reach = 1;
    for (int k = first; k < nt; ++k) {
        uc[0] = boundary[k];
        flux[k] = dtn_sample(stencil, k, dx, dt, q0, 1.0, boundary, uc[1], uc[2]);
        if (k + 1 == nt) break;
        if (k >= onset) {
            reach = std::min(reach + 1, nx - 1);
            for (int i = 1; i < reach; ++i)
                up[i] = 2.0 * uc[i] - um[i] + l2 * (uc[i + 1] - 2.0 * uc[i] + uc[i - 1]) - dt2 * qv[i] * uc[i];
            up[0] = 0.0;
            up[nx - 1] = 0.0;
            std::swap(um, uc);
            std::swap(uc, up);
        }
    }
}

} // namespace

DtnMatrix assemble_dtn(const std::function<double(double)>& q, const SpatialGrid& sg, const TimeGrid& tg,
                       const DtnAssemblyOptions& options) {
    const int r = options.refinement;
    if (r != 1 && r != 2) throw PreconditionError("refinement must be 1 or 2");
    const double lambda = tg.dt() / sg.dx();
    if (lambda > 1.0 + 1e-12) {
        std::ostringstream os;
        os << "CFL condition violated: lambda = " << lambda << " > 1";
        throw PreconditionError(os.str());
    }
    const SpatialGrid fsg = r == 1 ? sg : sg.refined();
    const TimeGrid ftg = r == 1 ? tg : tg.refined(2);
    std::vector<double> qv(fsg.size());
    for (int i = 0; i < fsg.size(); ++i) {
        qv[i] = q(fsg.x(i));
        if (!std::isfinite(qv[i])) throw PreconditionError("potential contains non-finite values");
    }

    const int nt = tg.size();
    const int nft = ftg.size();
    DtnMatrix dtn{Eigen::MatrixXd::Zero(nt, nt), tg, fsg.size(), r, options.stencil};
    parallel_for(nt, options.workers, [&](int j) {
        std::vector<double> boundary(nft, 0.0), flux(nft, 0.0);
        int onset = r * j;
        boundary[r * j] = 1.0;
        if (r == 2) {
            if (2 * j - 1 >= 0) boundary[2 * j - 1] = 0.5;
            if (2 * j + 1 < nft) boundary[2 * j + 1] = 0.5;
            onset = std::max(2 * j - 1, 0);
        }
        march_column(qv, fsg.dx(), ftg.dt(), options.stencil, boundary, onset, flux);
        for (int k = 0; k < nt; ++k) dtn.entries(k, j) = flux[r * k];
    });
    return dtn;
}

DtnMatrix assemble_dtn(const PotentialGrid& q, const SpatialGrid& sg, const TimeGrid& tg,
                       const DtnAssemblyOptions& options) {
    if (static_cast<int>(q.values.size()) != sg.size()) throw PreconditionError("potential length does not match the grid");
    if (options.refinement != 1) throw PreconditionError("refined assembly needs the potential as a function of x");
    const double dx = sg.dx();
    const auto& v = q.values;
    return assemble_dtn([&](double x) { return v[std::lround(x / dx)]; }, sg, tg, options);
}

ConnectingKernel blagoveshchenskii(const SourceSignal& f, const SourceSignal& h, const DtnMatrix& dtn) {
    const int n = dtn.size();
    if (static_cast<int>(f.samples.size()) != n || static_cast<int>(h.samples.size()) != n)
        throw PreconditionError("sources and DtN matrix live on different time grids");
    const std::vector<double> lf = dtn.apply(f);
    const std::vector<double> lh = dtn.apply(h);
    const double dt2 = dtn.tg.dt() * dtn.tg.dt();

    ConnectingKernel K{Array2D(n, n), dtn.tg, f, h};
    Array2D& W = K.W;
    auto forcing = [&](int k, int j) { return f.samples[k] * lh[j] - lf[k] * h.samples[j]; };
    for (int j = 1; j < n; ++j) W(1, j) = 0.5 * dt2 * forcing(0, j);
    for (int k = 1; k + 1 < n; ++k) {
        const auto wm = W.row(k - 1);
        const auto wc = W.row(k);
        auto wp = W.row(k + 1);
        // Odd extension: W(t, -s) = -W(t, s), so W(t, 0) = 0.
        for (int j = 1; j < n; ++j) {
            const double right = j + 1 < n ? wc[j + 1] : 0.0;
            wp[j] = right + wc[j - 1] - wm[j] + dt2 * forcing(k, j);
        }
        wp[0] = 0.0;
    }
    return K;
}

std::vector<double> diagonal(const ConnectingKernel& W) {
    const int n = static_cast<int>(W.W.rows());
    std::vector<double> d(n);
    for (int k = 0; k < n; ++k) d[k] = W.W(k, k);
    return d;
}

DiagonalEvaluator::DiagonalEvaluator(const SourceSignal& f, const DtnMatrix& dtn)
    : f_(f.samples), lf_(dtn.apply(f)), dt_(dtn.tg.dt()) {
    build_prefix();
}

DiagonalEvaluator::DiagonalEvaluator(std::vector<double> f, std::vector<double> lf, double dt)
    : f_(std::move(f)), lf_(std::move(lf)), dt_(dt) {
    if (f_.size() != lf_.size()) throw PreconditionError("source and flux lengths differ");
    build_prefix();
}

void DiagonalEvaluator::build_prefix() {
    const int n = static_cast<int>(f_.size());
    pf_.assign(n, 0.0);
    plf_.assign(n, 0.0);
    for (int j = 0; j < n; ++j) {
        pf_[j] = f_[j] + (j >= 2 ? pf_[j - 2] : 0.0);
        plf_[j] = lf_[j] + (j >= 2 ? plf_[j - 2] : 0.0);
    }
}

double DiagonalEvaluator::strided(const std::vector<double>& prefix, int lo, int hi) {
    return prefix[hi] - (lo >= 2 ? prefix[lo - 2] : 0.0);
}

double DiagonalEvaluator::value(const DiagonalEvaluator& h, int K) const {
    if (h.f_.size() != f_.size()) throw PreconditionError("sources live on different time grids");
    if (K <= 0) return 0.0;
    if (2 * K - 1 >= static_cast<int>(f_.size())) throw PreconditionError("diagonal index beyond the data horizon");
    // Source at level k' reaches (K, K) through s in {k'+1, k'+3, ..., 2K-1-k'}.
    double sum = 0.0;
    for (int kp = 0; kp < K; ++kp) {
        const int lo = kp + 1;
        const int hi = 2 * K - 1 - kp;
        const double term = f_[kp] * strided(h.plf_, lo, hi) - lf_[kp] * strided(h.pf_, lo, hi);
        sum += kp == 0 ? 0.5 * term : term;
    }
    return dt_ * dt_ * sum;
}

} // namespace bcw
