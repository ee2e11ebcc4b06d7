#include "bcw/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <random>
#include <sstream>

#include "bcw/control.hpp"
#include "bcw/errors.hpp"
#include "bcw/parallel.hpp"

namespace bcw {

double spline_window_deficit() {
    // Autocorrelation of the unit-integral cardinal cubic B-spline at integer lags.
    constexpr double a[4] = {2416.0 / 5040.0, 1191.0 / 5040.0, 120.0 / 5040.0, 1.0 / 5040.0};
    constexpr int N = 200;
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(N, N);
    for (int i = 0; i < N; ++i)
        for (int d = -3; d <= 3; ++d)
            if (i + d >= 0 && i + d < N) G(i, i + d) = a[std::abs(d)];
    const Eigen::VectorXd r = Eigen::VectorXd::Ones(N);
    const double captured = r.dot(G.llt().solve(r));
    return 0.5 * ((N + 3) - captured);
}

ProductTensor product_profile(const std::vector<SourceSignal>& h, const std::vector<double>& T_grid,
                              const DtnMatrix& dtn, const ProductOptions& options) {
    const int J = static_cast<int>(h.size());
    if (J == 0) throw PreconditionError("empty source family");
    if (T_grid.empty()) throw PreconditionError("empty T grid");
    const double delta = options.delta;
    if (!(delta > 0.0)) throw PreconditionError("s-grid spacing must be positive");
    for (double T : T_grid)
        if (!(T > 1.0) || 2.0 * T > dtn.tg.t_max() + 1e-9)
            throw PreconditionError("T levels must lie in (1, t_max / 2]");
    const int windows = static_cast<int>(std::floor(std::min(options.x_max, 1.0) / delta + 1e-9));
    const int count = windows - 3;
    if (count < 5) throw PreconditionError("s-grid too coarse for the nested projector");

    const double shift = spline_window_deficit();
    ProductTensor B;
    B.J = J;
    B.T = T_grid;
    std::vector<int> index;
    for (int n = 2; n + 2 <= windows; ++n) {
        const double x = (n - shift) * delta;
        if (x >= options.x_min - 1e-12 && x <= options.x_max + 1e-12) {
            B.x.push_back(x);
            index.push_back(n);
        }
    }
    const int nx = static_cast<int>(B.x.size());
    if (nx == 0) throw PreconditionError("no s-grid points inside the requested x range");
    B.slices.assign(nx * T_grid.size(), Eigen::MatrixXd::Zero(J, J));

    const int nT = static_cast<int>(T_grid.size());
    parallel_for(nT, options.workers, [&](int l) {
        const NestedProjector proj(dtn, T_grid[l], delta, count, options.alpha);
        std::vector<Eigen::VectorXd> y(J);
        for (int j = 0; j < J; ++j) y[j] = proj.coordinates(h[j]);
        for (int j = 0; j < J; ++j) {
            for (int k = j; k < J; ++k) {
                const std::vector<double> G = proj.truncated_profile(y[j], y[k]);
                for (int p = 0; p < nx; ++p) {
                    const int n = index[p];
                    const double d = (-2.0 * G[n - 2] - G[n - 1] + G[n + 1] + 2.0 * G[n + 2]) / (10.0 * delta);
                    B.at(p, l)(j, k) = d;
                    B.at(p, l)(k, j) = d;
                }
            }
        }
    });
    return B;
}

RecoveredField factor_rank_one(const ProductTensor& B, const FactorOptions& options) {
    const int J = B.J;
    const int nx = static_cast<int>(B.x.size());
    const int nT = static_cast<int>(B.T.size());
    const int npts = nx * nT;
    RecoveredField out;
    out.J = J;
    out.x = B.x;
    out.T = B.T;
    out.v = Eigen::MatrixXd::Zero(J, npts);
    out.mask.assign(npts, false);
    out.eigen_ratio.assign(npts, 1.0);
    out.leading_eigenvalue.assign(npts, 0.0);

    std::vector<Eigen::VectorXd> vec(npts);
    double mu_max = 0.0;
    for (int p = 0; p < npts; ++p) {
        const Eigen::MatrixXd& S = B.slices[p];
        if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, S.cwiseAbs().maxCoeff()))
            throw PipelineFault("product slice is not symmetric");
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
        const Eigen::VectorXd& ev = es.eigenvalues(); // ascending
        const double mu = ev(J - 1);
        out.leading_eigenvalue[p] = mu;
        out.eigen_ratio[p] = mu > 0.0 && J > 1 ? std::max(ev(J - 2), 0.0) / mu : (mu > 0.0 ? 0.0 : 1.0);
        vec[p] = std::sqrt(std::max(mu, 0.0)) * es.eigenvectors().col(J - 1);
        mu_max = std::max(mu_max, mu);
    }
    if (!(mu_max > 0.0)) return out;
    const double floor = options.noise_floor * mu_max;
    std::vector<bool> eligible(npts);
    for (int p = 0; p < npts; ++p) {
        eligible[p] = out.leading_eigenvalue[p] > floor;
        out.mask[p] = eligible[p] && out.eigen_ratio[p] <= options.rank_tolerance;
    }

    // Sign alignment: strongest points first, each matched to its strongest fixed neighbour.
    std::vector<bool> fixed(npts, false);
    using Item = std::pair<double, int>;
    auto neighbours = [&](int p) {
        std::vector<int> nb;
        const int n = p % nx, l = p / nx;
        if (n > 0) nb.push_back(p - 1);
        if (n + 1 < nx) nb.push_back(p + 1);
        if (l > 0) nb.push_back(p - nx);
        if (l + 1 < nT) nb.push_back(p + nx);
        return nb;
    };
    std::vector<int> order(npts);
    for (int p = 0; p < npts; ++p) order[p] = p;
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return out.leading_eigenvalue[a] > out.leading_eigenvalue[b]; });
    for (int seed : order) {
        if (!eligible[seed] || fixed[seed]) continue;
        // New component: orient so the largest-magnitude entry is positive.
        Eigen::Index imax = 0;
        vec[seed].cwiseAbs().maxCoeff(&imax);
        if (vec[seed](imax) < 0.0) vec[seed] = -vec[seed];
        fixed[seed] = true;
        std::priority_queue<Item> pq;
        for (int nb : neighbours(seed))
            if (eligible[nb] && !fixed[nb]) pq.emplace(out.leading_eigenvalue[nb], nb);
        while (!pq.empty()) {
            const int p = pq.top().second;
            pq.pop();
            if (fixed[p]) continue;
            int best = -1;
            for (int nb : neighbours(p))
                if (fixed[nb] && (best < 0 || out.leading_eigenvalue[nb] > out.leading_eigenvalue[best])) best = nb;
            if (vec[p].dot(vec[best]) < 0.0) vec[p] = -vec[p];
            fixed[p] = true;
            for (int nb : neighbours(p))
                if (eligible[nb] && !fixed[nb]) pq.emplace(out.leading_eigenvalue[nb], nb);
        }
    }
    for (int p = 0; p < npts; ++p) out.v.col(p) = vec[p];
    return out;
}

ReconstructionResult recover_potential(const RecoveredField& v, const RecoverOptions& options) {
    const int nx = v.nx();
    const int nT = v.nT();
    if (nT < 5) throw PreconditionError("recovery needs at least 5 T levels");
    if (nx < 3) throw PreconditionError("recovery needs at least 3 x points");
    const std::size_t cells = static_cast<std::size_t>(nx) * nT;
    if (v.J < 1 || v.v.rows() != v.J || static_cast<std::size_t>(v.v.cols()) != cells || v.mask.size() != cells ||
        v.eigen_ratio.size() != cells)
        throw PreconditionError("recovered field arrays do not match its (J, x, T) grid");
    const double dT = v.T[1] - v.T[0];
    for (int l = 1; l < nT; ++l)
        if (std::abs(v.T[l] - v.T[l - 1] - dT) > 1e-9) throw PreconditionError("T grid must be uniform");
    const double dx = v.x[1] - v.x[0];
    for (int n = 1; n < nx; ++n)
        if (std::abs(v.x[n] - v.x[n - 1] - dx) > 1e-9) throw PreconditionError("x grid must be uniform");
    const double ratio = dT / dx;
    const int stride = static_cast<int>(std::lround(ratio));
    if (stride < 1 || std::abs(ratio - stride) > 1e-6)
        throw PreconditionError("T spacing must be an integer multiple of the x spacing");

    std::vector<double> vmax(v.J, 0.0);
    for (int j = 0; j < v.J; ++j) vmax[j] = v.v.row(j).cwiseAbs().maxCoeff();

    ReconstructionResult res;
    res.x = v.x;
    res.q_est.assign(nx, 0.0);
    res.weight.assign(nx, 0.0);
    res.spread.assign(nx, 0.0);
    res.mask.assign(nx, false);
    const double h2 = dT * dT;
    std::vector<double> est, wts;
    for (int n = stride; n + stride < nx; ++n) {
        est.clear();
        wts.clear();
        for (int l = 1; l + 1 < nT; ++l) {
            if (!v.reliable(n, l) || !v.reliable(n - stride, l) || !v.reliable(n + stride, l) ||
                !v.reliable(n, l - 1) || !v.reliable(n, l + 1))
                continue;
            for (int j = 0; j < v.J; ++j) {
                const double c = v.value(j, n, l);
                if (!(std::abs(c) > options.amplitude_tolerance * vmax[j])) continue;
                const double vxx = v.value(j, n + stride, l) - 2.0 * c + v.value(j, n - stride, l);
                const double vtt = v.value(j, n, l + 1) - 2.0 * c + v.value(j, n, l - 1);
                est.push_back((vxx - vtt) / (h2 * c));
                wts.push_back(c * c);
            }
        }
        if (est.empty()) continue;
        double sw = 0.0, s = 0.0;
        for (std::size_t i = 0; i < est.size(); ++i) {
            sw += wts[i];
            s += wts[i] * est[i];
        }
        const double q = s / sw;
        double var = 0.0;
        for (std::size_t i = 0; i < est.size(); ++i) var += wts[i] * (est[i] - q) * (est[i] - q);
        res.q_est[n] = q;
        res.weight[n] = sw;
        res.spread[n] = std::sqrt(var / sw);
        res.mask[n] = true;
    }

    int inside = 0, covered = 0;
    for (int n = 0; n < nx; ++n) {
        if (res.x[n] > 0.1 && res.x[n] < 0.9) {
            ++inside;
            if (res.mask[n]) ++covered;
        }
    }
    res.coverage = inside > 0 ? static_cast<double>(covered) / inside : 0.0;

    std::vector<double> ratios;
    for (int p = 0; p < nx * nT; ++p)
        if (v.mask[p]) ratios.push_back(v.eigen_ratio[p]);
    if (!ratios.empty()) {
        std::sort(ratios.begin(), ratios.end());
        res.eigen_ratio_median = ratios[ratios.size() / 2];
        res.eigen_ratio_max = ratios.back();
    }
    return res;
}

std::vector<double> default_T_grid() {
    std::vector<double> T;
    for (int l = 0; l <= 8; ++l) T.push_back(1.1 + 0.05 * l);
    return T;
}

std::vector<SourceSignal> default_source_family(const TimeGrid& tg, int J) {
    std::vector<SourceSignal> h;
    for (int j = 0; j < J; ++j) {
        const double lo = 0.05 + 0.1 * j;
        h.push_back(make_bump_source(tg, lo, lo + 0.9));
    }
    return h;
}

std::vector<SourceSignal> alternate_source_family(const TimeGrid& tg, int J) {
    std::vector<SourceSignal> h;
    for (int j = 0; j < J; ++j) {
        const double lo = 0.08 + 0.1 * j;
        h.push_back(make_source(tg, {Pulse{Pulse::Shape::CubicBSpline, lo, lo + 0.85, 1.0}}));
    }
    return h;
}

ReconstructionResult reconstruct(const DtnMatrix& dtn, const std::vector<SourceSignal>& h,
                                 const PipelineOptions& options) {
    const std::vector<double> T = options.T_grid.empty() ? default_T_grid() : options.T_grid;
    const ProductTensor B = product_profile(h, T, dtn, options.product);
    const RecoveredField v = factor_rank_one(B, options.factor);
    return recover_potential(v, options.recover);
}

void add_noise(DtnMatrix& dtn, double level, std::uint64_t seed) {
    if (!(level >= 0.0)) throw PreconditionError("noise level must be nonnegative");
    if (level == 0.0) return;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, level * dtn.entries.cwiseAbs().maxCoeff());
    for (Eigen::Index j = 0; j < dtn.entries.cols(); ++j)
        for (Eigen::Index k = 0; k < dtn.entries.rows(); ++k) dtn.entries(k, j) += normal(rng);
}

} // namespace bcw
