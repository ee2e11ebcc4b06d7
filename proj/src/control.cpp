#include "bcw/control.hpp"

#include <cmath>
#include <sstream>

#include "bcw/errors.hpp"
#include "bcw/parallel.hpp"

namespace bcw {

namespace {

int diagonal_index(const DtnMatrix& dtn, double T) {
    const int K = dtn.tg.index_of(T);
    if (std::abs(dtn.tg.t(K) - T) > 1e-9 * std::max(1.0, T) + 0.5 * dtn.tg.dt())
        throw PreconditionError("T lies outside the time grid");
    if (2 * K - 1 > dtn.size() - 1) {
        std::ostringstream os;
        os << "T = " << T << " needs DtN data up to 2T but the grid ends at " << dtn.tg.t_max();
        throw PreconditionError(os.str());
    }
    return K;
}

Eigen::MatrixXd gram_of(const std::vector<DiagonalEvaluator>& ev, int K, int workers, double& asymmetry) {
    const int M = static_cast<int>(ev.size());
    Eigen::MatrixXd G(M, M);
    parallel_for(M, workers, [&](int m) {
        for (int mp = 0; mp < M; ++mp) G(m, mp) = ev[m].value(ev[mp], K);
    });
    const double scale = G.cwiseAbs().maxCoeff();
    asymmetry = scale > 0.0 ? (G - G.transpose()).cwiseAbs().maxCoeff() / scale : 0.0;
    if (asymmetry > 1e-8) {
        std::ostringstream os;
        os << "Gram matrix asymmetry " << asymmetry << " exceeds 1e-8";
        throw PipelineFault(os.str());
    }
    return 0.5 * (G + G.transpose());
}

} // namespace

ControlBasis ControlBasis::uniform(const TimeGrid& tg, double T, double s, int M) {
    if (!(s > 0.0) || !(s < T)) throw PreconditionError("control window needs 0 < s < T");
    if (M < 1) throw PreconditionError("control basis needs at least one element");
    ControlBasis basis;
    basis.lo = T - s;
    basis.hi = T;
    const double delta = s / (M + 3);
    basis.elements.reserve(M);
    for (int m = 0; m < M; ++m) {
        const double lo = T - s + m * delta;
        basis.elements.push_back(make_source(tg, {Pulse{Pulse::Shape::CubicBSpline, lo, lo + 4.0 * delta, 1.0}}));
    }
    return basis;
}

GramSystem gram_system(const SourceSignal& f, double T, const DtnMatrix& dtn, const ControlBasis& basis, int workers) {
    const int K = diagonal_index(dtn, T);
    const int M = basis.size();
    if (M == 0) throw PreconditionError("empty control basis");
    require_compatible(f, dtn.tg);
    std::vector<DiagonalEvaluator> ev;
    ev.reserve(M);
    for (const auto& e : basis.elements) {
        if (e.t_lo < basis.lo - 1e-12 || e.t_hi > basis.hi + 1e-12)
            throw PreconditionError("basis element leaves the control window");
        ev.emplace_back(e, dtn);
    }
    const DiagonalEvaluator target(f, dtn);
    GramSystem g;
    g.K = gram_of(ev, K, workers, g.asymmetry);
    g.b.resize(M);
    for (int m = 0; m < M; ++m) g.b(m) = ev[m].value(target, K);
    g.wff = target.value(target, K);
    return g;
}

ControlSolution solve_control(const GramSystem& g, double alpha) {
    if (!(alpha >= 0.0)) throw PreconditionError("alpha must be nonnegative");
    const int M = static_cast<int>(g.K.rows());
    ControlSolution sol;
    sol.alpha = alpha;
    sol.target_energy = g.wff;
    const Eigen::MatrixXd A = g.K + alpha * Eigen::MatrixXd::Identity(M, M);
    sol.coefficients = A.ldlt().solve(g.b);
    const Eigen::VectorXd& c = sol.coefficients;
    sol.residual = c.dot(g.K * c) - 2.0 * c.dot(g.b) + g.wff;
    const double eps_quad = 1e-8 * std::max(g.wff, g.K.diagonal().cwiseAbs().maxCoeff());
    sol.regularization_failure = sol.residual < -eps_quad;
    return sol;
}

ControlSolution project(const SourceSignal& f, double s, double T, const DtnMatrix& dtn, const ControlBasis& basis,
                        double alpha) {
    if (!(s > 0.0) || !(s < T)) throw PreconditionError("control window needs 0 < s < T");
    return solve_control(gram_system(f, T, dtn, basis), alpha);
}

double truncated_inner_product(const SourceSignal& f, const SourceSignal& h, double s, double T, const DtnMatrix& dtn,
                               const ControlBasis& basis, double alpha) {
    const ControlSolution sol = project(f, s, T, dtn, basis, alpha);
    const int K = diagonal_index(dtn, T);
    const DiagonalEvaluator hv(h, dtn);
    double sum = 0.0;
    for (int m = 0; m < basis.size(); ++m)
        sum += sol.coefficients(m) * DiagonalEvaluator(basis.elements[m], dtn).value(hv, K);
    return sum;
}

LCurve lcurve(const GramSystem& g) {
    const int M = static_cast<int>(g.K.rows());
    const double scale = g.K.trace() / M;
    LCurve lc;
    for (int e = 2; e <= 8; ++e) {
        const double alpha = std::pow(10.0, -e) * scale;
        const ControlSolution sol = solve_control(g, alpha);
        lc.points.push_back({alpha, sol.residual, sol.coefficients.norm(), 0.0});
    }
    // Menger curvature of consecutive triples in (log residual, log |c|).
    const double floor = 1e-300;
    auto pt = [&](int i) {
        return Eigen::Vector2d(std::log(std::max(std::abs(lc.points[i].residual), floor)),
                               std::log(std::max(lc.points[i].coefficient_norm, floor)));
    };
    double best = -1.0;
    lc.selected = static_cast<int>(lc.points.size()) - 1;
    for (int i = 1; i + 1 < static_cast<int>(lc.points.size()); ++i) {
        const Eigen::Vector2d a = pt(i - 1), b = pt(i), c = pt(i + 1);
        const double ab = (b - a).norm(), bc = (c - b).norm(), ca = (a - c).norm();
        const double cross = (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
        const double denom = ab * bc * ca;
        const double kappa = denom > 0.0 ? 2.0 * std::abs(cross) / denom : 0.0;
        lc.points[i].curvature = kappa;
        if (kappa > best) {
            best = kappa;
            lc.selected = i;
        }
    }
    return lc;
}

NestedProjector::NestedProjector(const DtnMatrix& dtn, double T, double delta, int count, double alpha, int workers)
    : dtn_(&dtn), K_(diagonal_index(dtn, T)), delta_(delta), count_(count), alpha_(alpha) {
    if (!(delta > 0.0) || count < 1) throw PreconditionError("nested projector needs delta > 0 and count >= 1");
    if (!(alpha >= 0.0)) throw PreconditionError("alpha must be nonnegative");
    elements_.reserve(count + lead);
    for (int m = -lead; m < count; ++m) {
        const double hi = T - m * delta;
        const SourceSignal e = make_source(dtn.tg, {Pulse{Pulse::Shape::CubicBSpline, hi - 4.0 * delta, hi, 1.0}});
        require_compatible(e, dtn.tg);
        elements_.emplace_back(e, dtn);
    }
    double asym = 0.0;
    gram_ = gram_of(elements_, K_, workers, asym);
    const int total = count + lead;
    llt_.compute(gram_ + alpha_ * Eigen::MatrixXd::Identity(total, total));
    if (llt_.info() != Eigen::Success) throw PipelineFault("regularized Gram matrix is not positive definite");
}

Eigen::VectorXd NestedProjector::coordinates(const SourceSignal& f) const {
    require_compatible(f, dtn_->tg);
    const DiagonalEvaluator target(f, *dtn_);
    const int total = count_ + lead;
    Eigen::VectorXd b(total);
    for (int m = 0; m < total; ++m) b(m) = elements_[m].value(target, K_);
    return llt_.matrixL().solve(b);
}

std::vector<double> NestedProjector::truncated_profile(const Eigen::VectorXd& yf, const Eigen::VectorXd& yh) const {
    std::vector<double> G(count_ + 4, 0.0);
    double acc = 0.0;
    for (int m = 0; m < lead; ++m) acc += yf(m) * yh(m);
    for (int n = 0; n < 4; ++n) G[n] = acc;
    for (int n = 4; n < count_ + 4; ++n) {
        acc += yf(n - 4 + lead) * yh(n - 4 + lead);
        G[n] = acc;
    }
    return G;
}

} // namespace bcw
