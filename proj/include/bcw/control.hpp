#pragma once

#include <vector>

#include <Eigen/Dense>

#include "bcw/connecting.hpp"
#include "bcw/source.hpp"

namespace bcw {

/// Cubic B-spline pulses on a uniform partition of the control window (T - s, T).
struct ControlBasis {
    std::vector<SourceSignal> elements;
    double lo = 0.0;
    double hi = 0.0;

    int size() const { return static_cast<int>(elements.size()); }

    /// M elements, knot spacing s / (M + 3), every support inside (T - s, T).
    static ControlBasis uniform(const TimeGrid& tg, double T, double s, int M);
};

struct ControlSolution {
    Eigen::VectorXd coefficients;
    /// c'Kc - 2c'b + W_ff(T, T): squared distance between the steered and target states.
    double residual = 0.0;
    double alpha = 0.0;
    /// W_ff(T, T), the squared norm of the target state.
    double target_energy = 0.0;
    /// Residual fell below -eps_quad, which only regularization artifacts can cause.
    bool regularization_failure = false;
};

/// Gram data of a basis against one target, all from boundary data.
struct GramSystem {
    Eigen::MatrixXd K;
    Eigen::VectorXd b;
    double wff = 0.0;
    /// max |K - K'| / max |K| before symmetrization.
    double asymmetry = 0.0;
};

GramSystem gram_system(const SourceSignal& f, double T, const DtnMatrix& dtn, const ControlBasis& basis,
                       int workers = 1);

/// Solves (K + alpha I) c = b on a prebuilt Gram system.
ControlSolution solve_control(const GramSystem& g, double alpha);

ControlSolution project(const SourceSignal& f, double s, double T, const DtnMatrix& dtn, const ControlBasis& basis,
                        double alpha);

/// Boundary-data realization of (1_(0,s) u^f(T), u^h(T)).
double truncated_inner_product(const SourceSignal& f, const SourceSignal& h, double s, double T, const DtnMatrix& dtn,
                               const ControlBasis& basis, double alpha);

struct LCurvePoint {
    double alpha = 0.0;
    double residual = 0.0;
    double coefficient_norm = 0.0;
    double curvature = 0.0;
};

struct LCurve {
    std::vector<LCurvePoint> points;
    int selected = 0;
    double alpha() const { return points[selected].alpha; }
};

/// Geometric sweep {1e-2, ..., 1e-8} * trace(K) / M; picks the maximum-curvature corner
/// of (log residual, log |c|).
LCurve lcurve(const GramSystem& g);

/// Projections onto a nested family of windows (T - n delta, T), n = 4 .. count + 3.
///
/// Elements are cubic B-splines anchored at T: element m lives on [T - (m+4) delta, T - m delta].
/// The window of length n delta holds elements m <= n-4, a leading block of the Gram matrix,
/// so one Cholesky factor L of K + alpha I serves every window: with y = L^-1 b the
/// truncated inner product for window n is the partial sum of y_f . y_h over m <= n - 4.
///
/// Elements m = -3, -2, -1 straddle T. Only their restriction to t <= T reaches the state
/// u(T), so they act as controls on (T - s, T] and remove the boundary layer at x = 0.
class NestedProjector {
public:
    NestedProjector(const DtnMatrix& dtn, double T, double delta, int count, double alpha, int workers = 1);

    /// y = L^-1 b for a source.
    Eigen::VectorXd coordinates(const SourceSignal& f) const;

    /// G(n delta) for n = 0 .. count + 3, from two coordinate vectors (entries n < 4 hold
    /// the straddling elements only).
    std::vector<double> truncated_profile(const Eigen::VectorXd& yf, const Eigen::VectorXd& yh) const;

    static constexpr int lead = 3;

    int count() const { return count_; }
    double delta() const { return delta_; }
    int time_index() const { return K_; }
    const Eigen::MatrixXd& gram() const { return gram_; }

private:
    const DtnMatrix* dtn_;
    int K_;
    double delta_;
    int count_;
    double alpha_;
    std::vector<DiagonalEvaluator> elements_;
    Eigen::MatrixXd gram_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
};

} // namespace bcw
