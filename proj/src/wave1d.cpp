#include "bcw/wave1d.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bcw/errors.hpp"

namespace bcw {

namespace {

void require_finite(const std::vector<double>& v, const char* what) {
    for (double x : v)
        if (!std::isfinite(x)) throw PreconditionError(std::string(what) + " contains non-finite values");
}

// Trapezoid integral of nodal samples over [a, b] within the grid, with partial end cells.
double integrate_window(const std::vector<double>& e, double dx, double a, double b) {
    const int n = static_cast<int>(e.size());
    a = std::max(a, 0.0);
    b = std::min(b, (n - 1) * dx);
    if (!(b > a)) return 0.0;
    auto value_at = [&](double x) {
        const int i = std::clamp(static_cast<int>(std::floor(x / dx)), 0, n - 2);
        const double w = x / dx - i;
        return (1.0 - w) * e[i] + w * e[i + 1];
    };
    const int i_lo = static_cast<int>(std::ceil(a / dx - 1e-12));
    const int i_hi = static_cast<int>(std::floor(b / dx + 1e-12));
    if (i_lo > i_hi) return 0.5 * (b - a) * (value_at(a) + value_at(b));
    double s = 0.0;
    for (int i = i_lo; i < i_hi; ++i) s += 0.5 * dx * (e[i] + e[i + 1]);
    const double xa = i_lo * dx;
    const double xb = i_hi * dx;
    if (xa > a) s += 0.5 * (xa - a) * (value_at(a) + e[i_lo]);
    if (b > xb) s += 0.5 * (b - xb) * (e[i_hi] + value_at(b));
    return s;
}

} // namespace

double cfl_number(const SpeedProfile& c, const SpatialGrid& sg, const TimeGrid& tg) {
    double cmax = 0.0;
    for (double v : c.values) cmax = std::max(cmax, v);
    return cmax * tg.dt() / sg.dx();
}

WaveField solve_forward(const PotentialGrid& q, const SpeedProfile& c, const SourceSignal& f, const SpatialGrid& sg,
                        const TimeGrid& tg, const ForwardOptions& options) {
    const int nx = sg.size();
    const int nt = tg.size();
    if (static_cast<int>(q.values.size()) != nx) throw PreconditionError("potential length does not match the grid");
    if (static_cast<int>(c.values.size()) != nx) throw PreconditionError("speed length does not match the grid");
    require_finite(q.values, "potential");
    require_finite(c.values, "speed profile");
    for (double v : c.values)
        if (!(v > 0.0)) throw PreconditionError("speed profile must be positive");
    require_compatible(f, tg);
    const double lambda = cfl_number(c, sg, tg);
    if (lambda > 1.0 + 1e-12) {
        std::ostringstream os;
        os << "CFL condition violated: lambda = " << lambda << " > 1";
        throw PreconditionError(os.str());
    }
    const Array2D* S = options.forcing;
    if (S) {
        if (static_cast<int>(S->rows()) != nt || static_cast<int>(S->cols()) != nx)
            throw PreconditionError("forcing array shape does not match the grids");
        require_finite(S->values(), "forcing");
    }
    const auto& g = options.initial_displacement;
    if (!g.empty()) {
        if (static_cast<int>(g.size()) != nx) throw PreconditionError("initial displacement length mismatch");
        require_finite(g, "initial displacement");
        if (g.front() != 0.0 || g.back() != 0.0)
            throw PreconditionError("initial displacement must vanish at both ends");
        if (!f.is_zero()) throw PreconditionError("initial displacement requires a zero boundary source");
    }

    const double dt = tg.dt();
    const double dt2 = dt * dt;
    const double inv_dx2 = 1.0 / (sg.dx() * sg.dx());
    std::vector<double> l2(nx);
    for (int i = 0; i < nx; ++i) l2[i] = c.values[i] * c.values[i] * dt2 * inv_dx2;

    WaveField field{Array2D(nt, nx), sg, tg, q, c};
    Array2D& u = field.u;
    if (!g.empty())
        for (int i = 0; i < nx; ++i) u(0, i) = g[i];

    // Taylor start: u_t(0) = 0, u_tt(0) = c^2 u_xx - q u + S.
    for (int i = 1; i < nx - 1; ++i) {
        const double lap = u(0, i + 1) - 2.0 * u(0, i) + u(0, i - 1);
        double r = l2[i] * lap - dt2 * q.values[i] * u(0, i);
        if (S) r += dt2 * (*S)(0, i);
        u(1, i) = u(0, i) + 0.5 * r;
    }
    u(1, 0) = f.samples[1];

    for (int k = 1; k + 1 < nt; ++k) {
        const double* um = &u(k - 1, 0);
        const double* uc = &u(k, 0);
        double* up = &u(k + 1, 0);
        const double* qv = q.values.data();
        for (int i = 1; i < nx - 1; ++i) {
            up[i] = 2.0 * uc[i] - um[i] + l2[i] * (uc[i + 1] - 2.0 * uc[i] + uc[i - 1]) - dt2 * qv[i] * uc[i];
        }
        if (S) {
            const double* s = S->row(k).data();
            for (int i = 1; i < nx - 1; ++i) up[i] += dt2 * s[i];
        }
        up[0] = f.samples[k + 1];
        up[nx - 1] = 0.0;
    }
    return field;
}

double dtn_sample(DtnStencil stencil, int k, double dx, double dt, double q0, double c0,
                  const std::vector<double>& boundary, double u1, double u2) {
    const double u0 = boundary[k];
    if (stencil == DtnStencil::OneSided3) return (-3.0 * u0 + 4.0 * u1 - u2) / (2.0 * dx);
    const int n = static_cast<int>(boundary.size());
    double utt;
    if (k == 0) {
        utt = (boundary[1] - 2.0 * u0) / (dt * dt); // zero history before t = 0
    } else if (k + 1 < n) {
        utt = (boundary[k + 1] - 2.0 * u0 + boundary[k - 1]) / (dt * dt);
    } else {
        utt = (2.0 * u0 - 5.0 * boundary[k - 1] + 4.0 * boundary[k - 2] - boundary[k - 3]) / (dt * dt);
    }
    return (u1 - u0) / dx - 0.5 * dx * (utt + q0 * u0) / (c0 * c0);
}

DtnTrace dtn_trace(const WaveField& field, const SourceSignal& f, DtnStencil stencil) {
    const int nx = field.sg.size();
    const int nt = field.tg.size();
    if (nx < 3) throw PreconditionError("DtN stencil needs at least 3 spatial nodes");
    if (static_cast<int>(f.samples.size()) != nt) throw PreconditionError("source does not match the field's time grid");
    std::vector<double> boundary(nt);
    for (int k = 0; k < nt; ++k) boundary[k] = field.u(k, 0);
    DtnTrace tr{std::vector<double>(nt)};
    const double q0 = field.q.values.empty() ? 0.0 : field.q.values[0];
    const double c0 = field.c.values.empty() ? 1.0 : field.c.values[0];
    for (int k = 0; k < nt; ++k)
        tr.samples[k] =
            dtn_sample(stencil, k, field.sg.dx(), field.tg.dt(), q0, c0, boundary, field.u(k, 1), field.u(k, 2));
    return tr;
}

double TravelTimeProfile::r_of_t(double t) const {
    const int n = static_cast<int>(r_table.size());
    if (t <= 0.0) return 0.0;
    const double pos = t / dt_table;
    if (pos >= n - 1) return 1.0;
    const int m = static_cast<int>(pos);
    const double w = pos - m;
    return (1.0 - w) * r_table[m] + w * r_table[m + 1];
}

double TravelTimeProfile::rho_at(double x) const {
    const int n = static_cast<int>(rho.size());
    if (x <= 0.0) return 0.0;
    const double pos = x / dx;
    if (pos >= n - 1) return rho.back();
    const int i = static_cast<int>(pos);
    const double w = pos - i;
    return (1.0 - w) * rho[i] + w * rho[i + 1];
}

TravelTimeProfile travel_time(const SpeedProfile& c) {
    const int n = static_cast<int>(c.values.size());
    if (n < 3) throw PreconditionError("speed profile needs at least 3 samples");
    for (double v : c.values)
        if (!(v > 0.0) || !std::isfinite(v)) throw PreconditionError("speed must be positive and finite");
    const double dx = 1.0 / (n - 1);
    std::vector<double> g(n), dg(n);
    for (int i = 0; i < n; ++i) g[i] = 1.0 / c.values[i];
    for (int i = 1; i < n - 1; ++i) dg[i] = (g[i + 1] - g[i - 1]) / (2.0 * dx);
    dg[0] = (-3.0 * g[0] + 4.0 * g[1] - g[2]) / (2.0 * dx);
    dg[n - 1] = (3.0 * g[n - 1] - 4.0 * g[n - 2] + g[n - 3]) / (2.0 * dx);

    TravelTimeProfile tt;
    tt.dx = dx;
    tt.rho.assign(n, 0.0);
    // Cumulative trapezoid with the Euler-Maclaurin endpoint correction.
    double trap = 0.0;
    for (int i = 1; i < n; ++i) {
        trap += 0.5 * dx * (g[i - 1] + g[i]);
        tt.rho[i] = trap - dx * dx / 12.0 * (dg[i] - dg[0]);
    }
    for (int i = 1; i < n; ++i)
        if (!(tt.rho[i] > tt.rho[i - 1])) throw PreconditionError("travel time is not strictly increasing");

    tt.dt_table = tt.rho.back() / (n - 1);
    tt.r_table.assign(n, 0.0);
    int i = 0;
    for (int m = 0; m < n; ++m) {
        const double t = m == n - 1 ? tt.rho.back() : m * tt.dt_table;
        while (i < n - 2 && tt.rho[i + 1] < t) ++i;
        const double w = (t - tt.rho[i]) / (tt.rho[i + 1] - tt.rho[i]);
        tt.r_table[m] = (i + std::clamp(w, 0.0, 1.0)) * dx;
    }
    tt.r_table.back() = 1.0;
    return tt;
}

EnergyWindow EnergyWindow::diamond(double center, double half_width) {
    EnergyWindow w;
    w.kind = Kind::Diamond;
    w.center = center;
    w.half_width = half_width;
    return w;
}

EnergyWindow EnergyWindow::front(TravelTimeProfile tt, double t0) {
    EnergyWindow w;
    w.kind = Kind::Front;
    w.t0 = t0;
    w.travel = std::move(tt);
    return w;
}

EnergyTrace energy_trace(const WaveField& field, const PotentialGrid& q, const SpeedProfile& c,
                         const EnergyWindow& window) {
    const int nx = field.sg.size();
    const int nt = field.tg.size();
    if (static_cast<int>(q.values.size()) != nx || static_cast<int>(c.values.size()) != nx)
        throw PreconditionError("coefficient length does not match the field");
    if (window.kind == EnergyWindow::Kind::Front && !window.travel)
        throw PreconditionError("front window needs a travel-time profile");
    const double dx = field.sg.dx();
    const double dt = field.tg.dt();
    const Array2D& u = field.u;

    EnergyTrace tr;
    tr.kind = window.kind;
    tr.values.assign(nt, 0.0);
    tr.degenerate.assign(nt, false);
    std::vector<double> e(nx);
    for (int k = 0; k < nt; ++k) {
        double a = 0.0, b = 1.0;
        const double t = field.tg.t(k);
        if (window.kind == EnergyWindow::Kind::Diamond) {
            a = window.center - (window.half_width - t);
            b = window.center + (window.half_width - t);
        } else if (window.kind == EnergyWindow::Kind::Front) {
            a = window.travel->r_of_t(t - window.t0);
        }
        a = std::max(a, 0.0);
        b = std::min(b, 1.0);
        if (!(b > a)) {
            tr.degenerate[k] = true;
            continue;
        }
        for (int i = 0; i < nx; ++i) {
            double ut;
            if (k == 0)
                ut = (-3.0 * u(0, i) + 4.0 * u(1, i) - u(2, i)) / (2.0 * dt);
            else if (k == nt - 1)
                ut = (3.0 * u(k, i) - 4.0 * u(k - 1, i) + u(k - 2, i)) / (2.0 * dt);
            else
                ut = (u(k + 1, i) - u(k - 1, i)) / (2.0 * dt);
            double ux;
            if (i == 0)
                ux = (-3.0 * u(k, 0) + 4.0 * u(k, 1) - u(k, 2)) / (2.0 * dx);
            else if (i == nx - 1)
                // u = u_tt = 0 on x = 1 forces u_xx = 0 there, which buys two orders.
                ux = (u(k, i - 2) - 8.0 * u(k, i - 1)) / (6.0 * dx);
            else
                ux = (u(k, i + 1) - u(k, i - 1)) / (2.0 * dx);
            const double ic2 = 1.0 / (c.values[i] * c.values[i]);
            e[i] = ic2 * ut * ut + ux * ux + ic2 * q.values[i] * u(k, i) * u(k, i);
        }
        tr.values[k] = 0.5 * integrate_window(e, dx, a, b);
    }
    return tr;
}

double finite_speed_leakage(const WaveField& field, const SourceSignal& f, const TravelTimeProfile& tt) {
    const int nx = field.sg.size();
    const int nt = field.tg.size();
    if (static_cast<int>(tt.rho.size()) != nx) throw PreconditionError("travel-time profile does not match the grid");
    double umax = 0.0;
    for (double v : field.u.values()) umax = std::max(umax, std::abs(v));
    if (umax == 0.0) return 0.0;
    const double margin = 3.0 * field.sg.dx();
    double leak = 0.0;
    for (int k = 0; k < nt; ++k) {
        const double front = field.tg.t(k) - f.t_lo + margin;
        for (int i = nx - 1; i >= 0 && tt.rho[i] > front; --i) leak = std::max(leak, std::abs(field.u(k, i)));
    }
    return leak / umax;
}

} // namespace bcw
