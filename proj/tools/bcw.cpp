// Batch driver: one subcommand per pipeline stage, every run leaves a manifest.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <json.hpp>

#include "bcw/app/checks.hpp"
#include "bcw/app/config.hpp"
#include "bcw/connecting.hpp"
#include "bcw/control.hpp"
#include "bcw/errors.hpp"
#include "bcw/geomoptics.hpp"
#include "bcw/io.hpp"
#include "bcw/lightray.hpp"
#include "bcw/reconstruct.hpp"
#include "bcw/wave1d.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace bcw;

namespace {

constexpr const char* kVersion = "0.1.0";

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kPrecondition = 3, kAcceptance = 4 };

struct Run {
    RunConfig cfg;
    fs::path out;
    std::vector<std::string> outputs;
    json metrics = json::object();

    std::string path(const std::string& name) {
        outputs.push_back(name);
        return (out / name).string();
    }
};

void write_json(const std::string& path, const json& j) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write " + path);
    os << j.dump(2) << '\n';
}

SourceSignal configured_source(const std::vector<Pulse>& pulses, const TimeGrid& tg) {
    if (pulses.empty()) return zero_source(tg);
    return make_source(tg, pulses);
}

DtnMatrix configured_dtn(const RunConfig& c) {
    DtnAssemblyOptions ao;
    ao.stencil = c.stencil;
    ao.refinement = c.de_crime ? 2 : c.refinement;
    ao.workers = c.workers;
    DtnMatrix L = assemble_dtn(c.potential.resolve(), c.spatial_grid(), c.time_grid(), ao);
    if (c.noise_level > 0.0) add_noise(L, c.noise_level, c.seed);
    return L;
}

void cmd_forward(Run& run) {
    const RunConfig& c = run.cfg;
    const SpatialGrid sg = c.spatial_grid();
    const TimeGrid tg = c.time_grid();
    const PotentialGrid q = PotentialGrid::sample(sg, c.potential.resolve());
    const SpeedProfile sp = SpeedProfile::sample(sg, c.speed.resolve());
    const SourceSignal f = configured_source(c.source, tg);
    const WaveField u = solve_forward(q, sp, f, sg, tg);
    write_bcw1(run.path("field.bcw1"), u.u);
    write_time_series(run.path("dtn_trace.csv"), tg.dt(), dtn_trace(u, f, c.stencil).samples);
    const EnergyTrace E = energy_trace(u, q, sp);
    write_time_series(run.path("energy.csv"), tg.dt(), E.values);
    const TravelTimeProfile tt = travel_time(sp);
    run.metrics["cfl"] = cfl_number(sp, sg, tg);
    double peak = 0.0;
    for (double v : u.u.values()) peak = std::max(peak, std::abs(v));
    run.metrics["max_abs_u"] = peak;
    if (!f.is_zero()) {
        run.metrics["leakage"] = finite_speed_leakage(u, f, tt);
        const EnergyTrace front = energy_trace(u, q, sp, EnergyWindow::front(tt, f.t_hi));
        write_time_series(run.path("energy_front.csv"), tg.dt(), front.values);
    }
}

void cmd_dtn(Run& run) {
    const RunConfig& c = run.cfg;
    const DtnMatrix L = configured_dtn(c);
    GridFile g{{static_cast<std::uint64_t>(L.size()), static_cast<std::uint64_t>(L.size())}, {}};
    for (int i = 0; i < L.size(); ++i)
        for (int j = 0; j < L.size(); ++j) g.values.push_back(L.entries(i, j));
    write_bcw1(run.path("dtn.bcw1"), g);
    CsvWriter side(run.path("dtn_basis.csv"), {"key", "value"});
    side.line("basis,nodal_hat");
    side.line(std::string("stencil,") + (L.stencil == DtnStencil::SummationByParts ? "sbp" : "one_sided"));
    side.line("n_t," + std::to_string(L.size()));
    side.line("dt," + format_number(L.tg.dt()));
    side.line("refinement," + std::to_string(L.refinement));
    side.line("data_n_x," + std::to_string(L.data_n_x));
    side.line("noise_level," + format_number(c.noise_level));
    side.save();
    run.metrics["n_t"] = L.size();
}

void cmd_connect(Run& run) {
    const RunConfig& c = run.cfg;
    const SpatialGrid sg = c.spatial_grid();
    const TimeGrid tg = c.time_grid();
    const DtnMatrix L = configured_dtn(c);
    const SourceSignal f = configured_source(c.source, tg);
    const SourceSignal h = configured_source(c.probe, tg);
    const ConnectingKernel W = blagoveshchenskii(f, h, L);
    const ConnectingKernel Wt = blagoveshchenskii(h, f, L);
    write_bcw1(run.path("kernel.bcw1"), W.W);
    write_time_series(run.path("kernel_diagonal.csv"), tg.dt(), diagonal(W));

    // Oracle from interior fields (only available because the potential is known here).
    const PotentialGrid q = PotentialGrid::sample(sg, c.potential.resolve());
    const SpeedProfile sp = SpeedProfile::constant(sg);
    const WaveField uf = solve_forward(q, sp, f, sg, tg), uh = solve_forward(q, sp, h, sg, tg);
    double err = 0.0, peak = 0.0, sym = 0.0;
    for (int k = 0; k < tg.size(); ++k)
        for (int j = 0; W.valid(k, j); ++j) {
            double ip = 0.0;
            for (int i = 0; i < sg.size(); ++i)
                ip += ((i == 0 || i == sg.size() - 1) ? 0.5 : 1.0) * uf.u(k, i) * uh.u(j, i);
            ip *= sg.dx();
            err = std::max(err, std::abs(W.W(k, j) - ip));
            peak = std::max(peak, std::abs(ip));
            sym = std::max(sym, std::abs(W.W(k, j) - Wt.W(j, k)));
        }
    run.metrics["oracle_rel_sup_error"] = peak > 0.0 ? err / peak : err;
    run.metrics["symmetry_rel"] = peak > 0.0 ? sym / peak : sym;
}

void cmd_control(Run& run) {
    const RunConfig& c = run.cfg;
    const TimeGrid tg = c.time_grid();
    const DtnMatrix L = configured_dtn(c);
    const SourceSignal f = configured_source(c.source, tg);
    CsvWriter curve(run.path("residual_curve.csv"), {"s", "alpha", "residual", "target_energy"});
    json per_s = json::array();
    for (double s : c.control_s) {
        const GramSystem g = gram_system(f, c.control_T, L, ControlBasis::uniform(tg, c.control_T, s, c.control_M),
                                         c.workers);
        std::vector<double> alphas = c.control_alpha;
        double chosen = 0.0;
        if (alphas.empty()) {
            const LCurve lc = lcurve(g);
            for (const auto& p : lc.points) alphas.push_back(p.alpha);
            chosen = lc.alpha();
        } else {
            chosen = alphas.front();
        }
        for (double a : alphas) {
            const ControlSolution sol = solve_control(g, a);
            curve.row({s, a, sol.residual, sol.target_energy});
        }
        const ControlSolution sol = solve_control(g, chosen);
        std::ostringstream name;
        name << "control_s" << s << ".csv";
        CsvWriter coef(run.path(name.str()), {"m", "coefficient"});
        for (int m = 0; m < sol.coefficients.size(); ++m) coef.row({static_cast<double>(m), sol.coefficients(m)});
        coef.line("# alpha=" + format_number(sol.alpha) + ",residual=" + format_number(sol.residual));
        coef.save();
        per_s.push_back({{"s", s},
                         {"alpha", sol.alpha},
                         {"residual", sol.residual},
                         {"target_energy", sol.target_energy},
                         {"gram_asymmetry", g.asymmetry},
                         {"regularization_failure", sol.regularization_failure}});
    }
    curve.save();
    run.metrics["windows"] = per_s;
}

void cmd_reconstruct(Run& run) {
    const RunConfig& c = run.cfg;
    const TimeGrid tg = c.time_grid();
    const DtnMatrix L = configured_dtn(c);
    PipelineOptions po;
    po.T_grid = c.T_grid;
    po.product.delta = c.delta;
    po.product.alpha = c.alpha;
    po.product.x_min = c.x_min;
    po.product.x_max = c.x_max;
    po.product.workers = c.workers;
    po.factor.rank_tolerance = c.rank_tolerance;
    po.factor.noise_floor = c.noise_floor;
    po.recover.amplitude_tolerance = c.amplitude_tolerance;
    const ReconstructionResult r = reconstruct(L, default_source_family(tg, c.sources), po);

    // The configured potential generated the data, so it is the ground truth column.
    const auto truth = c.potential.resolve();
    CsvWriter csv(run.path("reconstruction.csv"), {"x", "q_true", "q_est", "weight", "mask"});
    double e = 0.0, n = 0.0, mx = 0.0;
    for (std::size_t i = 0; i < r.x.size(); ++i) {
        const double t = truth(r.x[i]);
        csv.row({r.x[i], t, r.q_est[i], r.weight[i], r.mask[i] ? 1.0 : 0.0});
        if (r.mask[i]) {
            e += (r.q_est[i] - t) * (r.q_est[i] - t);
            n += t * t;
            mx = std::max(mx, std::abs(r.q_est[i]));
        }
    }
    csv.save();
    run.metrics["rel_l2_masked"] = n > 0.0 ? std::sqrt(e / n) : std::sqrt(e);
    run.metrics["max_abs_q_est"] = mx;
    run.metrics["coverage"] = r.coverage;
    run.metrics["eigen_ratio_median"] = r.eigen_ratio_median;
    run.metrics["eigen_ratio_max"] = r.eigen_ratio_max;
}

void cmd_go_residual(Run& run) {
    const RunConfig& c = run.cfg;
    const double w = c.chi_half_width;
    const Profile chi = [w](double t) { return smooth_bump(t, -w, w); };
    const Profile one = [](double) { return 1.0; };
    const auto qf = c.potential.resolve();
    const SpacetimeFunction q = [qf](double, double x, double) { return qf(x); };
    const double smax = *std::max_element(c.sigma_list.begin(), c.sigma_list.end());
    const double h = std::min(2.0 * std::numbers::pi / (10.0 * smax), w / 4.0);
    json orders = json::array();
    for (int N : c.go_orders) {
        const GOGrid g = GOGrid::box1d(c.go_T, c.go_x_lo, c.go_x_hi, h, N + 1);
        const ResidualScaling rs = residual_scaling(chi, w, one, q, N, c.sigma_list, g, c.go_tau0);
        CsvWriter csv(run.path("go_residual_N" + std::to_string(N) + ".csv"), {"sigma", "residual_norm"});
        for (std::size_t i = 0; i < rs.sigma.size(); ++i) csv.row({rs.sigma[i], rs.norm[i]});
        csv.save();
        std::vector<double> l2, h1;
        for (double s : c.sigma_list) {
            const RemainderNorms rn = remainder_norms(build_ansatz(s, N, chi, w, one, q, g, c.go_tau0), qf);
            l2.push_back(rn.l2);
            h1.push_back(rn.h1);
        }
        orders.push_back({{"N", N},
                          {"residual_slope", rs.slope},
                          {"remainder_l2_slope", loglog_slope(c.sigma_list, l2)},
                          {"remainder_h1_slope", loglog_slope(c.sigma_list, h1)}});
    }
    run.metrics["orders"] = orders;
    CertifyOptions co;
    co.chi_half_width = w;
    co.sigma_max = smax;
    const NonvanishingCertificate cert = certify_nonvanishing(c.certify_x0, c.go_T, qf, co);
    run.metrics["certified"] = cert.certified;
    run.metrics["certified_sigma"] = cert.sigma;
    run.metrics["u_abs"] = cert.u_abs;
    run.metrics["ansatz_abs"] = cert.ansatz_abs;
}

void cmd_lrt(Run& run) {
    const RunConfig& c = run.cfg;
    const PhantomSpec ph = c.phantom;
    const double T = c.lrt_T;
    std::function<double(double, double, double)> fn;
    if (ph.family == "bump") {
        fn = [ph, T](double t, double x1, double x2) { return radial_bump(t, x1, x2, 0.5 * T, ph.radius); };
    } else {
        fn = [ph, T](double t, double x1, double x2) {
            const double r2 = (x1 * x1 + x2 * x2) / (ph.radius * ph.radius);
            return r2 < 1.0 ? smooth_plateau(t, 0.06 * T, 0.94 * T, ph.ramp) * std::exp(1.0 - 1.0 / (1.0 - r2)) : 0.0;
        };
    }
    const SpacetimePotential q = SpacetimePotential::sample(fn, c.lrt_nt, c.lrt_nx, T, c.lrt_X);
    ConeOptions co;
    co.band_fraction = c.band_fraction;
    co.workers = c.workers;
    const ConeRecovery rec = invert_on_cone(q, co);
    const std::vector<std::uint64_t> dims{static_cast<std::uint64_t>(q.nt()), static_cast<std::uint64_t>(q.nx()),
                                          static_cast<std::uint64_t>(q.nx())};
    write_bcw1(run.path("q.bcw1"), GridFile{dims, q.values()});
    write_bcw1(run.path("q_cone.bcw1"), GridFile{dims, rec.q_cone});
    write_bcw1(run.path("q_cone_ref.bcw1"), GridFile{dims, rec.q_cone_ref});
    CsvWriter csv(run.path("slice_residuals.csv"), {"tau", "eta1", "eta2", "abs_err", "rel_err"});
    for (const auto& s : rec.residuals) csv.row({s.tau, s.eta[0], s.eta[1], s.abs_err, s.rel_err});
    csv.save();
    run.metrics["slice_rel_err"] = rec.slice_rel_err;
    run.metrics["cone_recovery_rel_err"] = rec.recovery_rel_err;
    run.metrics["energy_recovery"] = rec.energy_recovery;
    run.metrics["hermitian_defect"] = rec.hermitian_defect;
    run.metrics["cone_admissible"] = rec.cone_admissible;
    run.metrics["samples"] = rec.samples.size();
}

int cmd_check(Run& run) {
    CheckOptions co;
    co.workers = run.cfg.workers;
    const auto results = run_all_checks(co, [](const CheckResult& r) { std::cout << format_check(r) << std::endl; });
    const json report = checks_to_json(results);
    write_json(run.path("check_report.json"), report);
    run.metrics["passed"] = report["passed"];
    return report["passed"].get<bool>() ? kOk : kAcceptance;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Boundary control and light ray toolkit"};
    app.require_subcommand(1);
    std::string config_path, out_dir;
    int workers = 0;
    std::uint64_t seed = 0;
    bool de_crime = false;
    app.add_option("--config", config_path, "JSON run configuration (or a previous run manifest)");
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
    auto* seed_opt = app.add_option("--seed", seed, "Noise seed");
    app.add_flag("--de-crime", de_crime, "Generate data at dx/2, dt/2");
    const std::vector<std::pair<std::string, std::string>> subs = {
        {"forward", "Forward fields, DtN trace and energy"},
        {"dtn", "Assemble and save the DtN matrix"},
        {"connect", "Connecting kernel and its field oracle"},
        {"control", "Projections and residual curves"},
        {"reconstruct", "Recover q from the DtN matrix"},
        {"go-residual", "Geometric-optics residual sweep"},
        {"lrt", "Light ray transform, slicing residuals, cone recovery"},
        {"check", "Run every acceptance criterion"}};
    for (const auto& [name, help] : subs) app.add_subcommand(name, help)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }
    const std::string sub = app.get_subcommands().front()->get_name();
    const auto t0 = std::chrono::steady_clock::now();
    try {
        Run run;
        run.cfg = config_path.empty() ? parse_config(json::object()) : load_config(config_path);
        if (!out_dir.empty()) run.cfg.output = out_dir;
        if (workers > 0) run.cfg.workers = workers;
        if (seed_opt->count() > 0) run.cfg.seed = seed;
        if (de_crime) run.cfg.de_crime = true;
        refresh_document(run.cfg);
        run.out = run.cfg.output;
        fs::create_directories(run.out);

        int status = kOk;
        if (sub == "forward") cmd_forward(run);
        else if (sub == "dtn") cmd_dtn(run);
        else if (sub == "connect") cmd_connect(run);
        else if (sub == "control") cmd_control(run);
        else if (sub == "reconstruct") cmd_reconstruct(run);
        else if (sub == "go-residual") cmd_go_residual(run);
        else if (sub == "lrt") cmd_lrt(run);
        else status = cmd_check(run);

        write_json(run.path("metrics.json"), run.metrics);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        // Output location and thread count do not change results, so they stay out of the hash.
        json hashed = run.cfg.document;
        hashed.erase("output");
        hashed.erase("workers");
        json manifest = {{"manifest_version", 1},
                         {"subcommand", sub},
                         {"config", run.cfg.document},
                         {"config_sha256", sha256_hex(hashed.dump())},
                         {"versions",
                          {{"bcw", kVersion},
                           {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                         "." + std::to_string(EIGEN_MINOR_VERSION)},
                           {"compiler", __VERSION__},
                           {"cxx", static_cast<long>(__cplusplus)}}},
                         {"wall_seconds", wall},
                         {"outputs", run.outputs}};
        write_json((run.out / "manifest.json").string(), manifest);
        std::cout << run.metrics.dump() << std::endl;
        return status;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << std::endl;
        return kConfig;
    } catch (const PreconditionError& e) {
        std::cerr << "precondition violated: " << e.what() << std::endl;
        return kPrecondition;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return kFailure;
    }
}
