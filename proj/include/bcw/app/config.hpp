#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bcw/source.hpp"
#include "bcw/wave1d.hpp"

namespace bcw {

/// Named analytic family with parameters, or a BCW1 file of samples on the uniform [0, 1] grid.
struct FunctionSpec {
    std::string family;
    nlohmann::json params;

    std::function<double(double)> resolve() const;
};

struct PhantomSpec {
    /// "bump" (space-time radial bump) or "plateau" (spatial bump times a time plateau).
    std::string family = "bump";
    double radius = 0.4;
    double ramp = 0.3;
};

struct RunConfig {
    int n_x = 401;
    double dt = 1.0 / 420.0;
    double t_max = 3.0;

    FunctionSpec potential{"bump", {{"amplitude", 5.0}, {"lo", 0.2}, {"hi", 0.8}}};
    FunctionSpec speed{"constant", {{"value", 1.0}}};
    std::vector<Pulse> source;
    std::vector<Pulse> probe;

    DtnStencil stencil = DtnStencil::SummationByParts;
    int refinement = 1;

    double control_T = 1.2;
    int control_M = 64;
    std::vector<double> control_s;
    /// Empty means the L-curve rule.
    std::vector<double> control_alpha;

    std::vector<double> T_grid;
    double delta = 0.005;
    double alpha = 1e-12;
    double x_min = 0.05;
    double x_max = 0.95;
    int sources = 6;
    double rank_tolerance = 0.05;
    double noise_floor = 1e-4;
    double amplitude_tolerance = 0.05;

    std::vector<int> go_orders;
    std::vector<double> sigma_list;
    double chi_half_width = 0.1;
    double eta_half_width = 0.3;
    double go_tau0 = -0.1;
    double go_T = 1.2;
    double go_x_lo = -0.5;
    double go_x_hi = 1.5;
    double certify_x0 = 0.5;

    PhantomSpec phantom;
    int lrt_nt = 33;
    int lrt_nx = 33;
    double lrt_T = 1.0;
    double lrt_X = 0.5;
    double band_fraction = 0.5;

    std::string output = "out";
    int workers = 1;
    double noise_level = 0.0;
    std::uint64_t seed = 0;
    bool de_crime = false;

    /// The fully resolved document the fields were read from.
    nlohmann::json document;

    SpatialGrid spatial_grid() const { return SpatialGrid(n_x); }
    TimeGrid time_grid() const { return TimeGrid::covering(t_max, dt); }
};

/// Every key with its default value.
nlohmann::json default_config_document();

/// Overlays a user document on the defaults, rejecting unknown keys and ill-typed values, then
/// checks referenced files and the CFL number. Accepts a run manifest (uses its "config").
RunConfig parse_config(const nlohmann::json& user);
RunConfig load_config(const std::string& path);

/// Rebuilds the document after flag overrides so the hash and manifest see them.
void refresh_document(RunConfig& cfg);

std::string sha256_hex(const std::string& data);

} // namespace bcw
