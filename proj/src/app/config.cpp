#include "bcw/app/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "bcw/errors.hpp"
#include "bcw/io.hpp"

namespace bcw {

using nlohmann::json;

namespace {

const char* stencil_name(DtnStencil s) {
    return s == DtnStencil::SummationByParts ? "sbp" : "one_sided";
}

json pulse_json(const Pulse& p) {
    return {{"shape", p.shape == Pulse::Shape::Bump ? "bump" : "cubic_bspline"},
            {"lo", p.lo},
            {"hi", p.hi},
            {"amplitude", p.amplitude}};
}

void type_check(const json& def, const json& user, const std::string& path) {
    const bool ok = (def.is_number() && user.is_number()) || (def.is_string() && user.is_string()) ||
                    (def.is_boolean() && user.is_boolean()) || (def.is_array() && user.is_array()) ||
                    (def.is_object() && user.is_object());
    if (!ok) throw ConfigError("'" + path + "' has the wrong type");
}

// Overlay user keys on the defaults. Objects merge key by key, except those whose layout
// depends on a family name, which the user replaces whole.
void overlay(json& base, const json& user, const std::string& path) {
    for (auto it = user.begin(); it != user.end(); ++it) {
        const std::string key = path.empty() ? it.key() : path + "." + it.key();
        if (!base.contains(it.key())) throw ConfigError("unknown configuration key '" + key + "'");
        json& slot = base[it.key()];
        if (key == "control.alpha" && (it->is_string() || it->is_array())) {
            slot = *it;
            continue;
        }
        type_check(slot, *it, key);
        const bool whole = key == "potential" || key == "speed" || key == "lightray.phantom";
        if (slot.is_object() && !whole)
            overlay(slot, *it, key);
        else
            slot = *it;
    }
}

double number(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + " needs '" + key + "'");
    if (!j.at(key).is_number()) throw ConfigError(where + "." + key + " must be a number");
    const double v = j.at(key).get<double>();
    if (!std::isfinite(v)) throw ConfigError(where + "." + key + " must be finite");
    return v;
}

void allow_only(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : keys) known = known || it.key() == k;
        if (!known) throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
}

std::vector<Pulse> pulses(const json& arr, const std::string& where) {
    std::vector<Pulse> out;
    for (const auto& p : arr) {
        if (!p.is_object()) throw ConfigError(where + " entries must be objects");
        allow_only(p, {"shape", "lo", "hi", "amplitude"}, where);
        Pulse pulse;
        const std::string shape = p.value("shape", "bump");
        if (shape == "bump")
            pulse.shape = Pulse::Shape::Bump;
        else if (shape == "cubic_bspline")
            pulse.shape = Pulse::Shape::CubicBSpline;
        else
            throw ConfigError(where + ": unknown pulse shape '" + shape + "'");
        pulse.lo = number(p, "lo", where);
        pulse.hi = number(p, "hi", where);
        pulse.amplitude = p.contains("amplitude") ? number(p, "amplitude", where) : 1.0;
        if (!(pulse.hi > pulse.lo) || pulse.lo < 0.0) throw ConfigError(where + ": pulse needs 0 <= lo < hi");
        out.push_back(pulse);
    }
    return out;
}

template <typename T>
std::vector<T> list(const json& j, const std::string& where) {
    std::vector<T> out;
    for (const auto& v : j) {
        if (!v.is_number()) throw ConfigError(where + " must hold numbers");
        out.push_back(v.get<T>());
    }
    return out;
}

FunctionSpec function_spec(const json& j, const std::string& where) {
    if (!j.contains("family") || !j.at("family").is_string()) throw ConfigError(where + " needs a 'family' name");
    FunctionSpec s{j.at("family").get<std::string>(), j};
    s.params.erase("family");
    return s;
}

void require_positive(double v, const std::string& what) {
    if (!(v > 0.0)) throw ConfigError(what + " must be positive");
}

} // namespace

std::function<double(double)> FunctionSpec::resolve() const {
    const json& p = params;
    const std::string where = "family '" + family + "'";
    if (family == "zero") {
        allow_only(p, {}, where);
        return [](double) { return 0.0; };
    }
    if (family == "constant") {
        allow_only(p, {"value"}, where);
        const double v = number(p, "value", where);
        return [v](double) { return v; };
    }
    if (family == "bump") {
        allow_only(p, {"amplitude", "lo", "hi"}, where);
        const double a = number(p, "amplitude", where), lo = number(p, "lo", where), hi = number(p, "hi", where);
        if (!(hi > lo)) throw ConfigError(where + " needs lo < hi");
        return [a, lo, hi](double x) { return a * smooth_bump(x, lo, hi); };
    }
    if (family == "gaussian") {
        allow_only(p, {"amplitude", "center", "rate"}, where);
        const double a = number(p, "amplitude", where), c = number(p, "center", where), r = number(p, "rate", where);
        return [a, c, r](double x) { return a * std::exp(-r * (x - c) * (x - c)); };
    }
    if (family == "sine_bump") {
        allow_only(p, {"offset", "frequency"}, where);
        const double o = p.contains("offset") ? number(p, "offset", where) : 2.0;
        const double k = p.contains("frequency") ? number(p, "frequency", where) : 3.0;
        return [o, k](double x) { return (o + std::sin(k * x)) * reference_bump(x); };
    }
    if (family == "linear") {
        allow_only(p, {"c0", "slope"}, where);
        const double c0 = number(p, "c0", where), s = number(p, "slope", where);
        return [c0, s](double x) { return c0 + s * x; };
    }
    if (family == "file") {
        allow_only(p, {"path"}, where);
        if (!p.contains("path") || !p.at("path").is_string()) throw ConfigError(where + " needs a 'path'");
        const std::string path = p.at("path").get<std::string>();
        if (!std::filesystem::exists(path)) throw ConfigError("referenced file does not exist: " + path);
        const GridFile g = read_bcw1(path);
        if (g.dims.size() != 1 || g.values.size() < 2) throw ConfigError(path + " must hold a rank-1 array");
        const std::vector<double> v = g.values;
        return [v](double x) {
            const double s = std::clamp(x, 0.0, 1.0) * (v.size() - 1);
            const std::size_t i = std::min(static_cast<std::size_t>(s), v.size() - 2);
            const double w = s - i;
            return (1.0 - w) * v[i] + w * v[i + 1];
        };
    }
    throw ConfigError("unknown function family '" + family + "'");
}

json default_config_document() {
    RunConfig d;
    json doc;
    doc["grid"] = {{"n_x", d.n_x}, {"dt", d.dt}, {"t_max", d.t_max}};
    doc["potential"] = d.potential.params;
    doc["potential"]["family"] = d.potential.family;
    doc["speed"] = d.speed.params;
    doc["speed"]["family"] = d.speed.family;
    doc["source"] = json::array({pulse_json({Pulse::Shape::Bump, 0.05, 0.45, 1.0})});
    doc["probe"] = json::array({pulse_json({Pulse::Shape::Bump, 0.2, 0.5, 0.7})});
    doc["dtn"] = {{"stencil", stencil_name(d.stencil)}, {"refinement", d.refinement}};
    doc["control"] = {{"T", d.control_T}, {"M", d.control_M}, {"s", {0.3, 0.5, 0.7}}, {"alpha", "lcurve"}};
    doc["reconstruct"] = {{"T_grid", {1.1, 1.15, 1.2, 1.25, 1.3, 1.35, 1.4, 1.45, 1.5}},
                          {"delta", d.delta},
                          {"alpha", d.alpha},
                          {"x_min", d.x_min},
                          {"x_max", d.x_max},
                          {"sources", d.sources},
                          {"rank_tolerance", d.rank_tolerance},
                          {"noise_floor", d.noise_floor},
                          {"amplitude_tolerance", d.amplitude_tolerance}};
    doc["geomoptics"] = {{"N", {1, 2}},
                         {"sigma", {8, 16, 32, 64, 128}},
                         {"chi_half_width", d.chi_half_width},
                         {"eta_half_width", d.eta_half_width},
                         {"tau0", d.go_tau0},
                         {"T", d.go_T},
                         {"x_lo", d.go_x_lo},
                         {"x_hi", d.go_x_hi},
                         {"x0", d.certify_x0}};
    doc["lightray"] = {{"phantom", {{"family", d.phantom.family}, {"radius", d.phantom.radius}, {"ramp", d.phantom.ramp}}},
                       {"nt", d.lrt_nt},
                       {"nx", d.lrt_nx},
                       {"T", d.lrt_T},
                       {"X", d.lrt_X},
                       {"band_fraction", d.band_fraction}};
    doc["output"] = d.output;
    doc["workers"] = d.workers;
    doc["noise"] = {{"level", d.noise_level}, {"seed", d.seed}};
    doc["de_crime"] = d.de_crime;
    return doc;
}

RunConfig parse_config(const json& user_in) {
    if (!user_in.is_object()) throw ConfigError("configuration must be a JSON object");
    const json& user = user_in.contains("manifest_version") ? user_in.at("config") : user_in;
    json doc = default_config_document();
    overlay(doc, user, "");

    RunConfig c;
    const json& g = doc["grid"];
    c.n_x = g["n_x"].get<int>();
    c.dt = g["dt"].get<double>();
    c.t_max = g["t_max"].get<double>();
    if (c.n_x < 3) throw ConfigError("grid.n_x must be at least 3");
    require_positive(c.dt, "grid.dt");
    require_positive(c.t_max, "grid.t_max");

    c.potential = function_spec(doc["potential"], "potential");
    c.speed = function_spec(doc["speed"], "speed");
    c.source = pulses(doc["source"], "source");
    c.probe = pulses(doc["probe"], "probe");

    const std::string st = doc["dtn"]["stencil"].get<std::string>();
    if (st == "sbp")
        c.stencil = DtnStencil::SummationByParts;
    else if (st == "one_sided")
        c.stencil = DtnStencil::OneSided3;
    else
        throw ConfigError("dtn.stencil must be 'sbp' or 'one_sided'");
    c.refinement = doc["dtn"]["refinement"].get<int>();
    if (c.refinement != 1 && c.refinement != 2) throw ConfigError("dtn.refinement must be 1 or 2");

    const json& ct = doc["control"];
    c.control_T = ct["T"].get<double>();
    c.control_M = ct["M"].get<int>();
    c.control_s = list<double>(ct["s"], "control.s");
    if (ct["alpha"].is_string()) {
        if (ct["alpha"].get<std::string>() != "lcurve") throw ConfigError("control.alpha must be 'lcurve' or numbers");
    } else if (ct["alpha"].is_array()) {
        c.control_alpha = list<double>(ct["alpha"], "control.alpha");
    } else if (ct["alpha"].is_number()) {
        c.control_alpha = {ct["alpha"].get<double>()};
    } else {
        throw ConfigError("control.alpha must be 'lcurve' or numbers");
    }
    if (c.control_M < 1) throw ConfigError("control.M must be positive");
    for (double s : c.control_s)
        if (!(s > 0.0 && s < c.control_T)) throw ConfigError("control.s entries must lie in (0, T)");

    const json& r = doc["reconstruct"];
    c.T_grid = list<double>(r["T_grid"], "reconstruct.T_grid");
    c.delta = r["delta"].get<double>();
    c.alpha = r["alpha"].get<double>();
    c.x_min = r["x_min"].get<double>();
    c.x_max = r["x_max"].get<double>();
    c.sources = r["sources"].get<int>();
    c.rank_tolerance = r["rank_tolerance"].get<double>();
    c.noise_floor = r["noise_floor"].get<double>();
    c.amplitude_tolerance = r["amplitude_tolerance"].get<double>();
    require_positive(c.delta, "reconstruct.delta");
    if (c.alpha < 0.0) throw ConfigError("reconstruct.alpha must be nonnegative");
    if (c.sources < 2) throw ConfigError("reconstruct.sources must be at least 2");
    if (!(c.x_max > c.x_min)) throw ConfigError("reconstruct.x_min must be below x_max");
    if (c.T_grid.size() < 5) throw ConfigError("reconstruct.T_grid needs at least five levels");

    const json& go = doc["geomoptics"];
    c.go_orders = list<int>(go["N"], "geomoptics.N");
    c.sigma_list = list<double>(go["sigma"], "geomoptics.sigma");
    c.chi_half_width = go["chi_half_width"].get<double>();
    c.eta_half_width = go["eta_half_width"].get<double>();
    c.go_tau0 = go["tau0"].get<double>();
    c.go_T = go["T"].get<double>();
    c.go_x_lo = go["x_lo"].get<double>();
    c.go_x_hi = go["x_hi"].get<double>();
    c.certify_x0 = go["x0"].get<double>();
    for (int n : c.go_orders)
        if (n < 0 || n > 6) throw ConfigError("geomoptics.N entries must lie in [0, 6]");
    if (c.sigma_list.size() < 2) throw ConfigError("geomoptics.sigma needs two or more values");
    for (double s : c.sigma_list) require_positive(s, "geomoptics.sigma entries");

    const json& lr = doc["lightray"];
    const json& ph = lr["phantom"];
    allow_only(ph, {"family", "radius", "ramp"}, "lightray.phantom");
    c.phantom.family = ph.value("family", "bump");
    if (c.phantom.family != "bump" && c.phantom.family != "plateau")
        throw ConfigError("lightray.phantom.family must be 'bump' or 'plateau'");
    c.phantom.radius = ph.contains("radius") ? number(ph, "radius", "lightray.phantom") : 0.4;
    c.phantom.ramp = ph.contains("ramp") ? number(ph, "ramp", "lightray.phantom") : 0.3;
    c.lrt_nt = lr["nt"].get<int>();
    c.lrt_nx = lr["nx"].get<int>();
    c.lrt_T = lr["T"].get<double>();
    c.lrt_X = lr["X"].get<double>();
    c.band_fraction = lr["band_fraction"].get<double>();
    if (c.lrt_nt % 2 == 0 || c.lrt_nx % 2 == 0) throw ConfigError("lightray.nt and lightray.nx must be odd");

    c.output = doc["output"].get<std::string>();
    c.workers = doc["workers"].get<int>();
    if (c.workers < 1) throw ConfigError("workers must be at least 1");
    c.noise_level = doc["noise"]["level"].get<double>();
    if (c.noise_level < 0.0) throw ConfigError("noise.level must be nonnegative");
    c.seed = doc["noise"]["seed"].get<std::uint64_t>();
    c.de_crime = doc["de_crime"].get<bool>();

    // Derived checks: families resolve, speed positive, CFL.
    const SpatialGrid sg = c.spatial_grid();
    const auto qf = c.potential.resolve();
    const auto cf = c.speed.resolve();
    double cmax = 0.0;
    for (double x : sg.nodes()) {
        const double cv = cf(x);
        if (!(cv > 0.0)) throw ConfigError("speed must be positive on [0, 1]");
        if (!std::isfinite(qf(x))) throw ConfigError("potential is not finite on [0, 1]");
        cmax = std::max(cmax, cv);
    }
    const double lambda = cmax * c.dt / sg.dx();
    if (lambda > 1.0 + 1e-12) {
        std::ostringstream os;
        os << "CFL number " << lambda << " exceeds 1; reduce grid.dt below " << sg.dx() / cmax;
        throw ConfigError(os.str());
    }
    c.document = doc;
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read configuration " + path);
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw ConfigError("configuration is not valid JSON: " + std::string(e.what()));
    }
    return parse_config(j);
}

void refresh_document(RunConfig& c) {
    c.document["output"] = c.output;
    c.document["workers"] = c.workers;
    c.document["noise"]["seed"] = c.seed;
    c.document["noise"]["level"] = c.noise_level;
    c.document["de_crime"] = c.de_crime;
}

std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw PipelineFault("SHA-256 digest failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return os.str();
}

} // namespace bcw
