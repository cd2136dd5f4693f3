#pragma once

// Built-in model scenes with closed-form oracles, and the JSON scene format.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "rotnum/error.hpp"
#include "rotnum/expr.hpp"
#include "rotnum/flow.hpp"

namespace rotnum {

struct SeedSpec {
    std::string label;
    std::vector<double> p0;
    double T0 = 0.0;
};

/// Serializable description of a scene. Expressions stay textual until build.
struct SceneSpec {
    std::string name;
    std::size_t dim = 0;
    std::vector<Periodicity> periodic;  // zero-based here, one-based on disk
    std::vector<std::size_t> sphere;    // zero-based here, one-based on disk
    std::string W, A, B, L;
    std::vector<SeedSpec> orbits;
    std::map<std::string, double> params;
    std::string oracle_notes;
    double membership_tol = 1e-7;
    IntegratorOptions integrator;
    double orbit_tol = 1e-8;
    double basin_radius = 0.25;
    double candidate_gain = 1.0;
};

struct ParamInfo {
    std::string name;
    double fallback = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    bool lo_open = false;
    bool integer = false;
    std::vector<double> allowed;  // when non-empty, the only admissible values
};

struct CatalogEntry {
    std::string name;
    std::string summary;
    std::vector<ParamInfo> params;
};

inline const std::vector<CatalogEntry>& scene_catalog() {
    static const std::vector<CatalogEntry> catalog = {
        {"sol4_model", "coords (s,x,y,z), s periodic T; W = d_s + x d_x - y d_y; A = d_x, B = d_y; hyperbolic orbit 'core'",
         {{"T", 1.0, 0.0, 20.0, true, false, {}}}},
        {"elliptic_model", "coords (s,x,y), s periodic T; W = d_s + (delta/T)(x d_y - y d_x); elliptic orbit 'core'",
         {{"delta", 1.3, 0.0, std::numbers::pi, false, false, {}}, {"T", 1.0, 0.0, 20.0, true, false, {}}}},
        {"parabolic_model", "coords (s,x,y), s periodic T; W = d_s + sign (c/T) y d_x; parabolic orbit 'core'",
         {{"c", 1.0, 0.0, 10.0, true, false, {}}, {"T", 1.0, 0.0, 20.0, true, false, {}}, {"sign", 1.0, -1.0, 1.0, false, true, {-1.0, 1.0}}}},
        {"nms_local",
         "coords (theta,x,y,z), theta periodic 2pi; W = d_theta + 2e1 x d_x + 2e2 y d_y + 4e3 z d_z; "
         "L = cos(theta) d_x + sin(theta) d_y; orbit 'core'",
         {{"eps1", 1.0, -1.0, 1.0, false, true, {-1.0, 1.0}},
          {"eps2", 1.0, -1.0, 1.0, false, true, {-1.0, 1.0}},
          {"eps3", 1.0, -1.0, 1.0, false, true, {-1.0, 1.0}}}},
        {"reeb_s3",
         "coords (theta,x,y), theta periodic 2pi; W = d_theta + (x^2-1)/2 d_x + x y d_y; constant L = d_x; "
         "orbits 'source' (x=1) and 'sink' (x=-1) with trivial normalized monodromy",
         {}},
        {"suspension_s3s1",
         "ambient (x1,y1,x2,y2,s) on S^3 x S^1, s periodic 1; W = d_s + V with V the contact vector field of "
         "-y1/2 for the standard contact form; A, B span its contact planes; L = cos(2 pi k s) A + sin(2 pi k s) B; "
         "orbits 'source' and 'sink'",
         {{"turns", 1.0, -3.0, 3.0, false, true, {}}}},
    };
    return catalog;
}

namespace detail {

inline std::string num(double v) {
    const std::string s = format_number(v);
    return v < 0.0 ? "(" + s + ")" : s;
}

inline std::map<std::string, double> resolve_params(const CatalogEntry& entry,
                                                    const std::map<std::string, double>& given) {
    std::map<std::string, double> out;
    for (const auto& p : entry.params) out[p.name] = p.fallback;
    for (const auto& [key, value] : given) {
        const auto it = std::find_if(entry.params.begin(), entry.params.end(),
                                     [&](const ParamInfo& p) { return p.name == key; });
        if (it == entry.params.end()) throw SceneError("unknown parameter '" + key + "' for scene '" + entry.name + "'");
        const bool below = it->lo_open ? !(value > it->lo) : !(value >= it->lo);
        bool bad = below || !(value <= it->hi) || (it->integer && std::floor(value) != value);
        if (!it->allowed.empty()) bad = std::find(it->allowed.begin(), it->allowed.end(), value) == it->allowed.end();
        if (bad) {
            throw SceneError("parameter '" + key + "' = " + format_number(value) + " out of range for scene '" +
                             entry.name + "'");
        }
        out[key] = value;
    }
    return out;
}

}  // namespace detail

inline const CatalogEntry& catalog_entry(const std::string& name) {
    for (const auto& e : scene_catalog())
        if (e.name == name) return e;
    throw SceneError("unknown scene '" + name + "'");
}

inline bool is_builtin_scene(const std::string& name) {
    const auto& c = scene_catalog();
    return std::any_of(c.begin(), c.end(), [&](const CatalogEntry& e) { return e.name == name; });
}

inline SceneSpec builtin_scene_spec(const std::string& name, const std::map<std::string, double>& given = {}) {
    using detail::num;
    const auto& entry = catalog_entry(name);
    const auto prm = detail::resolve_params(entry, given);
    const double two_pi = 2.0 * std::numbers::pi;

    SceneSpec s;
    s.name = name;
    s.params = prm;
    if (name == "sol4_model") {
        const double T = prm.at("T");
        s.dim = 4;
        s.periodic = {{0, T}};
        s.W = "[1; x2; -x3; 0]";
        s.A = "[0; 1; 0; 0]";
        s.B = "[0; 0; 1; 0]";
        s.L = s.A;
        s.orbits = {{"core", {0, 0, 0, 0}, T}};
        s.oracle_notes = "forward tangent map on (x,y) is diag(e^t, e^-t); backward monodromy diag(e^-T, e^T), "
                         "trace 2 cosh T; lambda = 1; L = A gives theta constant";
    } else if (name == "elliptic_model") {
        const double T = prm.at("T");
        const double k = prm.at("delta") / T;
        s.dim = 3;
        s.periodic = {{0, T}};
        s.W = "[1; -" + num(k) + "*x3; " + num(k) + "*x2]";
        s.A = "[0; 1; 0]";
        s.B = "[0; 0; 1]";
        s.L = s.A;
        s.orbits = {{"core", {0, 0, 0}, T}};
        s.oracle_notes = "flow rotates (x,y) by delta t/T; L = d_x gives theta(t) = theta(0) - delta t/T; "
                         "monodromy is a rotation with trace 2 cos delta";
    } else if (name == "parabolic_model") {
        const double T = prm.at("T");
        const double k = prm.at("sign") * prm.at("c") / T;
        s.dim = 3;
        s.periodic = {{0, T}};
        s.W = "[1; " + num(k) + "*x3; 0]";
        s.A = "[0; 1; 0]";
        s.B = "[0; 0; 1]";
        s.L = s.A;
        s.orbits = {{"core", {0, 0, 0}, T}};
        s.oracle_notes = "backward monodromy [[1, -sign c], [0, 1]]; sign = +1 is positive parabolic";
    } else if (name == "nms_local") {
        const double e1 = prm.at("eps1"), e2 = prm.at("eps2"), e3 = prm.at("eps3");
        s.dim = 4;
        s.periodic = {{0, two_pi}};
        s.W = "[1; " + num(2 * e1) + "*x2; " + num(2 * e2) + "*x3; " + num(4 * e3) + "*x4]";
        s.A = "[0; 1; 0; 0]";
        s.B = "[0; 0; 1; 0]";
        s.L = "[0; cos(x1); sin(x1); 0]";
        s.orbits = {{"core", {0, 0, 0, 0}, two_pi}};
        s.oracle_notes = "lambda(p;s) = exp(2 (eps1 + eps2) s) on the orbit; with eps1 = eps2 the pulled-back "
                         "candidate turns once per period";
    } else if (name == "reeb_s3") {
        s.dim = 3;
        s.periodic = {{0, two_pi}};
        s.W = "[1; 0.5*(x2^2 - 1); x2*x3]";
        s.A = "[0; 1; 0]";
        s.B = "[0; 0; 1]";
        s.L = s.A;
        s.orbits = {{"source", {0, 1, 0}, two_pi}, {"sink", {0, -1, 0}, two_pi}};
        s.oracle_notes = "tangent map on each orbit is a multiple of the identity; normalized monodromy is the "
                         "identity and rot = 0 for every phase";
    } else {  // suspension_s3s1
        const double k = prm.at("turns");
        s.dim = 5;
        s.periodic = {{4, 1.0}};
        s.sphere = {0, 1, 2, 3};
        s.W = "[(x3^2 + x4^2 + 2*x2^2)/4; -x1*x2/2; (x2*x4 - x1*x3)/4; -(x1*x4 + x2*x3)/4; 1]";
        s.A = "[-x3; x4; x1; -x2; 0]";
        s.B = "[-x4; -x3; x2; x1; 0]";
        const std::string c = "cos(" + num(two_pi * k) + "*x5)", sn = "sin(" + num(two_pi * k) + "*x5)";
        s.L = "[" + c + "*(-x3) + " + sn + "*(-x4); " + c + "*x4 + " + sn + "*(-x3); " + c + "*x1 + " + sn +
              "*x2; " + c + "*(-x2) + " + sn + "*x1; 0]";
        s.orbits = {{"source", {-1, 0, 0, 0, 0}, 1.0}, {"sink", {1, 0, 0, 0, 0}, 1.0}};
        s.oracle_notes = "tangent map is conformal on <A,B> along both orbits; rot = 2 pi turns for every phase; "
                         "lambda = exp(s/2) at the source and exp(-s/2) at the sink";
    }
    return s;
}

inline constexpr std::size_t kValidationPoints = 20;
inline constexpr double kValidationRadius = 0.05;

/// Frame independence at every seed, and membership of L with rho > 0 at the
/// seeds and at pseudo-random points around them (fixed RNG seed).
inline void validate_scene(const Scene& scene) {
    std::mt19937_64 rng(0x5eed);
    std::uniform_real_distribution<double> jitter(-kValidationRadius, kValidationRadius);
    const auto n = static_cast<Eigen::Index>(scene.dim());
    auto check_point = [&](const Eigen::VectorXd& x, const std::string& where) {
        std::optional<FrameAt> frame;
        try {
            frame.emplace(scene.E, x);
        } catch (const FrameError& e) {
            throw SceneError("scene '" + scene.name + "' failed validation at " + where + ": " + e.what());
        }
        const Eigen::VectorXd l = eval_field(scene.L, x);
        const auto d = frame->decompose(l);
        if (d.residual > frame->membership_tol() * std::max(1.0, l.norm())) {
            throw SceneError("scene '" + scene.name + "' failed validation at " + where +
                             ": L not in E (residual " + detail::format_number(d.residual) + ")");
        }
        if (!(std::hypot(d.a, d.b) * scene.candidate_gain > kRhoMin)) {
            throw SceneError("scene '" + scene.name + "' failed validation at " + where +
                             ": ρ = 0 (L tangent to W)");
        }
    };
    for (const auto& seed : scene.orbits) {
        Eigen::VectorXd p = wrap_point(scene, seed.p0);
        project_to_sphere(scene, p);
        check_point(p, "seed '" + seed.label + "'");
        for (std::size_t k = 0; k < kValidationPoints; ++k) {
            Eigen::VectorXd q = seed.p0;
            for (Eigen::Index i = 0; i < n; ++i) q[i] += jitter(rng);
            project_to_sphere(scene, q);
            check_point(wrap_point(scene, q), "a point near seed '" + seed.label + "'");
        }
    }
}

inline Scene build_scene(const SceneSpec& spec, bool validate = true) {
    if (spec.dim < 3) throw SceneError("scene dimension must be at least 3");
    Scene s;
    s.name = spec.name;
    s.E.W = parse_field(spec.W, spec.dim);
    s.E.A = parse_field(spec.A, spec.dim);
    s.E.B = parse_field(spec.B, spec.dim);
    s.E.membership_tol = spec.membership_tol;
    s.L = parse_field(spec.L, spec.dim);
    s.candidate_gain = spec.candidate_gain;
    if (!(spec.candidate_gain > 0.0)) throw SceneError("L_scale must be positive");
    for (const auto& per : spec.periodic) {
        if (per.index >= spec.dim || !(per.period > 0.0)) throw SceneError("invalid periodic coordinate entry");
    }
    for (auto i : spec.sphere)
        if (i >= spec.dim) throw SceneError("sphere coordinate out of range");
    s.periodic = spec.periodic;
    s.sphere = spec.sphere;
    for (const auto& o : spec.orbits) {
        if (o.p0.size() != spec.dim) throw SceneError("orbit '" + o.label + "' has a seed of the wrong dimension");
        if (!(o.T0 > 0.0)) throw SceneError("orbit '" + o.label + "' needs T0 > 0");
        s.orbits.push_back({Eigen::Map<const Eigen::VectorXd>(o.p0.data(), static_cast<Eigen::Index>(o.p0.size())),
                            o.T0, o.label});
    }
    s.integrator = spec.integrator;
    s.orbit_tol = spec.orbit_tol;
    s.basin_radius = spec.basin_radius;
    s.params = spec.params;
    s.notes = spec.oracle_notes;
    if (validate) validate_scene(s);
    return s;
}

inline Scene builtin_scene(const std::string& name, const std::map<std::string, double>& params = {}) {
    return build_scene(builtin_scene_spec(name, params));
}

inline nlohmann::json scene_to_json(const SceneSpec& s) {
    nlohmann::json j;
    j["name"] = s.name;
    j["dim"] = s.dim;
    j["periodic"] = nlohmann::json::array();
    for (const auto& p : s.periodic) j["periodic"].push_back({p.index + 1, p.period});
    if (!s.sphere.empty()) {
        j["sphere"] = nlohmann::json::array();
        for (auto i : s.sphere) j["sphere"].push_back(i + 1);
    }
    j["W"] = s.W;
    j["A"] = s.A;
    j["B"] = s.B;
    j["L"] = s.L;
    j["orbits"] = nlohmann::json::array();
    for (const auto& o : s.orbits) j["orbits"].push_back({{"label", o.label}, {"p0", o.p0}, {"T0", o.T0}});
    j["params"] = s.params;
    j["oracle_notes"] = s.oracle_notes;
    j["membership_tol"] = s.membership_tol;
    j["rel_tol"] = s.integrator.rel_tol;
    j["abs_tol"] = s.integrator.abs_tol;
    j["max_step"] = s.integrator.max_step;
    j["orbit_tol"] = s.orbit_tol;
    j["basin_radius"] = s.basin_radius;
    j["L_scale"] = s.candidate_gain;
    return j;
}

inline SceneSpec scene_spec_from_json(const nlohmann::json& j) {
    SceneSpec s;
    try {
        s.name = j.at("name").get<std::string>();
        s.dim = j.at("dim").get<std::size_t>();
        if (j.contains("periodic")) {
            for (const auto& e : j.at("periodic")) {
                const auto idx = e.at(0).get<std::size_t>();
                if (idx == 0) throw SceneError("periodic coordinate indices are one-based");
                s.periodic.push_back({idx - 1, e.at(1).get<double>()});
            }
        }
        if (j.contains("sphere")) {
            for (const auto& e : j.at("sphere")) {
                const auto idx = e.get<std::size_t>();
                if (idx == 0) throw SceneError("sphere coordinate indices are one-based");
                s.sphere.push_back(idx - 1);
            }
        }
        s.W = j.at("W").get<std::string>();
        s.A = j.at("A").get<std::string>();
        s.B = j.at("B").get<std::string>();
        s.L = j.at("L").get<std::string>();
        for (const auto& o : j.at("orbits")) {
            s.orbits.push_back(
                {o.at("label").get<std::string>(), o.at("p0").get<std::vector<double>>(), o.at("T0").get<double>()});
        }
        if (j.contains("params")) s.params = j.at("params").get<std::map<std::string, double>>();
        s.oracle_notes = j.value("oracle_notes", std::string());
        s.membership_tol = j.value("membership_tol", s.membership_tol);
        s.integrator.rel_tol = j.value("rel_tol", s.integrator.rel_tol);
        s.integrator.abs_tol = j.value("abs_tol", s.integrator.abs_tol);
        s.integrator.max_step = j.value("max_step", s.integrator.max_step);
        s.orbit_tol = j.value("orbit_tol", s.orbit_tol);
        s.basin_radius = j.value("basin_radius", s.basin_radius);
        s.candidate_gain = j.value("L_scale", s.candidate_gain);
    } catch (const nlohmann::json::exception& e) {
        throw SceneError(std::string("malformed scene file: ") + e.what());
    }
    return s;
}

inline nlohmann::json parse_json_text(const std::string& text) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what(), e.byte);
    }
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SceneError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Accepts either a path to a scene file or the JSON text itself.
inline SceneSpec load_scene_spec(const std::string& path_or_text) {
    const auto first = path_or_text.find_first_not_of(" \t\r\n");
    const bool inline_json = first != std::string::npos && path_or_text[first] == '{';
    return scene_spec_from_json(parse_json_text(inline_json ? path_or_text : read_text_file(path_or_text)));
}

inline Scene load_scene(const std::string& path_or_text) { return build_scene(load_scene_spec(path_or_text)); }

}  // namespace rotnum
