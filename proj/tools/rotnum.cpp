// rotnum: command-line front end for rotation numbers along closed orbits.
//
// Exit codes: 0 success, 1 computational error, 2 usage error.

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rotnum/rotnum.hpp"

namespace {

using namespace rotnum;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SceneArgs {
    std::string scene;
    std::vector<std::string> params;
    std::string orbit;
    std::string candidate;
};

void add_scene_options(CLI::App* cmd, SceneArgs& args, bool with_orbit = true) {
    cmd->add_option("--scene", args.scene, "built-in scene name or path to a scene JSON file")->required();
    cmd->add_option("--param", args.params, "scene parameter as key=value (repeatable)");
    cmd->add_option("--L", args.candidate, "override the candidate field L (expression text)");
    if (with_orbit) cmd->add_option("--orbit", args.orbit, "orbit label")->required();
}

std::map<std::string, double> parse_params(const std::vector<std::string>& items) {
    std::map<std::string, double> out;
    for (const auto& item : items) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) throw UsageError("--param expects key=value, got '" + item + "'");
        const std::string key = item.substr(0, eq), value = item.substr(eq + 1);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(value, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != value.size()) throw UsageError("--param " + key + ": '" + value + "' is not a number");
        out[key] = v;
    }
    return out;
}

Scene resolve_scene(const SceneArgs& args) {
    const auto params = parse_params(args.params);
    Scene scene;
    if (is_builtin_scene(args.scene)) {
        scene = builtin_scene(args.scene, params);
    } else {
        if (!params.empty()) throw UsageError("--param only applies to built-in scenes");
        scene = load_scene(args.scene);
    }
    if (!args.candidate.empty()) {
        scene.L = parse_field(args.candidate, scene.dim());
        scene.candidate_gain = 1.0;
        validate_scene(scene);
    }
    return scene;
}

std::string describe(const SceneArgs& args, const Scene& scene) {
    std::ostringstream os;
    os << "rotnum scene=" << scene.name;
    for (const auto& [k, v] : scene.params) os << ' ' << k << '=' << format17(v);
    if (!args.orbit.empty()) os << " orbit=" << args.orbit;
    os << " L=" << render(scene.L);
    return os.str();
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    return out;
}

void print_json(const Json& j) { std::cout << j.dump(2) << '\n'; }

void list_scenes() {
    for (const auto& e : scene_catalog()) {
        std::cout << e.name << '\n' << "  " << e.summary << '\n';
        for (const auto& p : e.params) {
            std::cout << "  --param " << p.name << "=<value>  default " << format17(p.fallback);
            if (!p.allowed.empty()) {
                std::cout << ", one of {";
                for (std::size_t k = 0; k < p.allowed.size(); ++k) std::cout << (k ? ", " : "") << format17(p.allowed[k]);
                std::cout << '}';
            } else {
                std::cout << ", range " << (p.lo_open ? '(' : '[') << format17(p.lo) << ", " << format17(p.hi) << ']';
                if (p.integer) std::cout << " integer";
            }
            std::cout << '\n';
        }
        const auto spec = builtin_scene_spec(e.name);
        std::cout << "  orbits:";
        for (const auto& o : spec.orbits) std::cout << ' ' << o.label;
        std::cout << '\n';
    }
}

int run(int argc, char** argv) {
    CLI::App app{"Rotation numbers of candidate fields along closed orbits of a framed distribution"};
    app.require_subcommand(1);

    SceneArgs sa;
    double eta = 0.0;
    std::string out_path, graph_path, candidates_path, in_path, convention = "backward";
    std::size_t samples = 64;
    double threshold = kThetaPositive;
    double epsilon = 0.0;

    auto* list = app.add_subcommand("list-scenes", "print the built-in scene catalog");

    auto* trace = app.add_subcommand("trace", "write the pulled-back trace of L along an orbit as CSV");
    add_scene_options(trace, sa);
    trace->add_option("--eta", eta, "initial phase rotation of L");
    trace->add_option("--out", out_path, "output CSV")->required();

    auto* rot = app.add_subcommand("rot", "rotation number of L along an orbit");
    add_scene_options(rot, sa);
    rot->add_option("--eta", eta, "initial phase rotation of L");

    auto* classify = app.add_subcommand("classify", "refine an orbit and classify its monodromy");
    add_scene_options(classify, sa);
    classify->add_option("--convention", convention, "backward or forward")
        ->check(CLI::IsMember({"backward", "forward"}));

    auto* maxrot = app.add_subcommand("maxrot", "phase profile and its maximum over the initial phase");
    add_scene_options(maxrot, sa);
    maxrot->add_option("--samples", samples, "grid size on [0, pi)")->check(CLI::PositiveNumber);
    maxrot->add_option("--out", out_path, "optional CSV (eta, phi)");

    auto* certify = app.add_subcommand("certify", "sign certificate for the angular velocity of L");
    add_scene_options(certify, sa);
    certify->add_option("--eta", eta, "initial phase rotation of L");

    auto* decide = app.add_subcommand("decide", "existence decision over all orbits of an orbit graph");
    add_scene_options(decide, sa, false);
    decide->add_option("--graph", graph_path, "orbit graph JSON")->required();
    decide->add_option("--threshold", threshold, "pass threshold on maxrot (radians)");
    decide->add_option("--candidates", candidates_path, "JSON list of candidate fields to sweep");
    decide->add_option("--samples", samples, "phase grid size per orbit")->check(CLI::PositiveNumber);

    auto* homotope = app.add_subcommand("homotope", "monotone replacement of an angle profile");
    homotope->add_option("--in", in_path, "CSV with columns t, theta")->required();
    homotope->add_option("--epsilon", epsilon, "collar width at each end")->required();
    homotope->add_option("--out", out_path, "output CSV (t, psi0, psi1)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (list->parsed()) {
        list_scenes();
        return 0;
    }
    if (homotope->parsed()) {
        std::ifstream in(in_path, std::ios::binary);
        if (!in) throw Error("cannot open '" + in_path + "'");
        const auto series = read_angle_csv(in);
        const auto cert = homotope_theta(series.t, series.theta, epsilon);
        auto out = open_out(out_path);
        write_homotopy_csv(out, cert, "rotnum homotope in=" + in_path + " epsilon=" + format17(epsilon));
        print_json(to_json(cert));
        return 0;
    }

    const Scene scene = resolve_scene(sa);
    if (decide->parsed()) {
        const auto graph = graph_from_json(parse_json_text(read_text_file(graph_path)));
        std::vector<std::string> candidates;
        if (!candidates_path.empty()) candidates = candidates_from_json(parse_json_text(read_text_file(candidates_path)));
        const auto report = decide_existence(scene, graph, candidates, {threshold, samples});
        print_json(to_json(report));
        return 0;
    }

    const auto orbit = refine_orbit(scene, scene.orbit(sa.orbit));
    if (trace->parsed()) {
        const auto tr = pullback_trace(scene, orbit, eta);
        auto out = open_out(out_path);
        write_trace_csv(out, tr, describe(sa, scene) + " eta=" + format17(eta) + " T=" + format17(orbit.T));
    } else if (rot->parsed()) {
        const auto tr = pullback_trace(scene, orbit, eta);
        const RotationResult res{tr.rot(), eta, orbit.label, summarize(tr)};
        print_json(to_json(res, generation_certificate(tr).verdict));
    } else if (classify->parsed()) {
        const auto conv = convention == "forward" ? Convention::Forward : Convention::Backward;
        print_json(orbit_report(orbit, classify_monodromy(monodromy(scene, orbit, conv))));
    } else if (maxrot->parsed()) {
        const auto prof = phase_profile(scene, orbit, samples, true);
        if (!out_path.empty()) {
            auto out = open_out(out_path);
            write_phase_csv(out, prof, describe(sa, scene) + " samples=" + std::to_string(samples));
        }
        print_json(to_json(prof, orbit.label));
    } else if (certify->parsed()) {
        print_json(to_json(generation_certificate(pullback_trace(scene, orbit, eta)), orbit.label, eta));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const rotnum::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
