// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "support.hpp"

using namespace rotnum;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

Scene sol4_diagonal() { return support::with_candidate(builtin_scene("sol4_model", {{"T", 1.0}}), "[0; 1; 1; 0]"); }

ClosedOrbit core(const Scene& s) { return refine_orbit(s, s.orbit("core")); }

Outcome sol4_baseline() {
    const auto flat = builtin_scene("sol4_model", {{"T", 1.0}});
    const double r0 = rotation_number(flat, core(flat)).rot;
    const auto diag = sol4_diagonal();
    const double r1 = rotation_number(diag, core(diag)).rot;
    const double err = std::abs(r1 - (std::atan(std::exp(2.0)) - kPi / 4));
    return {std::abs(r0) < 1e-9 && err < 1e-6, "|rot(A)| = " + fmt("%.2e", std::abs(r0)) + ", |rot(A+B) - oracle| = " +
                                                     fmt("%.2e", err)};
}

Outcome sol4_certificate() {
    const auto diag = sol4_diagonal();
    const auto cert = generation_certificate(diag, core(diag));
    const double oracle_min =
        oracle::brute_min([](double t) { return 2 * std::exp(2 * t) / (1 + std::exp(4 * t)); }, 0.0, 1.0);
    const double err = std::abs(cert.min_theta_dot - oracle_min);
    return {cert.verdict == Verdict::Positive && err < 1e-6,
            std::string("verdict ") + to_string(cert.verdict) + ", |min theta' - oracle| = " + fmt("%.2e", err)};
}

Outcome elliptic_invariance() {
    const auto s = builtin_scene("elliptic_model", {{"delta", 1.3}, {"T", 1.0}});
    const auto prof = phase_profile(s, core(s), 64);
    const auto [lo, hi] = std::minmax_element(prof.phis.begin(), prof.phis.end());
    const double spread = *hi - *lo, err = std::abs(prof.phis.front() + 1.3);
    return {prof.phis.size() == 64 && spread < 1e-6 && err < 1e-6,
            "spread " + fmt("%.2e", spread) + ", |Phi(0) + 1.3| = " + fmt("%.2e", err)};
}

double sup_offset(const PhaseProfile& prof) {
    double sup = 0.0;
    for (double v : prof.phis) sup = std::max(sup, std::abs(v - prof.phis.front()));
    return sup;
}

Outcome hyperbolic_bound() {
    const auto s = builtin_scene("sol4_model", {{"T", 1.0}});
    const auto prof = phase_profile(s, core(s), 64);
    const double sup = sup_offset(prof);
    return {prof.phis.size() == 64 && sup < kPi / 2,
            "sup |Phi - Phi(0)| = " + fmt("%.6f", sup) + ", margin to pi/2 = " + fmt("%.6f", kPi / 2 - sup)};
}

Outcome parabolic_bound() {
    const auto pos = builtin_scene("parabolic_model", {{"c", 1.0}, {"T", 1.0}, {"sign", 1.0}});
    const auto neg = builtin_scene("parabolic_model", {{"c", 1.0}, {"T", 1.0}, {"sign", -1.0}});
    const auto po = core(pos), no = core(neg);
    const auto kp = classify_monodromy(monodromy(pos, po));
    const auto kn = classify_monodromy(monodromy(neg, no));
    const double sup = sup_offset(phase_profile(pos, po, 64));
    return {kp.kind == OrbitKind::PositiveParabolic && kn.kind == OrbitKind::NegativeParabolic && sup < kPi,
            std::string(to_string(kp.kind)) + " / " + to_string(kn.kind) + " (" + to_string(kp.convention) +
                "), sup |Phi - Phi(0)| = " + fmt("%.6f", sup) + " < pi"};
}

Outcome rate_identity_all() {
    std::mt19937_64 rng(606);
    double worst = 0.0, literal = 0.0;
    int count = 0;
    std::vector<Scene> scenes;
    for (const auto& name : support::builtin_names()) scenes.push_back(builtin_scene(name));
    scenes.push_back(sol4_diagonal());
    for (const auto& scene : scenes) {
        std::uniform_real_distribution<double> jitter(-0.05, 0.05);
        std::uniform_real_distribution<double> U(0.0, scene.orbits.front().T0 / 2);
        for (int k = 0; k < 10; ++k) {
            Eigen::VectorXd p = scene.orbits.back().p0;
            for (auto& x : p) x += jitter(rng);
            project_to_sphere(scene, p);
            const auto r = rate_identity(scene, wrap_point(scene, p), U(rng), U(rng), 0.3);
            worst = std::max(worst, r.residual);
            literal = std::max(literal, std::abs(r.lhs - r.lambda * r.shifted));
            ++count;
        }
    }
    std::printf("       diagnostic: with the forward factor lambda in place of 1/lambda the max residual is %.3e\n",
                literal);
    return {worst < 1e-6, std::to_string(count) + " (s, t) pairs, max residual " + fmt("%.2e", worst)};
}

Outcome homotopy_suite() {
    const auto diag = sol4_diagonal();
    const auto orbit = core(diag);
    const double rot0 = rotation_number(diag, orbit).rot;
    double bump = 0.0;
    for (double tau : {0.25, 0.5, 1.0}) {
        const std::string g = std::to_string(tau) + "*sin(pi*x1)^2";
        const auto bumped =
            support::with_candidate(diag, "[0; cos(" + g + ") - sin(" + g + "); sin(" + g + ") + cos(" + g + "); 0]");
        bump = std::max(bump, std::abs(rotation_number(bumped, orbit).rot - rot0));
    }
    Scene scaled = diag;
    scaled.candidate_gain = 2.5;
    const bool identical = pullback_trace(diag, orbit).theta == pullback_trace(scaled, orbit).theta;
    Scene fast = diag;
    fast.E.W = scale_field(diag.E.W, 2.0);
    const double dW = std::abs(rotation_number(fast, {orbit.p, orbit.T / 2, orbit.closure_defect, "core"}).rot - rot0);
    return {bump < 1e-6 && identical && dW < 1e-8, "bump " + fmt("%.2e", bump) + ", 2.5 L bit-identical: " +
                                                       (identical ? "yes" : "no") + ", 2 W at T/2: " + fmt("%.2e", dW)};
}

Outcome phase_period() {
    std::vector<double> etas;
    for (int k = 0; k < 16; ++k) etas.push_back(kPi * k / 16 + 0.013);
    double worst = 0.0;
    int orbits = 0;
    for (const auto& name : support::builtin_names()) {
        const auto scene = builtin_scene(name);
        for (const auto& seed : scene.orbits) {
            worst = std::max(worst, phase_period_defect(scene, refine_orbit(scene, seed), etas));
            ++orbits;
        }
    }
    return {worst < 1e-8, std::to_string(orbits) + " orbits x 16 phases, max defect " + fmt("%.2e", worst)};
}

OrbitGraph two_node() { return {{{"source", 0}, {"sink", 1}}, {{0, 1}}}; }

Outcome reeb_obstruction() {
    const auto report = decide_existence(builtin_scene("reeb_s3"), two_node());
    bool ok = !report.decision && report.rows.size() == 2;
    double worst = 0.0;
    for (const auto& row : report.rows) {
        ok = ok && row.orbit_class.kind == OrbitKind::Elliptic;
        worst = std::max(worst, std::abs(row.maxrot));
    }
    return {ok && worst < 1e-8, std::string("decision ") + (report.decision ? "true" : "false") + ", max |maxrot| " +
                                    fmt("%.2e", worst)};
}

Outcome suspension_positive() {
    const auto g = two_node();
    const auto order = validate_orbit_graph(g);
    const auto report = decide_existence(builtin_scene("suspension_s3s1"), g);
    double least = std::numeric_limits<double>::infinity();
    for (const auto& row : report.rows) least = std::min(least, row.maxrot);
    const bool order_ok = order == std::vector<std::size_t>{0, 1} &&
                          report.attachment_order == std::vector<std::string>{"source", "sink"};
    return {report.decision && report.rows.size() == 2 && least > 0.05 && order_ok,
            std::string("decision ") + (report.decision ? "true" : "false") + ", min maxrot " + fmt("%.6f", least) +
                ", order " + (order_ok ? "[source, sink]" : "wrong")};
}

Outcome constructive_homotopy() {
    std::mt19937_64 rng(1111);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    int ok = 0, rejected = 0, inputs = 0;
    double worst_end = 0.0, least_slope = std::numeric_limits<double>::infinity();
    while (inputs < 1000) {
        const double T = 0.5 + 4.0 * U(rng), eps = 0.2 * T * U(rng);
        const std::size_t m = 100 + rng() % 300;
        const double net = 0.1 + 8.0 * U(rng), amp = 1.5 * U(rng), w = 1 + static_cast<double>(rng() % 6);
        std::vector<double> t(m), theta(m);
        for (std::size_t i = 0; i < m; ++i) {
            t[i] = T * static_cast<double>(i) / static_cast<double>(m - 1);
            theta[i] = net * t[i] / T + amp * std::sin(2 * kPi * w * t[i] / T + 0.3);
        }
        if (!(detail::interpolate(t, theta, T - eps) - detail::interpolate(t, theta, eps) > 0.0)) continue;
        ++inputs;
        try {
            const auto c = homotope_theta(t, theta, eps);
            worst_end = std::max({worst_end, std::abs(c.psi1.front() - c.psi0.front()),
                                  std::abs(c.psi1.back() - c.psi0.back())});
            least_slope = std::min(least_slope, c.min_derivative);
            if (c.min_derivative > 0.0) ++ok;
        } catch (const Error&) {
        }
    }
    for (int k = 0; k < 100; ++k) {
        const double T = 0.5 + 4.0 * U(rng);
        const double slope = 0.1 + U(rng);
        std::vector<double> t(200), theta(200);
        for (std::size_t i = 0; i < t.size(); ++i) {
            t[i] = T * static_cast<double>(i) / 199.0;
            theta[i] = -slope * t[i] - 0.2 * std::sin(t[i]) * std::sin(t[i]);
        }
        try {
            homotope_theta(t, theta, 0.05 * T);
        } catch (const PreconditionError&) {
            ++rejected;
        }
    }
    return {ok == 1000 && worst_end < 1e-10 && least_slope > 0.0 && rejected == 100,
            std::to_string(ok) + "/1000 monotone, endpoint error " + fmt("%.1e", worst_end) + ", min slope " +
                fmt("%.3e", least_slope) + ", decreasing rejected " + std::to_string(rejected) + "/100"};
}

Outcome ad_correctness() {
    std::mt19937_64 rng(1212);
    std::uniform_real_distribution<double> coord(-1.5, 1.5);
    double worst = 0.0;
    for (int field = 0; field < 20; ++field) {
        const std::size_t dim = 1 + static_cast<std::size_t>(field) % 4;
        const auto f = parse_field(oracle::random_field(rng, dim), dim);
        for (int point = 0; point < 20; ++point) {
            Eigen::VectorXd p(static_cast<Eigen::Index>(dim));
            for (auto& x : p) x = coord(rng);
            const auto J = jacobian(f, p);
            const auto fd = oracle::fd_jacobian(f, p);
            for (Eigen::Index i = 0; i < J.rows(); ++i)
                for (Eigen::Index j = 0; j < J.cols(); ++j)
                    worst = std::max(worst, std::abs(J(i, j) - fd(i, j)) / std::max(std::abs(fd(i, j)), 1e-3));
        }
    }
    return {worst < 1e-6, "20 fields x 20 points, max relative error " + fmt("%.2e", worst)};
}

Outcome no_cycle_validation() {
    std::mt19937_64 rng(1313);
    auto dag = [&](std::size_t n) {
        OrbitGraph g;
        std::vector<std::size_t> perm(n);
        for (std::size_t i = 0; i < n; ++i) {
            perm[i] = i;
            g.nodes.push_back({"g" + std::to_string(i), static_cast<int>(rng() % 3)});
        }
        std::shuffle(perm.begin(), perm.end(), rng);
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = a + 1; b < n; ++b)
                if (rng() % 4 == 0) g.edges.emplace_back(perm[a], perm[b]);
        return g;
    };
    int accepted = 0, rejected = 0;
    for (int k = 0; k < 100; ++k) {
        const auto g = dag(2 + rng() % 15);
        const auto order = validate_orbit_graph(g);
        std::vector<std::size_t> pos(g.nodes.size(), g.nodes.size());
        for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
        bool valid = order.size() == g.nodes.size();
        for (auto p : pos) valid = valid && p < g.nodes.size();
        for (const auto& [i, j] : g.edges) valid = valid && pos[i] < pos[j];
        accepted += valid;
    }
    for (int k = 0; k < 100; ++k) {
        auto g = dag(3 + rng() % 12);
        std::vector<std::size_t> ring(g.nodes.size());
        for (std::size_t i = 0; i < ring.size(); ++i) ring[i] = i;
        std::shuffle(ring.begin(), ring.end(), rng);
        ring.resize(2 + rng() % (ring.size() - 1));
        for (std::size_t i = 0; i < ring.size(); ++i) g.edges.emplace_back(ring[i], ring[(i + 1) % ring.size()]);
        try {
            validate_orbit_graph(g);
        } catch (const GraphError& e) {
            const auto& c = e.cycle();
            bool named = c.size() >= 2 && c.front() == c.back();
            for (std::size_t i = 0; named && i + 1 < c.size(); ++i) {
                named = std::any_of(g.edges.begin(), g.edges.end(), [&](const auto& edge) {
                    return g.nodes[edge.first].label == c[i] && g.nodes[edge.second].label == c[i + 1];
                });
            }
            rejected += named;
        }
    }
    return {accepted == 100 && rejected == 100,
            std::to_string(accepted) + "/100 DAGs ordered, " + std::to_string(rejected) + "/100 cycles named"};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"Sol4 baseline rotation numbers", sol4_baseline},
        {"Sol4 positive generation certificate", sol4_certificate},
        {"Elliptic phase profile is constant", elliptic_invariance},
        {"Hyperbolic phase bound pi/2", hyperbolic_bound},
        {"Parabolic labels and phase bound pi", parabolic_bound},
        {"Angular rate identity on all scenes", rate_identity_all},
        {"Homotopy and rescaling invariance", homotopy_suite},
        {"Phase profile has period pi", phase_period},
        {"Reeb obstruction", reeb_obstruction},
        {"Suspension existence", suspension_positive},
        {"Constructive monotone homotopy", constructive_homotopy},
        {"Jacobian against finite differences", ad_correctness},
        {"Orbit graph cycle validation", no_cycle_validation},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = criteria[i].second();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s %2zu %s: %s (%.2f s)\n", out.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    out.detail.c_str(), secs);
        std::fflush(stdout);
        failures += !out.pass;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
