#pragma once

// Morse-Smale bookkeeping: orbit graphs with the no-cycle check, the
// existence decision over all closed orbits, collar turn counts, and the
// monotone reparametrization of an angle profile with positive net change.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "rotnum/error.hpp"
#include "rotnum/expr.hpp"
#include "rotnum/flow.hpp"
#include "rotnum/orbit.hpp"
#include "rotnum/parallel.hpp"
#include "rotnum/rotation.hpp"

namespace rotnum {

struct OrbitNode {
    std::string label;
    int index = 0;  // round handle index
};

struct OrbitGraph {
    std::vector<OrbitNode> nodes;
    /// (i, j): the unstable manifold of node i meets the stable manifold of node j.
    std::vector<std::pair<std::size_t, std::size_t>> edges;
};

/// Topological order of the nodes (as node indices), ties broken by ascending
/// handle index and then label. Throws GraphError carrying one cycle.
inline std::vector<std::size_t> validate_orbit_graph(const OrbitGraph& g) {
    const std::size_t n = g.nodes.size();
    for (const auto& node : g.nodes) {
        if (node.index < 0) throw GraphError("negative handle index for node '" + node.label + "'", {});
    }
    std::vector<std::vector<std::size_t>> out(n);
    std::vector<std::size_t> indegree(n, 0);
    for (const auto& [i, j] : g.edges) {
        if (i >= n || j >= n) {
            throw GraphError("edge (" + std::to_string(i) + ", " + std::to_string(j) + ") references a missing node",
                             {});
        }
        out[i].push_back(j);
        ++indegree[j];
    }

    auto later = [&](std::size_t x, std::size_t y) {
        const auto& a = g.nodes[x];
        const auto& b = g.nodes[y];
        if (a.index != b.index) return a.index > b.index;
        if (a.label != b.label) return a.label > b.label;
        return x > y;
    };
    std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(later)> ready(later);
    for (std::size_t v = 0; v < n; ++v)
        if (indegree[v] == 0) ready.push(v);

    std::vector<std::size_t> order;
    order.reserve(n);
    while (!ready.empty()) {
        const std::size_t v = ready.top();
        ready.pop();
        order.push_back(v);
        for (std::size_t w : out[v])
            if (--indegree[w] == 0) ready.push(w);
    }
    if (order.size() == n) return order;

    // Every node left over has an incoming edge from another leftover node,
    // so walking predecessors inside that set must revisit a node.
    std::vector<bool> left(n, false);
    for (std::size_t v = 0; v < n; ++v) left[v] = indegree[v] > 0;
    std::vector<std::optional<std::size_t>> pred(n);
    for (const auto& [i, j] : g.edges)
        if (left[i] && left[j] && !pred[j]) pred[j] = i;
    std::size_t start = 0;
    while (!left[start]) ++start;
    std::vector<std::size_t> seen_at(n, n);
    std::vector<std::size_t> walk;
    std::size_t v = start;
    while (seen_at[v] == n) {
        seen_at[v] = walk.size();
        walk.push_back(v);
        v = *pred[v];
    }
    std::vector<std::size_t> cycle(walk.begin() + static_cast<std::ptrdiff_t>(seen_at[v]), walk.end());
    std::reverse(cycle.begin(), cycle.end());
    std::vector<std::string> labels;
    std::string text;
    for (std::size_t k : cycle) {
        labels.push_back(g.nodes[k].label);
        text += g.nodes[k].label + " -> ";
    }
    labels.push_back(g.nodes[cycle.front()].label);
    text += labels.back();
    throw GraphError("orbit graph has a cycle: " + text, std::move(labels));
}

/// Full 2 pi turns needed in a collar so that f1 - f0 becomes positive.
inline int collar_turns(const std::vector<double>& f0, const std::vector<double>& f1) {
    if (f0.size() != f1.size() || f0.empty()) throw PreconditionError("collar_turns: grid mismatch");
    double spread = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < f0.size(); ++i) spread = std::max(spread, f1[i] - f0[i]);
    const double turns = std::ceil(spread / (2.0 * std::numbers::pi)) + 1.0;
    return std::max(1, static_cast<int>(turns));
}

struct HomotopyCertificate {
    std::vector<double> t;
    std::vector<double> psi0;
    std::vector<double> psi1;
    double min_derivative = 0.0;
    double epsilon = 0.0;
};

/// Smooth step on [0, 1]: a quarter linear ramp blended with
/// u - sin(2 pi u) / (2 pi). Its derivative is 1 - 0.75 cos(2 pi u) >= 1/4.
inline double smooth_step(double u) { return u - 0.75 * std::sin(2.0 * std::numbers::pi * u) / (2.0 * std::numbers::pi); }

namespace detail {

inline double interpolate(const std::vector<double>& t, const std::vector<double>& y, double x) {
    const auto it = std::upper_bound(t.begin(), t.end(), x);
    if (it == t.begin()) return y.front();
    if (it == t.end()) return y.back();
    const auto i = static_cast<std::size_t>(it - t.begin());
    const double w = (x - t[i - 1]) / (t[i] - t[i - 1]);
    return y[i - 1] + w * (y[i] - y[i - 1]);
}

}  // namespace detail

/// Replaces the angle samples on [eps, T - eps] by a strictly increasing
/// profile with the same endpoint values.
inline HomotopyCertificate homotope_theta(const std::vector<double>& times, const std::vector<double>& theta,
                                          double epsilon) {
    if (times.size() != theta.size() || times.size() < 2) {
        throw PreconditionError("homotope_theta: need at least two samples on a matching grid");
    }
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (!(times[i] > times[i - 1])) throw PreconditionError("homotope_theta: times must be increasing");
    }
    const double t0 = times.front();
    const double T = times.back() - t0;
    if (!(epsilon >= 0.0) || !(epsilon < T / 2.0)) {
        throw PreconditionError("homotope_theta: epsilon must lie in [0, T/2)");
    }
    const double lo = t0 + epsilon, hi = times.back() - epsilon;
    const double start = detail::interpolate(times, theta, lo);
    const double end = detail::interpolate(times, theta, hi);
    const double delta = end - start;
    if (!(delta > 0.0)) {
        throw PreconditionError("homotope_theta: net change " + std::to_string(delta) + " is not positive");
    }

    const double gap = 1e-12 * std::max(1.0, T);
    HomotopyCertificate cert;
    cert.epsilon = epsilon;
    cert.t.push_back(lo);
    cert.psi0.push_back(start);
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] > lo + gap && times[i] < hi - gap) {
            cert.t.push_back(times[i]);
            cert.psi0.push_back(theta[i]);
        }
    }
    cert.t.push_back(hi);
    cert.psi0.push_back(end);

    const double width = hi - lo;
    for (double t : cert.t) {
        const double u = std::clamp((t - lo) / width, 0.0, 1.0);
        cert.psi1.push_back(smooth_step(u) * delta + start);
    }
    cert.psi1.front() = start;
    cert.psi1.back() = end;
    cert.min_derivative = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < cert.t.size(); ++i) {
        cert.min_derivative =
            std::min(cert.min_derivative, (cert.psi1[i + 1] - cert.psi1[i]) / (cert.t[i + 1] - cert.t[i]));
    }
    return cert;
}

struct ExistenceRow {
    std::string label;
    int index = 0;
    ClosedOrbit orbit;
    OrbitClass orbit_class;
    double rot = 0.0;  // Phi(0)
    double maxrot = 0.0;
    double argmax_eta = 0.0;
    /// min over the grid of Phi(eta) - Phi(0); an empirical stand-in for the
    /// margin below rot at which generation can still be arranged.
    double min_offset = 0.0;
    int det_sign = 1;
    bool pass = false;
};

struct SweepEntry {
    std::string candidate;
    bool decision = false;
};

struct ExistenceReport {
    std::vector<ExistenceRow> rows;  // in attachment order
    std::vector<std::string> attachment_order;
    std::vector<int> collar_turns;  // 0 for nodes of handle index 0
    bool decision = true;
    bool vacuous = false;
    double threshold = kThetaPositive;
    std::string candidate;  // rendered L that the decision refers to
    std::vector<SweepEntry> sweep;
    std::vector<std::string> notes;
};

struct DecideOptions {
    double threshold = kThetaPositive;
    std::size_t phase_samples = 64;
};

inline ExistenceReport decide_existence(const Scene& scene, const OrbitGraph& graph, const DecideOptions& opt = {}) {
    const auto order = validate_orbit_graph(graph);
    ExistenceReport report;
    report.threshold = opt.threshold;
    report.candidate = render(scene.L);
    report.notes.push_back("decision certifies the given candidate L only; other candidates are not searched");
    if (order.empty()) {
        report.vacuous = true;
        report.notes.push_back("vacuous: the orbit graph is empty");
        return report;
    }

    report.rows.resize(order.size());
    parallel_for(order.size(), [&](std::size_t k) {
        const auto& node = graph.nodes[order[k]];
        ExistenceRow& row = report.rows[k];
        row.label = node.label;
        row.index = node.index;
        row.orbit = refine_orbit(scene, scene.orbit(node.label));
        const auto mono = monodromy(scene, row.orbit);
        row.det_sign = mono.det_sign;
        row.orbit_class = classify_monodromy(mono);
        if (row.orbit_class.kind == OrbitKind::Ambiguous) {
            throw ClassificationError("orbit '" + node.label + "' has ambiguous monodromy (trace " +
                                      std::to_string(row.orbit_class.trace_value) + "); refusing to decide");
        }
        const auto prof = phase_profile(scene, row.orbit, opt.phase_samples, true);
        row.rot = prof.phis.front();
        row.maxrot = prof.maxrot;
        row.argmax_eta = prof.argmax_eta;
        row.min_offset = prof.min_offset;
        row.pass = row.maxrot > opt.threshold;
    });

    for (const auto& row : report.rows) {
        report.attachment_order.push_back(row.label);
        report.decision = report.decision && row.pass;
        if (row.det_sign < 0) report.notes.push_back("orbit '" + row.label + "': induced map reverses orientation");
        if (row.index == 0) {
            report.collar_turns.push_back(0);
            continue;
        }
        const auto tr = pullback_trace(scene, row.orbit, row.argmax_eta);
        const double floor = *std::min_element(tr.theta.begin(), tr.theta.end());
        report.collar_turns.push_back(collar_turns(std::vector<double>(tr.theta.size(), floor), tr.theta));
    }
    return report;
}

/// Tries each candidate in turn and returns the report of the first one that
/// passes every orbit, or of the last one tried if none does.
inline ExistenceReport decide_existence(const Scene& scene, const OrbitGraph& graph,
                                        const std::vector<std::string>& candidates, const DecideOptions& opt = {}) {
    if (candidates.empty()) return decide_existence(scene, graph, opt);
    std::vector<SweepEntry> sweep;
    ExistenceReport report;
    for (const auto& text : candidates) {
        Scene trial = scene;
        trial.L = parse_field(text, scene.dim());
        trial.candidate_gain = 1.0;
        report = decide_existence(trial, graph, opt);
        sweep.push_back({text, report.decision});
        if (report.decision) break;
    }
    report.sweep = std::move(sweep);
    return report;
}

}  // namespace rotnum
