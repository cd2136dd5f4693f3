#pragma once

// Rotation numbers of the pulled-back candidate along closed orbits, the phase
// function Phi(eta) = rot(R(eta) o L) with its maximum, and certificates for
// the sign of theta' (the generation criterion along an orbit).

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "rotnum/error.hpp"
#include "rotnum/flow.hpp"
#include "rotnum/parallel.hpp"

namespace rotnum {

inline constexpr double kThetaDotMin = 1e-9;
inline constexpr double kThetaPositive = 0.05;

struct TraceSummary {
    std::size_t samples = 0;
    double min_rho = 0.0;
    double min_abs_theta_dot = 0.0;
    int theta_dot_sign = 0;  // +1 / -1 if theta' keeps a strict sign, else 0
};

struct RotationResult {
    double rot = 0.0;
    double eta = 0.0;
    std::string orbit_label;
    TraceSummary summary;
};

enum class Verdict { Positive, Negative, Fails };

inline const char* to_string(Verdict v) {
    switch (v) {
    case Verdict::Positive: return "positive";
    case Verdict::Negative: return "negative";
    case Verdict::Fails: return "fails";
    }
    return "?";
}

struct GenerationCertificate {
    Verdict verdict = Verdict::Fails;
    double min_abs_theta_dot = 0.0;
    double witness_time = 0.0;
    double min_theta_dot = 0.0;
    double max_theta_dot = 0.0;
};

inline const std::vector<double>& theta_dot_series(const PullbackTrace& trace) { return trace.theta_dot; }

/// Finite-difference derivative of the unwrapped angle with five-point
/// stencils (central inside, one-sided near the ends), all fourth order.
/// Assumes a uniform grid; falls back to a central difference below five samples.
inline std::vector<double> theta_dot_finite_difference(const PullbackTrace& trace) {
    const auto& f = trace.theta;
    const std::size_t m = f.size();
    std::vector<double> d(m, 0.0);
    if (m < 3) return d;
    const double h = trace.times[1] - trace.times[0];
    if (m < 5) {
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t lo = i == 0 ? 0 : i - 1, hi = i + 1 < m ? i + 1 : m - 1;
            d[i] = (f[hi] - f[lo]) / (static_cast<double>(hi - lo) * h);
        }
        return d;
    }
    const std::size_t n = m - 1;
    d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h);
    d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * h);
    for (std::size_t i = 2; i + 2 < m; ++i) d[i] = (-f[i + 2] + 8.0 * f[i + 1] - 8.0 * f[i - 1] + f[i - 2]) / (12.0 * h);
    d[n - 1] = (3.0 * f[n] + 10.0 * f[n - 1] - 18.0 * f[n - 2] + 6.0 * f[n - 3] - f[n - 4]) / (12.0 * h);
    d[n] = (25.0 * f[n] - 48.0 * f[n - 1] + 36.0 * f[n - 2] - 16.0 * f[n - 3] + 3.0 * f[n - 4]) / (12.0 * h);
    return d;
}

inline TraceSummary summarize(const PullbackTrace& trace) {
    TraceSummary s;
    s.samples = trace.size();
    s.min_rho = *std::min_element(trace.rho.begin(), trace.rho.end());
    s.min_abs_theta_dot = std::numeric_limits<double>::infinity();
    bool all_pos = true, all_neg = true;
    for (double v : trace.theta_dot) {
        s.min_abs_theta_dot = std::min(s.min_abs_theta_dot, std::abs(v));
        all_pos = all_pos && v > kThetaDotMin;
        all_neg = all_neg && v < -kThetaDotMin;
    }
    s.theta_dot_sign = all_pos ? 1 : (all_neg ? -1 : 0);
    return s;
}

inline GenerationCertificate generation_certificate(const PullbackTrace& trace) {
    GenerationCertificate cert;
    cert.min_abs_theta_dot = std::numeric_limits<double>::infinity();
    cert.min_theta_dot = std::numeric_limits<double>::infinity();
    cert.max_theta_dot = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const double v = trace.theta_dot[i];
        if (std::abs(v) < cert.min_abs_theta_dot) {
            cert.min_abs_theta_dot = std::abs(v);
            cert.witness_time = trace.times[i];
        }
        cert.min_theta_dot = std::min(cert.min_theta_dot, v);
        cert.max_theta_dot = std::max(cert.max_theta_dot, v);
    }
    if (cert.min_theta_dot > kThetaDotMin) cert.verdict = Verdict::Positive;
    else if (cert.max_theta_dot < -kThetaDotMin) cert.verdict = Verdict::Negative;
    else cert.verdict = Verdict::Fails;
    return cert;
}

/// Certificate for sampled angle data (no analytic rate available): the sign
/// of the discrete derivative between consecutive samples.
inline GenerationCertificate generation_certificate(const std::vector<double>& times,
                                                    const std::vector<double>& angles) {
    if (times.size() != angles.size() || times.size() < 2) {
        throw PreconditionError("angle series needs at least two samples on a matching grid");
    }
    PullbackTrace tr;
    for (std::size_t i = 0; i + 1 < times.size(); ++i) {
        const double dt = times[i + 1] - times[i];
        if (!(dt > 0.0)) throw PreconditionError("angle series times must be increasing");
        tr.times.push_back(0.5 * (times[i] + times[i + 1]));
        tr.theta_dot.push_back((angles[i + 1] - angles[i]) / dt);
    }
    return generation_certificate(tr);
}

inline RotationResult rotation_number(const Scene& scene, const ClosedOrbit& orbit, double eta = 0.0) {
    const auto trace = pullback_trace(scene, orbit, eta);
    return {trace.rot(), eta, orbit.label, summarize(trace)};
}

inline GenerationCertificate generation_certificate(const Scene& scene, const ClosedOrbit& orbit,
                                                    double eta = 0.0) {
    return generation_certificate(pullback_trace(scene, orbit, eta));
}

struct PhaseProfile {
    std::vector<double> etas;
    std::vector<double> phis;
    double maxrot = 0.0;
    double argmax_eta = 0.0;
    bool refined = false;
    double min_phi = 0.0;
    /// |Phi(pi) - Phi(0)|, the wrap-around sample.
    double wrap_defect = 0.0;
    /// Largest and smallest Phi(eta) - Phi(0) over the grid.
    double max_offset = 0.0;
    double min_offset = 0.0;
};

namespace detail {

/// Phi on a list of phases with a shared flow; refines the grid until every
/// phase unwraps.
inline std::vector<double> phase_values(PullbackEngine& engine, const std::vector<double>& etas) {
    while (true) {
        std::vector<std::optional<double>> vals(etas.size());
        parallel_for(etas.size(), [&](std::size_t i) { vals[i] = engine.try_rotation(etas[i]); });
        if (std::all_of(vals.begin(), vals.end(), [](const auto& v) { return v.has_value(); })) {
            std::vector<double> out;
            out.reserve(vals.size());
            for (auto& v : vals) out.push_back(*v);
            return out;
        }
        engine.refine();
    }
}

}  // namespace detail

inline constexpr double kGoldenTol = 1e-6;
inline constexpr int kGoldenMaxIterations = 40;

/// Phi(eta) on an even grid over [0, pi) (Phi has period pi), with optional
/// golden-section refinement around the best grid point.
inline PhaseProfile phase_profile(const Scene& scene, const ClosedOrbit& orbit, std::size_t n_samples = 64,
                                  bool refine = true) {
    if (n_samples == 0) throw PreconditionError("phase profile needs at least one sample");
    PullbackEngine engine(scene, orbit.p, orbit.T);
    PhaseProfile prof;
    for (std::size_t k = 0; k < n_samples; ++k) {
        prof.etas.push_back(std::numbers::pi * static_cast<double>(k) / static_cast<double>(n_samples));
    }
    std::vector<double> query = prof.etas;
    query.push_back(std::numbers::pi);
    auto values = detail::phase_values(engine, query);
    prof.wrap_defect = std::abs(values.back() - values.front());
    values.pop_back();
    prof.phis = values;

    const auto best = std::max_element(prof.phis.begin(), prof.phis.end());
    prof.maxrot = *best;
    prof.argmax_eta = prof.etas[static_cast<std::size_t>(best - prof.phis.begin())];
    prof.min_phi = *std::min_element(prof.phis.begin(), prof.phis.end());
    for (double v : prof.phis) {
        prof.max_offset = std::max(prof.max_offset, v - prof.phis.front());
        prof.min_offset = std::min(prof.min_offset, v - prof.phis.front());
    }

    if (refine) {
        const double h = std::numbers::pi / static_cast<double>(n_samples);
        double lo = prof.argmax_eta - h, hi = prof.argmax_eta + h;
        const double g = (std::sqrt(5.0) - 1.0) / 2.0;
        double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
        auto eval = [&](double eta) { return detail::phase_values(engine, {eta}).front(); };
        double f1 = eval(x1), f2 = eval(x2);
        for (int it = 0; it < kGoldenMaxIterations && hi - lo > kGoldenTol; ++it) {
            if (f1 < f2) {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + g * (hi - lo);
                f2 = eval(x2);
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - g * (hi - lo);
                f1 = eval(x1);
            }
        }
        const double eta_star = f1 > f2 ? x1 : x2;
        const double f_star = std::max(f1, f2);
        if (f_star > prof.maxrot) {
            prof.maxrot = f_star;
            // Report the phase in [0, pi).
            prof.argmax_eta = wrap_coordinate(eta_star, std::numbers::pi);
        }
        prof.refined = true;
    }
    return prof;
}

/// max over eta of |Phi(eta + pi) - Phi(eta)| on the given phases.
inline double phase_period_defect(const Scene& scene, const ClosedOrbit& orbit, const std::vector<double>& etas) {
    PullbackEngine engine(scene, orbit.p, orbit.T);
    std::vector<double> query = etas;
    for (double e : etas) query.push_back(e + std::numbers::pi);
    const auto v = detail::phase_values(engine, query);
    double worst = 0.0;
    for (std::size_t i = 0; i < etas.size(); ++i) worst = std::max(worst, std::abs(v[i + etas.size()] - v[i]));
    return worst;
}

}  // namespace rotnum
