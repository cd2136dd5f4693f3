#pragma once

// Flow of W together with the inverse tangent map M(t) = T_{phi_t(p)} phi_{-t},
// obtained from the variational equation dM/dt = -M DW(x) with M(0) = I.
// On top of it: the pulled-back candidate field L~(p;t) = M(t) L(phi_t(p))
// expressed in the frame at p, the conformal factor lambda of omega, and the
// induced monodromy on E_p / W_p.

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/numeric/odeint.hpp>

#include "rotnum/error.hpp"
#include "rotnum/expr.hpp"
#include "rotnum/frame.hpp"

namespace rotnum {

struct Periodicity {
    std::size_t index = 0;  // zero-based coordinate
    double period = 2.0 * std::numbers::pi;
};

struct IntegratorOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double max_step = 0.05;
    std::size_t max_steps = 5'000'000;
};

struct OrbitSeed {
    Eigen::VectorXd p0;
    double T0 = 0.0;
    std::string label;
};

struct Scene {
    std::string name;
    FramedDistribution E;
    FieldExpr L;
    /// Positive weight on L. Only magnitudes (a, b, c, rho) see it; angles are
    /// computed from the unweighted field.
    double candidate_gain = 1.0;
    std::vector<Periodicity> periodic;
    /// Coordinates renormalized onto the unit sphere after every accepted step.
    std::vector<std::size_t> sphere;
    std::vector<OrbitSeed> orbits;
    IntegratorOptions integrator;
    double orbit_tol = 1e-8;
    double basin_radius = 0.25;
    std::map<std::string, double> params;
    std::string notes;

    std::size_t dim() const noexcept { return E.dim(); }

    const OrbitSeed& orbit(const std::string& label) const {
        for (const auto& o : orbits)
            if (o.label == label) return o;
        throw SceneError("unknown orbit '" + label + "' in scene '" + name + "'");
    }
};

struct ClosedOrbit {
    Eigen::VectorXd p;
    double T = 0.0;
    double closure_defect = 0.0;
    std::string label;
};

inline constexpr double kRhoMin = 1e-8;

inline double wrap_coordinate(double x, double period) {
    double r = std::fmod(x, period);
    if (r < 0.0) r += period;
    if (r >= period) r -= period;
    return r;
}

/// Periodic coordinates wrapped into [0, period).
inline Eigen::VectorXd wrap_point(const Scene& scene, Eigen::VectorXd x) {
    for (const auto& per : scene.periodic) {
        auto i = static_cast<Eigen::Index>(per.index);
        x[i] = wrap_coordinate(x[i], per.period);
    }
    return x;
}

/// x - y with periodic components reduced to [-period/2, period/2].
inline Eigen::VectorXd wrapped_difference(const Scene& scene, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    Eigen::VectorXd d = x - y;
    for (const auto& per : scene.periodic) {
        auto i = static_cast<Eigen::Index>(per.index);
        d[i] -= per.period * std::round(d[i] / per.period);
    }
    return d;
}

inline void project_to_sphere(const Scene& scene, Eigen::VectorXd& x, double* drift = nullptr) {
    if (scene.sphere.empty()) return;
    double r2 = 0.0;
    for (auto i : scene.sphere) r2 += x[static_cast<Eigen::Index>(i)] * x[static_cast<Eigen::Index>(i)];
    const double r = std::sqrt(r2);
    if (drift) *drift = std::max(*drift, std::abs(r - 1.0));
    if (r == 0.0) throw IntegrationError("trajectory reached the sphere centre");
    for (auto i : scene.sphere) x[static_cast<Eigen::Index>(i)] /= r;
}

/// Samples of the flow and of the inverse tangent map on a time grid.
struct FlowSamples {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> points;  // wrapped
    std::vector<Eigen::MatrixXd> M;       // empty unless variational
    double sphere_drift = 0.0;
    std::size_t steps = 0;
};

namespace detail {

using OdeState = std::vector<double>;

struct VariationalSystem {
    const Scene* scene;
    bool variational;
    double sign;  // +1 forward in time, -1 backward

    void operator()(const OdeState& y, OdeState& dydt, double /*t*/) const {
        const auto n = static_cast<Eigen::Index>(scene->dim());
        Eigen::Map<const Eigen::VectorXd> x(y.data(), n);
        if (!variational) {
            const Eigen::VectorXd w = eval_field(scene->E.W, x);
            for (Eigen::Index i = 0; i < n; ++i) dydt[static_cast<std::size_t>(i)] = sign * w[i];
            return;
        }
        const auto vj = eval_with_jacobian(scene->E.W, x);
        for (Eigen::Index i = 0; i < n; ++i) dydt[static_cast<std::size_t>(i)] = sign * vj.value[i];
        using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
        Eigen::Map<const RowMat> M(y.data() + n, n, n);
        Eigen::Map<RowMat> dM(dydt.data() + n, n, n);
        dM.noalias() = -sign * (M * vj.jacobian);
    }
};

}  // namespace detail

/// Integrates x' = W(x) (and optionally the variational equation) from `p`,
/// recording the state at each of `times` (non-decreasing, starting at >= 0).
/// Negative `direction` integrates the time-reversed flow.
inline FlowSamples integrate_flow(const Scene& scene, const Eigen::VectorXd& p, const std::vector<double>& times,
                                  bool variational = true, double direction = 1.0) {
    namespace odeint = boost::numeric::odeint;
    const auto n = static_cast<Eigen::Index>(scene.dim());
    if (p.size() != n) throw PreconditionError("point dimension mismatch");
    const auto& opt = scene.integrator;

    detail::OdeState y(static_cast<std::size_t>(variational ? n + n * n : n), 0.0);
    {
        Eigen::VectorXd x0 = wrap_point(scene, p);
        project_to_sphere(scene, x0);
        for (Eigen::Index i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = x0[i];
        if (variational)
            for (Eigen::Index i = 0; i < n; ++i) y[static_cast<std::size_t>(n + i * n + i)] = 1.0;
    }

    using Stepper = odeint::runge_kutta_dopri5<detail::OdeState>;
    auto controlled = odeint::make_controlled<Stepper>(opt.abs_tol, opt.rel_tol);
    const detail::VariationalSystem system{&scene, variational, direction};

    FlowSamples out;
    out.times = times;
    double t = 0.0;
    double dt = std::min(opt.max_step, 1e-3);
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    for (double target : times) {
        if (target < t) throw PreconditionError("sample times must be non-decreasing and non-negative");
        while (target - t > 1e-14 * std::max(1.0, std::abs(target))) {
            double step = std::min({dt, opt.max_step, target - t});
            const double t_before = t;
            const auto result = controlled.try_step(system, y, t, step);
            if (result == odeint::success) {
                ++out.steps;
                if (out.steps > opt.max_steps) throw IntegrationError("maximum number of steps exceeded");
                if (!scene.sphere.empty()) {
                    Eigen::Map<Eigen::VectorXd> x(y.data(), n);
                    Eigen::VectorXd xs = x;
                    project_to_sphere(scene, xs, &out.sphere_drift);
                    x = xs;
                }
                // The controller may suggest a larger step; do not let a
                // clipped final step shrink the next one.
                dt = std::max(step, t - t_before);
            } else {
                dt = step;
                if (dt < 1e-14 * std::max(1.0, std::abs(t))) {
                    throw IntegrationError("step size underflow at t = " + std::to_string(t));
                }
            }
            for (double v : y)
                if (!std::isfinite(v)) throw IntegrationError("non-finite state at t = " + std::to_string(t));
        }
        t = target;
        Eigen::Map<const Eigen::VectorXd> x(y.data(), n);
        out.points.push_back(wrap_point(scene, x));
        if (variational) out.M.emplace_back(Eigen::Map<const RowMat>(y.data() + n, n, n));
    }
    return out;
}

/// phi_t(p), with periodic coordinates wrapped.
inline Eigen::VectorXd advance(const Scene& scene, const Eigen::VectorXd& p, double t) {
    if (t == 0.0) return wrap_point(scene, p);
    const double dir = t < 0.0 ? -1.0 : 1.0;
    return integrate_flow(scene, p, {std::abs(t)}, false, dir).points.back();
}

/// L rotated by `eta` in the (A, B)-plane at q, and its derivative along W(q).
struct CandidateJet {
    Eigen::VectorXd value;
    Eigen::VectorXd along_flow;
};

inline CandidateJet rotated_candidate_jet(const Scene& scene, const Eigen::VectorXd& q, double eta) {
    const std::size_t n = scene.dim();
    const Eigen::VectorXd w = eval_field(scene.E.W, q);
    std::vector<Dual> x(n), Wd(n), Ad(n), Bd(n), Ld(n);
    for (std::size_t j = 0; j < n; ++j) x[j] = Dual(q[static_cast<Eigen::Index>(j)], w[static_cast<Eigen::Index>(j)]);
    scene.L.evaluate<Dual>(x, Ld);
    if (eta != 0.0) {
        scene.E.W.evaluate<Dual>(x, Wd);
        scene.E.A.evaluate<Dual>(x, Ad);
        scene.E.B.evaluate<Dual>(x, Bd);
        const auto coef = frame_coefficients<Dual>(Ad, Bd, Wd, Ld, n);
        const Dual ce(std::cos(eta) - 1.0), se(std::sin(eta));
        for (std::size_t k = 0; k < n; ++k) {
            Ld[k] = Ld[k] + ce * (coef[0] * Ad[k] + coef[1] * Bd[k]) + se * (coef[0] * Bd[k] - coef[1] * Ad[k]);
        }
    }
    CandidateJet jet{Eigen::VectorXd(static_cast<Eigen::Index>(n)), Eigen::VectorXd(static_cast<Eigen::Index>(n))};
    for (std::size_t k = 0; k < n; ++k) {
        jet.value[static_cast<Eigen::Index>(k)] = Ld[k].v;
        jet.along_flow[static_cast<Eigen::Index>(k)] = Ld[k].d;
    }
    return jet;
}

/// Value only; cheaper than the jet when no derivative is needed.
inline Eigen::VectorXd rotated_candidate(const Scene& scene, const Eigen::VectorXd& q, double eta) {
    Eigen::VectorXd L = eval_field(scene.L, q);
    if (eta == 0.0) return L;
    const Eigen::VectorXd A = eval_field(scene.E.A, q), B = eval_field(scene.E.B, q), W = eval_field(scene.E.W, q);
    const auto coef = frame_coefficients<double>(A, B, W, L, scene.dim());
    for (Eigen::Index k = 0; k < L.size(); ++k) {
        L[k] = L[k] + (std::cos(eta) - 1.0) * (coef[0] * A[k] + coef[1] * B[k]) +
               std::sin(eta) * (coef[0] * B[k] - coef[1] * A[k]);
    }
    return L;
}

/// rho^2 theta' = omega(L~, dL~/dt), i.e. theta' = (a db - b da) / (a^2 + b^2).
inline double theta_dot_from_components(double a, double b, double da, double db) {
    return (a * db - b * da) / (a * a + b * b);
}

/// Pulled-back candidate at one sample, in the frame at the base point.
struct PullbackSample {
    Eigen::VectorXd Ltilde;
    FrameDecomposition dec;  // unweighted
    double rho = 0.0;        // unweighted
    double angle = 0.0;      // principal value in (-pi, pi]
    double theta_dot = 0.0;
};

inline PullbackSample pullback_sample(const Scene& scene, const FrameAt& base_frame, const Eigen::VectorXd& q,
                                      const Eigen::MatrixXd& M, double eta, bool with_rate = true) {
    PullbackSample s;
    Eigen::VectorXd Lq;
    Eigen::VectorXd dLtilde;
    if (with_rate) {
        const auto jet = rotated_candidate_jet(scene, q, eta);
        const auto vj = eval_with_jacobian(scene.E.W, q);
        Lq = jet.value;
        dLtilde = M * (jet.along_flow - vj.jacobian * Lq);
    } else {
        Lq = rotated_candidate(scene, q, eta);
    }
    s.Ltilde = M * Lq;
    s.dec = base_frame.decompose(s.Ltilde);
    if (s.dec.residual > base_frame.membership_tol() * std::max(1.0, s.Ltilde.norm())) {
        throw FrameError("flow does not preserve E numerically: residual " + std::to_string(s.dec.residual));
    }
    s.rho = std::hypot(s.dec.a, s.dec.b);
    if (!(s.rho * scene.candidate_gain > kRhoMin)) throw FrameError("L tangent to W: rho below threshold");
    s.angle = std::atan2(s.dec.b, s.dec.a);
    if (with_rate) {
        const auto dd = base_frame.decompose(dLtilde);
        s.theta_dot = theta_dot_from_components(s.dec.a, s.dec.b, dd.a, dd.b);
    }
    return s;
}

inline double wrap_to_pi(double angle) {
    return std::remainder(angle, 2.0 * std::numbers::pi);
}

struct PullbackTrace {
    Eigen::VectorXd p;
    double T = 0.0;
    double eta = 0.0;
    std::vector<double> times;
    std::vector<Eigen::VectorXd> points;
    std::vector<Eigen::MatrixXd> M;
    std::vector<double> a, b, c, rho;
    std::vector<double> theta;      // continuous lift, theta[0] in [0, 2 pi)
    std::vector<double> theta_dot;  // via omega(L~, dL~/dt) / rho^2
    double lambda_T = 1.0;
    double max_residual = 0.0;
    double sphere_drift = 0.0;
    std::size_t refinements = 0;

    std::size_t size() const noexcept { return times.size(); }
    double rot() const { return theta.back() - theta.front(); }
};

/// Continuous lift of principal angles with lift[0] in [0, 2 pi). Returns
/// nullopt when some increment reaches pi/2 (sampling too coarse to unwrap).
inline std::optional<std::vector<double>> unwrap_angles(const std::vector<double>& principal) {
    std::vector<double> lift(principal.size());
    if (principal.empty()) return lift;
    const double two_pi = 2.0 * std::numbers::pi;
    lift[0] = principal[0] < 0.0 ? principal[0] + two_pi : principal[0];
    if (lift[0] >= two_pi) lift[0] -= two_pi;
    for (std::size_t i = 1; i < principal.size(); ++i) {
        const double inc = wrap_to_pi(principal[i] - principal[i - 1]);
        if (std::abs(inc) >= std::numbers::pi / 2) return std::nullopt;
        lift[i] = lift[i - 1] + inc;
    }
    return lift;
}

inline std::vector<double> uniform_grid(double T, std::size_t intervals) {
    std::vector<double> g(intervals + 1);
    for (std::size_t i = 0; i <= intervals; ++i) g[i] = T * static_cast<double>(i) / static_cast<double>(intervals);
    g.back() = T;
    return g;
}

/// omega at phi_s(p) of the forward images of A(p), B(p), given the inverse
/// tangent map M(s) and the endpoint.
inline double lambda_from_inverse_map(const Scene& scene, const Eigen::VectorXd& p, const Eigen::VectorXd& end,
                                      const Eigen::MatrixXd& M) {
    const Eigen::MatrixXd forward = M.partialPivLu().inverse();
    const Eigen::VectorXd u = forward * eval_field(scene.E.A, p);
    const Eigen::VectorXd v = forward * eval_field(scene.E.B, p);
    const FrameAt frame(scene.E, end);
    const auto du = frame.decompose_member(u, "T phi_s A");
    const auto dv = frame.decompose_member(v, "T phi_s B");
    return du.a * dv.b - du.b * dv.a;
}

/// Flow samples along [0, T] from one base point, shared across phases eta.
/// The grid is refined by halving until every phase's lift is valid.
class PullbackEngine {
public:
    PullbackEngine(const Scene& scene, const Eigen::VectorXd& p, double T, std::size_t intervals = 512)
        : scene_(&scene), p_(wrap_point(scene, p)), T_(T), base_(scene.E, p_) {
        if (!(T > 0.0)) throw PreconditionError("period must be positive");
        compute(intervals);
    }

    const Scene& scene() const { return *scene_; }
    const Eigen::VectorXd& base_point() const { return p_; }
    double period() const { return T_; }
    const FlowSamples& flow() const { return flow_; }
    std::size_t refinements() const { return refinements_; }

    void refine() {
        if (refinements_ >= kMaxRefinements) {
            throw IntegrationError("angle lift still unresolved after " + std::to_string(kMaxRefinements) +
                                   " grid refinements");
        }
        ++refinements_;
        compute(2 * (flow_.times.size() - 1));
    }

    /// theta(T) - theta(0) for phase eta on the current grid.
    std::optional<double> try_rotation(double eta) const {
        std::vector<double> principal(flow_.times.size());
        for (std::size_t i = 0; i < principal.size(); ++i) {
            principal[i] = pullback_sample(*scene_, base_, flow_.points[i], flow_.M[i], eta, false).angle;
        }
        auto lift = unwrap_angles(principal);
        if (!lift) return std::nullopt;
        return lift->back() - lift->front();
    }

    double rotation(double eta) {
        while (true) {
            if (auto r = try_rotation(eta)) return *r;
            refine();
        }
    }

    std::optional<PullbackTrace> try_trace(double eta) const {
        const std::size_t m = flow_.times.size();
        PullbackTrace tr;
        tr.p = p_;
        tr.T = T_;
        tr.eta = eta;
        tr.times = flow_.times;
        tr.points = flow_.points;
        tr.M = flow_.M;
        tr.sphere_drift = flow_.sphere_drift;
        tr.refinements = refinements_;
        std::vector<double> principal(m);
        const double g = scene_->candidate_gain;
        for (std::size_t i = 0; i < m; ++i) {
            const auto s = pullback_sample(*scene_, base_, flow_.points[i], flow_.M[i], eta, true);
            principal[i] = s.angle;
            tr.a.push_back(g * s.dec.a);
            tr.b.push_back(g * s.dec.b);
            tr.c.push_back(g * s.dec.c);
            tr.rho.push_back(g * s.rho);
            tr.theta_dot.push_back(s.theta_dot);
            tr.max_residual = std::max(tr.max_residual, s.dec.residual);
        }
        auto lift = unwrap_angles(principal);
        if (!lift) return std::nullopt;
        tr.theta = std::move(*lift);
        tr.lambda_T = lambda_from_inverse_map(*scene_, p_, flow_.points.back(), flow_.M.back());
        return tr;
    }

    PullbackTrace trace(double eta) {
        while (true) {
            if (auto tr = try_trace(eta)) return std::move(*tr);
            refine();
        }
    }

    static constexpr std::size_t kMaxRefinements = 8;

private:
    void compute(std::size_t intervals) { flow_ = integrate_flow(*scene_, p_, uniform_grid(T_, intervals), true); }

    const Scene* scene_;
    Eigen::VectorXd p_;
    double T_;
    FrameAt base_;
    FlowSamples flow_;
    std::size_t refinements_ = 0;
};

/// The pulled-back candidate along [0, T] from p for phase eta.
inline PullbackTrace pullback_trace(const Scene& scene, const Eigen::VectorXd& p, double T, double eta = 0.0,
                                    std::size_t intervals = 512) {
    PullbackEngine engine(scene, p, T, intervals);
    return engine.trace(eta);
}

inline PullbackTrace pullback_trace(const Scene& scene, const ClosedOrbit& orbit, double eta = 0.0,
                                    std::size_t intervals = 512) {
    return pullback_trace(scene, orbit.p, orbit.T, eta, intervals);
}

/// lambda(p;s) with (phi_s^* omega)_p = lambda(p;s) omega_p, for s >= 0.
inline double compute_lambda(const Scene& scene, const Eigen::VectorXd& p, double s) {
    if (s < 0.0) throw PreconditionError("compute_lambda needs s >= 0");
    const Eigen::VectorXd base = wrap_point(scene, p);
    if (s == 0.0) {
        const FrameAt frame(scene.E, base);
        const auto du = frame.decompose(frame.A());
        const auto dv = frame.decompose(frame.B());
        return du.a * dv.b - du.b * dv.a;
    }
    const auto flow = integrate_flow(scene, base, {s}, true);
    return lambda_from_inverse_map(scene, base, flow.points.back(), flow.M.back());
}

/// Pulled-back state at a single time t from p (no lift; principal angle).
inline PullbackSample pullback_at(const Scene& scene, const Eigen::VectorXd& p, double t, double eta = 0.0) {
    const Eigen::VectorXd base = wrap_point(scene, p);
    const FrameAt frame(scene.E, base);
    if (t == 0.0) {
        return pullback_sample(scene, frame, base, Eigen::MatrixXd::Identity(base.size(), base.size()), eta, true);
    }
    const auto flow = integrate_flow(scene, base, {t}, true);
    return pullback_sample(scene, frame, flow.points.back(), flow.M.back(), eta, true);
}

/// Both sides of the composition identity for rho^2 theta'. Here `factor` is
/// the conformal factor relating omega_p to omega_{phi_s(p)} through
/// T phi_{-s}, which is 1 / lambda(p;s) for lambda as in compute_lambda.
struct RateIdentity {
    double lhs = 0.0;      // rho(p;t+s)^2 theta'(p;t+s)
    double shifted = 0.0;  // rho(phi_s p;t)^2 theta'(phi_s p;t)
    double lambda = 1.0;   // lambda(p;s)
    double factor = 1.0;
    double residual = 0.0;
};

inline RateIdentity rate_identity(const Scene& scene, const Eigen::VectorXd& p, double s, double t,
                                  double eta = 0.0) {
    RateIdentity r;
    const auto left = pullback_at(scene, p, t + s, eta);
    const Eigen::VectorXd q = advance(scene, p, s);
    const auto right = pullback_at(scene, q, t, eta);
    r.lhs = left.rho * left.rho * left.theta_dot;
    r.shifted = right.rho * right.rho * right.theta_dot;
    r.lambda = compute_lambda(scene, p, s);
    r.factor = 1.0 / r.lambda;
    r.residual = std::abs(r.lhs - r.factor * r.shifted);
    return r;
}

enum class Convention { Backward, Forward };

inline const char* to_string(Convention c) { return c == Convention::Backward ? "backward" : "forward"; }

/// Induced action on E_p / W_p in the basis ([A(p)], [B(p)]), scaled to |det| = 1.
struct Monodromy2 {
    Eigen::Matrix2d Q = Eigen::Matrix2d::Identity();
    int det_sign = 1;
    double raw_det = 1.0;
    Convention convention = Convention::Backward;
};

inline Monodromy2 monodromy_from_map(const Scene& scene, const Eigen::VectorXd& p, const Eigen::MatrixXd& map,
                                     Convention convention) {
    const FrameAt frame(scene.E, p);
    const auto da = frame.decompose_member(map * frame.A(), "image of A");
    const auto db = frame.decompose_member(map * frame.B(), "image of B");
    Monodromy2 m;
    m.convention = convention;
    Eigen::Matrix2d Q;
    Q << da.a, db.a, da.b, db.b;
    m.raw_det = Q.determinant();
    if (!(std::abs(m.raw_det) >= 1e-12)) throw OrbitError("degenerate induced map on E/W");
    m.det_sign = m.raw_det > 0.0 ? 1 : -1;
    m.Q = Q / std::sqrt(std::abs(m.raw_det));
    return m;
}

inline Monodromy2 monodromy(const Scene& scene, const ClosedOrbit& orbit,
                            Convention convention = Convention::Backward) {
    if (!(orbit.closure_defect < scene.orbit_tol)) {
        throw OrbitError("closure defect " + std::to_string(orbit.closure_defect) + " too large for orbit '" +
                         orbit.label + "'");
    }
    const Eigen::VectorXd p = wrap_point(scene, orbit.p);
    const auto flow = integrate_flow(scene, p, {orbit.T}, true);
    const Eigen::MatrixXd& backward = flow.M.back();
    if (convention == Convention::Backward) return monodromy_from_map(scene, p, backward, convention);
    return monodromy_from_map(scene, p, backward.partialPivLu().inverse(), convention);
}

}  // namespace rotnum
