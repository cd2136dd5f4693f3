#pragma once

// Closed-orbit refinement by Newton iteration on the return map of a
// transverse section, and the elliptic / parabolic / hyperbolic trichotomy of
// the induced monodromy.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "rotnum/error.hpp"
#include "rotnum/flow.hpp"

namespace rotnum {

inline constexpr int kNewtonMaxIterations = 30;

/// Refines `seed` to a closed orbit. Unknowns are the point on the hyperplane
/// through p0 normal to W(p0) and the return time; each step solves the
/// bordered linearization in the minimum-norm sense, so families of closed
/// orbits (non-isolated directions) do not stall the iteration.
inline ClosedOrbit refine_orbit(const Scene& scene, const OrbitSeed& seed) {
    const auto n = static_cast<Eigen::Index>(scene.dim());
    if (seed.p0.size() != n) throw PreconditionError("seed dimension mismatch");
    if (!(seed.T0 > 0.0)) throw PreconditionError("seed period must be positive");

    Eigen::VectorXd p0 = wrap_point(scene, seed.p0);
    project_to_sphere(scene, p0);
    const Eigen::VectorXd w0 = eval_field(scene.E.W, p0);
    if (!(w0.norm() > 1e-12)) throw OrbitError("degenerate return: W vanishes at the seed");
    const Eigen::VectorXd normal = w0.normalized();

    Eigen::VectorXd p = p0;
    double T = seed.T0;
    for (int iter = 0; iter <= kNewtonMaxIterations; ++iter) {
        const auto flow = integrate_flow(scene, p, {T}, true);
        const Eigen::VectorXd& end = flow.points.back();
        const Eigen::VectorXd r = wrapped_difference(scene, end, p);
        const double defect = r.norm();
        if (defect < scene.orbit_tol) return {p, T, defect, seed.label};
        if (iter == kNewtonMaxIterations) break;

        const Eigen::MatrixXd forward = flow.M.back().partialPivLu().inverse();
        // On a sphere factor the step is also kept tangent to the sphere; the
        // radial direction is otherwise close to a null direction of J.
        const Eigen::Index rows = n + (scene.sphere.empty() ? 1 : 2);
        Eigen::MatrixXd J = Eigen::MatrixXd::Zero(rows, n + 1);
        J.block(0, 0, n, n) = forward - Eigen::MatrixXd::Identity(n, n);
        J.block(0, n, n, 1) = eval_field(scene.E.W, end);
        J.block(n, 0, 1, n) = normal.transpose();
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(rows);
        rhs.head(n) = -r;
        rhs[n] = -normal.dot(wrapped_difference(scene, p, p0));
        for (auto i : scene.sphere) J(rows - 1, static_cast<Eigen::Index>(i)) = p[static_cast<Eigen::Index>(i)];

        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(J);
        if (cod.rank() == 0) throw OrbitError("degenerate return: singular linearization");
        const Eigen::VectorXd step = cod.solve(rhs);
        if (!step.allFinite()) throw OrbitError("degenerate return: non-finite Newton step");

        p += step.head(n);
        T += step[n];
        project_to_sphere(scene, p);
        p = wrap_point(scene, p);
        if (!(T > 0.0) || wrapped_difference(scene, p, p0).norm() > scene.basin_radius ||
            std::abs(T - seed.T0) > std::max(scene.basin_radius, 0.5 * seed.T0)) {
            throw OrbitError("no convergence: Newton iterate left the basin around seed '" + seed.label + "'");
        }
    }
    throw OrbitError("no convergence within " + std::to_string(kNewtonMaxIterations) + " iterations for seed '" +
                     seed.label + "'");
}

enum class OrbitKind { Elliptic, PositiveParabolic, NegativeParabolic, Hyperbolic, Ambiguous };

inline const char* to_string(OrbitKind k) {
    switch (k) {
    case OrbitKind::Elliptic: return "Elliptic";
    case OrbitKind::PositiveParabolic: return "PositiveParabolic";
    case OrbitKind::NegativeParabolic: return "NegativeParabolic";
    case OrbitKind::Hyperbolic: return "Hyperbolic";
    case OrbitKind::Ambiguous: return "Ambiguous";
    }
    return "?";
}

struct OrbitClass {
    OrbitKind kind = OrbitKind::Ambiguous;
    /// delta (elliptic), mu (hyperbolic) or |Q12 - Q21| of the trace-+2
    /// representative (parabolic).
    double parameter = 0.0;
    double trace_value = 0.0;
    Convention convention = Convention::Backward;
};

/// Trichotomy by |trace Q| with an ambiguity band of half-width tol_tr around 2.
/// Parabolic maps are normalized to trace +2; the sign of the off-diagonal
/// shear then follows from sign(Q12 - Q21), which is invariant under
/// orientation-preserving changes of basis. Positive parabolic means the
/// shear entry of the normal form [[1, s], [0, 1]] has s < 0.
inline OrbitClass classify_monodromy(const Monodromy2& m, double tol_tr = 1e-6) {
    const double det = m.Q.determinant();
    if (std::abs(std::abs(det) - 1.0) > 1e-9) {
        throw ClassificationError("monodromy not normalized: |det| = " + std::to_string(std::abs(det)));
    }
    OrbitClass out;
    out.convention = m.convention;
    out.trace_value = m.Q.trace();
    const double tau = std::abs(out.trace_value);
    if (tau < 2.0 - tol_tr) {
        out.kind = OrbitKind::Elliptic;
        out.parameter = std::acos(std::clamp(out.trace_value / 2.0, -1.0, 1.0));
        return out;
    }
    if (tau > 2.0 + tol_tr) {
        out.kind = OrbitKind::Hyperbolic;
        out.parameter = std::acosh(tau / 2.0);
        return out;
    }
    const double s = out.trace_value >= 0.0 ? 1.0 : -1.0;
    const Eigen::Matrix2d N = s * m.Q - Eigen::Matrix2d::Identity();
    if (N.cwiseAbs().maxCoeff() <= tol_tr) {
        out.kind = OrbitKind::Elliptic;
        out.parameter = s > 0.0 ? 0.0 : std::numbers::pi;
        return out;
    }
    const double shear = N(0, 1) - N(1, 0);
    if (std::abs(shear) <= tol_tr) {
        out.kind = OrbitKind::Ambiguous;
        return out;
    }
    out.kind = shear < 0.0 ? OrbitKind::PositiveParabolic : OrbitKind::NegativeParabolic;
    out.parameter = std::abs(shear);
    return out;
}

}  // namespace rotnum
