#pragma once

// Geometry of a framed rank-3 distribution E = <W, A, B>: decomposition of
// tangent vectors in the frame, the 2-form omega (omega(A,B) = 1, i_W omega = 0)
// and the complex structure J (JW = 0, JA = B, JB = -A).

#include <array>
#include <cmath>

#include <Eigen/Dense>

#include "rotnum/error.hpp"
#include "rotnum/expr.hpp"

namespace rotnum {

struct FramedDistribution {
    FieldExpr W;
    FieldExpr A;
    FieldExpr B;
    double membership_tol = 1e-7;

    std::size_t dim() const noexcept { return W.dim(); }
};

/// v = a A(p) + b B(p) + c W(p) + defect, with residual = |defect|.
struct FrameDecomposition {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    double residual = 0.0;
};

inline constexpr double kFrameSingularTol = 1e-10;

/// The frame at one point, factored once so repeated decompositions are cheap.
class FrameAt {
public:
    FrameAt(const FramedDistribution& E, const Eigen::VectorXd& p) : tol_(E.membership_tol) {
        const auto n = static_cast<Eigen::Index>(E.dim());
        if (n < 3) throw FrameError("ambient dimension must be at least 3");
        frame_.resize(n, 3);
        frame_.col(0) = eval_field(E.A, p);
        frame_.col(1) = eval_field(E.B, p);
        frame_.col(2) = eval_field(E.W, p);
        if (frame_.col(2).norm() == 0.0) throw FrameError("frame degenerate: W vanishes");
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(frame_);
        const auto& s = svd.singularValues();
        smallest_singular_ = s[s.size() - 1];
        if (!(smallest_singular_ > kFrameSingularTol)) {
            throw FrameError("frame degenerate: smallest singular value " + std::to_string(smallest_singular_));
        }
        qr_.compute(frame_);
    }

    FrameDecomposition decompose(const Eigen::VectorXd& v) const {
        const Eigen::Vector3d coef = qr_.solve(v);
        return {coef[0], coef[1], coef[2], (v - frame_ * coef).norm()};
    }

    /// Decompose and require membership in E at this point. The tolerance
    /// scales with |v| once |v| exceeds one.
    FrameDecomposition decompose_member(const Eigen::VectorXd& v, const char* what = "vector") const {
        FrameDecomposition d = decompose(v);
        if (d.residual > tol_ * std::max(1.0, v.norm())) {
            throw FrameError(std::string(what) + " not in E: residual " + std::to_string(d.residual));
        }
        return d;
    }

    Eigen::VectorXd A() const { return frame_.col(0); }
    Eigen::VectorXd B() const { return frame_.col(1); }
    Eigen::VectorXd W() const { return frame_.col(2); }
    const Eigen::MatrixXd& matrix() const { return frame_; }
    double smallest_singular_value() const { return smallest_singular_; }
    double membership_tol() const { return tol_; }

private:
    Eigen::MatrixXd frame_;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr_;
    double smallest_singular_ = 0.0;
    double tol_;
};

inline FrameDecomposition decompose_in_frame(const Eigen::VectorXd& v, const Eigen::VectorXd& p,
                                             const FramedDistribution& E) {
    return FrameAt(E, p).decompose(v);
}

inline double omega(const Eigen::VectorXd& u, const Eigen::VectorXd& v, const Eigen::VectorXd& p,
                    const FramedDistribution& E) {
    const FrameAt frame(E, p);
    const auto du = frame.decompose_member(u, "first argument");
    const auto dv = frame.decompose_member(v, "second argument");
    return du.a * dv.b - du.b * dv.a;
}

inline Eigen::VectorXd apply_J(const Eigen::VectorXd& v, const Eigen::VectorXd& p, const FramedDistribution& E) {
    const FrameAt frame(E, p);
    const auto d = frame.decompose_member(v);
    return d.a * frame.B() - d.b * frame.A();
}

/// Least-squares frame coefficients (a, b, c) over any scalar type, via the
/// 3x3 normal equations. Used for differentiating frame-dependent fields.
template <class T, class Vec>
std::array<T, 3> frame_coefficients(const Vec& a, const Vec& b, const Vec& w, const Vec& v, std::size_t n) {
    const std::array<const Vec*, 3> cols{&a, &b, &w};
    T g[3][3];
    T rhs[3];
    for (int i = 0; i < 3; ++i) {
        rhs[i] = T(0.0);
        for (std::size_t k = 0; k < n; ++k) rhs[i] += (*cols[i])[k] * v[k];
        for (int j = 0; j < 3; ++j) {
            g[i][j] = T(0.0);
            for (std::size_t k = 0; k < n; ++k) g[i][j] += (*cols[i])[k] * (*cols[j])[k];
        }
    }
    auto det3 = [](T m[3][3]) {
        return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
               m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
               m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    };
    const T det = det3(g);
    if (value_of(det) == 0.0) throw FrameError("frame degenerate");
    std::array<T, 3> out;
    for (int c = 0; c < 3; ++c) {
        T m[3][3];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) m[i][j] = (j == c) ? rhs[i] : g[i][j];
        out[static_cast<std::size_t>(c)] = det3(m) / det;
    }
    return out;
}

}  // namespace rotnum
