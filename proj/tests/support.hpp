#pragma once

#include <initializer_list>
#include <string>

#include <Eigen/Dense>

#include "rotnum/rotnum.hpp"

namespace support {

inline Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

/// Same scene with a different candidate field, re-validated.
inline rotnum::Scene with_candidate(rotnum::Scene scene, const std::string& L) {
    scene.L = rotnum::parse_field(L, scene.dim());
    scene.candidate_gain = 1.0;
    rotnum::validate_scene(scene);
    return scene;
}

/// Orbit taken straight from the seed, for scenes whose seeds are exact.
inline rotnum::ClosedOrbit seed_orbit(const rotnum::Scene& scene, const std::string& label) {
    const auto& seed = scene.orbit(label);
    return {rotnum::wrap_point(scene, seed.p0), seed.T0, 0.0, label};
}

inline const std::vector<std::string>& builtin_names() {
    static const std::vector<std::string> names{"sol4_model",  "elliptic_model", "parabolic_model",
                                                "nms_local",   "reeb_s3",        "suspension_s3s1"};
    return names;
}

}  // namespace support
