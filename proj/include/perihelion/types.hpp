#ifndef PERIHELION_TYPES_HPP
#define PERIHELION_TYPES_HPP

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

namespace perihelion {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr double arcsec_per_degree = 3600.0;

inline constexpr double deg_to_rad(double deg) { return deg * (pi / 180.0); }
inline constexpr double rad_to_deg(double rad) { return rad * (180.0 / pi); }

/// Event (t, x) on a world line together with its coordinate velocity.
struct WorldlineSample {
    double t = 0.0; ///< coordinate time, s
    Vec3 x = Vec3::Zero(); ///< position, m
    Vec3 v = Vec3::Zero(); ///< velocity, m/s
};

/// Lorentz factor (1 - |v|^2/c^2)^(-1/2). Caller guarantees |v| < c.
inline double lorentz_factor(const Vec3& v, double c) {
    const double beta2 = v.squaredNorm() / (c * c);
    return 1.0 / std::sqrt(1.0 - beta2);
}

/// Gamma - 1 without cancellation for small speeds.
inline double lorentz_factor_minus_one(const Vec3& v, double c) {
    const double beta2 = v.squaredNorm() / (c * c);
    const double s = std::sqrt(1.0 - beta2);
    return beta2 / (s * (1.0 + s));
}

/// Reduce an angle into [0, 2pi).
inline double wrap_two_pi(double angle) {
    double r = std::fmod(angle, two_pi);
    if (r < 0.0) r += two_pi;
    return r;
}

/// Reduce an angle into (-pi, pi].
inline double wrap_pi(double angle) {
    double r = wrap_two_pi(angle);
    if (r > pi) r -= two_pi;
    return r;
}

} // namespace perihelion

#endif // PERIHELION_TYPES_HPP
