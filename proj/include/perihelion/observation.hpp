#ifndef PERIHELION_OBSERVATION_HPP
#define PERIHELION_OBSERVATION_HPP

#include "ephemeris.hpp"
#include "errors.hpp"
#include "rcn_orbit.hpp"
#include "types.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace perihelion::obs {

enum class LightTimeMode {
    approx, ///< Earth taken at the emission time
    exact   ///< Earth taken at the reception time
};

inline std::string to_string(LightTimeMode m) { return m == LightTimeMode::exact ? "exact" : "approx"; }

struct ObservedAdvanceConfig {
    double phi1_0 = 0.0; ///< Mercury perihelion angle, rad
    double phi3_0 = 0.0; ///< Earth perihelion angle, rad
    long l1 = 0;
    long l2 = 415;
    LightTimeMode mode = LightTimeMode::approx;
};

/// Mercury's plane is tilted by theta about the first axis, which is orthogonal to its
/// angular momentum; the Earth orbit lies in x3 = 0.
inline Vec3 embed_inclined(double r, double phi, double theta) {
    return {r * std::cos(phi), -r * std::cos(theta) * std::sin(phi), r * std::sin(theta) * std::sin(phi)};
}
inline Vec3 embed_plane(double r, double phi) { return {r * std::cos(phi), r * std::sin(phi), 0.0}; }

inline rcn::RcnOrbit orbit_with_angle(PlanetElements p, double phi0, double c) {
    p.perihelion_angle = phi0;
    return rcn::orbit_from_elements(p, c);
}

struct PerihelionEpoch {
    long l = 0;
    double xi = 0.0;
    double t = 0.0;   ///< s
    double r = 0.0;   ///< m
    double phi = 0.0; ///< rad, unwound
    Vec3 x = Vec3::Zero();
};

/// Mercury at the perihelion with phase xi = pi (2l + 3/2), using the approximate time map.
inline PerihelionEpoch mercury_epoch(long l, const PlanetElements& mercury, double phi1_0, double c) {
    const rcn::RcnOrbit o = orbit_with_angle(mercury, phi1_0, c);
    PerihelionEpoch ep;
    ep.l = l;
    ep.xi = pi * (2.0 * static_cast<double>(l) + 1.5);
    ep.t = rcn::time_of_xi(o, ep.xi, rcn::TimeMode::approx);
    ep.r = o.a * (1.0 - o.e); // sin(xi) = -1 exactly; evaluating it would leave ~1e-16 noise
    ep.phi = rcn::angle_of_xi(o, ep.xi, rcn::TimeMode::approx);
    ep.x = embed_inclined(ep.r, ep.phi, mercury.inclination);
    return ep;
}

/// Earth phase at time t from omega t = xi + e (1 - omega^2 a^2 / c^2)(1 - cos xi).
inline double earth_xi_at(double t, const PlanetElements& earth, double c) {
    return rcn::xi_of_time(orbit_with_angle(earth, 0.0, c), t, rcn::TimeMode::approx);
}

struct EarthState {
    double t = 0.0;
    double xi = 0.0;
    double r = 0.0;
    double phi = 0.0; ///< rad, unwound; phi - phi3_0 grows with t
    Vec3 x = Vec3::Zero();
};

/// r = a (1 + e sin xi) and the angle from the cosine relation, with the branch fixed by
/// continuity in xi.
inline EarthState earth_state_at_xi(double xi, const PlanetElements& earth, double phi3_0, double c) {
    const rcn::RcnOrbit o = orbit_with_angle(earth, phi3_0, c);
    EarthState s;
    s.xi = xi;
    s.t = rcn::time_of_xi(o, xi, rcn::TimeMode::approx);
    s.r = rcn::radius_of_xi(o, xi);
    s.phi = rcn::angle_of_xi(o, xi, rcn::TimeMode::approx);
    s.x = embed_plane(s.r, s.phi);
    return s;
}

inline EarthState earth_state_at_time(double t, const PlanetElements& earth, double phi3_0, double c) {
    EarthState s = earth_state_at_xi(earth_xi_at(t, earth, c), earth, phi3_0, c);
    s.t = t;
    return s;
}

struct Reception {
    EarthState earth;
    double residual_m = 0.0; ///< c (t3 - t1) - |x1 - x3|; zero by construction in approx mode
    int iterations = 0;
    double delay_s = 0.0; ///< t3 - t1
};

/// Earth state that receives light emitted by Mercury at (t1, x1).
inline Reception light_time_correct(double t1, const Vec3& x1, const PlanetElements& earth, double phi3_0,
                                    double c, LightTimeMode mode) {
    Reception out;
    out.earth = earth_state_at_time(t1, earth, phi3_0, c);
    if (mode == LightTimeMode::approx) return out;
    // Fixed point on the delay d = t3 - t1, which contracts with factor |v3|/c ~ 1e-4. Iterating
    // on d rather than t3 keeps the residual free of the rounding of t1 itself.
    double d = 0.0;
    for (int it = 1; it <= 50; ++it) {
        const double next = (x1 - out.earth.x).norm() / c;
        out.iterations = it;
        const bool done = std::abs(next - d) <= 1e-14 * next;
        d = next;
        out.earth = earth_state_at_time(t1 + d, earth, phi3_0, c);
        if (done) {
            out.residual_m = c * d - (x1 - out.earth.x).norm();
            out.delay_s = d;
            return out;
        }
    }
    throw ConvergenceError("light_time_correct: fixed point did not converge");
}

/// Largest-before-century test: t1(xi2) - t1(xi1) <= 100 T3 <= t1(xi2) - t1(xi1) + T1.
inline bool century_window_check(long l1, long l2, const PlanetElements& mercury, const PlanetElements& earth,
                                 double c) {
    if (l2 <= l1) return false;
    const double span = mercury_epoch(l2, mercury, 0.0, c).t - mercury_epoch(l1, mercury, 0.0, c).t;
    const double century = 100.0 * orbital_period(earth, c);
    return span <= century && century <= span + orbital_period(mercury, c);
}

/// The unique span l2 - l1 accepted by the window, or -1 if none in [1, max_span].
inline long century_span(const PlanetElements& mercury, const PlanetElements& earth, double c, long max_span = 5000) {
    long found = -1;
    for (long n = 1; n <= max_span; ++n) {
        if (century_window_check(0, n, mercury, earth, c)) {
            if (found >= 0) return -1;
            found = n;
        }
    }
    return found;
}

/// Scalars of one observation for the expanded angle formula; lengths in units of a1.
struct ObservationScalars {
    double mercury_r = 0.0;
    double mercury_phi = 0.0;
    double earth_r = 0.0;
    double earth_phi = 0.0;
};

/// cos alpha written out in components: the dot product of the two Mercury-minus-Earth
/// vectors over their norms, with cos(theta) and sin^2(theta) as the only inclination factors.
inline double cos_alpha_expanded(const ObservationScalars& a, const ObservationScalars& b, double theta) {
    const double ct = std::cos(theta);
    const double s2 = std::sin(theta) * std::sin(theta);
    auto X = [](const ObservationScalars& o) {
        return o.mercury_r * std::cos(o.mercury_phi) - o.earth_r * std::cos(o.earth_phi);
    };
    auto Y = [&](const ObservationScalars& o) {
        return ct * o.mercury_r * std::sin(o.mercury_phi) + o.earth_r * std::sin(o.earth_phi);
    };
    auto Z2 = [&](const ObservationScalars& o, const ObservationScalars& p) {
        return s2 * o.mercury_r * p.mercury_r * std::sin(o.mercury_phi) * std::sin(p.mercury_phi);
    };
    const double num = X(a) * X(b) + Y(a) * Y(b) + Z2(a, b);
    const double na = std::sqrt(X(a) * X(a) + Y(a) * Y(a) + Z2(a, a));
    const double nb = std::sqrt(X(b) * X(b) + Y(b) * Y(b) + Z2(b, b));
    if (!(na > 0.0 && nb > 0.0)) throw DomainError("cos_alpha_expanded: zero-length direction");
    return num / (na * nb);
}

inline double angle_between(const Vec3& a, const Vec3& b) {
    const double na = a.norm(), nb = b.norm();
    if (!(na > 0.0 && nb > 0.0)) throw DomainError("angle_between: zero-length direction");
    // atan2 keeps full precision for nearly parallel vectors
    return std::atan2(a.cross(b).norm(), a.dot(b));
}

struct Sighting {
    PerihelionEpoch mercury;
    Reception reception;
    Vec3 direction = Vec3::Zero(); ///< Mercury minus Earth, m
};

struct AdvanceReport {
    ObservedAdvanceConfig config;
    double inclination = 0.0;
    Sighting first, second;
    double alpha_rad = 0.0;
    double alpha_expanded_rad = 0.0;
    bool window_ok = false;
    double span_s = 0.0;
    double alpha_deg_per_century = 0.0; ///< alpha scaled by 100 Earth periods over the span

    double alpha_deg() const { return rad_to_deg(alpha_rad); }
    double alpha_arcsec() const { return rad_to_deg(alpha_rad) * arcsec_per_degree; }
};

inline Sighting sight(long l, const ObservedAdvanceConfig& cfg, const PlanetElements& mercury,
                      const PlanetElements& earth, double c) {
    Sighting s;
    s.mercury = mercury_epoch(l, mercury, cfg.phi1_0, c);
    s.reception = light_time_correct(s.mercury.t, s.mercury.x, earth, cfg.phi3_0, c, cfg.mode);
    s.direction = s.mercury.x - s.reception.earth.x;
    return s;
}

/// Angle between the apparent directions of Mercury at perihelia l1 and l2 seen from the Earth.
inline AdvanceReport advance_angle(const ObservedAdvanceConfig& cfg, const PlanetElements& mercury,
                                   const PlanetElements& earth, double c) {
    if (cfg.l2 < cfg.l1) throw DomainError("advance_angle: l2 must not precede l1");
    AdvanceReport rep;
    rep.config = cfg;
    rep.inclination = mercury.inclination;
    rep.first = sight(cfg.l1, cfg, mercury, earth, c);
    rep.second = sight(cfg.l2, cfg, mercury, earth, c);
    rep.alpha_rad = angle_between(rep.first.direction, rep.second.direction);

    auto scalars = [&](const Sighting& s) {
        return ObservationScalars{s.mercury.r / mercury.a, s.mercury.phi, s.reception.earth.r / mercury.a,
                                  s.reception.earth.phi};
    };
    const double ca = cos_alpha_expanded(scalars(rep.first), scalars(rep.second), mercury.inclination);
    rep.alpha_expanded_rad = std::acos(std::clamp(ca, -1.0, 1.0));

    rep.window_ok = century_window_check(cfg.l1, cfg.l2, mercury, earth, c);
    rep.span_s = rep.second.mercury.t - rep.first.mercury.t;
    if (rep.span_s > 0.0) rep.alpha_deg_per_century = rep.alpha_deg() * 100.0 * orbital_period(earth, c) / rep.span_s;
    return rep;
}

inline AdvanceReport advance_angle(const ObservedAdvanceConfig& cfg, const EphemerisTable& t) {
    return advance_angle(cfg, t.body(body::mercury), t.body(body::earth), t.constants.c);
}

} // namespace perihelion::obs

#endif // PERIHELION_OBSERVATION_HPP
