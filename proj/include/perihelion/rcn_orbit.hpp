#ifndef PERIHELION_RCN_ORBIT_HPP
#define PERIHELION_RCN_ORBIT_HPP

#include "ephemeris.hpp"
#include "errors.hpp"
#include "integrator.hpp"
#include "roots.hpp"
#include "types.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace perihelion::rcn {

/// Energy and angular momentum per unit mass of a test body around a resting Sun.
///
/// The energy includes the rest term c^2 and is stored through its deficit W = c^2 - E, which
/// is ~1e-8 c^2 for planets and would otherwise be lost to cancellation. The angular momentum
/// is Gamma * (x cross v), a single cross product.
struct ConservedQuantities {
    double c = 0.0;
    double deficit = 0.0; ///< W = c^2 - E, m^2/s^2
    Vec3 M = Vec3::Zero(); ///< m^2/s

    double energy() const { return c * c - deficit; }
    double angular_momentum() const { return M.norm(); }
    /// c^4 - E^2, evaluated without cancellation.
    double binding() const { return deficit * (2.0 * c * c - deficit); }
};

enum class TimeMode { exact, approx };
enum class KeplerVariant { elliptic, circular, classical };

/// Closed-form precessing ellipse r = a(1-e^2)/(1 + e cos(gamma(phi - phi0))) with the time
/// map omega t = xi - xi0 - e (E/c^2)^2 cos xi and r = a(1 + e sin xi).
struct RcnOrbit {
    double a = 0.0;
    double e = 0.0;
    double gamma = 1.0;
    double one_minus_gamma = 0.0; ///< kept separately, gamma itself rounds to 1 - 1.3e-8
    double phi0 = 0.0;
    double xi0 = 0.0;
    double omega = 0.0;
    double m10G = 0.0;
    ConservedQuantities q;

    double c() const { return q.c; }
    double energy() const { return q.energy(); }
    double angular_momentum() const { return q.angular_momentum(); }
    /// (E/c^2)^2
    double kappa() const {
        const double eps = 1.0 - q.deficit / (q.c * q.c);
        return eps * eps;
    }
    /// omega^2 a^2 / c^2
    double velocity_parameter() const {
        const double wa = omega * a / q.c;
        return wa * wa;
    }
    double period() const { return two_pi / omega; }
    /// 1/gamma - 1
    double precession_per_radian() const { return one_minus_gamma / gamma; }
};

inline ConservedQuantities conserved_from_state(const WorldlineSample& s, double m10G, double c) {
    const double r = s.x.norm();
    if (!(r > 0.0)) throw DomainError("conserved_from_state: zero radius");
    if (!(s.v.norm() < c)) throw DomainError("conserved_from_state: superluminal velocity");
    ConservedQuantities q;
    q.c = c;
    q.deficit = m10G / r - c * c * lorentz_factor_minus_one(s.v, c);
    q.M = lorentz_factor(s.v, c) * s.x.cross(s.v);
    return q;
}

/// Build the orbit generated by admissible constants. Throws InadmissibleConstants naming the
/// violated inequality.
inline RcnOrbit orbit_from_conserved(const ConservedQuantities& q, double m10G, double phi0 = 0.0) {
    const double c = q.c;
    const double c2 = c * c;
    const double E = q.energy();
    const double M = q.angular_momentum();
    if (!(m10G > 0.0)) throw DomainError("orbit_from_conserved: m10G must be positive");
    if (!(E > 0.0)) throw InadmissibleConstants("E > 0", "E = " + std::to_string(E));
    if (!(q.deficit > 0.0)) {
        throw InadmissibleConstants("E^2 < c^4", "c^2 - E = " + std::to_string(q.deficit));
    }
    if (!(c * M > m10G)) {
        throw InadmissibleConstants("c^2 |M|^2 > (m10 G)^2",
                                    "c|M| = " + std::to_string(c * M) + ", m10G = " + std::to_string(m10G));
    }
    const double D = q.binding();
    double disc = m10G * m10G * c2 * c2 - c2 * M * M * D;
    // A circular orbit sits on the boundary of this inequality; allow rounding below zero.
    const double disc_scale = m10G * m10G * c2 * c2;
    if (disc < 0.0 && disc > -64.0 * std::numeric_limits<double>::epsilon() * disc_scale) disc = 0.0;
    if (!(disc >= 0.0)) {
        throw InadmissibleConstants("c^2 |M|^2 (E^2 - c^4) + (m10 G)^2 c^4 > 0",
                                    "value = " + std::to_string(disc));
    }

    RcnOrbit o;
    o.q = q;
    o.m10G = m10G;
    o.phi0 = phi0;
    o.a = m10G * E / D;
    o.e = std::sqrt(disc) / (m10G * E);
    const double ratio = m10G * m10G / (c2 * M * M);
    o.one_minus_gamma = ratio / (1.0 + std::sqrt(1.0 - ratio));
    o.gamma = 1.0 - o.one_minus_gamma;
    o.omega = std::pow(D, 1.5) / (m10G * c2 * c);
    o.xi0 = -o.e * o.kappa();
    return o;
}

/// m10 G from one body's elements using the requested form of the third Kepler law.
inline double third_kepler(const PlanetElements& p, double c, KeplerVariant v = KeplerVariant::elliptic) {
    const double w = angular_frequency(p, c);
    const double w2a3 = w * w * p.a * p.a * p.a;
    const double y = w * w * p.a * p.a / (c * c);
    switch (v) {
    case KeplerVariant::elliptic: {
        if (!(4.0 * y < 1.0)) throw DomainError("third_kepler: 4 omega^2 a^2 / c^2 >= 1 for " + p.name);
        return w2a3 * std::pow(0.5 * (1.0 + std::sqrt(1.0 - 4.0 * y)), -1.5);
    }
    case KeplerVariant::circular:
        if (!(y < 1.0)) throw DomainError("third_kepler: omega a >= c for " + p.name);
        return w2a3 / std::sqrt(1.0 - y);
    case KeplerVariant::classical:
        return w2a3;
    }
    throw DomainError("third_kepler: unknown variant");
}

/// Orbit with the body's a, e and omega. m10 G follows from the elliptic third Kepler law,
/// which is the relation between a, omega and m10 G that the closed form itself implies.
inline RcnOrbit orbit_from_elements(const PlanetElements& p, double c) {
    if (!(p.a > 0.0)) throw DomainError("orbit_from_elements: a must be positive for " + p.name);
    const double m10G = third_kepler(p, c, KeplerVariant::elliptic);
    const double c2 = c * c;
    const double s = m10G / (2.0 * p.a * c2);
    ConservedQuantities q;
    q.c = c;
    q.deficit = c2 * (s - s * s / (std::sqrt(1.0 + s * s) + 1.0));
    const double E = q.energy();
    const double M2 = (p.a * (1.0 - p.e * p.e) * m10G * E + m10G * m10G) / c2;
    q.M = Vec3(0.0, 0.0, std::sqrt(M2));
    RcnOrbit o = orbit_from_conserved(q, m10G, p.perihelion_angle);
    o.e = p.e; // identical up to rounding; keep the tabulated value exactly
    o.xi0 = -o.e * o.kappa();
    return o;
}

inline double radius_at_angle(const RcnOrbit& o, double phi) {
    const double den = 1.0 + o.e * std::cos(o.gamma * (phi - o.phi0));
    if (!(den > 0.0)) throw DomainError("radius_at_angle: nonpositive denominator");
    return o.a * (1.0 - o.e * o.e) / den;
}

inline double radius_of_xi(const RcnOrbit& o, double xi) { return o.a * (1.0 + o.e * std::sin(xi)); }

/// omega * t as a function of the phase parameter xi.
inline double phase_of_xi(const RcnOrbit& o, double xi, TimeMode mode = TimeMode::exact) {
    if (mode == TimeMode::exact) return xi - o.xi0 - o.e * o.kappa() * std::cos(xi);
    return xi + o.e * (1.0 - o.velocity_parameter()) * (1.0 - std::cos(xi));
}

inline double time_of_xi(const RcnOrbit& o, double xi, TimeMode mode = TimeMode::exact) {
    return phase_of_xi(o, xi, mode) / o.omega;
}

/// d(omega t)/d xi; bounded below by 1 - e > 0.
inline double phase_derivative(const RcnOrbit& o, double xi, TimeMode mode = TimeMode::exact) {
    if (mode == TimeMode::exact) return 1.0 + o.e * o.kappa() * std::sin(xi);
    return 1.0 + o.e * (1.0 - o.velocity_parameter()) * std::sin(xi);
}

/// Inverse of the time map. xi - omega t lies in [-2e, 0] for both modes.
inline double xi_of_phase(const RcnOrbit& o, double wt, TimeMode mode = TimeMode::exact) {
    if (o.e == 0.0) return wt;
    const double pad = 1e-9 + 8.0 * std::numeric_limits<double>::epsilon() * std::abs(wt);
    const auto res = roots::newton_bisect(
        [&](double xi) { return phase_of_xi(o, xi, mode) - wt; },
        [&](double xi) { return phase_derivative(o, xi, mode); },
        wt - 2.0 * o.e - pad, wt + pad, wt - o.e * (1.0 - std::cos(wt)));
    return res.root;
}

inline double xi_of_time(const RcnOrbit& o, double t, TimeMode mode = TimeMode::exact) {
    return xi_of_phase(o, o.omega * t, mode);
}

/// gamma (phi - phi0) as a continuous function of xi, zero at the perihelion xi = 3pi/2 and
/// advancing by 2pi per revolution.
inline double true_anomaly_of_xi(double e, double xi) {
    const double raw = std::atan2(std::sqrt(1.0 - e * e) * std::cos(xi), -(e + std::sin(xi)));
    const double ref = xi - 1.5 * pi;
    return ref + wrap_pi(raw - ref);
}

/// Polar angle phi at phase xi. The approximate mode replaces 1/gamma by its first-order
/// expansion 1 + omega^2 a^2 / (2 c^2 (1 - e^2)).
inline double angle_of_xi(const RcnOrbit& o, double xi, TimeMode mode = TimeMode::exact) {
    const double theta = true_anomaly_of_xi(o.e, xi);
    if (mode == TimeMode::exact) return o.phi0 + theta / o.gamma;
    return o.phi0 + theta * (1.0 + 0.5 * o.velocity_parameter() / (1.0 - o.e * o.e));
}

/// Planar state at coordinate time t; the orbit plane is z = 0 with M along +z.
inline WorldlineSample state_at_time(const RcnOrbit& o, double t) {
    const double xi = xi_of_time(o, t);
    const double r = radius_of_xi(o, xi);
    const double phi = angle_of_xi(o, xi);
    const double xidot = o.omega / phase_derivative(o, xi);
    const double rdot = o.a * o.e * std::cos(xi) * xidot;
    const double c2 = o.c() * o.c();
    const double phidot = c2 * o.angular_momentum() / (r * (o.energy() * r + o.m10G));
    const Vec3 rhat(std::cos(phi), std::sin(phi), 0.0);
    const Vec3 phat(-std::sin(phi), std::cos(phi), 0.0);
    WorldlineSample s;
    s.t = t;
    s.x = r * rhat;
    s.v = rdot * rhat + r * phidot * phat;
    return s;
}

/// Relativistic momentum per unit mass u = Gamma v.
inline Vec3 momentum_of_velocity(const Vec3& v, double c) { return lorentz_factor(v, c) * v; }

inline Vec3 velocity_of_momentum(const Vec3& u, double c) {
    return u / std::sqrt(1.0 + u.squaredNorm() / (c * c));
}

/// Force side of the equation of motion, d(Gamma v)/dt = -m10G x / r^3.
inline Vec3 rcn_force(const Vec3& x, double m10G) {
    const double r = x.norm();
    if (!(r > 0.0)) throw DomainError("rcn_force: zero radius");
    return -m10G * x / (r * r * r);
}

/// dv/dt implied by the force law: Gamma (a + Gamma^2 (v.a) v / c^2) = f, solved for a.
inline Vec3 rcn_acceleration(const WorldlineSample& s, double m10G, double c) {
    if (!(s.v.norm() < c)) throw DomainError("rcn_acceleration: superluminal velocity");
    const Vec3 f = rcn_force(s.x, m10G);
    const double g = lorentz_factor(s.v, c);
    return (f - s.v * (s.v.dot(f) / (c * c))) / g;
}

/// Dimensionless integration of the force law in the state (x/a, u/(a omega)) with time
/// omega t. Inputs and outputs are SI.
class ScaledRcnSystem {
public:
    ScaledRcnSystem(double length, double frequency, double m10G, double c)
        : L_(length), w_(frequency), c_(c),
          k_(m10G / (length * length * length * frequency * frequency)),
          beta_(length * frequency / c) {}

    explicit ScaledRcnSystem(const RcnOrbit& o) : ScaledRcnSystem(o.a, o.omega, o.m10G, o.c()) {}

    ode::Rhs rhs() const {
        const double k = k_;
        const double b2 = beta_ * beta_;
        return [k, b2](double, const ode::State& y, ode::State& dy) {
            const Eigen::Vector3d X = y.head<3>();
            const Eigen::Vector3d U = y.tail<3>();
            const double r = X.norm();
            const double g = std::sqrt(1.0 + b2 * U.squaredNorm());
            dy.resize(6);
            dy.head<3>() = U / g;
            dy.tail<3>() = -k * X / (r * r * r);
        };
    }

    ode::State encode(const WorldlineSample& s) const {
        ode::State y(6);
        y.head<3>() = s.x / L_;
        y.tail<3>() = momentum_of_velocity(s.v, c_) / (L_ * w_);
        return y;
    }

    WorldlineSample decode(double scaled_t, const ode::State& y) const {
        WorldlineSample s;
        s.t = scaled_t / w_;
        s.x = y.head<3>() * L_;
        s.v = velocity_of_momentum(Vec3(y.tail<3>() * (L_ * w_)), c_);
        return s;
    }

    double scaled_time(double t) const { return t * w_; }

    /// Rising zero of x.v: the radius passes through a minimum.
    static ode::EventSpec perihelion_event(bool terminal = false) {
        ode::EventSpec ev;
        ev.function = [](double, const ode::State& y) { return y.head<3>().dot(y.tail<3>()); };
        ev.direction = ode::Direction::rising;
        ev.terminal = terminal;
        ev.name = "perihelion";
        return ev;
    }

private:
    double L_, w_, c_, k_, beta_;
};

struct IntegratedOrbit {
    std::vector<WorldlineSample> samples;   ///< accepted step end points
    std::vector<WorldlineSample> perihelia; ///< located perihelion passages
    ode::IntegrationResult raw;
};

/// Integrate the force law from `start` over [start.t, t1].
inline IntegratedOrbit integrate_orbit(const RcnOrbit& o, const WorldlineSample& start, double t1,
                                       const ode::StepControl& ctrl = {}) {
    ScaledRcnSystem sys(o);
    ode::OdeProblem p;
    p.rhs = sys.rhs();
    p.y0 = sys.encode(start);
    p.t0 = sys.scaled_time(start.t);
    p.t1 = sys.scaled_time(t1);
    IntegratedOrbit out;
    out.raw = ode::integrate(p, ctrl, {ScaledRcnSystem::perihelion_event()});
    const auto& tr = out.raw.trajectory;
    for (std::size_t i = 0; i < tr.size(); ++i) out.samples.push_back(sys.decode(tr.times()[i], tr.states()[i]));
    for (const auto& ev : out.raw.events) out.perihelia.push_back(sys.decode(ev.t, ev.y));
    return out;
}

enum class CenturyMode {
    whole_periods, ///< the largest whole number of periods inside 100 Earth years
    earth_years    ///< exactly 100 Earth years, fractional periods allowed
};

/// Number of the body's periods that make up a century.
inline double periods_per_century(const PlanetElements& p, const PlanetElements& earth, double c,
                                  CenturyMode mode = CenturyMode::whole_periods) {
    const double n = 100.0 * orbital_period(earth, c) / orbital_period(p, c);
    return mode == CenturyMode::whole_periods ? std::floor(n) : n;
}

/// Perihelion advance seen from the Sun, arcsec per century: (1/gamma - 1) * 360 deg * N.
inline double advance_arcsec(double precession_per_radian, double periods) {
    return precession_per_radian * 360.0 * arcsec_per_degree * periods;
}

inline double advance_per_century_sun(const PlanetElements& p, const PlanetElements& earth, double c,
                                      CenturyMode mode = CenturyMode::whole_periods) {
    const RcnOrbit o = orbit_from_elements(p, c);
    return advance_arcsec(o.precession_per_radian(), periods_per_century(p, earth, c, mode));
}

} // namespace perihelion::rcn

#endif // PERIHELION_RCN_ORBIT_HPP
