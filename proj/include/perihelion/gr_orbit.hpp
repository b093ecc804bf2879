#ifndef PERIHELION_GR_ORBIT_HPP
#define PERIHELION_GR_ORBIT_HPP

#include "ephemeris.hpp"
#include "errors.hpp"
#include "integrator.hpp"
#include "quadrature.hpp"
#include "rcn_orbit.hpp"
#include "roots.hpp"
#include "types.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace perihelion::gr {

/// m10 G from the classical third law omega^2 a^3, the value used throughout this track.
inline double classical_m10G(const PlanetElements& p, double c) {
    const double w = angular_frequency(p, c);
    return w * w * p.a * p.a * p.a;
}

// ---------------------------------------------------------------------------------------------
// Precession from the Schwarzschild orbit equation

struct GrPrecession {
    double gamma = 1.0;
    double one_minus_gamma = 0.0;
    double per_radian = 0.0; ///< 1/gamma - 1
    double arcsec_per_period = 0.0;
    double arcsec_per_century = 0.0;
    double periods = 0.0;
};

/// gamma = sqrt(1 - 6 m10G / (a (1 - e^2) c^2)) and the advance it implies.
inline GrPrecession gr_precession(const PlanetElements& p, const PlanetElements& earth, double c,
                                  rcn::CenturyMode mode = rcn::CenturyMode::whole_periods) {
    const double m10G = classical_m10G(p, c);
    const double k6 = 6.0 * m10G / (p.a * (1.0 - p.e * p.e) * c * c);
    if (!(k6 < 1.0)) throw DomainError("gr_precession: 6 m10G / (a (1 - e^2) c^2) >= 1 for " + p.name);
    GrPrecession out;
    out.gamma = std::sqrt(1.0 - k6);
    out.one_minus_gamma = k6 / (1.0 + out.gamma);
    out.per_radian = out.one_minus_gamma / out.gamma;
    out.arcsec_per_period = rcn::advance_arcsec(out.per_radian, 1.0);
    out.periods = rcn::periods_per_century(p, earth, c, mode);
    out.arcsec_per_century = rcn::advance_arcsec(out.per_radian, out.periods);
    return out;
}

enum class MetricVariant { schwarzschild, mtw };

/// Diagonal metric coefficients at radius r. For the Schwarzschild form g_radial multiplies dr^2
/// and the angular part is -r^2 dOmega^2; for the isotropic MTW form both spatial entries are
/// -(1 + 2 mu).
struct MetricCoefficients {
    double g00 = 1.0;
    double g_radial = -1.0;
    double g_tangential = -1.0;
};

inline MetricCoefficients metric(double r, double m10G, double c, MetricVariant v) {
    if (!(r > 0.0)) throw DomainError("metric: r must be positive");
    const double mu = m10G / (r * c * c);
    MetricCoefficients g;
    if (v == MetricVariant::schwarzschild) {
        g.g00 = 1.0 - 2.0 * mu;
        g.g_radial = -1.0 / g.g00;
        g.g_tangential = -1.0;
    } else {
        g.g00 = 1.0 - 2.0 * mu + 2.0 * mu * mu;
        g.g_radial = g.g_tangential = -(1.0 + 2.0 * mu);
    }
    return g;
}

struct OrbitEquationParams {
    double h = 0.0; ///< r^2 dphi/ds, m
    double m10G = 0.0;
    double c = 0.0;
    double a = 0.0;
    double e = 0.0;
    double gamma = 1.0;
    double phi0 = 0.0;
};

/// h fixed by m10G a (1 - e^2) / (h^2 c^2) + 3 m10G (2 + e^2) / (2 a (1 - e^2) c^2) = 1.
inline double closure_h(double m10G, double a, double e, double c) {
    const double g = m10G / (c * c);
    const double p = a * (1.0 - e * e);
    const double rest = 1.0 - 1.5 * g * (2.0 + e * e) / p;
    if (!(rest > 0.0)) throw DomainError("closure_h: no real h");
    return std::sqrt(g * p / rest);
}

/// Trial parameters with the first-order closure for h and gamma.
inline OrbitEquationParams closure_params(const PlanetElements& p, double c) {
    OrbitEquationParams q;
    q.m10G = classical_m10G(p, c);
    q.c = c;
    q.a = p.a;
    q.e = p.e;
    q.phi0 = p.perihelion_angle;
    q.h = closure_h(q.m10G, p.a, p.e, c);
    q.gamma = std::sqrt(1.0 - 6.0 * q.m10G / (p.a * (1.0 - p.e * p.e) * c * c));
    return q;
}

/// Coefficients of 1, cos(gamma psi) and cos(2 gamma psi) in a (1 - e^2) times the orbit
/// equation residual for the trial orbit a (1 - e^2) / r = 1 + e cos(gamma psi).
struct EddingtonTerms {
    double constant = 0.0;
    double cos1 = 0.0;
    double cos2 = 0.0;
};

inline EddingtonTerms eddington_terms(const OrbitEquationParams& q, bool include_cubic = true) {
    const double g = q.m10G / (q.c * q.c);
    const double p = q.a * (1.0 - q.e * q.e);
    const double k = include_cubic ? g / p : 0.0;
    EddingtonTerms t;
    t.constant = 1.0 - g * p / (q.h * q.h) - 1.5 * k * (2.0 + q.e * q.e);
    t.cos1 = (1.0 - 6.0 * k - q.gamma * q.gamma) * q.e;
    t.cos2 = -1.5 * k * q.e * q.e;
    return t;
}

/// a (1 - e^2) (u'' + u - m10G / (c^2 h^2) - 3 m10G u^2 / c^2) at phi, with u = 1/r from the
/// trial orbit and u'' taken analytically.
inline double eddington_residual(const OrbitEquationParams& q, double phi, bool include_cubic = true) {
    const double g = q.m10G / (q.c * q.c);
    const double p = q.a * (1.0 - q.e * q.e);
    const double cs = std::cos(q.gamma * (phi - q.phi0));
    const double u = (1.0 + q.e * cs) / p;
    const double upp = -q.e * q.gamma * q.gamma * cs / p;
    const double cubic = include_cubic ? 3.0 * g * u * u : 0.0;
    return p * (upp + u - g / (q.h * q.h) - cubic);
}

inline double eddington_grouped(const EddingtonTerms& t, double gamma, double psi) {
    return t.constant + t.cos1 * std::cos(gamma * psi) + t.cos2 * std::cos(2.0 * gamma * psi);
}

// ---------------------------------------------------------------------------------------------
// Kepler problem in proper time

/// Ellipse a (1 - e^2) / r = 1 + e cos(phi - phi0) traversed in proper time tau.
struct ProperKeplerOrbit {
    double a = 0.0;
    double e = 0.0;
    double phi0 = 0.0;
    double E = 0.0; ///< |dx/dtau|^2 / 2 - m10G / r, m^2/s^2
    double M = 0.0; ///< r^2 dphi/dtau, m^2/s
    double m10G = 0.0;
    double tau0 = 0.0; ///< proper time of the perihelion at phi0

    double semi_latus() const { return a * (1.0 - e * e); }
    double mean_motion() const { return std::sqrt(m10G / (a * a * a)); }
    double period() const { return two_pi / mean_motion(); }
};

inline ProperKeplerOrbit proper_kepler_solve(double E, double M, double m10G, double phi0 = 0.0,
                                             double tau0 = 0.0) {
    const double M2 = M * M;
    const double lhs = -2.0 * E * M2;
    const double rhs = m10G * m10G;
    if (!(lhs > 0.0)) {
        throw InadmissibleConstants("0 < -2 E |M|^2", "-2 E |M|^2 = " + quadrature::detail::sci(lhs));
    }
    double e2 = 1.0 + 2.0 * E * M2 / rhs;
    if (e2 < 0.0) {
        if (e2 > -64.0 * std::numeric_limits<double>::epsilon()) {
            e2 = 0.0;
        } else {
            throw InadmissibleConstants("-2 E |M|^2 <= (m10 G)^2",
                                        "e^2 = " + quadrature::detail::sci(e2));
        }
    }
    ProperKeplerOrbit o;
    o.E = E;
    o.M = M;
    o.m10G = m10G;
    o.phi0 = phi0;
    o.tau0 = tau0;
    o.e = std::sqrt(e2);
    o.a = M2 / (m10G * (1.0 - e2));
    return o;
}

/// Orbit with the body's a and e and the classical third law.
inline ProperKeplerOrbit proper_kepler_from_elements(const PlanetElements& p, double c) {
    const double m10G = classical_m10G(p, c);
    ProperKeplerOrbit o = proper_kepler_solve(-m10G / (2.0 * p.a), std::sqrt(m10G * p.a * (1.0 - p.e * p.e)),
                                              m10G, p.perihelion_angle);
    o.a = p.a;
    o.e = p.e;
    return o;
}

inline double radius_at_angle(const ProperKeplerOrbit& o, double phi) {
    return o.semi_latus() / (1.0 + o.e * std::cos(phi - o.phi0));
}

/// (d(1/r)/dphi)^2 - (2E/M^2 + 2 m10G/(M^2 r) - 1/r^2), scaled by a^2 (1 - e^2)^2.
inline double orbit_equation_residual(const ProperKeplerOrbit& o, double phi) {
    const double p = o.semi_latus();
    const double du = o.e * std::sin(phi - o.phi0) / p;
    const double u = 1.0 / radius_at_angle(o, phi);
    const double M2 = o.M * o.M;
    return p * p * (du * du - (2.0 * o.E / M2 + 2.0 * o.m10G * u / M2 - u * u));
}

struct ProperState {
    double tau = 0.0;
    double phi = 0.0;
    Vec3 x = Vec3::Zero();
    Vec3 w = Vec3::Zero(); ///< dx/dtau
};

inline ProperState state_at_angle(const ProperKeplerOrbit& o, double phi) {
    const double nu = phi - o.phi0;
    const double r = radius_at_angle(o, phi);
    const double s = std::sqrt(o.m10G / o.semi_latus());
    const Vec3 rhat(std::cos(phi), std::sin(phi), 0.0);
    const Vec3 phat(-std::sin(phi), std::cos(phi), 0.0);
    ProperState st;
    st.phi = phi;
    st.x = r * rhat;
    st.w = s * o.e * std::sin(nu) * rhat + s * (1.0 + o.e * std::cos(nu)) * phat;
    return st;
}

/// Eccentric anomaly for proper time tau, unwound across revolutions.
inline double eccentric_anomaly_of_tau(const ProperKeplerOrbit& o, double tau) {
    const double mean = o.mean_motion() * (tau - o.tau0);
    auto f = [&](double E) { return E - o.e * std::sin(E) - mean; };
    auto df = [&](double E) { return 1.0 - o.e * std::cos(E); };
    if (o.e == 0.0) return mean;
    roots::NewtonOptions opt;
    opt.abs_tol = 1e-15 * std::max(1.0, std::abs(mean));
    return roots::newton_bisect(f, df, mean - o.e - 1e-12, mean + o.e + 1e-12, mean, opt).root;
}

inline ProperState state_at_tau(const ProperKeplerOrbit& o, double tau) {
    const double Ea = eccentric_anomaly_of_tau(o, tau);
    const double nu = 2.0 * std::atan2(std::sqrt(1.0 + o.e) * std::sin(0.5 * Ea),
                                       std::sqrt(1.0 - o.e) * std::cos(0.5 * Ea));
    // atan2 returns nu in (-pi, pi]; restore the revolutions carried by Ea
    const double turns = std::round((Ea - nu) / two_pi);
    ProperState st = state_at_angle(o, o.phi0 + nu + two_pi * turns);
    st.tau = tau;
    return st;
}

/// tau(phi) by adaptive quadrature of dtau/dphi = a^2 (1 - e^2)^2 / (|M| (1 + e cos)^2).
inline quadrature::Result tau_of_phi(const ProperKeplerOrbit& o, double phi, double rel_tol = 1e-12) {
    if (phi == o.phi0) return {o.tau0, 0.0, 0};
    const double p = o.semi_latus();
    auto f = [&](double psi) {
        const double den = 1.0 + o.e * std::cos(psi - o.phi0);
        return p * p / (o.M * den * den);
    };
    const double span = std::abs(phi - o.phi0);
    const double scale = span * p * p / (o.M * (1.0 + o.e) * (1.0 + o.e));
    const int panels = std::max(1, static_cast<int>(std::ceil(span / pi)));
    quadrature::Result r = quadrature::integrate_panels(f, o.phi0, phi, rel_tol * scale, panels);
    r.value += o.tau0;
    return r;
}

/// dt/dtau on the MTW metric for a body at radius r moving with |dx/dtau|^2 = w2.
inline double dt_dtau(double r, double w2, double m10G, double c) {
    const auto g = metric(r, m10G, c, MetricVariant::mtw);
    return std::sqrt(1.0 - g.g_tangential * w2 / (c * c)) / std::sqrt(g.g00);
}

/// Coordinate time at proper time tau, t(tau0) = t0. The quadrature runs over the eccentric
/// anomaly, where the integrand is smooth and periodic.
inline quadrature::Result t_of_tau(const ProperKeplerOrbit& o, double c, double tau, double t0 = 0.0,
                                   double rel_tol = 1e-12) {
    if (tau == o.tau0) return {t0, 0.0, 0};
    const double n = o.mean_motion();
    auto f = [&](double Ea) {
        const double r = o.a * (1.0 - o.e * std::cos(Ea));
        const double w2 = 2.0 * o.E + 2.0 * o.m10G / r;
        return dt_dtau(r, w2, o.m10G, c) * r / (o.a * n);
    };
    const double E1 = eccentric_anomaly_of_tau(o, tau);
    const double span = std::abs(tau - o.tau0);
    const int panels = std::max(1, static_cast<int>(std::ceil(std::abs(E1) / pi)));
    quadrature::Result r = quadrature::integrate_panels(f, 0.0, E1, rel_tol * span, panels);
    r.value += t0;
    return r;
}

// ---------------------------------------------------------------------------------------------
// Geodesics of the MTW metric

/// Spatial geodesic equations in coordinate-time variables, written as
/// B (A - B |v|^2/c^2) d^2x/dtau^2 = -(m10G/r^2) (x/r (1 - 2 mu + |v|^2/c^2) - 2 v (dr/dt) / c^2)
/// with mu = m10G/(r c^2), A = g00 and B = 1 + 2 mu.
struct GeodesicTerms {
    Vec3 tau_acceleration = Vec3::Zero(); ///< d^2x/dtau^2, full right side
    Vec3 newtonian = Vec3::Zero();        ///< -m10G x / r^3
    double two_mu = 0.0;                  ///< 2 m10G / (r c^2)
    double two_mu_sq = 0.0;               ///< 2 (m10G / (r c^2))^2
    double beta_sq = 0.0;                 ///< |v|^2 / c^2
    double velocity_radial = 0.0;         ///< 2 |v| |dr/dt| / c^2
};

inline GeodesicTerms geodesic_terms(const WorldlineSample& s, double m10G, double c) {
    const double r = s.x.norm();
    if (!(r > 0.0)) throw DomainError("geodesic_terms: zero radius");
    const double c2 = c * c;
    const double mu = m10G / (r * c2);
    const double b2 = s.v.squaredNorm() / c2;
    if (!(b2 < 1.0)) throw DomainError("geodesic_terms: superluminal velocity");
    const double rdot = s.x.dot(s.v) / r;
    const double A = 1.0 - 2.0 * mu + 2.0 * mu * mu;
    const double B = 1.0 + 2.0 * mu;
    GeodesicTerms t;
    t.newtonian = -m10G * s.x / (r * r * r);
    t.two_mu = 2.0 * mu;
    t.two_mu_sq = 2.0 * mu * mu;
    t.beta_sq = b2;
    t.velocity_radial = 2.0 * s.v.norm() * std::abs(rdot) / c2;
    const Vec3 rhs = -(m10G / (r * r)) * (s.x / r * (1.0 - 2.0 * mu + b2) - 2.0 * s.v * rdot / c2);
    t.tau_acceleration = rhs / (B * (A - B * b2));
    return t;
}

/// Full geodesic right side from the Christoffel symbols of diag(A, -B, -B, -B):
/// returns (du0/dtau, du/dtau) for u0 = c dt/dtau and u = dx/dtau.
inline std::pair<double, Vec3> geodesic_rhs(const Vec3& x, double u0, const Vec3& u, double m10G, double c) {
    const double r = x.norm();
    if (!(r > 0.0)) throw DomainError("geodesic_rhs: zero radius");
    const double mu = m10G / (r * c * c);
    const double A = 1.0 - 2.0 * mu + 2.0 * mu * mu;
    const double B = 1.0 + 2.0 * mu;
    const Vec3 gradA = (2.0 - 4.0 * mu) * mu * x / (r * r);
    const Vec3 gradB = -2.0 * mu * x / (r * r);
    const double du0 = -gradA.dot(u) * u0 / A;
    const Vec3 du = -gradA * (u0 * u0) / (2.0 * B) - (2.0 * gradB.dot(u) * u - gradB * u.squaredNorm()) / (2.0 * B);
    return {du0, du};
}

/// g_{mu nu} u^mu u^nu / c^2 - 1.
inline double norm_residual(const Vec3& x, double u0, const Vec3& u, double m10G, double c) {
    const auto g = metric(x.norm(), m10G, c, MetricVariant::mtw);
    return (g.g00 * u0 * u0 + g.g_tangential * u.squaredNorm()) / (c * c) - 1.0;
}

/// The time component of the geodesic equations is implied by the spatial ones whenever the
/// norm is preserved: for an arbitrary spatial acceleration `acc` and the du0 that keeps
/// d/dtau(g u u) = 0, returns sum_sigma u^sigma R_sigma with R_sigma the lowered residuals.
/// Vanishes to rounding for every input.
inline double degeneracy_residual(const Vec3& x, double u0, const Vec3& u, const Vec3& acc, double m10G, double c) {
    const double r = x.norm();
    const double mu = m10G / (r * c * c);
    const double A = 1.0 - 2.0 * mu + 2.0 * mu * mu;
    const double B = 1.0 + 2.0 * mu;
    const Vec3 gradA = (2.0 - 4.0 * mu) * mu * x / (r * r);
    const Vec3 gradB = -2.0 * mu * x / (r * r);
    // d/dtau (A u0^2 - B |u|^2) = 0 fixes the time acceleration
    const double dA = gradA.dot(u), dB = gradB.dot(u);
    const double acc0 = (dB * u.squaredNorm() + 2.0 * B * u.dot(acc) - dA * u0 * u0) / (2.0 * A * u0);
    const auto [g0, gs] = geodesic_rhs(x, u0, u, m10G, c);
    // lowered residuals g_{sigma sigma} (acc^sigma - geodesic^sigma)
    const double R0 = A * (acc0 - g0);
    const Vec3 Rs = -B * (acc - gs);
    const double scale = A * std::abs(u0 * g0) + B * (u.norm() * gs.norm() + u.norm() * acc.norm());
    return (u0 * R0 + u.dot(Rs)) / scale;
}

/// Proper-time trajectory of the geodesic system, SI units.
struct GeodesicTrajectory {
    std::vector<double> tau;
    std::vector<double> t;   ///< coordinate time
    std::vector<Vec3> x;
    std::vector<double> u0;  ///< c dt/dtau
    std::vector<Vec3> u;     ///< dx/dtau
    ode::IntegrationResult raw;
};

/// Integrate the MTW geodesic from a proper-Kepler state (perihelion by default) for a proper
/// time span. Internally the state is scaled by (a, 1/n).
inline GeodesicTrajectory integrate_geodesic(const ProperKeplerOrbit& o, double c, double tau_span,
                                             const ode::StepControl& ctrl = {},
                                             std::optional<ProperState> start = std::nullopt) {
    const double L = o.a, n = o.mean_motion();
    const double C = c / (L * n);
    const double k = o.m10G / (L * L * L * n * n);
    const ProperState s0 = start ? *start : state_at_angle(o, o.phi0);
    const auto g = metric(s0.x.norm(), o.m10G, c, MetricVariant::mtw);
    const double u0 = std::sqrt((c * c - g.g_tangential * s0.w.squaredNorm()) / g.g00);

    ode::OdeProblem p;
    p.y0.resize(8);
    p.y0 << 0.0, s0.x / L, u0 / (L * n), s0.w / (L * n);
    p.t0 = 0.0;
    p.t1 = tau_span * n;
    p.rhs = [k, C](double, const ode::State& y, ode::State& dy) {
        const Vec3 X = y.segment<3>(1);
        const Vec3 U = y.segment<3>(5);
        const auto [du0, du] = geodesic_rhs(X, y[4], U, k, C);
        dy.resize(8);
        dy[0] = y[4];
        dy.segment<3>(1) = U;
        dy[4] = du0;
        dy.segment<3>(5) = du;
    };
    GeodesicTrajectory out;
    out.raw = ode::integrate(p, ctrl);
    const auto& tr = out.raw.trajectory;
    for (std::size_t i = 0; i < tr.size(); ++i) {
        const auto& y = tr.states()[i];
        out.tau.push_back(s0.tau + tr.times()[i] / n);
        out.t.push_back(y[0] * L / c);
        out.x.push_back(y.segment<3>(1) * L);
        out.u0.push_back(y[4] * L * n);
        out.u.push_back(y.segment<3>(5) * L * n);
    }
    return out;
}

/// Newtonian Kepler problem in proper time, for the conservation checks of E and |M|.
struct KeplerTrajectory {
    std::vector<double> tau;
    std::vector<Vec3> x;
    std::vector<Vec3> w;
};

inline KeplerTrajectory integrate_proper_kepler(const ProperKeplerOrbit& o, double tau_span,
                                                const ode::StepControl& ctrl = {}) {
    const double L = o.a, n = o.mean_motion();
    const double k = o.m10G / (L * L * L * n * n);
    const ProperState s0 = state_at_angle(o, o.phi0);
    ode::OdeProblem p;
    p.y0.resize(6);
    p.y0 << s0.x / L, s0.w / (L * n);
    p.t1 = tau_span * n;
    p.rhs = [k](double, const ode::State& y, ode::State& dy) {
        const Vec3 X = y.head<3>();
        const double r = X.norm();
        dy.resize(6);
        dy.head<3>() = y.tail<3>();
        dy.tail<3>() = -k * X / (r * r * r);
    };
    const auto res = ode::integrate(p, ctrl);
    KeplerTrajectory out;
    for (std::size_t i = 0; i < res.trajectory.size(); ++i) {
        const auto& y = res.trajectory.states()[i];
        out.tau.push_back(o.tau0 + res.trajectory.times()[i] / n);
        out.x.push_back(y.head<3>() * L);
        out.w.push_back(y.tail<3>() * L * n);
    }
    return out;
}

inline double kepler_energy(const Vec3& x, const Vec3& w, double m10G) {
    return 0.5 * w.squaredNorm() - m10G / x.norm();
}
inline Vec3 kepler_angular_momentum(const Vec3& x, const Vec3& w) { return x.cross(w); }

// ---------------------------------------------------------------------------------------------
// Size of the corrections along the proper-Kepler orbit

/// Order-of-magnitude estimates of the four correction terms at true anomaly nu, assuming
/// m10G = omega^2 a^3 and |dphi/dt| ~ omega. The last one carries the factor 4 of the
/// estimate; the geodesic itself has 2.
inline std::array<double, 4> term_estimates(double k, double e, double nu) {
    const double den = 1.0 + e * std::cos(nu);
    const double s2 = e * e * std::sin(nu) * std::sin(nu) / (den * den);
    const double q = (1.0 - e * e);
    std::array<double, 4> out;
    out[0] = 2.0 * k * den / q;
    out[1] = 2.0 * k * k * den * den / (q * q);
    out[2] = k * q * q / (den * den) * (s2 + 1.0);
    out[3] = 4.0 * k * e * q * q * std::abs(std::sin(nu)) / (den * den * den) * std::sqrt(s2 + 1.0);
    return out;
}

struct TermStat {
    std::string name;
    double max_value = 0.0;    ///< largest value of the term along the orbit
    double max_estimate = 0.0; ///< largest value of its estimate along the orbit
    double max_pointwise_ratio = 0.0; ///< max over the orbit of term / estimate (where estimate > 0)
};

struct TermSurvey {
    std::array<TermStat, 4> terms;
    double velocity_parameter = 0.0; ///< omega^2 a^2 / c^2
    std::size_t samples = 0;
};

inline TermSurvey geodesic_term_survey(const ProperKeplerOrbit& o, double c, std::size_t samples = 2000) {
    TermSurvey out;
    out.terms = {TermStat{"2 m10G/(r c^2)"}, TermStat{"2 (m10G/(r c^2))^2"}, TermStat{"|v|^2/c^2"},
                 TermStat{"2 |v| |dr/dt| / c^2"}};
    out.velocity_parameter = o.m10G / (o.a * c * c);
    out.samples = samples;
    for (std::size_t i = 0; i < samples; ++i) {
        const double nu = two_pi * static_cast<double>(i) / static_cast<double>(samples);
        const ProperState st = state_at_angle(o, o.phi0 + nu);
        const double T = dt_dtau(st.x.norm(), st.w.squaredNorm(), o.m10G, c);
        const GeodesicTerms g = geodesic_terms({0.0, st.x, st.w / T}, o.m10G, c);
        const std::array<double, 4> v{g.two_mu, g.two_mu_sq, g.beta_sq, g.velocity_radial};
        const auto est = term_estimates(out.velocity_parameter, o.e, nu);
        for (int j = 0; j < 4; ++j) {
            auto& t = out.terms[j];
            t.max_value = std::max(t.max_value, v[j]);
            t.max_estimate = std::max(t.max_estimate, est[j]);
            if (est[j] > 0.0) t.max_pointwise_ratio = std::max(t.max_pointwise_ratio, v[j] / est[j]);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------------------------
// The causal-law orbit seen through the proper-time equation

struct ProperTimeResidual {
    double proper_vs_coordinate = 0.0; ///< max |(dt/dtau) d/dt((dt/dtau) v) - d(Gamma v)/dt| / |f|
    double coordinate_vs_force = 0.0;  ///< max |d(Gamma v)/dt - f| / |f|
    std::size_t samples = 0;
};

/// Along the closed-form causal-law orbit, compares the proper-time momentum derivative with
/// the relativistic momentum derivative and the force -m10G x / r^3.
inline ProperTimeResidual rcn_vs_geodesic_residual(const PlanetElements& p, double c, std::size_t samples = 400) {
    const rcn::RcnOrbit o = rcn::orbit_from_elements(p, c);
    const double c2 = c * c;
    ProperTimeResidual out;
    out.samples = samples;
    for (std::size_t i = 0; i < samples; ++i) {
        const double t = o.period() * static_cast<double>(i) / static_cast<double>(samples);
        const WorldlineSample s = rcn::state_at_time(o, t);
        const Vec3 acc = rcn::rcn_acceleration(s, o.m10G, c);
        const Vec3 f = rcn::rcn_force(s.x, o.m10G);
        const double r = s.x.norm();
        const double mu = o.m10G / (r * c2);
        const double A = 1.0 - 2.0 * mu + 2.0 * mu * mu;
        const double B = 1.0 + 2.0 * mu;
        const Vec3 gradA = (2.0 - 4.0 * mu) * mu * s.x / (r * r);
        const Vec3 gradB = -2.0 * mu * s.x / (r * r);
        const double b2 = s.v.squaredNorm() / c2;
        const double D = A - B * b2;
        const double T = 1.0 / std::sqrt(D);
        const double dD = gradA.dot(s.v) - gradB.dot(s.v) * b2 - 2.0 * B * s.v.dot(acc) / c2;
        const double dT = -0.5 * T * T * T * dD;
        const Vec3 proper = T * (dT * s.v + T * acc);
        const double g = lorentz_factor(s.v, c);
        const Vec3 coord = g * acc + g * g * g * s.v.dot(acc) / c2 * s.v;
        out.proper_vs_coordinate = std::max(out.proper_vs_coordinate, (proper - coord).norm() / f.norm());
        out.coordinate_vs_force = std::max(out.coordinate_vs_force, (coord - f).norm() / f.norm());
    }
    return out;
}

// ---------------------------------------------------------------------------------------------
// Two precessing cosines

/// 1 + e cos((1 - 3k) D) = 1 + e cos((1 - k/2) D) + e k D int_{1/2}^{3} sin((1 - s k) D) ds,
/// k = omega^2 a^2 / ((1 - e^2) c^2), D = phi - phi0.
struct ComparisonPoint {
    double delta = 0.0;
    double lhs = 0.0;       ///< GR-precessing cosine
    double rhs_first = 0.0; ///< causal-law-precessing cosine
    double remainder = 0.0; ///< integral term by quadrature
    double residual = 0.0;  ///< lhs - rhs_first - remainder
    double quadrature_error = 0.0;
};

struct PrecessionComparison {
    std::vector<ComparisonPoint> points;
    double k = 0.0;
    double e = 0.0;
    double max_residual = 0.0;
    double max_remainder = 0.0;
    double remainder_bound = 0.0; ///< 5/2 e k max|D|
};

inline ComparisonPoint compare_at(double e, double k, double delta, double abs_tol) {
    ComparisonPoint pt;
    pt.delta = delta;
    pt.lhs = 1.0 + e * std::cos((1.0 - 3.0 * k) * delta);
    pt.rhs_first = 1.0 + e * std::cos((1.0 - 0.5 * k) * delta);
    const double pre = e * k * delta;
    if (pre != 0.0) {
        auto f = [&](double s) { return std::sin((1.0 - s * k) * delta); };
        const int panels = std::max(1, static_cast<int>(std::ceil(2.5 * k * std::abs(delta) / pi)));
        const auto q = quadrature::integrate_panels(f, 0.5, 3.0, abs_tol / std::abs(pre), panels);
        pt.remainder = pre * q.value;
        pt.quadrature_error = std::abs(pre) * q.error_estimate;
    }
    pt.residual = pt.lhs - pt.rhs_first - pt.remainder;
    return pt;
}

inline PrecessionComparison precession_comparison(const PlanetElements& p, double c, double delta_max,
                                                  std::size_t points = 2001, double abs_tol = 1e-12) {
    PrecessionComparison out;
    out.e = p.e;
    out.k = velocity_parameter(p, c) / (1.0 - p.e * p.e);
    out.remainder_bound = 2.5 * p.e * out.k * std::abs(delta_max);
    for (std::size_t i = 0; i < points; ++i) {
        const double d = points > 1 ? delta_max * static_cast<double>(i) / static_cast<double>(points - 1) : 0.0;
        ComparisonPoint pt = compare_at(out.e, out.k, d, abs_tol);
        out.max_residual = std::max(out.max_residual, std::abs(pt.residual));
        out.max_remainder = std::max(out.max_remainder, std::abs(pt.remainder));
        out.points.push_back(pt);
    }
    return out;
}

} // namespace perihelion::gr

#endif // PERIHELION_GR_ORBIT_HPP
