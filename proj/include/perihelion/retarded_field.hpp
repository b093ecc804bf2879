#ifndef PERIHELION_RETARDED_FIELD_HPP
#define PERIHELION_RETARDED_FIELD_HPP

#include "errors.hpp"
#include "integrator.hpp"
#include "quadrature.hpp"
#include "roots.hpp"
#include "types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace perihelion::field {

/// Minkowski metric diag(+1, -1, -1, -1).
inline constexpr double eta(int mu) { return mu == 0 ? 1.0 : -1.0; }

/// Source world line t -> (x(t), v(t)) with its acceleration, valid on [t_min, t_max].
class Worldline {
public:
    virtual ~Worldline() = default;
    virtual WorldlineSample at(double t) const = 0;
    virtual Vec3 acceleration(double t) const = 0;
    virtual double t_min() const { return -std::numeric_limits<double>::infinity(); }
    virtual double t_max() const { return std::numeric_limits<double>::infinity(); }
};

class StaticWorldline final : public Worldline {
public:
    explicit StaticWorldline(Vec3 x) : x_(std::move(x)) {}
    WorldlineSample at(double t) const override { return {t, x_, Vec3::Zero()}; }
    Vec3 acceleration(double) const override { return Vec3::Zero(); }

private:
    Vec3 x_;
};

/// x(t) = x0 + v (t - t0).
class UniformWorldline final : public Worldline {
public:
    UniformWorldline(Vec3 x0, Vec3 v, double t0 = 0.0) : x0_(std::move(x0)), v_(std::move(v)), t0_(t0) {}
    WorldlineSample at(double t) const override { return {t, x0_ + v_ * (t - t0_), v_}; }
    Vec3 acceleration(double) const override { return Vec3::Zero(); }
    const Vec3& velocity() const { return v_; }

private:
    Vec3 x0_, v_;
    double t0_;
};

/// Circle of radius r about `center` in the plane z = center.z, angle omega t + phase.
class CircularWorldline final : public Worldline {
public:
    CircularWorldline(Vec3 center, double radius, double omega, double phase = 0.0)
        : c_(std::move(center)), r_(radius), w_(omega), p_(phase) {}
    WorldlineSample at(double t) const override {
        const double th = w_ * t + p_;
        return {t, c_ + r_ * Vec3(std::cos(th), std::sin(th), 0.0),
                r_ * w_ * Vec3(-std::sin(th), std::cos(th), 0.0)};
    }
    Vec3 acceleration(double t) const override {
        const double th = w_ * t + p_;
        return -r_ * w_ * w_ * Vec3(std::cos(th), std::sin(th), 0.0);
    }

private:
    Vec3 c_;
    double r_, w_, p_;
};

/// Tabulated positions with local Lagrange interpolation of configurable order (default 3,
/// i.e. cubic through the four nearest samples). Velocity and acceleration are the
/// derivatives of the same interpolant.
class SampledWorldline final : public Worldline {
public:
    explicit SampledWorldline(std::vector<WorldlineSample> samples, int order = 3)
        : s_(std::move(samples)), order_(order) {
        if (order_ < 1) throw DomainError("SampledWorldline: order must be >= 1");
        if (s_.size() < static_cast<std::size_t>(order_ + 1)) {
            throw DomainError("SampledWorldline: need at least order+1 samples");
        }
        for (std::size_t i = 1; i < s_.size(); ++i) {
            if (!(s_[i].t > s_[i - 1].t)) throw DomainError("SampledWorldline: times must increase");
        }
    }
    double t_min() const override { return s_.front().t; }
    double t_max() const override { return s_.back().t; }
    WorldlineSample at(double t) const override {
        std::array<Vec3, 3> d = derivatives(t);
        return {t, d[0], d[1]};
    }
    Vec3 acceleration(double t) const override { return derivatives(t)[2]; }

private:
    std::array<Vec3, 3> derivatives(double t) const {
        if (t < t_min() || t > t_max()) {
            throw HistoryUnderrun("SampledWorldline: t = " + std::to_string(t) + " outside sampled range");
        }
        const std::size_t n = static_cast<std::size_t>(order_) + 1;
        auto it = std::upper_bound(s_.begin(), s_.end(), t,
                                   [](double v, const WorldlineSample& s) { return v < s.t; });
        std::size_t mid = static_cast<std::size_t>(it - s_.begin());
        std::size_t first = mid >= (n + 1) / 2 ? mid - (n + 1) / 2 : 0;
        first = std::min(first, s_.size() - n);

        // Lagrange basis value, first and second derivative at t.
        std::array<Vec3, 3> out{Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
        for (std::size_t j = 0; j < n; ++j) {
            const double tj = s_[first + j].t;
            double l = 1.0, dl = 0.0, ddl = 0.0;
            for (std::size_t m = 0; m < n; ++m) {
                if (m == j) continue;
                const double den = tj - s_[first + m].t;
                const double f = (t - s_[first + m].t) / den;
                const double df = 1.0 / den;
                ddl = ddl * f + 2.0 * dl * df;
                dl = dl * f + l * df;
                l *= f;
            }
            out[0] += l * s_[first + j].x;
            out[1] += dl * s_[first + j].x;
            out[2] += ddl * s_[first + j].x;
        }
        return out;
    }

    std::vector<WorldlineSample> s_;
    int order_;
};

/// View of one body inside an integrator history whose state holds (x, u = Gamma v)
/// starting at `offset`.
class HistoryWorldline final : public Worldline {
public:
    HistoryWorldline(const ode::DenseHistory& hist, Eigen::Index offset, double c)
        : h_(&hist), off_(offset), c_(c) {}
    double t_min() const override {
        return h_->has_prehistory() ? -std::numeric_limits<double>::infinity() : h_->t_begin();
    }
    double t_max() const override { return h_->t_end(); }
    WorldlineSample at(double t) const override {
        ode::State y, dy;
        h_->evaluate(t, y, dy);
        return {t, y.segment<3>(off_), dy.segment<3>(off_)};
    }
    Vec3 acceleration(double t) const override {
        ode::State y, dy;
        h_->evaluate(t, y, dy);
        const Vec3 v = dy.segment<3>(off_);
        const Vec3 du = dy.segment<3>(off_ + 3);
        const double g = lorentz_factor(v, c_);
        return (du - v * (v.dot(du) / (c_ * c_))) / g;
    }

private:
    const ode::DenseHistory* h_;
    Eigen::Index off_;
    double c_;
};

/// Observation event (t, x).
struct Event {
    double t = 0.0;
    Vec3 x = Vec3::Zero();
};

struct RetardedSolution {
    double t_ret = 0.0;
    double delay = 0.0;    ///< t - t_ret
    double residual = 0.0; ///< c (t - t_ret) - |x - x_s(t_ret)|, length units
    int iterations = 0;
};

/// Unique t' < t with c (t - t') = |x - x_s(t')|. Solved for the delay t - t' so precision is
/// relative to the light time rather than to t.
inline RetardedSolution retarded_time(const Event& obs, const Worldline& src, double c) {
    auto sample_checked = [&](double tp) {
        if (tp < src.t_min()) {
            throw HistoryUnderrun("retarded_time: source history starts at " + std::to_string(src.t_min()) +
                                  ", lookup at " + std::to_string(tp));
        }
        const WorldlineSample s = src.at(tp);
        if (!(s.v.norm() < c)) throw DomainError("retarded_time: superluminal source at t = " + std::to_string(tp));
        return s;
    };
    // g(d) = c d - |x - x_s(t - d)| is strictly increasing for subluminal sources.
    auto g = [&](double d) { return c * d - (obs.x - sample_checked(obs.t - d).x).norm(); };
    auto dg = [&](double d) {
        const WorldlineSample s = sample_checked(obs.t - d);
        const Vec3 R = obs.x - s.x;
        const double r = R.norm();
        return r > 0.0 ? c - R.dot(s.v) / r : c;
    };

    RetardedSolution out;
    // Smallest delay the source can answer for; a history-backed source ends at t_max.
    double lo = std::max(0.0, obs.t - src.t_max());
    const double g_lo = g(lo);
    if (g_lo == 0.0) {
        out.t_ret = obs.t - lo;
        out.delay = lo;
        return out;
    }
    if (g_lo > 0.0) {
        // the signal left the source after the last known point
        throw ode::DenseHistory::LookaheadError(obs.t - lo);
    }
    double hi = lo + std::max(-g_lo / c, std::numeric_limits<double>::min());
    int doublings = 0;
    while (g(hi) < 0.0) {
        lo = hi;
        hi = 2.0 * hi;
        if (++doublings > 200) throw ConvergenceError("retarded_time: no bracket found");
    }
    roots::NewtonOptions opt;
    opt.abs_tol = 0.0;
    opt.rel_tol = 1e-15;
    opt.max_newton_iterations = 40;
    const auto r = roots::newton_bisect(g, dg, lo, hi, hi, opt);
    out.delay = r.root;
    out.t_ret = obs.t - r.root;
    out.residual = g(r.root);
    out.iterations = r.newton_iterations + r.bisections;
    return out;
}

/// Gravity: K = -G and the charges are the (signed) masses.
struct Coupling {
    double K = 0.0;
    double source_charge = 0.0;

    static Coupling gravity(double G, double source_mass) { return {-G, source_mass}; }
    /// Prefactor s in A_mu = eta_mu s U^mu / (c R - R.v); equals m_j G for gravity.
    double strength() const { return -K * source_charge; }
};

/// Covariant four-potential A_mu, mu = 0..3.
using FourPotential = Vec4;

/// Antisymmetric F_{mu nu} stored as its six independent components.
class FieldStrength {
public:
    FieldStrength() { c_.fill(0.0); }

    /// F_{mu nu} for mu < nu; the other half follows by antisymmetry.
    static FieldStrength from_upper(const Mat4& m) {
        FieldStrength f;
        for (int mu = 0; mu < 4; ++mu)
            for (int nu = mu + 1; nu < 4; ++nu) f.c_[index(mu, nu)] = m(mu, nu);
        return f;
    }

    double operator()(int mu, int nu) const {
        if (mu == nu) return 0.0;
        return mu < nu ? c_[index(mu, nu)] : -c_[index(nu, mu)];
    }

    Mat4 matrix() const {
        Mat4 m;
        for (int mu = 0; mu < 4; ++mu)
            for (int nu = 0; nu < 4; ++nu) m(mu, nu) = (*this)(mu, nu);
        return m;
    }

    /// Electric-like part F_{i0}, i = 1..3.
    Vec3 electric() const { return Vec3((*this)(1, 0), (*this)(2, 0), (*this)(3, 0)); }
    double norm() const { return matrix().norm(); }

private:
    static int index(int mu, int nu) {
        static constexpr int table[4][4] = {{-1, 0, 1, 2}, {-1, -1, 3, 4}, {-1, -1, -1, 5}, {-1, -1, -1, -1}};
        return table[mu][nu];
    }
    std::array<double, 6> c_;
};

/// Dimensionless four-velocity Gamma (1, v/c).
inline Vec4 four_velocity(const Vec3& v, double c) {
    const double g = lorentz_factor(v, c);
    return Vec4(g, g * v.x() / c, g * v.y() / c, g * v.z() / c);
}

/// eta_{mu nu} u^mu u^nu; equals 1 for a normalized four-velocity.
inline double minkowski_square(const Vec4& u) {
    return u[0] * u[0] - u[1] * u[1] - u[2] * u[2] - u[3] * u[3];
}

/// F_{mu nu} u^mu u^nu, evaluated as the full double sum.
inline double contraction_identity(const FieldStrength& F, const Vec4& u) {
    double s = 0.0;
    for (int mu = 0; mu < 4; ++mu)
        for (int nu = 0; nu < 4; ++nu) s += F(mu, nu) * u[mu] * u[nu];
    return s;
}

namespace detail {

struct RetardedGeometry {
    RetardedSolution ret;
    WorldlineSample src;
    Vec3 R;   ///< x - x_s(t')
    double r; ///< |R|
    double D; ///< c r - R.v
};

inline RetardedGeometry geometry(const Event& obs, const Worldline& src, double c) {
    RetardedGeometry g;
    g.ret = retarded_time(obs, src, c);
    g.src = src.at(g.ret.t_ret);
    g.R = obs.x - g.src.x;
    g.r = g.R.norm();
    if (!(g.r > 0.0)) throw DomainError("lw_potential: observer on the source world line");
    g.D = c * g.r - g.R.dot(g.src.v);
    if (!(g.D > 0.0)) throw DomainError("lw_potential: nonpositive denominator (superluminal source?)");
    return g;
}

} // namespace detail

/// A_mu = eta_mu * s * U^mu / (c R - R.v) at the retarded time, with U = (c, v).
inline FourPotential lw_potential(const Event& obs, const Worldline& src, const Coupling& k, double c) {
    const auto g = detail::geometry(obs, src, c);
    const double s = k.strength();
    return FourPotential(s * c / g.D, -s * g.src.v.x() / g.D, -s * g.src.v.y() / g.D, -s * g.src.v.z() / g.D);
}

enum class FieldMethod { analytic, finite_difference };

/// Central-difference derivative of A along coordinate mu (x^0 = c t), by default
/// Richardson-extrapolated from steps h and h/2.
inline Vec4 potential_gradient_fd(const Event& obs, const Worldline& src, const Coupling& k, double c, int mu,
                                  double h, bool richardson = true) {
    auto shifted = [&](double step) {
        Event e = obs;
        if (mu == 0) e.t += step / c;
        else e.x[mu - 1] += step;
        return lw_potential(e, src, k, c);
    };
    auto central = [&](double step) { return Vec4((shifted(step) - shifted(-step)) / (2.0 * step)); };
    const Vec4 d1 = central(h);
    if (!richardson) return d1;
    const Vec4 d2 = central(0.5 * h);
    return (4.0 * d2 - d1) / 3.0;
}

/// F_{mu nu} = d_mu A_nu - d_nu A_mu. The analytic method differentiates the closed-form
/// potential through the retarded time (d t'/d x^0 = R/D, d t'/d x^i = -R_i/D) and needs
/// the source acceleration; the finite-difference method uses potential_gradient_fd with
/// step h (default 1e-3 of the observer distance). `retarded`, when given, receives the
/// retarded-time solution of the analytic path.
inline FieldStrength field_strength(const Event& obs, const Worldline& src, const Coupling& k, double c,
                                    FieldMethod method = FieldMethod::analytic, double h = 0.0,
                                    RetardedSolution* retarded = nullptr) {
    Mat4 dA; // dA(mu, nu) = d_mu A_nu
    if (method == FieldMethod::finite_difference) {
        if (!(h > 0.0)) h = 1e-3 * (obs.x - src.at(retarded_time(obs, src, c).t_ret).x).norm();
        for (int mu = 0; mu < 4; ++mu) dA.row(mu) = potential_gradient_fd(obs, src, k, c, mu, h).transpose();
    } else {
        const auto g = detail::geometry(obs, src, c);
        if (retarded != nullptr) *retarded = g.ret;
        const Vec3 acc = src.acceleration(g.ret.t_ret);
        const Vec3& v = g.src.v;
        const double s = k.strength();
        const Vec4 U(c, v.x(), v.y(), v.z());
        const Vec4 Adot(0.0, acc.x(), acc.y(), acc.z());
        const double Ra = g.R.dot(acc), v2 = v.squaredNorm();
        for (int mu = 0; mu < 4; ++mu) {
            const double dt = (mu == 0) ? g.r / g.D : -g.R[mu - 1] / g.D;
            const double dR = (mu == 0) ? 1.0 - c * dt : -c * dt;
            const double vmu = (mu == 0) ? 0.0 : v[mu - 1];
            const double dRv = vmu - v2 * dt + Ra * dt;
            const double dD = c * dR - dRv;
            for (int nu = 0; nu < 4; ++nu) {
                dA(mu, nu) = eta(nu) * s * (Adot[nu] * dt / g.D - U[nu] * dD / (g.D * g.D));
            }
        }
    }
    return FieldStrength::from_upper(dA - dA.transpose());
}

/// Acceleration of momentum per unit mass of a test body with charge-to-mass ratio
/// `q_over_m` moving with velocity v through F: d(Gamma v^i)/dt = (q/m)(F_{i0} + v^j F_{ij}/c).
inline Vec3 lorentz_force(const FieldStrength& F, const Vec3& v, double c, double q_over_m) {
    Vec3 f;
    for (int i = 1; i <= 3; ++i) {
        double s = F(i, 0);
        for (int j = 1; j <= 3; ++j) s += v[j - 1] * F(i, j) / c;
        f[i - 1] = q_over_m * s;
    }
    return f;
}

// ---------------------------------------------------------------------------------------
// Invariant checks
// ---------------------------------------------------------------------------------------

struct ConvergenceReport {
    std::vector<double> steps;     ///< grid spacing per level
    std::vector<double> residuals; ///< max |residual| per level
    std::vector<double> orders;    ///< log2 ratio between successive levels
    double scale = 0.0;            ///< typical |dA| used to normalize, reported for context
};

/// Lorenz-gauge residual d^mu A_mu = d_0 A_0 - sum_i d_i A_i by plain central differences,
/// maximized over the probe events, for each spacing h, h/2, h/4, ...
inline ConvergenceReport gauge_residual(const Worldline& src, const Coupling& k, double c,
                                        const std::vector<Event>& probes, double h, int levels = 3) {
    ConvergenceReport rep;
    for (int level = 0; level < levels; ++level) {
        const double step = h / std::pow(2.0, level);
        double worst = 0.0;
        for (const auto& e : probes) {
            double div = 0.0;
            for (int mu = 0; mu < 4; ++mu) {
                Event p = e, m = e;
                if (mu == 0) {
                    p.t += step / c;
                    m.t -= step / c;
                } else {
                    p.x[mu - 1] += step;
                    m.x[mu - 1] -= step;
                }
                const double d = (lw_potential(p, src, k, c)[mu] - lw_potential(m, src, k, c)[mu]) / (2.0 * step);
                div += eta(mu) * d;
                if (level == 0) rep.scale = std::max(rep.scale, std::abs(d));
            }
            worst = std::max(worst, std::abs(div));
        }
        rep.steps.push_back(step);
        rep.residuals.push_back(worst);
        if (level > 0) rep.orders.push_back(std::log2(rep.residuals[level - 1] / worst));
    }
    return rep;
}

struct ContinuityReport {
    double residual = 0.0; ///< integral of j^mu d_mu phi
    double scale = 0.0;    ///< integral of |d phi / dt| along the world line
};

/// Weak form of current continuity for a point source: with a smooth test function
/// phi(t, x) decaying in t, the integral of (d_t phi + v . grad phi) along the world line
/// must vanish. phi is a Gaussian centred at (t_c, x_c) with widths (sigma_t, sigma_x).
inline ContinuityReport continuity_residual(const Worldline& src, double t_c, const Vec3& x_c, double sigma_t,
                                            double sigma_x, double abs_tol = 1e-13) {
    auto integrand = [&](double t, bool absolute) {
        const WorldlineSample s = src.at(t);
        const double dt = (t - t_c) / sigma_t;
        const Vec3 dx = (s.x - x_c) / sigma_x;
        const double phi = std::exp(-0.5 * (dt * dt + dx.squaredNorm()));
        const double phi_t = -phi * dt / sigma_t;
        const Vec3 grad = -phi * dx / sigma_x;
        const double v = phi_t + s.v.dot(grad);
        return absolute ? std::abs(v) : v;
    };
    const double lo = t_c - 12.0 * sigma_t, hi = t_c + 12.0 * sigma_t;
    ContinuityReport rep;
    rep.residual = quadrature::integrate([&](double t) { return integrand(t, false); }, lo, hi, abs_tol).value;
    rep.scale = quadrature::integrate([&](double t) { return integrand(t, true); }, lo, hi, 1e-6).value;
    return rep;
}

struct DeltaIdentityReport {
    double smeared = 0.0;  ///< integral with the delta replaced by a Gaussian of width eps
    double closed = 0.0;   ///< u(t') / (2 D) at the retarded time
};

/// Change of variables behind the closed-form potential: for u(t) along the source,
/// integral over t < t_obs of delta(c^2 (t_obs - t)^2 - |x - x_s(t)|^2) u(t) dt = u(t') / (2 D)
/// with D = c R - R.v, in units where the delta's argument is length^2. The delta is
/// replaced by a normalized Gaussian of width eps (length^2); the smeared value tends to the
/// closed form as eps^2.
template <class U>
DeltaIdentityReport retarded_delta_identity(const Event& obs, const Worldline& src, double c, U&& u,
                                            double eps) {
    const auto g = detail::geometry(obs, src, c);
    DeltaIdentityReport rep;
    rep.closed = u(g.ret.t_ret) / (2.0 * g.D);
    auto f = [&](double t) {
        const double d = c * (obs.t - t);
        const double arg = d * d - (obs.x - src.at(t).x).squaredNorm();
        const double z = arg / eps;
        return std::exp(-0.5 * z * z) / (eps * std::sqrt(two_pi)) * u(t);
    };
    // d arg/dt = -2D at t', so the Gaussian is supported within ~12 eps / (2D) around t'
    const double width = 12.0 * eps / (2.0 * g.D);
    const double lo = g.ret.t_ret - width;
    const double hi = std::min(obs.t, g.ret.t_ret + width);
    rep.smeared = quadrature::integrate(f, lo, hi, 1e-14 * std::abs(rep.closed) + 1e-300).value;
    return rep;
}

} // namespace perihelion::field

#endif // PERIHELION_RETARDED_FIELD_HPP
