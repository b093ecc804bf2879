#ifndef PERIHELION_CAUSAL_TWO_BODY_HPP
#define PERIHELION_CAUSAL_TWO_BODY_HPP

#include "errors.hpp"
#include "integrator.hpp"
#include "retarded_field.hpp"
#include "types.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace perihelion::field {

struct CausalBody {
    double charge = 0.0;         ///< source strength; the mass for gravity
    double charge_to_mass = 1.0; ///< 1 for gravity with equal-sign masses
    WorldlineSample initial;

    double mass() const { return charge_to_mass != 0.0 ? charge / charge_to_mass : 0.0; }
};

struct TwoBodyConfig {
    double c = 1.0;
    double K = -1.0; ///< -G for gravity
    std::array<CausalBody, 2> bodies;
};

struct DriftReport {
    double max_relative_energy_drift = 0.0; ///< relative to the initial interaction energy
    std::size_t samples = 0;
    std::string prehistory = "straight-line inertial motion before t0 (assumed; not prescribed by the model)";
};

/// Two point bodies, each accelerated by the retarded field of the other:
/// d(Gamma_k v_k)/dt = (q_k/m_k)(F_{i0} + v^j F_{ij}/c) with F built from the other body's
/// history. The state is (x1, u1, x2, u2) with u = Gamma v.
class CausalTwoBody {
public:
    explicit CausalTwoBody(TwoBodyConfig cfg) : cfg_(std::move(cfg)) {
        const double t0 = cfg_.bodies[0].initial.t;
        if (cfg_.bodies[1].initial.t != t0) throw DomainError("CausalTwoBody: both bodies must start at the same t");
        for (const auto& b : cfg_.bodies) {
            if (!(b.initial.v.norm() < cfg_.c)) throw DomainError("CausalTwoBody: superluminal initial velocity");
        }
        t0_ = t0;
        hist_ = ode::DenseHistory([cfg = cfg_, t0](double t, ode::State& y, ode::State& dy) {
            y.resize(12);
            dy.setZero(12);
            for (int k = 0; k < 2; ++k) {
                const auto& s = cfg.bodies[k].initial;
                y.segment<3>(6 * k) = s.x + s.v * (t - t0);
                y.segment<3>(6 * k + 3) = lorentz_factor(s.v, cfg.c) * s.v;
                dy.segment<3>(6 * k) = s.v;
            }
        });
        ode::State y0(12);
        for (int k = 0; k < 2; ++k) {
            const auto& s = cfg_.bodies[k].initial;
            y0.segment<3>(6 * k) = s.x;
            y0.segment<3>(6 * k + 3) = lorentz_factor(s.v, cfg_.c) * s.v;
        }
        // At t0 every retarded lookup falls in the prehistory, which is exactly uniform motion.
        std::array<UniformWorldline, 2> pre{UniformWorldline(cfg_.bodies[0].initial.x, cfg_.bodies[0].initial.v, t0),
                                            UniformWorldline(cfg_.bodies[1].initial.x, cfg_.bodies[1].initial.v, t0)};
        ode::State dy0(12);
        evaluate(t0, y0, pre[0], pre[1], dy0);
        hist_.append(t0, y0, dy0);
    }

    /// Advance the coupled system to t1.
    ode::DelayResult advance(double t1, const ode::StepControl& ctrl = {}, const ode::DelayOptions& opt = {}) {
        ode::DelayRhs rhs = [this](double t, const ode::State& y, const ode::DenseHistory& h, ode::State& dy) {
            HistoryWorldline w0(h, 0, cfg_.c), w1(h, 6, cfg_.c);
            return evaluate(t, y, w0, w1, dy);
        };
        auto res = ode::integrate_delayed(rhs, hist_, t1, ctrl, opt);
        min_delay_ = std::min(min_delay_, res.min_delay);
        return res;
    }

    const ode::DenseHistory& history() const { return hist_; }
    const TwoBodyConfig& config() const { return cfg_; }
    double min_delay() const { return min_delay_; }

    WorldlineSample state(int k, double t) const {
        ode::State y, dy;
        hist_.evaluate(t, y, dy);
        return {t, y.segment<3>(6 * k), dy.segment<3>(6 * k)};
    }

    /// Samples of body k at the accepted steps.
    std::vector<WorldlineSample> trajectory(int k) const {
        std::vector<WorldlineSample> out;
        for (std::size_t i = 0; i < hist_.size(); ++i) {
            const auto& y = hist_.values()[i];
            const auto& dy = hist_.derivatives()[i];
            out.push_back({hist_.times()[i], y.segment<3>(6 * k), dy.segment<3>(6 * k)});
        }
        return out;
    }

    /// Sum of m c^2 (Gamma - 1) plus the instantaneous interaction K q1 q2 / r. No exact
    /// conservation law is known for the delay system; the drift is reported, not asserted.
    double energy_like(double t) const {
        const auto s0 = state(0, t), s1 = state(1, t);
        const double c2 = cfg_.c * cfg_.c;
        double e = 0.0;
        e += cfg_.bodies[0].mass() * c2 * lorentz_factor_minus_one(s0.v, cfg_.c);
        e += cfg_.bodies[1].mass() * c2 * lorentz_factor_minus_one(s1.v, cfg_.c);
        e += cfg_.K * cfg_.bodies[0].charge * cfg_.bodies[1].charge / (s0.x - s1.x).norm();
        return e;
    }

    DriftReport drift() const {
        DriftReport rep;
        const double e0 = energy_like(t0_);
        const double scale = std::abs(cfg_.K * cfg_.bodies[0].charge * cfg_.bodies[1].charge /
                                      (cfg_.bodies[0].initial.x - cfg_.bodies[1].initial.x).norm());
        for (double t : hist_.times()) {
            rep.max_relative_energy_drift = std::max(rep.max_relative_energy_drift, std::abs(energy_like(t) - e0) / scale);
            ++rep.samples;
        }
        return rep;
    }

private:
    double evaluate(double t, const ode::State& y, const Worldline& w0, const Worldline& w1, ode::State& dy) const {
        dy.resize(12);
        double min_delay = std::numeric_limits<double>::infinity();
        const Worldline* src[2] = {&w1, &w0};
        for (int k = 0; k < 2; ++k) {
            const Vec3 x = y.segment<3>(6 * k);
            const Vec3 u = y.segment<3>(6 * k + 3);
            const Vec3 v = u / std::sqrt(1.0 + u.squaredNorm() / (cfg_.c * cfg_.c));
            dy.segment<3>(6 * k) = v;
            const auto& other = cfg_.bodies[1 - k];
            const double qm = cfg_.bodies[k].charge_to_mass;
            if (other.charge == 0.0 || qm == 0.0) {
                dy.segment<3>(6 * k + 3).setZero();
                continue;
            }
            const Event obs{t, x};
            const Coupling coupling{cfg_.K, other.charge};
            RetardedSolution ret;
            const FieldStrength F = field_strength(obs, *src[k], coupling, cfg_.c, FieldMethod::analytic, 0.0, &ret);
            dy.segment<3>(6 * k + 3) = lorentz_force(F, v, cfg_.c, qm);
            min_delay = std::min(min_delay, ret.delay);
        }
        return min_delay;
    }

    TwoBodyConfig cfg_;
    ode::DenseHistory hist_;
    double t0_ = 0.0;
    double min_delay_ = std::numeric_limits<double>::infinity();
};

} // namespace perihelion::field

#endif // PERIHELION_CAUSAL_TWO_BODY_HPP
