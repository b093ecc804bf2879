#ifndef PERIHELION_INTEGRATOR_HPP
#define PERIHELION_INTEGRATOR_HPP

/*
 * Adaptive Dormand-Prince 5(4) integration with the pair's free 4th-order continuous
 * extension, event location on the interpolant, and a method-of-steps driver for systems
 * whose right side reads the solution history.
 */

#include "errors.hpp"
#include "roots.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace perihelion::ode {

using State = Eigen::VectorXd;
using Rhs = std::function<void(double t, const State& y, State& dydt)>;

struct OdeProblem {
    Rhs rhs;
    State y0;
    double t0 = 0.0;
    double t1 = 0.0;
};

struct StepControl {
    double rtol = 1e-10;
    double atol = 1e-12;
    double initial_step = 0.0; ///< 0 selects a step automatically
    double max_step = std::numeric_limits<double>::infinity();
    long max_steps = 2'000'000;
    bool fixed_step = false; ///< take steps of initial_step without error control
};

enum class Direction { rising, falling, any };

struct EventSpec {
    std::function<double(double t, const State& y)> function;
    Direction direction = Direction::any;
    bool terminal = false;
    std::string name;
};

struct EventRecord {
    std::size_t index = 0;
    double t = 0.0;
    State y;
};

namespace detail {

// Dormand & Prince (1980) tableau.
struct Dopri5 {
    static constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
    static constexpr double a21 = 1.0 / 5.0;
    static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
    static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
    static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                            a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
    static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                            a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
    static constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                            a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
    static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                            e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
    static constexpr double d1 = -12715105075.0 / 11282082432.0,
                            d3 = 87487479700.0 / 32700410799.0,
                            d4 = -10690763975.0 / 1880347072.0,
                            d5 = 701980252875.0 / 199316789632.0,
                            d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
};

inline void check_finite(const State& v, double t) {
    if (!v.allFinite()) {
        throw DomainError("non-finite derivative at t = " + std::to_string(t));
    }
}

} // namespace detail

/// One accepted step together with its continuous extension.
struct DenseSegment {
    double t0 = 0.0;
    double h = 0.0;
    State r1, r2, r3, r4, r5;

    State operator()(double t) const {
        const double th = (t - t0) / h;
        const double th1 = 1.0 - th;
        return r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
    }
};

class DenseTrajectory {
public:
    const std::vector<double>& times() const { return t_; }
    const std::vector<State>& states() const { return y_; }
    std::size_t size() const { return t_.size(); }
    double t_front() const { return t_.front(); }
    double t_back() const { return t_.back(); }

    /// Interpolated state; t must lie within the integrated span.
    State operator()(double t) const {
        if (segments_.empty()) return y_.front();
        const double lo = std::min(t_.front(), t_.back());
        const double hi = std::max(t_.front(), t_.back());
        if (t < lo - 1e-12 * std::abs(hi - lo) || t > hi + 1e-12 * std::abs(hi - lo)) {
            throw DomainError("dense output requested outside integrated span");
        }
        const bool forward = t_.back() >= t_.front();
        auto it = forward ? std::upper_bound(t_.begin(), t_.end(), t)
                          : std::upper_bound(t_.begin(), t_.end(), t, std::greater<>());
        std::size_t idx = (it == t_.begin()) ? 0 : static_cast<std::size_t>(it - t_.begin()) - 1;
        idx = std::min(idx, segments_.size() - 1);
        return segments_[idx](t);
    }

    void push_initial(double t, const State& y) {
        t_.push_back(t);
        y_.push_back(y);
    }
    void push_step(DenseSegment seg, double t, const State& y) {
        segments_.push_back(std::move(seg));
        t_.push_back(t);
        y_.push_back(y);
    }
    void truncate_last(double t, const State& y) {
        t_.back() = t;
        y_.back() = y;
    }

private:
    std::vector<double> t_;
    std::vector<State> y_;
    std::vector<DenseSegment> segments_;
};

struct IntegrationResult {
    DenseTrajectory trajectory;
    std::vector<EventRecord> events;
    long accepted_steps = 0;
    long rejected_steps = 0;
    long rhs_evaluations = 0;
    bool stopped_by_event = false;
};

namespace detail {

inline double error_norm(const State& err, const State& y0, const State& y1,
                         const StepControl& ctrl) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < err.size(); ++i) {
        const double sc = ctrl.atol + ctrl.rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        const double q = err[i] / sc;
        sum += q * q;
    }
    return std::sqrt(sum / static_cast<double>(err.size()));
}

// Starting step after Hairer, Norsett & Wanner, Solving ODEs I, Sec. II.4.
inline double initial_step(const Rhs& f, double t0, const State& y0, const State& f0,
                           double dir, const StepControl& ctrl, long& evals) {
    State sc = (ctrl.atol + ctrl.rtol * y0.array().abs()).matrix();
    const double d0 = std::sqrt((y0.array() / sc.array()).square().mean());
    const double d1 = std::sqrt((f0.array() / sc.array()).square().mean());
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, ctrl.max_step);
    State y1 = y0 + dir * h0 * f0;
    State f1(y0.size());
    f(t0 + dir * h0, y1, f1);
    ++evals;
    const double d2 = std::sqrt((((f1 - f0).array() / sc.array()).square()).mean()) / h0;
    const double dm = std::max(d1, d2);
    const double h1 = (dm <= 1e-15) ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
    return std::min({100.0 * h0, h1, ctrl.max_step});
}

/// Trial step; fills y1, k7 (FSAL), error estimate and the dense coefficients.
inline void dopri_step(const Rhs& f, double t, const State& y, const State& k1, double h,
                       State& y1, State& k7, State& err, DenseSegment* seg, long& evals) {
    using T = Dopri5;
    const Eigen::Index n = y.size();
    State k2(n), k3(n), k4(n), k5(n), k6(n), tmp(n);
    tmp = y + h * T::a21 * k1;
    f(t + T::c2 * h, tmp, k2);
    tmp = y + h * (T::a31 * k1 + T::a32 * k2);
    f(t + T::c3 * h, tmp, k3);
    tmp = y + h * (T::a41 * k1 + T::a42 * k2 + T::a43 * k3);
    f(t + T::c4 * h, tmp, k4);
    tmp = y + h * (T::a51 * k1 + T::a52 * k2 + T::a53 * k3 + T::a54 * k4);
    f(t + T::c5 * h, tmp, k5);
    tmp = y + h * (T::a61 * k1 + T::a62 * k2 + T::a63 * k3 + T::a64 * k4 + T::a65 * k5);
    f(t + h, tmp, k6);
    y1 = y + h * (T::a71 * k1 + T::a73 * k3 + T::a74 * k4 + T::a75 * k5 + T::a76 * k6);
    f(t + h, y1, k7);
    evals += 6;
    err = h * (T::e1 * k1 + T::e3 * k3 + T::e4 * k4 + T::e5 * k5 + T::e6 * k6 + T::e7 * k7);
    if (seg != nullptr) {
        seg->t0 = t;
        seg->h = h;
        seg->r1 = y;
        seg->r2 = y1 - y;
        seg->r3 = h * k1 - seg->r2;
        seg->r4 = seg->r2 - h * k7 - seg->r3;
        seg->r5 = h * (T::d1 * k1 + T::d3 * k3 + T::d4 * k4 + T::d5 * k5 + T::d6 * k6 +
                       T::d7 * k7);
    }
}

inline bool crosses(double g0, double g1, Direction d) {
    switch (d) {
    case Direction::rising: return g0 < 0.0 && g1 >= 0.0;
    case Direction::falling: return g0 > 0.0 && g1 <= 0.0;
    case Direction::any: return (g0 < 0.0 && g1 >= 0.0) || (g0 > 0.0 && g1 <= 0.0);
    }
    return false;
}

} // namespace detail

/// Integrate p from t0 to t1 (either direction) with adaptive step control and events.
inline IntegrationResult integrate(const OdeProblem& p, const StepControl& ctrl = {},
                                   const std::vector<EventSpec>& events = {}) {
    if (p.y0.size() == 0) throw DomainError("integrate: empty state");
    if (!(ctrl.rtol > 0.0 && ctrl.atol > 0.0)) throw DomainError("integrate: tolerances must be > 0");
    IntegrationResult out;
    const double span = p.t1 - p.t0;
    const double dir = span >= 0.0 ? 1.0 : -1.0;
    double t = p.t0;
    State y = p.y0;
    State k1(y.size());
    p.rhs(t, y, k1);
    ++out.rhs_evaluations;
    detail::check_finite(k1, t);
    out.trajectory.push_initial(t, y);
    if (span == 0.0) return out;

    double h = ctrl.fixed_step ? std::abs(ctrl.initial_step)
               : ctrl.initial_step > 0.0
                   ? ctrl.initial_step
                   : detail::initial_step(p.rhs, t, y, k1, dir, ctrl, out.rhs_evaluations);
    if (!(h > 0.0)) throw DomainError("integrate: fixed_step requires initial_step > 0");
    h = std::min(h, std::abs(span));

    std::vector<double> g_prev(events.size());
    for (std::size_t i = 0; i < events.size(); ++i) g_prev[i] = events[i].function(t, y);

    State y1(y.size()), k7(y.size()), err(y.size());
    DenseSegment seg;
    const double event_tol = 1e-12 * std::abs(span);
    while (dir * (p.t1 - t) > 0.0) {
        if (out.accepted_steps + out.rejected_steps >= ctrl.max_steps) {
            throw ConvergenceError("integrate: max steps exceeded at t = " + std::to_string(t));
        }
        bool last = false;
        if (h >= std::abs(p.t1 - t) * (1.0 - 1e-10)) {
            h = std::abs(p.t1 - t);
            last = true;
        }
        const double min_h = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t));
        if (h < min_h) throw StepUnderflow("integrate: step size underflow at t = " + std::to_string(t));

        detail::dopri_step(p.rhs, t, y, k1, dir * h, y1, k7, err, &seg, out.rhs_evaluations);
        detail::check_finite(k7, t + dir * h);
        double en = ctrl.fixed_step ? 0.0 : detail::error_norm(err, y, y1, ctrl);
        if (!std::isfinite(en)) en = 1e10;
        if (en > 1.0) {
            ++out.rejected_steps;
            h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
            continue;
        }
        const double t_new = last ? p.t1 : t + dir * h;
        ++out.accepted_steps;
        out.trajectory.push_step(seg, t_new, y1);

        // Event detection on the continuous extension of this step.
        double t_stop = std::numeric_limits<double>::quiet_NaN();
        for (std::size_t i = 0; i < events.size(); ++i) {
            const double g1 = events[i].function(t_new, y1);
            if (detail::crosses(g_prev[i], g1, events[i].direction)) {
                auto g = [&](double tt) { return events[i].function(tt, seg(tt)); };
                const double lo = std::min(t, t_new), hi = std::max(t, t_new);
                const double te = roots::bisect(g, lo, hi, event_tol);
                out.events.push_back({i, te, seg(te)});
                if (events[i].terminal && (std::isnan(t_stop) || dir * (te - t_stop) < 0.0)) {
                    t_stop = te;
                }
            }
            g_prev[i] = g1;
        }
        if (!std::isnan(t_stop)) {
            const State ys = seg(t_stop);
            out.trajectory.truncate_last(t_stop, ys);
            out.stopped_by_event = true;
            std::erase_if(out.events, [&](const EventRecord& e) { return dir * (e.t - t_stop) > 0.0; });
            return out;
        }

        t = t_new;
        y = y1;
        k1 = k7;
        if (!ctrl.fixed_step) {
            const double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
            h = std::min(h * fac, ctrl.max_step);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------------------
// Delay systems
// ---------------------------------------------------------------------------------------

/// Solution history (t, y, dy/dt) with cubic Hermite interpolation between samples and an
/// optional analytic pre-history for times before the first sample.
class DenseHistory {
public:
    using Prehistory = std::function<void(double t, State& y, State& dy)>;

    DenseHistory() = default;
    explicit DenseHistory(Prehistory pre) : pre_(std::move(pre)) {}

    void append(double t, const State& y, const State& dy) {
        if (!t_.empty() && !(t > t_.back())) throw DomainError("history samples must increase in t");
        t_.push_back(t);
        y_.push_back(y);
        dy_.push_back(dy);
    }
    bool empty() const { return t_.empty(); }
    std::size_t size() const { return t_.size(); }
    double t_begin() const { return t_.front(); }
    double t_end() const { return t_.back(); }
    const State& last_value() const { return y_.back(); }
    const State& last_derivative() const { return dy_.back(); }
    const std::vector<double>& times() const { return t_; }
    const std::vector<State>& values() const { return y_; }
    const std::vector<State>& derivatives() const { return dy_; }
    bool has_prehistory() const { return static_cast<bool>(pre_); }

    /// Interpolated value and derivative at t.
    void evaluate(double t, State& y, State& dy) const {
        if (t_.empty()) throw HistoryUnderrun("empty history");
        if (t < t_.front()) {
            if (!pre_) throw HistoryUnderrun("lookup at t = " + std::to_string(t) + " precedes history start");
            pre_(t, y, dy);
            return;
        }
        const double slack = 1e-12 * std::max(1.0, std::abs(t_.back()));
        if (t > t_.back() + slack) throw LookaheadError(t);
        if (t_.size() == 1 || t >= t_.back()) {
            y = y_.back();
            dy = dy_.back();
            return;
        }
        auto it = std::upper_bound(t_.begin(), t_.end(), t);
        const std::size_t i = static_cast<std::size_t>(it - t_.begin()) - 1;
        const double h = t_[i + 1] - t_[i];
        const double s = (t - t_[i]) / h;
        const double s2 = s * s, s3 = s2 * s;
        const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
        const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
        y = h00 * y_[i] + h10 * h * dy_[i] + h01 * y_[i + 1] + h11 * h * dy_[i + 1];
        const double d00 = (6 * s2 - 6 * s) / h, d10 = 3 * s2 - 4 * s + 1;
        const double d01 = (-6 * s2 + 6 * s) / h, d11 = 3 * s2 - 2 * s;
        dy = d00 * y_[i] + d10 * dy_[i] + d01 * y_[i + 1] + d11 * dy_[i + 1];
    }

    /// Raised when a lookup asks for a time the integrator has not reached yet.
    class LookaheadError : public Error {
    public:
        explicit LookaheadError(double t)
            : Error("history lookup ahead of computed solution at t = " + std::to_string(t)) {}
    };

private:
    Prehistory pre_;
    std::vector<double> t_;
    std::vector<State> y_;
    std::vector<State> dy_;
};

/// Right side of a delay system. Returns the smallest delay (t - t_lookup) it used, or
/// +infinity when no history lookup happened.
using DelayRhs = std::function<double(double t, const State& y, const DenseHistory& hist, State& dydt)>;

struct DelayOptions {
    double delay_safety = 0.9; ///< steps are capped at this fraction of the smallest delay seen
    std::vector<double> breakpoints; ///< steps land exactly on these times
};

struct DelayResult {
    long accepted_steps = 0;
    long rejected_steps = 0;
    double min_delay = std::numeric_limits<double>::infinity();
};

/// Method-of-steps integration: advances the history from its last sample to t1. Stage
/// lookups read the history's Hermite interpolant; the step is held below the smallest
/// delay encountered so no stage reads ahead of the accepted solution.
inline DelayResult integrate_delayed(const DelayRhs& rhs, DenseHistory& hist, double t1,
                                     const StepControl& ctrl = {}, const DelayOptions& opt = {}) {
    if (hist.empty()) throw HistoryUnderrun("integrate_delayed: history has no initial sample");
    DelayResult out;
    double t = hist.t_end();
    if (!(t1 > t)) return out;
    State y = hist.last_value();
    State k1 = hist.last_derivative();

    double min_delay = std::numeric_limits<double>::infinity();
    Rhs f = [&](double tt, const State& yy, State& dy) {
        dy.resize(yy.size());
        const double d = rhs(tt, yy, hist, dy);
        min_delay = std::min(min_delay, d);
    };
    {
        State probe(y.size());
        f(t, y, probe);
    }
    double h = ctrl.initial_step > 0.0 ? ctrl.initial_step : std::min(0.01 * (t1 - t), ctrl.max_step);
    State y1(y.size()), k7(y.size()), err(y.size());
    long evals = 0;
    while (t < t1) {
        if (out.accepted_steps + out.rejected_steps >= ctrl.max_steps) {
            throw ConvergenceError("integrate_delayed: max steps exceeded");
        }
        h = std::min({h, ctrl.max_step, opt.delay_safety * min_delay});
        double target = t1;
        for (double b : opt.breakpoints) {
            if (b > t * (1 + 1e-15) + 1e-300 && b < target) target = b;
        }
        bool land = false;
        if (h >= (target - t) * (1.0 - 1e-10)) {
            h = target - t;
            land = true;
        }
        const double min_h = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t));
        if (h < min_h) throw StepUnderflow("integrate_delayed: step underflow at t = " + std::to_string(t));
        try {
            detail::dopri_step(f, t, y, k1, h, y1, k7, err, nullptr, evals);
        } catch (const DenseHistory::LookaheadError&) {
            ++out.rejected_steps;
            h *= 0.5;
            continue;
        }
        detail::check_finite(k7, t + h);
        double en = ctrl.fixed_step ? 0.0 : detail::error_norm(err, y, y1, ctrl);
        if (!std::isfinite(en)) en = 1e10;
        if (en > 1.0) {
            ++out.rejected_steps;
            h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
            continue;
        }
        t = land ? target : t + h;
        ++out.accepted_steps;
        y = y1;
        k1 = k7;
        hist.append(t, y, k1);
        if (!ctrl.fixed_step) {
            const double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
            h *= fac;
        }
    }
    out.min_delay = min_delay;
    return out;
}

} // namespace perihelion::ode

#endif // PERIHELION_INTEGRATOR_HPP
