#include <perihelion/integrator.hpp>
#include <perihelion/types.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace perihelion;
using ode::State;

namespace {

ode::OdeProblem oscillator(double t1) {
    ode::OdeProblem p;
    p.rhs = [](double, const State& y, State& dy) {
        dy.resize(2);
        dy[0] = y[1];
        dy[1] = -y[0];
    };
    p.y0 = State(2);
    p.y0 << 1.0, 0.0;
    p.t0 = 0.0;
    p.t1 = t1;
    return p;
}

ode::OdeProblem kepler_circle(double t1) {
    ode::OdeProblem p;
    p.rhs = [](double, const State& y, State& dy) {
        const double r = std::hypot(y[0], y[1]);
        const double r3 = r * r * r;
        dy.resize(4);
        dy << y[2], y[3], -y[0] / r3, -y[1] / r3;
    };
    p.y0 = State(4);
    p.y0 << 1.0, 0.0, 0.0, 1.0;
    p.t1 = t1;
    return p;
}

} // namespace

TEST(Integrator, HarmonicOscillatorTenPeriods) {
    const auto res = ode::integrate(oscillator(10 * two_pi));
    double worst = 0.0;
    const auto& tr = res.trajectory;
    for (std::size_t i = 0; i < tr.size(); ++i) {
        const double t = tr.times()[i];
        worst = std::max(worst, std::abs(tr.states()[i][0] - std::cos(t)));
    }
    EXPECT_LT(worst, 1e-8);
    // dense output between steps
    for (double t = 0.05; t < 10 * two_pi; t += 0.37) {
        EXPECT_NEAR(tr(t)[0], std::cos(t), 1e-8);
    }
}

TEST(Integrator, BackwardIntegration) {
    auto p = oscillator(-5.0);
    const auto res = ode::integrate(p);
    EXPECT_NEAR(res.trajectory.states().back()[0], std::cos(-5.0), 1e-8);
    EXPECT_NEAR(res.trajectory(-2.5)[1], -std::sin(-2.5), 1e-8);
}

TEST(Integrator, NewtonianCircularOrbitRadiusDrift) {
    const auto res = ode::integrate(kepler_circle(two_pi));
    for (const auto& y : res.trajectory.states()) {
        EXPECT_LT(std::abs(std::hypot(y[0], y[1]) - 1.0), 1e-9);
    }
}

TEST(Integrator, FixedStepConvergesAtFifthOrder) {
    std::vector<double> hs, errs;
    for (double h : {0.2, 0.1, 0.05, 0.025}) {
        ode::StepControl ctrl;
        ctrl.fixed_step = true;
        ctrl.initial_step = h;
        const auto res = ode::integrate(oscillator(4.0), ctrl);
        hs.push_back(std::log(h));
        errs.push_back(std::log(std::abs(res.trajectory.states().back()[0] - std::cos(4.0))));
    }
    // least-squares slope of log error against log h
    const double n = static_cast<double>(hs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < hs.size(); ++i) {
        sx += hs[i];
        sy += errs[i];
        sxx += hs[i] * hs[i];
        sxy += hs[i] * errs[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    EXPECT_NEAR(slope, 5.0, 0.5);
}

TEST(Integrator, EventsLocatedOnInterpolant) {
    ode::EventSpec down;
    down.function = [](double, const State& y) { return y[0]; };
    down.direction = ode::Direction::falling;
    ode::EventSpec up = down;
    up.direction = ode::Direction::rising;
    const auto res = ode::integrate(oscillator(3 * two_pi), {}, {down, up});
    ASSERT_EQ(res.events.size(), 6u);
    for (const auto& ev : res.events) {
        // zeros of cos at pi/2 + k pi; falling for even k
        const double k = std::round((ev.t - pi / 2) / pi);
        EXPECT_NEAR(ev.t, pi / 2 + k * pi, 1e-9);
        EXPECT_EQ(ev.index, static_cast<std::size_t>(k) % 2 == 0 ? 0u : 1u);
        EXPECT_LT(std::abs(ev.y[0]), 1e-10);
    }
}

TEST(Integrator, TerminalEventStopsIntegration) {
    ode::EventSpec ev;
    ev.function = [](double, const State& y) { return y[1]; };
    ev.direction = ode::Direction::rising;
    ev.terminal = true;
    const auto res = ode::integrate(oscillator(100.0), {}, {ev});
    EXPECT_TRUE(res.stopped_by_event);
    EXPECT_NEAR(res.trajectory.t_back(), pi, 1e-9);
}

TEST(Integrator, DeterministicOutput) {
    const auto a = ode::integrate(kepler_circle(20.0));
    const auto b = ode::integrate(kepler_circle(20.0));
    ASSERT_EQ(a.trajectory.size(), b.trajectory.size());
    for (std::size_t i = 0; i < a.trajectory.size(); ++i) {
        EXPECT_EQ(a.trajectory.times()[i], b.trajectory.times()[i]);
        EXPECT_TRUE((a.trajectory.states()[i].array() == b.trajectory.states()[i].array()).all());
    }
}

TEST(Integrator, NonFiniteDerivativeThrows) {
    ode::OdeProblem p;
    p.rhs = [](double t, const State&, State& dy) {
        dy.resize(1);
        dy[0] = 1.0 / (t - 0.5);
    };
    p.y0 = State::Zero(1);
    p.t1 = 1.0;
    ode::StepControl ctrl;
    ctrl.fixed_step = true;
    ctrl.initial_step = 0.25;
    EXPECT_THROW(ode::integrate(p, ctrl), DomainError);
}

TEST(Integrator, MaxStepsExceededThrows) {
    ode::StepControl ctrl;
    ctrl.max_steps = 5;
    EXPECT_THROW(ode::integrate(oscillator(100.0), ctrl), ConvergenceError);
}

// y'(t) = -y(t - 1), y = 1 for t <= 0. Piecewise polynomial solution from the method of steps.
TEST(DelayIntegrator, ConstantDelayLinearEquation) {
    auto exact = [](double t) {
        if (t <= 0) return 1.0;
        if (t <= 1) return 1.0 - t;
        if (t <= 2) return 1.0 - t + 0.5 * (t - 1) * (t - 1);
        return 1.0 - t + 0.5 * (t - 1) * (t - 1) - std::pow(t - 2, 3) / 6.0;
    };
    ode::DenseHistory hist([](double, State& y, State& dy) {
        y = State::Ones(1);
        dy = State::Zero(1);
    });
    State y0 = State::Ones(1), dy0(1);
    dy0[0] = -1.0;
    hist.append(0.0, y0, dy0);
    ode::DelayRhs rhs = [](double t, const State&, const ode::DenseHistory& h, State& dy) {
        State y(1), d(1);
        h.evaluate(t - 1.0, y, d);
        dy[0] = -y[0];
        return 1.0;
    };
    ode::DelayOptions opt;
    opt.breakpoints = {1.0, 2.0};
    ode::StepControl ctrl;
    ctrl.rtol = 1e-11;
    ctrl.atol = 1e-13;
    const auto res = ode::integrate_delayed(rhs, hist, 3.0, ctrl, opt);
    EXPECT_GT(res.accepted_steps, 0);
    EXPECT_DOUBLE_EQ(res.min_delay, 1.0);
    State y(1), d(1);
    for (double t : {0.5, 1.0, 1.7, 2.0, 2.4, 3.0}) {
        hist.evaluate(t, y, d);
        EXPECT_NEAR(y[0], exact(t), 1e-8) << "t = " << t;
    }
}

TEST(DelayIntegrator, VanishingDelayApproachesOrdinaryEquation) {
    // y'(t) = -y(t - tau) tends to y' = -y as tau -> 0
    double prev_err = 1.0;
    for (double tau : {1e-2, 1e-3, 1e-4}) {
        ode::DenseHistory hist([](double, State& y, State& dy) {
            y = State::Ones(1);
            dy = State::Zero(1);
        });
        State y0 = State::Ones(1), dy0 = -State::Ones(1);
        hist.append(0.0, y0, dy0);
        ode::DelayRhs rhs = [tau](double t, const State&, const ode::DenseHistory& h, State& dy) {
            State y(1), d(1);
            h.evaluate(t - tau, y, d);
            dy[0] = -y[0];
            return tau;
        };
        ode::integrate_delayed(rhs, hist, 1.0);
        const double err = std::abs(hist.last_value()[0] - std::exp(-1.0));
        EXPECT_LT(err, prev_err);
        EXPECT_LT(err, 2.0 * tau);
        prev_err = err;
    }
}

TEST(DelayIntegrator, UnderrunWithoutPrehistory) {
    ode::DenseHistory hist;
    hist.append(0.0, State::Ones(1), State::Zero(1));
    State y(1), d(1);
    EXPECT_THROW(hist.evaluate(-1.0, y, d), HistoryUnderrun);
}
