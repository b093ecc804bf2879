#include <perihelion/causal_two_body.hpp>
#include <perihelion/rcn_orbit.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace perihelion;
using namespace perihelion::field;

namespace {

// Natural units: c = 1, G M_sun = 1. A semi-major axis of 1e4 gives omega^2 a^2 / c^2 ~ 1e-4,
// large enough to make the relativistic terms visible and small enough to be planet-like.
struct SunAndTestBody {
    rcn::RcnOrbit orbit;
    TwoBodyConfig cfg;
};

SunAndTestBody sun_and_test_body() {
    PlanetElements p;
    p.name = "test";
    p.index = 1;
    p.a = 1e4;
    p.e = 0.2;
    p.gm_over_c2 = 1.0;
    SunAndTestBody out;
    out.orbit = rcn::orbit_from_elements(p, 1.0);
    out.cfg.c = 1.0;
    out.cfg.K = -1.0;
    out.cfg.bodies[0].charge = 0.0; // no back-reaction on the Sun
    out.cfg.bodies[0].charge_to_mass = 1.0;
    out.cfg.bodies[0].initial = rcn::state_at_time(out.orbit, 0.0);
    out.cfg.bodies[1].charge = out.orbit.m10G;
    out.cfg.bodies[1].initial = WorldlineSample{0.0, Vec3::Zero(), Vec3::Zero()};
    return out;
}

} // namespace

TEST(CausalTwoBody, StaticSunReproducesClosedFormOrbit) {
    auto s = sun_and_test_body();
    std::vector<double> errs;
    for (double rtol : {1e-7, 1e-9}) {
        CausalTwoBody sys(s.cfg);
        ode::StepControl ctrl;
        ctrl.rtol = rtol;
        ctrl.atol = rtol * 1e-3;
        const double T = s.orbit.period();
        sys.advance(T, ctrl);
        double worst = 0.0;
        for (const auto& w : sys.trajectory(0)) {
            worst = std::max(worst, (w.x - rcn::state_at_time(s.orbit, w.t).x).norm() / s.orbit.a);
        }
        errs.push_back(worst);
        EXPECT_GT(sys.min_delay(), 0.0);
        EXPECT_LT(sys.state(1, T).x.norm(), 1e-300);
    }
    // steps are capped by the light delay (~a/c), so both tolerances land well below 1e-9
    EXPECT_LT(errs[0], 1e-9);
    EXPECT_LT(errs[1], 1e-9);
}

TEST(CausalTwoBody, StaticSourceMatchesOrdinaryIntegration) {
    auto s = sun_and_test_body();
    CausalTwoBody sys(s.cfg);
    ode::StepControl ctrl;
    ctrl.rtol = 1e-12;
    ctrl.atol = 1e-12;
    const double T = 0.5 * s.orbit.period();
    sys.advance(T, ctrl);
    ode::OdeProblem p;
    p.rhs = [m10G = s.orbit.m10G](double, const ode::State& y, ode::State& dy) {
        const Vec3 x = y.head<3>(), u = y.tail<3>();
        dy.resize(6);
        dy.head<3>() = u / std::sqrt(1.0 + u.squaredNorm());
        dy.tail<3>() = rcn::rcn_force(x, m10G);
    };
    const auto& y0 = sys.history().values().front();
    p.y0 = y0.head<6>();
    p.t1 = T;
    ode::StepControl ctrl2;
    ctrl2.rtol = 1e-13;
    ctrl2.atol = 1e-13;
    const auto ref = ode::integrate(p, ctrl2);
    const Vec3 xd = sys.state(0, T).x;
    const Vec3 xo = ref.trajectory.states().back().head<3>();
    EXPECT_LT((xd - xo).norm() / s.orbit.a, 1e-9);
}

TEST(CausalTwoBody, BodiesAtRestStartWithNewtonianAcceleration) {
    TwoBodyConfig cfg;
    cfg.c = 1.0;
    cfg.K = -1.0;
    const double m = 1.0, d = 1e3;
    cfg.bodies[0] = {m, 1.0, {0.0, Vec3(-d / 2, 0, 0), Vec3::Zero()}};
    cfg.bodies[1] = {m, 1.0, {0.0, Vec3(d / 2, 0, 0), Vec3::Zero()}};
    CausalTwoBody sys(cfg);
    const auto& dy = sys.history().derivatives().front();
    EXPECT_NEAR(dy[3], m / (d * d), 1e-18);
    EXPECT_NEAR(dy[9], -m / (d * d), 1e-18);
    EXPECT_EQ(dy.segment<2>(4).norm(), 0.0);
}

TEST(CausalTwoBody, MutualOrbitDriftIsReported) {
    // equal masses on a wide mutual circle; drift is measured, with a loose sanity bound
    TwoBodyConfig cfg;
    cfg.c = 1.0;
    cfg.K = -1.0;
    const double m = 0.5, d = 2e3;
    const double v = std::sqrt(m / (2 * d)); // each body circles the centre of mass
    cfg.bodies[0] = {m, 1.0, {0.0, Vec3(-d / 2, 0, 0), Vec3(0, -v, 0)}};
    cfg.bodies[1] = {m, 1.0, {0.0, Vec3(d / 2, 0, 0), Vec3(0, v, 0)}};
    CausalTwoBody sys(cfg);
    const double period = pi * d / v;
    ode::StepControl ctrl;
    ctrl.rtol = 1e-10;
    ctrl.atol = 1e-10;
    sys.advance(0.25 * period, ctrl);
    const auto rep = sys.drift();
    EXPECT_GT(rep.samples, 10u);
    EXPECT_TRUE(std::isfinite(rep.max_relative_energy_drift));
    EXPECT_LT(rep.max_relative_energy_drift, 0.1);
    EXPECT_NE(rep.prehistory.find("straight-line"), std::string::npos);
    // momentum balance: the centre of mass stays near the origin
    const Vec3 com = 0.5 * (sys.state(0, 0.25 * period).x + sys.state(1, 0.25 * period).x);
    EXPECT_LT(com.norm() / d, 1e-3);
}
