#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "monodyn/dynamics.hpp"
#include "monodyn/oracle.hpp"
#include "monodyn/stationary.hpp"
#include "support/test_utils.hpp"

using namespace monodyn;

namespace {

Params unit_linear(double mu = 1.0) { return Params(1.0, 1.0, 1.0, 1.0, LinearZ{mu}); }

IntegratorConfig rk45_to(double t_end) {
    IntegratorConfig cfg;
    cfg.method = IntegratorConfig::Method::rk45_adaptive;
    cfg.t_end = t_end;
    return cfg;
}

}  // namespace

TEST_CASE("mean_rhs reproduces the classical Lorentz force at zero moments", "[dynamics]") {
    const Params p = unit_linear();
    MomentState s;
    s.mean = {0.0, 0.0, 1.0, 0.0, 1.0, 0.0};
    const Means6 d = mean_rhs(s, p);
    CHECK(d[0] == 0.0);
    CHECK(d[1] == 1.0);
    CHECK(d[2] == 0.0);
    CHECK(d[3] == 1.0);   // e v x B with B = (0,0,mu z)
    CHECK(d[4] == 0.0);
    CHECK(d[5] == -1.0);  // harmonic force
}

TEST_CASE("mean_rhs picks up the covariance back-reaction", "[dynamics]") {
    const Params p = unit_linear();
    MomentState s;
    s.moments[mom::zpy] = 0.2;
    const Means6 d = mean_rhs(s, p);
    CHECK(d[3] == Catch::Approx(0.2).margin(1e-15));
    CHECK(d[4] == 0.0);

    MomentState zero;
    for (double v : mean_rhs(zero, p)) CHECK(v == 0.0);
}

TEST_CASE("moment_rhs vanishes when all moments vanish", "[dynamics]") {
    std::mt19937 rng(7);
    for (const FieldModel& field : {FieldModel(LinearZ{1.3}), FieldModel(ConstantZ{0.8})}) {
        const Params p(1.2, 0.9, 0.7, 1.0, field);
        for (int trial = 0; trial < 20; ++trial) {
            MomentState s;
            s.mean = test_utils::random_means(rng);
            for (double v : moment_rhs(s, p)) CHECK(v == 0.0);
        }
    }
}

TEST_CASE("moment_rhs single-term activation from Delta(pxpy)", "[dynamics]") {
    const Params p = unit_linear();
    MomentState s;
    s.mean = {0.0, 0.0, 1.0, 0.0, 0.0, 0.0};
    s.moments[mom::pxpy] = 1.0;
    const auto d = moment_rhs(s, p);
    CHECK(d[mom::pxpx] == 2.0);
    CHECK(d[mom::pypy] == -2.0);
    CHECK(d[mom::ypx] == 1.0);
    CHECK(d[mom::xpy] == 1.0);
    CHECK(d[mom::pxpy] == 0.0);
    CHECK(d[mom::pzpz] == 0.0);
}

TEST_CASE("moment_rhs vanishes on the saturated stationary state", "[dynamics]") {
    const Params p = unit_linear();
    const MomentState s = saturate({0.0, 0.0, 0.3, 0.2, 0.2, 0.0}, p);
    for (double v : moment_rhs(s, p)) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("constant-field rhs equals the linear rhs with the field frozen at the mean",
          "[dynamics]") {
    std::mt19937 rng(17);
    for (int trial = 0; trial < 25; ++trial) {
        MomentState s = test_utils::random_state(rng);
        s.mean[3] = 0.0;  // gradient terms in the diagonal block carry <px>, <py>
        s.mean[4] = 0.0;
        const double mu = test_utils::uniform(rng, 0.3, 2.0);
        const Params lin(1.1, 0.8, 0.9, 1.0, LinearZ{mu});
        const Params con(1.1, 0.8, 0.9, 1.0, ConstantZ{mu * s.mean[2]});
        const auto dl = moment_rhs(s, lin);
        const auto dc = moment_rhs(s, con);
        CHECK(dl[mom::pxpx] == dc[mom::pxpx]);
        CHECK(dl[mom::pypy] == dc[mom::pypy]);
        CHECK(dl[mom::pzpz] == dc[mom::pzpz]);
    }
}

TEST_CASE("step_rk4 leaves the state unchanged as dt -> 0", "[dynamics]") {
    std::mt19937 rng(3);
    const Params p = unit_linear();
    const MomentState s = test_utils::random_state(rng);
    const MomentState out = step_rk4(s, p, 1e-300);
    const State27 a = to_flat(s), b = to_flat(out);
    for (int i = 0; i < 27; ++i) CHECK(b[i] == Catch::Approx(a[i]).margin(1e-280));
}

TEST_CASE("step_rk4 converges at fifth order on the harmonic oscillator", "[dynamics]") {
    const Params p(1.0, 1.0, 1.0, 1.0, LinearZ{0.0});
    MomentState s;
    s.mean = {0.0, 0.0, 1.0, 0.0, 0.0, 0.0};
    auto local_error = [&](double dt) {
        const MomentState out = step_rk4(s, p, dt);
        return std::max(std::abs(out.mean[2] - std::cos(dt)),
                        std::abs(out.mean[5] + std::sin(dt)));
    };
    const double e1 = local_error(0.1);
    const double e2 = local_error(0.05);
    CHECK(e1 / e2 > 24.0);
    CHECK(e1 / e2 < 40.0);
    CHECK(local_error(1e-3) < 1e-12);
}

TEST_CASE("step_rk4 rejects bad steps", "[dynamics]") {
    const Params p = unit_linear();
    MomentState s;
    CHECK_THROWS_AS(step_rk4(s, p, 0.0), Error);
    CHECK_THROWS_AS(step_rk4(s, p, -0.1), Error);

    MomentState huge;
    huge.mean = {0.0, 0.0, 1e308, 0.0, 0.0, 0.0};
    CHECK_THROWS_AS(step_rk4(huge, p, 10.0), Error);
}

TEST_CASE("evolve reproduces the harmonic closed form", "[dynamics]") {
    const Params p(1.0, 1.0, 1.0, 1.0, LinearZ{0.0});
    MomentState s;
    s.mean = {0.0, 0.0, 1.0, 0.0, 0.0, 0.0};
    const Trajectory traj = evolve(s, p, rk45_to(10.0));
    REQUIRE(traj.times.back() == 10.0);
    CHECK(traj.states.back().mean[2] == Catch::Approx(std::cos(10.0)).margin(1e-8));
    CHECK(traj.states.back().mean[5] == Catch::Approx(-std::sin(10.0)).margin(1e-8));
}

TEST_CASE("evolve conserves the energy of the truncated flow", "[dynamics]") {
    std::mt19937 rng(41);
    const Params p = unit_linear();
    for (int trial = 0; trial < 3; ++trial) {
        const MomentState s = test_utils::random_state(rng);
        const Trajectory traj = evolve(s, p, rk45_to(10.0));
        REQUIRE(traj.states.size() == traj.times.size());
        REQUIRE(traj.monitors.size() == traj.times.size());
        for (std::size_t i = 1; i < traj.times.size(); ++i)
            REQUIRE(traj.times[i] > traj.times[i - 1]);
        const double e0 = traj.monitors.front().energy;
        REQUIRE(e0 != 0.0);
        double drift = 0.0;
        for (const auto& m : traj.monitors) drift = std::max(drift, std::abs(m.energy - e0));
        CHECK(drift / std::abs(e0) < 1e-8);
    }
}

TEST_CASE("evolve with t_end = 0 returns the initial sample", "[dynamics]") {
    const Params p = unit_linear();
    MomentState s;
    s.mean = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
    const Trajectory traj = evolve(s, p, rk45_to(0.0));
    REQUIRE(traj.size() == 1);
    CHECK(traj.times[0] == 0.0);
    CHECK(traj.states[0].mean == s.mean);
}

TEST_CASE("evolve reports step underflow with the partial trajectory", "[dynamics]") {
    const Params p = unit_linear();
    std::mt19937 rng(5);
    MomentState s;
    s.mean = {0.0, 0.0, 1.0, 0.5, 0.5, 0.0};
    s.moments = test_utils::random_psd_moments(rng);
    IntegratorConfig cfg = rk45_to(10.0);
    cfg.rel_tol = 1e-30;
    cfg.abs_tol = 1e-30;
    cfg.dt_min = 0.1;
    cfg.dt_max = 0.1;
    try {
        evolve(s, p, cfg);
        FAIL("expected IntegrationError");
    } catch (const IntegrationError& e) {
        CHECK(e.kind() == ErrorKind::numerical_failure);
        CHECK(e.partial().size() >= 1);
        CHECK(e.t_last() == 0.0);
    }
}

TEST_CASE("free-particle transverse sector follows the ballistic closed form", "[dynamics]") {
    const Params p(1.0, 1.0, 1.0, 1.0, LinearZ{0.0});
    MomentState s;
    s.moments[mom::xx] = 0.5;
    s.moments[mom::xpx] = 0.1;
    s.moments[mom::pxpx] = 0.3;
    const double t = 2.0;
    IntegratorConfig cfg = rk45_to(t);
    const Trajectory traj = evolve(s, p, cfg);
    const MomentState& f = traj.states.back();
    CHECK(f.moments[mom::pxpx] == Catch::Approx(0.3).margin(1e-10));
    CHECK(f.moments[mom::xpx] == Catch::Approx(0.1 + t * 0.3).margin(1e-9));
    CHECK(f.moments[mom::xx] == Catch::Approx(0.5 + 2.0 * t * 0.1 + t * t * 0.3).margin(1e-9));
    // momentum-sector derivatives vanish identically without a field
    const auto d = moment_rhs(s, p);
    CHECK(d[mom::pxpx] == 0.0);
    CHECK(d[mom::pxpy] == 0.0);
    CHECK(d[mom::pypy] == 0.0);
}

TEST_CASE("zero-moment evolution matches the classical integrator", "[dynamics]") {
    const Params p = unit_linear();
    MomentState s;
    s.mean = {0.2, -0.1, 0.8, 0.3, -0.2, 0.1};
    const double t_end = 5.0;
    const Trajectory traj = evolve(s, p, rk45_to(t_end));
    const auto classical = oracle::classical_trajectory(s.mean, p, t_end, 1e-4);
    const Means6& got = traj.states.back().mean;
    const Means6& want = classical.back();
    for (int i = 0; i < 6; ++i) CHECK(got[i] == Catch::Approx(want[i]).margin(1e-7));
    // moments stay identically zero along the flow
    for (double v : traj.states.back().moments) CHECK(v == 0.0);
}

TEST_CASE("saturated initial states ride the classical trajectory", "[dynamics]") {
    // The covariances feeding the mean equations span a flow-invariant zero
    // subspace at the saturated state, so the means stay exactly classical.
    const Params p = unit_linear();
    const Means6 means = {0.1, -0.2, 0.8, 0.3, -0.1, 0.2};
    const MomentState s = saturate(means, p);
    const double t_end = 5.0;
    const Trajectory traj = evolve(s, p, rk45_to(t_end));
    const auto classical = oracle::classical_trajectory(means, p, t_end, 1e-4);
    for (int i = 0; i < 6; ++i)
        CHECK(traj.states.back().mean[i] ==
              Catch::Approx(classical.back()[i]).margin(1e-7));
    CHECK(traj.states.back().moments[mom::zpx] == 0.0);
    CHECK(traj.states.back().moments[mom::zpy] == 0.0);
    CHECK(traj.states.back().moments[mom::zpz] == 0.0);
}

TEST_CASE("rk45 and small-step rk4 agree", "[dynamics]") {
    std::mt19937 rng(53);
    const Params p = unit_linear();
    const MomentState s = test_utils::random_state(rng);

    IntegratorConfig fine = rk45_to(2.0);
    const Trajectory adaptive = evolve(s, p, fine);

    IntegratorConfig fixed;
    fixed.method = IntegratorConfig::Method::rk4_fixed;
    fixed.dt = 1e-3;
    fixed.t_end = 2.0;
    const Trajectory stepped = evolve(s, p, fixed);

    const State27 a = to_flat(adaptive.states.back());
    const State27 b = to_flat(stepped.states.back());
    for (int i = 0; i < 27; ++i) CHECK(a[i] == Catch::Approx(b[i]).margin(1e-8));
}

TEST_CASE("uncertainty measures", "[dynamics]") {
    const Params p = unit_linear();

    const MomentState sat = saturate({0.0, 0.0, 0.3, 0.2, 0.2, 0.0}, p);
    const UncertaintyMeasures us = uncertainty_measures(sat, p);
    CHECK(std::abs(us.zpz) < 1e-12);
    CHECK(std::abs(us.pxpy) < 1e-12);

    MomentState point;
    point.mean = {0.0, 0.0, 1.0, 0.0, 0.0, 0.0};
    const UncertaintyMeasures up = uncertainty_measures(point, p);
    CHECK(up.zpz == -0.25);
    CHECK(up.pxpy == -0.25);

    MomentState wide;
    wide.mean = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    wide.moments[mom::zz] = 1.0;
    wide.moments[mom::pzpz] = 1.0;
    const UncertaintyMeasures uw = uncertainty_measures(wide, p);
    CHECK(uw.zpz == 0.75);
}

TEST_CASE("integrator config validation", "[dynamics]") {
    IntegratorConfig cfg;
    cfg.t_end = -1.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg.t_end = 1.0;
    cfg.method = IntegratorConfig::Method::rk4_fixed;
    cfg.dt = 0.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg.method = IntegratorConfig::Method::rk45_adaptive;
    cfg.rel_tol = 0.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg.rel_tol = 1e-10;
    cfg.dt_min = 1.0;
    cfg.dt_max = 0.5;
    CHECK_THROWS_AS(cfg.validate(), Error);
}
