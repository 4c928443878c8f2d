#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "monodyn/core.hpp"
#include "monodyn/error.hpp"

namespace monodyn {

/// Concatenated phase-space layout used by the steppers and the constant-field
/// oracle: 6 means followed by the 21 moments.
using State27 = std::array<double, 27>;

inline State27 to_flat(const MomentState& s) {
    State27 y;
    for (int i = 0; i < kNumVars; ++i) y[i] = s.mean[i];
    for (int i = 0; i < kNumMoments; ++i) y[kNumVars + i] = s.moments[i];
    return y;
}

inline MomentState from_flat(const State27& y) {
    MomentState s;
    for (int i = 0; i < kNumVars; ++i) s.mean[i] = y[i];
    for (int i = 0; i < kNumMoments; ++i) s.moments[i] = y[kNumVars + i];
    return s;
}

namespace detail {

// Time derivative of the full 27-component state, truncated at second-order
// moments. The field enters through e<B> (local rotation) and, for the linear
// model only, through e*mu gradient terms carrying mean factors.
inline void rhs27(const double* y, const Params& p, double* dy) {
    using namespace mom;
    const double inv_m = 1.0 / p.mass;
    const double mw2 = (p.mass * p.omega) * (p.mass * p.omega);
    const double mx = y[0], my = y[1], mz = y[2];
    const double px = y[3], py = y[4], pz = y[5];
    const double* D = y + kNumVars;
    double* dD = dy + kNumVars;

    const double Bbar = field_mean_value(p.field, mz);
    const double c = p.charge * Bbar;
    const auto* lin = std::get_if<LinearZ>(&p.field);
    const double g = lin ? p.charge * lin->mu : 0.0;

    dy[0] = px * inv_m;
    dy[1] = py * inv_m;
    dy[2] = pz * inv_m;
    dy[3] = (c * py + g * D[zpy]) * inv_m;
    dy[4] = -(c * px + g * D[zpx]) * inv_m;
    dy[5] = -mw2 * mz * inv_m;

    dD[xx] = 2.0 * D[xpx] * inv_m;
    dD[xy] = (D[xpy] + D[ypx]) * inv_m;
    dD[xz] = (D[xpz] + D[zpx]) * inv_m;
    dD[yy] = 2.0 * D[ypy] * inv_m;
    dD[yz] = (D[ypz] + D[zpy]) * inv_m;
    dD[zz] = 2.0 * D[zpz] * inv_m;

    dD[xpx] = (D[pxpx] + c * D[xpy] - g * mx * D[zpy]) * inv_m;
    dD[ypx] = (D[pxpy] + c * D[ypy] - g * my * D[zpy]) * inv_m;
    dD[zpx] = (D[pxpz] + c * D[zpy] - g * mz * D[zpy]) * inv_m;
    dD[xpy] = (D[pxpy] - c * D[xpx] + g * mx * D[zpx]) * inv_m;
    dD[ypy] = (D[pypy] - c * D[ypx] + g * my * D[zpx]) * inv_m;
    dD[zpy] = (D[pypz] - c * D[zpx] + g * mz * D[zpx]) * inv_m;
    dD[xpz] = (D[pxpz] - mw2 * D[xz]) * inv_m;
    dD[ypz] = (D[pypz] - mw2 * D[yz]) * inv_m;
    dD[zpz] = (D[pzpz] - mw2 * D[zz]) * inv_m;

    dD[pxpy] = (-c * (D[pxpx] - D[pypy]) + g * (px * D[zpx] - py * D[zpy])) * inv_m;
    dD[pypz] = (-c * D[pxpz] - g * px * D[zpz] - mw2 * D[zpy]) * inv_m;
    dD[pxpz] = (c * D[pypz] + g * py * D[zpz] - mw2 * D[zpx]) * inv_m;

    // The asymmetric 2/1 weights on the gradient terms below are load-bearing:
    // they balance the mean Lorentz-force terms so that <H> is exactly
    // conserved by the truncated flow.
    dD[pxpx] = 2.0 * (c * D[pxpy] + g * (2.0 * py * D[zpx] + px * D[zpy])) * inv_m;
    dD[pypy] = -2.0 * (c * D[pxpy] + g * (py * D[zpx] + 2.0 * px * D[zpy])) * inv_m;
    dD[pzpz] = -2.0 * mw2 * D[zpz] * inv_m;
}

inline bool all_finite(const double* y, int n) {
    for (int i = 0; i < n; ++i)
        if (!std::isfinite(y[i])) return false;
    return true;
}

}  // namespace detail

/// d/dt of the six mean values.
inline Means6 mean_rhs(const MomentState& s, const Params& p) {
    State27 y = to_flat(s), dy{};
    detail::rhs27(y.data(), p, dy.data());
    Means6 out;
    for (int i = 0; i < kNumVars; ++i) out[i] = dy[i];
    return out;
}

/// d/dt of the 21 second-order moments.
inline std::array<double, kNumMoments> moment_rhs(const MomentState& s, const Params& p) {
    State27 y = to_flat(s), dy{};
    detail::rhs27(y.data(), p, dy.data());
    std::array<double, kNumMoments> out;
    for (int i = 0; i < kNumMoments; ++i) out[i] = dy[kNumVars + i];
    return out;
}

struct UncertaintyMeasures {
    double zpz;   // Delta(z^2)Delta(pz^2) - Delta(zpz)^2 - hbar^2/4
    double pxpy;  // Delta(px^2)Delta(py^2) - Delta(pxpy)^2 - (e hbar <B>)^2/4
};

/// Slack of the two uncertainty relations; non-negative values mean they hold,
/// zero means saturation. <B> is exact for both field models.
inline UncertaintyMeasures uncertainty_measures(const MomentState& s, const Params& p) {
    using namespace mom;
    UncertaintyMeasures u;
    u.zpz = s.moments[zz] * s.moments[pzpz] - s.moments[zpz] * s.moments[zpz] -
            0.25 * p.hbar * p.hbar;
    const double eB = p.charge * p.hbar * field_mean_value(p.field, s.mean[2]);
    u.pxpy = s.moments[pxpx] * s.moments[pypy] - s.moments[pxpy] * s.moments[pxpy] -
             0.25 * eB * eB;
    return u;
}

struct MonitorSample {
    double energy;
    double zpz_uncertainty;
    double pxpy_uncertainty;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<MomentState> states;
    std::vector<MonitorSample> monitors;

    std::size_t size() const { return times.size(); }
};

struct IntegratorConfig {
    enum class Method { rk4_fixed, rk45_adaptive };

    Method method = Method::rk45_adaptive;
    double dt = 0.0;       // rk4_fixed step size
    double rel_tol = 1e-10;
    double abs_tol = 1e-10;
    double dt_min = 0.0;   // 0 selects 1e-12 * t_end
    double dt_max = 0.0;   // 0 selects t_end / 100
    double t_end = 0.0;

    void validate() const {
        if (!(std::isfinite(t_end) && t_end >= 0.0))
            throw Error(ErrorKind::invalid_argument, "t_end must be finite and >= 0");
        if (method == Method::rk4_fixed) {
            if (!(std::isfinite(dt) && dt > 0.0))
                throw Error(ErrorKind::invalid_argument, "rk4_fixed requires dt > 0");
        } else {
            if (!(rel_tol > 0.0 && abs_tol > 0.0))
                throw Error(ErrorKind::invalid_argument, "tolerances must be > 0");
            if (dt_min < 0.0 || dt_max < 0.0 || (dt_min > 0.0 && dt_max > 0.0 && dt_min > dt_max))
                throw Error(ErrorKind::invalid_argument, "require 0 <= dt_min <= dt_max");
        }
    }
};

/// Raised when the adaptive step size underflows dt_min; carries the last
/// accepted portion of the trajectory.
class IntegrationError : public Error {
  public:
    IntegrationError(const std::string& what, Trajectory partial)
        : Error(ErrorKind::numerical_failure, what), partial_(std::move(partial)) {}

    const Trajectory& partial() const { return partial_; }
    double t_last() const { return partial_.times.back(); }
    const MomentState& last_state() const { return partial_.states.back(); }

  private:
    Trajectory partial_;
};

/// One classical RK4 step of size dt over the concatenated 27-dim system.
inline MomentState step_rk4(const MomentState& s, const Params& p, double dt) {
    if (!(std::isfinite(dt) && dt > 0.0))
        throw Error(ErrorKind::invalid_argument, "dt must be > 0");
    State27 y = to_flat(s);
    State27 k1{}, k2{}, k3{}, k4{}, tmp{};
    detail::rhs27(y.data(), p, k1.data());
    for (int i = 0; i < 27; ++i) tmp[i] = y[i] + 0.5 * dt * k1[i];
    detail::rhs27(tmp.data(), p, k2.data());
    for (int i = 0; i < 27; ++i) tmp[i] = y[i] + 0.5 * dt * k2[i];
    detail::rhs27(tmp.data(), p, k3.data());
    for (int i = 0; i < 27; ++i) tmp[i] = y[i] + dt * k3[i];
    detail::rhs27(tmp.data(), p, k4.data());
    State27 out;
    for (int i = 0; i < 27; ++i)
        out[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    if (!detail::all_finite(out.data(), 27))
        throw Error(ErrorKind::numerical_failure, "non-finite state after rk4 step");
    return from_flat(out);
}

namespace detail {

// Dormand-Prince 5(4) tableau.
struct Dopri5 {
    static constexpr std::array<double, 7> c = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
    static constexpr std::array<std::array<double, 6>, 7> a = {{
        {0, 0, 0, 0, 0, 0},
        {1.0 / 5, 0, 0, 0, 0, 0},
        {3.0 / 40, 9.0 / 40, 0, 0, 0, 0},
        {44.0 / 45, -56.0 / 15, 32.0 / 9, 0, 0, 0},
        {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729, 0, 0},
        {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656, 0},
        {35.0 / 384, 0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
    }};
    static constexpr std::array<double, 7> b5 = {35.0 / 384,       0, 500.0 / 1113, 125.0 / 192,
                                                 -2187.0 / 6784,   11.0 / 84, 0};
    static constexpr std::array<double, 7> b4 = {5179.0 / 57600,   0, 7571.0 / 16695, 393.0 / 640,
                                                 -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};
};

// Returns the scaled max-norm error of one trial step; fills ynew.
inline double dopri5_trial(const State27& y, const Params& p, double dt, double rel_tol,
                           double abs_tol, State27& ynew) {
    std::array<State27, 7> k;
    State27 stage;
    detail::rhs27(y.data(), p, k[0].data());
    for (int s = 1; s < 7; ++s) {
        for (int i = 0; i < 27; ++i) {
            double acc = 0.0;
            for (int j = 0; j < s; ++j) acc += Dopri5::a[s][j] * k[j][i];
            stage[i] = y[i] + dt * acc;
        }
        detail::rhs27(stage.data(), p, k[s].data());
    }
    double err_norm = 0.0;
    for (int i = 0; i < 27; ++i) {
        double y5 = 0.0, y4 = 0.0;
        for (int s = 0; s < 7; ++s) {
            y5 += Dopri5::b5[s] * k[s][i];
            y4 += Dopri5::b4[s] * k[s][i];
        }
        ynew[i] = y[i] + dt * y5;
        const double err = dt * (y5 - y4);
        const double scale = abs_tol + rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
        err_norm = std::max(err_norm, std::abs(err) / scale);
    }
    if (!all_finite(ynew.data(), 27)) return std::numeric_limits<double>::infinity();
    return err_norm;
}

}  // namespace detail

/// Integrates the coupled mean+moment system to cfg.t_end. Monitors are
/// recorded at every accepted step. t_end = 0 yields the initial sample only.
inline Trajectory evolve(const MomentState& initial, const Params& p, const IntegratorConfig& cfg) {
    cfg.validate();
    {
        const State27 y0 = to_flat(initial);
        if (!detail::all_finite(y0.data(), 27))
            throw Error(ErrorKind::invalid_argument, "initial state must be finite");
    }

    Trajectory traj;
    auto record = [&](double t, const MomentState& s) {
        const UncertaintyMeasures u = uncertainty_measures(s, p);
        traj.times.push_back(t);
        traj.states.push_back(s);
        traj.monitors.push_back(MonitorSample{energy(s, p), u.zpz, u.pxpy});
    };
    record(0.0, initial);
    if (cfg.t_end == 0.0) return traj;

    if (cfg.method == IntegratorConfig::Method::rk4_fixed) {
        double t = 0.0;
        MomentState s = initial;
        while (t < cfg.t_end) {
            const double dt = std::min(cfg.dt, cfg.t_end - t);
            try {
                s = step_rk4(s, p, dt);
            } catch (const Error& e) {
                throw IntegrationError(e.what(), std::move(traj));
            }
            t = (dt < cfg.dt) ? cfg.t_end : t + dt;
            record(t, s);
        }
        return traj;
    }

    const double dt_min = cfg.dt_min > 0.0 ? cfg.dt_min : 1e-12 * cfg.t_end;
    const double dt_max = cfg.dt_max > 0.0 ? cfg.dt_max : cfg.t_end / 100.0;
    if (dt_min > dt_max)
        throw Error(ErrorKind::invalid_argument, "require dt_min <= dt_max");

    double t = 0.0;
    double dt = dt_max;
    State27 y = to_flat(initial);
    // doubling threshold: halving a step changes the estimate by ~2^5
    constexpr double kGrowThreshold = 1.0 / 64.0;
    constexpr long kMaxSteps = 50'000'000;
    long steps = 0;
    while (t < cfg.t_end) {
        const bool clipped = dt >= cfg.t_end - t;
        const double h = clipped ? cfg.t_end - t : dt;
        State27 ynew;
        const double err = detail::dopri5_trial(y, p, h, cfg.rel_tol, cfg.abs_tol, ynew);
        if (err <= 1.0) {
            t = clipped ? cfg.t_end : t + h;
            y = ynew;
            record(t, from_flat(y));
            if (err < kGrowThreshold) dt = std::min(dt * 2.0, dt_max);
        } else {
            const double halved = h * 0.5;
            if (halved < dt_min)
                throw IntegrationError("step size underflow below dt_min", std::move(traj));
            dt = halved;
        }
        if (++steps > kMaxSteps)
            throw IntegrationError("step budget exceeded", std::move(traj));
    }
    return traj;
}

}  // namespace monodyn
