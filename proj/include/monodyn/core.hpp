#pragma once

#include <array>
#include <cmath>
#include <string>
#include <utility>
#include <variant>

#include "monodyn/error.hpp"

namespace monodyn {

using Vec3 = std::array<double, 3>;
using Means6 = std::array<double, 6>;

inline constexpr int kNumVars = 6;
inline constexpr int kNumMoments = 21;

/// Canonical variable order used for all vectors, moments and file columns.
enum class Var : int { x = 0, y = 1, z = 2, px = 3, py = 4, pz = 5 };

enum class Axis : int { x = 0, y = 1, z = 2 };

/// Totally antisymmetric symbol, eps(x,y,z) = +1.
constexpr int levi_civita(Axis i, Axis j, Axis k) {
    const int a = static_cast<int>(i), b = static_cast<int>(j), c = static_cast<int>(k);
    if (a == b || b == c || a == c) return 0;
    // even permutations of (0,1,2)
    if ((a + 1) % 3 == b) return 1;
    return -1;
}

/// Uniform field (0, 0, b0); divergence-free.
struct ConstantZ {
    double b0 = 0.0;
};

/// Monopole-density field (0, 0, mu*z); divergence mu at every point.
struct LinearZ {
    double mu = 0.0;
};

using FieldModel = std::variant<ConstantZ, LinearZ>;

inline bool is_linear(const FieldModel& field) {
    return std::holds_alternative<LinearZ>(field);
}

inline Vec3 field_eval(const FieldModel& field, const Vec3& position) {
    if (const auto* lin = std::get_if<LinearZ>(&field)) {
        return {0.0, 0.0, lin->mu * position[2]};
    }
    return {0.0, 0.0, std::get<ConstantZ>(field).b0};
}

/// div B; independent of position for both supported models.
inline double field_divergence(const FieldModel& field, const Vec3& /*position*/) {
    if (const auto* lin = std::get_if<LinearZ>(&field)) return lin->mu;
    return 0.0;
}

/// <B^z> for a state with mean z-position mean_z. Exact, since B^z is at
/// most linear in z.
inline double field_mean_value(const FieldModel& field, double mean_z) {
    if (const auto* lin = std::get_if<LinearZ>(&field)) return lin->mu * mean_z;
    return std::get<ConstantZ>(field).b0;
}

struct Params {
    double mass;
    double charge;  // e > 0 is the tested convention; negative values are accepted but untested
    double omega;
    double hbar;
    FieldModel field;

    Params(double mass_, double charge_, double omega_, double hbar_, FieldModel field_)
        : mass(mass_), charge(charge_), omega(omega_), hbar(hbar_), field(field_) {
        if (!(std::isfinite(mass) && mass > 0.0))
            throw Error(ErrorKind::invalid_argument, "mass must be finite and > 0");
        if (!(std::isfinite(hbar) && hbar > 0.0))
            throw Error(ErrorKind::invalid_argument, "hbar must be finite and > 0");
        if (!(std::isfinite(omega) && omega >= 0.0))
            throw Error(ErrorKind::invalid_argument, "omega must be finite and >= 0");
        if (!std::isfinite(charge))
            throw Error(ErrorKind::invalid_argument, "charge must be finite");
    }
};

/// Flat offset of the ordered pair (i, j), i <= j, into the 21-slot moment
/// vector, lexicographic in the canonical variable order:
/// xx, xy, xz, xpx, xpy, xpz, yy, yz, ypx, ypy, ypz, zz, zpx, zpy, zpz,
/// pxpx, pxpy, pxpz, pypy, pypz, pzpz.
constexpr int moment_offset(int i, int j) {
    if (i > j) {
        const int t = i;
        i = j;
        j = t;
    }
    return i * kNumVars - i * (i - 1) / 2 + (j - i);
}

constexpr int moment_offset(Var a, Var b) {
    return moment_offset(static_cast<int>(a), static_cast<int>(b));
}

/// Inverse of moment_offset; returns (i, j) with i <= j.
constexpr std::pair<int, int> moment_pair(int offset) {
    for (int i = 0; i < kNumVars; ++i) {
        const int row = i * kNumVars - i * (i - 1) / 2;
        const int len = kNumVars - i;
        if (offset < row + len) return {i, i + (offset - row)};
    }
    return {-1, -1};
}

/// Named moment slots.
namespace mom {
inline constexpr int xx = 0, xy = 1, xz = 2, xpx = 3, xpy = 4, xpz = 5;
inline constexpr int yy = 6, yz = 7, ypx = 8, ypy = 9, ypz = 10;
inline constexpr int zz = 11, zpx = 12, zpy = 13, zpz = 14;
inline constexpr int pxpx = 15, pxpy = 16, pxpz = 17, pypy = 18, pypz = 19, pzpz = 20;
}  // namespace mom

/// Mean values plus the symmetric second-order moments Delta(ab).
/// Only the i <= j slots are stored; the accessor is symmetric.
struct MomentState {
    Means6 mean{};
    std::array<double, kNumMoments> moments{};

    double moment(Var a, Var b) const { return moments[moment_offset(a, b)]; }
    double& moment(Var a, Var b) { return moments[moment_offset(a, b)]; }

    double mean_of(Var a) const { return mean[static_cast<int>(a)]; }
    double& mean_of(Var a) { return mean[static_cast<int>(a)]; }

    /// Validating factory for externally prepared states: everything finite,
    /// diagonal moments non-negative. Evolution-internal states bypass this.
    static MomentState checked(const Means6& mean, const std::array<double, kNumMoments>& moments) {
        for (double v : mean)
            if (!std::isfinite(v)) throw Error(ErrorKind::invalid_argument, "mean values must be finite");
        for (double v : moments)
            if (!std::isfinite(v)) throw Error(ErrorKind::invalid_argument, "moments must be finite");
        for (int i = 0; i < kNumVars; ++i) {
            if (moments[moment_offset(i, i)] < 0.0)
                throw Error(ErrorKind::invalid_argument, "diagonal moments must be non-negative");
        }
        MomentState s;
        s.mean = mean;
        s.moments = moments;
        return s;
    }
};

/// Coefficient C in [p_j, p_k] = i hbar C at the given position:
/// C = e * sum_l eps(j,k,l) B^l. Antisymmetric in (j, k).
inline double momentum_commutator_coefficient(const Params& params, Axis j, Axis k,
                                              const Vec3& position) {
    const Vec3 B = field_eval(params.field, position);
    double sum = 0.0;
    for (int l = 0; l < 3; ++l) sum += levi_civita(j, k, static_cast<Axis>(l)) * B[l];
    return params.charge * sum;
}

/// Cyclic sum of nested momentum commutators, as a scalar: -e hbar^2 div B.
/// Nonzero only in the monopole-density regime.
inline double jacobiator(const Params& params) {
    const double div = field_divergence(params.field, Vec3{0.0, 0.0, 0.0});
    const double j = -(params.charge * params.hbar * params.hbar * div);
    return j + 0.0;  // never emit -0
}

/// <H> = (<p>^2 + tr momentum fluctuations)/2m + m w^2 (<z>^2 + Delta(z^2))/2.
inline double energy(const MomentState& s, const Params& p) {
    const double kin = s.mean[3] * s.mean[3] + s.mean[4] * s.mean[4] + s.mean[5] * s.mean[5] +
                       s.moments[mom::pxpx] + s.moments[mom::pypy] + s.moments[mom::pzpz];
    const double mz = s.mean[2];
    return kin / (2.0 * p.mass) +
           0.5 * p.mass * p.omega * p.omega * (mz * mz + s.moments[mom::zz]);
}

}  // namespace monodyn
