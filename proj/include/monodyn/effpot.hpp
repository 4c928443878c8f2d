#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "monodyn/core.hpp"
#include "monodyn/error.hpp"
#include "monodyn/stationary.hpp"

namespace monodyn {

/// Quantum-corrected potential for the z motion:
///   V(z) = m w^2 z^2 / 2 + hbar e |B(z)| / (2m) + hbar w / 2   (corrected)
/// with the signed B(z) in original mode. The field term uses |mu*z| directly
/// so that reflection symmetry is exact in floating point.
inline double veff(double z, const Params& p, SaturationMode mode = SaturationMode::corrected) {
    if (!(p.omega > 0.0))
        throw Error(ErrorKind::degenerate_trap, "effective potential requires omega > 0");
    double bz;
    if (const auto* lin = std::get_if<LinearZ>(&p.field)) {
        bz = lin->mu * z;
    } else {
        bz = std::get<ConstantZ>(p.field).b0;
    }
    const double field_term = (mode == SaturationMode::corrected) ? std::abs(bz) : bz;
    return 0.5 * p.mass * p.omega * p.omega * (z * z) +
           0.5 * p.hbar * p.charge * field_term / p.mass + 0.5 * p.hbar * p.omega;
}

struct VeffSample {
    double z;
    double v;
};

/// n uniformly spaced samples over [z_min, z_max], endpoints included. The
/// interior grid is computed symmetrically so that a symmetric interval
/// mirrors bit-exactly.
inline std::vector<VeffSample> veff_scan(const Params& p, SaturationMode mode, double z_min,
                                         double z_max, long n) {
    if (!(std::isfinite(z_min) && std::isfinite(z_max) && z_min < z_max))
        throw Error(ErrorKind::invalid_argument, "require z_min < z_max");
    if (n < 2) throw Error(ErrorKind::invalid_argument, "require n >= 2");
    std::vector<VeffSample> out;
    out.reserve(static_cast<std::size_t>(n));
    const double denom = static_cast<double>(n - 1);
    for (long i = 0; i < n; ++i) {
        double z;
        if (i == 0)
            z = z_min;
        else if (i == n - 1)
            z = z_max;
        else
            z = (z_min * static_cast<double>(n - 1 - i) + z_max * static_cast<double>(i)) / denom;
        out.push_back({z, veff(z, p, mode)});
    }
    return out;
}

struct VeffMinimum {
    double z_star;
    double v_star;
};

/// Closed-form minimum. Corrected mode and the constant field sit at z = 0;
/// the original linear-field form is minimized at the shifted point
/// z* = -e mu hbar / (2 m^2 w^2).
inline VeffMinimum veff_minimum(const Params& p, SaturationMode mode = SaturationMode::corrected) {
    if (!(p.omega > 0.0))
        throw Error(ErrorKind::degenerate_trap,
                    "minimum is undefined for omega = 0: the shift diverges and the harmonic "
                    "potential no longer selects a center");
    if (const auto* lin = std::get_if<LinearZ>(&p.field)) {
        if (mode == SaturationMode::original) {
            const double mw = p.mass * p.omega;
            const double z = -(p.charge * lin->mu * p.hbar) / (2.0 * mw * mw) + 0.0;
            return {z, veff(z, p, mode)};
        }
    }
    return {0.0, veff(0.0, p, mode)};
}

/// One-sided derivative jump of the corrected potential at z = 0:
/// V'(0+) - V'(0-) = e hbar |mu| / m. Zero without a monopole density.
inline double kink_jump(const Params& p) {
    if (const auto* lin = std::get_if<LinearZ>(&p.field))
        return p.charge * p.hbar * std::abs(lin->mu) / p.mass;
    return 0.0;
}

/// -dV/dz, evaluated analytically. In corrected mode the derivative does not
/// exist at the kink point z = 0 (linear field, mu != 0).
inline double effective_force(double z, const Params& p,
                              SaturationMode mode = SaturationMode::corrected) {
    if (!(p.omega > 0.0))
        throw Error(ErrorKind::degenerate_trap, "effective force requires omega > 0");
    const double harmonic = -(p.mass * p.omega * p.omega * z);
    const auto* lin = std::get_if<LinearZ>(&p.field);
    if (!lin) return harmonic;  // constant field: no gradient contribution
    if (mode == SaturationMode::original)
        return harmonic - p.charge * lin->mu * p.hbar / (2.0 * p.mass);
    if (lin->mu == 0.0) return harmonic;
    if (z == 0.0)
        throw Error(ErrorKind::degenerate_point,
                    "force is undefined at the kink point z = 0 in corrected mode");
    const double sign = (lin->mu * z > 0.0) ? 1.0 : -1.0;
    return harmonic - sign * p.charge * p.hbar * std::abs(lin->mu) / (2.0 * p.mass);
}

struct CompletedSquareReport {
    double shift;                // -e mu hbar / (2 m^2 w^2)
    double residual_hbar2_term;  // e^2 mu^2 hbar^2 / (8 m^3 w^2), dropped at first order
};

/// Rewrites the original-mode linear-field potential as a completed square.
/// The residual hbar^2 term is reported, never added to the potential.
inline CompletedSquareReport completed_square_report(const Params& p) {
    const auto* lin = std::get_if<LinearZ>(&p.field);
    if (!lin)
        throw Error(ErrorKind::invalid_argument, "completed square applies to the linear field");
    if (!(p.omega > 0.0))
        throw Error(ErrorKind::degenerate_trap, "completed square requires omega > 0");
    const double mw = p.mass * p.omega;
    const double emh = p.charge * lin->mu * p.hbar;
    CompletedSquareReport r;
    r.shift = -emh / (2.0 * mw * mw) + 0.0;
    r.residual_hbar2_term = emh * emh / (8.0 * p.mass * mw * mw);
    return r;
}

struct VeffKink {
    double location;
    double derivative_jump;
};

/// Analysis summary attached to a scan.
struct VeffReport {
    SaturationMode mode;
    VeffMinimum minimum;
    std::optional<VeffKink> kink;          // corrected mode, linear field, mu != 0
    std::optional<double> force_const;     // original mode, linear field: -e mu hbar / (2m)
    std::optional<double> shift_delta_z;   // original mode, linear field
};

inline VeffReport veff_report(const Params& p, SaturationMode mode) {
    VeffReport r{mode, veff_minimum(p, mode), {}, {}, {}};
    const auto* lin = std::get_if<LinearZ>(&p.field);
    if (!lin) return r;
    if (mode == SaturationMode::corrected) {
        if (lin->mu != 0.0) r.kink = VeffKink{0.0, kink_jump(p)};
    } else {
        r.force_const = -(p.charge * lin->mu * p.hbar) / (2.0 * p.mass) + 0.0;
        r.shift_delta_z = completed_square_report(p).shift;
    }
    return r;
}

}  // namespace monodyn
