#pragma once

#include <array>
#include <cmath>

#include "monodyn/core.hpp"
#include "monodyn/dynamics.hpp"
#include "monodyn/error.hpp"

namespace monodyn {

/// Saturation variant. `corrected` uses |<B>| and is defined for either field
/// sign; `original` uses the signed <B> and is kept for comparison, defined
/// only where e<B> > 0.
enum class SaturationMode { corrected, original };

inline const char* to_string(SaturationMode m) {
    return m == SaturationMode::corrected ? "corrected" : "original";
}

/// Consequences of setting all moment time derivatives to zero at frozen
/// means. Twelve slots are forced to vanish outright; the rest of the solution
/// is a three-parameter family described by the ratios below.
struct AdiabaticConstraints {
    /// Moment slots forced to vanish.
    static constexpr std::array<int, 12> zero_slots = {
        mom::xpx, mom::ypy, mom::zpz, mom::zpx, mom::zpy,  mom::xpz,
        mom::ypz, mom::pxpz, mom::pypz, mom::xz, mom::yz,  mom::pxpy,
    };

    double pz2_per_z2;   // Delta(pz^2) / Delta(z^2) = (m w)^2
    double xpy_per_px2;  // Delta(xpy) / Delta(px^2) = -1 / (e <B>)
    double ypx_per_px2;  // Delta(ypx) / Delta(px^2) = +1 / (e <B>)
    double field_mean;   // <B^z> at the given means

    /// Assemble the full state from the free scales: Delta(px^2) (= Delta(py^2)),
    /// Delta(z^2), and the transverse spreads.
    MomentState apply(const Means6& means, double px2, double z2, double x2, double y2,
                      double xy) const {
        MomentState s;
        s.mean = means;
        s.moments[mom::pxpx] = px2;
        s.moments[mom::pypy] = px2;
        s.moments[mom::zz] = z2;
        s.moments[mom::pzpz] = pz2_per_z2 * z2;
        s.moments[mom::xpy] = xpy_per_px2 * px2;
        s.moments[mom::ypx] = ypx_per_px2 * px2;
        s.moments[mom::xx] = x2;
        s.moments[mom::yy] = y2;
        s.moments[mom::xy] = xy;
        return s;
    }
};

/// Solves the stationary moment algebra at the given means. Requires a
/// nonvanishing mean field: for the linear model the algebra divides by <z>.
inline AdiabaticConstraints adiabatic_constraints(const Means6& means, const Params& p) {
    if (const auto* lin = std::get_if<LinearZ>(&p.field)) {
        if (lin->mu != 0.0 && means[2] == 0.0)
            throw Error(ErrorKind::degenerate_point,
                        "stationary moments are undefined at <z> = 0: the field vanishes there "
                        "and the moment algebra divides by <z>");
    }
    const double Bbar = field_mean_value(p.field, means[2]);
    const double eB = p.charge * Bbar;
    if (eB == 0.0)
        throw Error(ErrorKind::degenerate_field, "stationary moments require e<B> != 0");

    AdiabaticConstraints c;
    c.pz2_per_z2 = (p.mass * p.omega) * (p.mass * p.omega);
    c.xpy_per_px2 = -1.0 / eB;
    c.ypx_per_px2 = 1.0 / eB;
    c.field_mean = Bbar;
    return c;
}

/// Completes the stationary family by saturating both uncertainty relations:
///   Delta(px^2) = Delta(py^2) = hbar |e<B>| / 2   (corrected)
///                             = hbar  e<B>  / 2   (original; rejected if negative)
///   Delta(z^2)  = hbar / (2 m w),  Delta(pz^2) = (m w)^2 Delta(z^2) = hbar m w / 2
/// The transverse spreads are not fixed by the stationary algebra; the minimal
/// choice Delta(x^2) = Delta(y^2) = hbar/(2|e<B>|), Delta(xy) = 0 keeps the
/// second-moment matrix positive semidefinite with zero smallest eigenvalue.
inline MomentState saturate(const Means6& means, const Params& p,
                            SaturationMode mode = SaturationMode::corrected) {
    if (!(p.omega > 0.0))
        throw Error(ErrorKind::degenerate_trap,
                    "saturation of the (z, pz) sector requires omega > 0");
    const AdiabaticConstraints c = adiabatic_constraints(means, p);
    const double eB = p.charge * c.field_mean;
    double px2;
    if (mode == SaturationMode::corrected) {
        px2 = 0.5 * p.hbar * std::abs(eB);
    } else {
        px2 = 0.5 * p.hbar * eB;
        if (!(px2 > 0.0))
            throw Error(ErrorKind::mode_domain,
                        "original saturation mode yields a negative momentum variance for "
                        "e<B> < 0; use the corrected mode");
    }
    const double z2 = p.hbar / (2.0 * p.mass * p.omega);
    const double x2 = p.hbar / (2.0 * std::abs(eB));
    return c.apply(means, px2, z2, x2, x2, 0.0);
}

/// Max-norm of the moment equations of motion; zero certifies a stationary
/// solution at frozen means.
inline double residual(const MomentState& s, const Params& p) {
    const auto dm = moment_rhs(s, p);
    double r = 0.0;
    for (double v : dm) r = std::max(r, std::abs(v));
    return r;
}

}  // namespace monodyn
