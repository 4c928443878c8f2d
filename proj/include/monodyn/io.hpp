#pragma once

#include <array>
#include <charconv>
#include <cstdio>
#include <string>

namespace monodyn::io {

/// Shortest decimal string that round-trips to the same double.
inline std::string format_double(double v) {
    std::array<char, 64> buf;
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

/// 17 significant digits.
inline std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline constexpr std::array<const char*, 6> kMeanColumns = {
    "mean_x", "mean_y", "mean_z", "mean_px", "mean_py", "mean_pz",
};

/// Column names for the 21 moment slots, in the canonical lexicographic order.
inline constexpr std::array<const char*, 21> kMomentColumns = {
    "dx2",  "dxy",   "dxz",   "dxpx", "dxpy",  "dxpz",  "dy2",
    "dyz",  "dypx",  "dypy",  "dypz", "dz2",   "dzpx",  "dzpy",
    "dzpz", "dpx2",  "dpxpy", "dpxpz", "dpy2", "dpypz", "dpz2",
};

}  // namespace monodyn::io
