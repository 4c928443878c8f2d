#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "monodyn/core.hpp"
#include "monodyn/dynamics.hpp"
#include "monodyn/error.hpp"

namespace monodyn::oracle {

/// Minimal dense square matrix, sized for the 27-dim systems used here.
/// Kept deliberately independent of the stepping code paths.
class Mat {
  public:
    Mat() = default;
    explicit Mat(int n) : n_(n), a_(static_cast<std::size_t>(n) * n, 0.0) {}

    static Mat identity(int n) {
        Mat m(n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    int dim() const { return n_; }
    double& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * n_ + j]; }
    double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * n_ + j]; }

    Mat& operator+=(const Mat& o) {
        for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
        return *this;
    }

    Mat& scale(double s) {
        for (double& v : a_) v *= s;
        return *this;
    }

    friend Mat operator*(const Mat& l, const Mat& r) {
        const int n = l.n_;
        Mat out(n);
        for (int i = 0; i < n; ++i) {
            for (int k = 0; k < n; ++k) {
                const double lik = l(i, k);
                if (lik == 0.0) continue;
                for (int j = 0; j < n; ++j) out(i, j) += lik * r(k, j);
            }
        }
        return out;
    }

    friend Mat operator+(Mat l, const Mat& r) { return l += r; }

    std::vector<double> apply(const std::vector<double>& x) const {
        std::vector<double> y(static_cast<std::size_t>(n_), 0.0);
        for (int i = 0; i < n_; ++i) {
            double acc = 0.0;
            for (int j = 0; j < n_; ++j) acc += (*this)(i, j) * x[static_cast<std::size_t>(j)];
            y[static_cast<std::size_t>(i)] = acc;
        }
        return y;
    }

    double norm1() const {  // max absolute column sum
        double best = 0.0;
        for (int j = 0; j < n_; ++j) {
            double s = 0.0;
            for (int i = 0; i < n_; ++i) s += std::abs((*this)(i, j));
            best = std::max(best, s);
        }
        return best;
    }

    bool finite() const {
        for (double v : a_)
            if (!std::isfinite(v)) return false;
        return true;
    }

  private:
    int n_ = 0;
    std::vector<double> a_;
};

/// Solve A X = B by LU with partial pivoting.
inline Mat lu_solve(Mat a, Mat b) {
    const int n = a.dim();
    std::vector<int> piv(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) piv[static_cast<std::size_t>(i)] = i;
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        double best = std::abs(a(col, col));
        for (int r = col + 1; r < n; ++r) {
            const double v = std::abs(a(r, col));
            if (v > best) {
                best = v;
                pivot = r;
            }
        }
        if (best == 0.0) throw Error(ErrorKind::numerical_failure, "singular matrix in lu_solve");
        if (pivot != col) {
            for (int j = 0; j < n; ++j) std::swap(a(col, j), a(pivot, j));
            for (int j = 0; j < n; ++j) std::swap(b(col, j), b(pivot, j));
        }
        for (int r = col + 1; r < n; ++r) {
            const double f = a(r, col) / a(col, col);
            if (f == 0.0) continue;
            a(r, col) = f;
            for (int j = col + 1; j < n; ++j) a(r, j) -= f * a(col, j);
            for (int j = 0; j < n; ++j) b(r, j) -= f * b(col, j);
        }
    }
    // back substitution
    for (int col = n - 1; col >= 0; --col) {
        for (int j = 0; j < n; ++j) {
            double acc = b(col, j);
            for (int k = col + 1; k < n; ++k) acc -= a(col, k) * b(k, j);
            b(col, j) = acc / a(col, col);
        }
    }
    return b;
}

/// exp(A t) by scaling-and-squaring around a degree-13 Pade kernel.
inline Mat matrix_exponential(const Mat& a, double t) {
    Mat m = a;
    m.scale(t);
    if (!m.finite())
        throw Error(ErrorKind::numerical_failure, "non-finite entries in matrix_exponential");
    const int n = m.dim();

    constexpr double theta13 = 5.371920351148152;
    int s = 0;
    const double nrm = m.norm1();
    if (nrm > theta13) s = static_cast<int>(std::ceil(std::log2(nrm / theta13)));
    if (s > 0) m.scale(std::ldexp(1.0, -s));

    constexpr std::array<double, 14> b = {
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
        129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
        1323241920.0,        40840800.0,          960960.0,           16380.0,
        182.0,               1.0,
    };

    const Mat id = Mat::identity(n);
    const Mat m2 = m * m;
    const Mat m4 = m2 * m2;
    const Mat m6 = m2 * m4;

    auto lin = [&](double c6, const Mat& x6, double c4, const Mat& x4, double c2, const Mat& x2,
                   double c0) {
        Mat r(n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                r(i, j) = c6 * x6(i, j) + c4 * x4(i, j) + c2 * x2(i, j) + c0 * id(i, j);
        return r;
    };

    const Mat u_inner = lin(b[13], m6, b[11], m4, b[9], m2, 0.0);
    Mat u_poly = m6 * u_inner;
    u_poly += lin(b[7], m6, b[5], m4, b[3], m2, b[1]);
    const Mat u = m * u_poly;

    const Mat v_inner = lin(b[12], m6, b[10], m4, b[8], m2, 0.0);
    Mat v = m6 * v_inner;
    v += lin(b[6], m6, b[4], m4, b[2], m2, b[0]);

    Mat p = v;  // V + U
    Mat q = v;  // V - U
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            p(i, j) += u(i, j);
            q(i, j) -= u(i, j);
        }

    Mat r = lu_solve(q, p);
    for (int k = 0; k < s; ++k) r = r * r;
    if (!r.finite()) throw Error(ErrorKind::numerical_failure, "overflow in matrix_exponential");
    return r;
}

/// Constant-coefficient generator of the concatenated mean+moment flow. Only
/// the constant field yields a linear system; the monopole field couples
/// means to moments bilinearly.
struct LinearSystem {
    Mat a;  // 27 x 27

    std::vector<double> apply_flat(const State27& y) const {
        std::vector<double> x(y.begin(), y.end());
        return a.apply(x);
    }
};

/// Assembles the generator by evaluating the dynamics right-hand side on the
/// 27 canonical basis states. Exact: the constant-field flow is linear, so
/// this is not a linearization.
inline LinearSystem build_linear_system(const Params& p) {
    if (is_linear(p.field))
        throw Error(ErrorKind::not_linear,
                    "the monopole-density flow is bilinear; the matrix oracle only covers the "
                    "constant field");
    Mat a(27);
    for (int j = 0; j < 27; ++j) {
        State27 basis{}, dy{};
        basis[j] = 1.0;
        detail::rhs27(basis.data(), p, dy.data());
        for (int i = 0; i < 27; ++i) a(i, j) = dy[i];
    }
    return {a};
}

/// RK4 integration of the classical equations of motion
///   m q'' = e q' x B(q) - m w^2 z e_z,
/// in first-order form; no moment content. Samples at every step, initial
/// state included, last step clipped to t_end.
inline std::vector<Means6> classical_trajectory(const Means6& init, const Params& p, double t_end,
                                                double dt) {
    if (!(std::isfinite(dt) && dt > 0.0))
        throw Error(ErrorKind::invalid_argument, "dt must be > 0");
    if (!(std::isfinite(t_end) && t_end >= 0.0))
        throw Error(ErrorKind::invalid_argument, "t_end must be finite and >= 0");

    auto rhs = [&p](const Means6& y, Means6& dy) {
        const double inv_m = 1.0 / p.mass;
        const Vec3 v = {y[3] * inv_m, y[4] * inv_m, y[5] * inv_m};
        const Vec3 B = field_eval(p.field, {y[0], y[1], y[2]});
        dy[0] = v[0];
        dy[1] = v[1];
        dy[2] = v[2];
        dy[3] = p.charge * (v[1] * B[2] - v[2] * B[1]);
        dy[4] = p.charge * (v[2] * B[0] - v[0] * B[2]);
        dy[5] = p.charge * (v[0] * B[1] - v[1] * B[0]) - p.mass * p.omega * p.omega * y[2];
    };

    std::vector<Means6> out;
    out.push_back(init);
    double t = 0.0;
    Means6 y = init;
    while (t < t_end) {
        const double h = std::min(dt, t_end - t);
        Means6 k1, k2, k3, k4, tmp;
        rhs(y, k1);
        for (int i = 0; i < 6; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
        rhs(tmp, k2);
        for (int i = 0; i < 6; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
        rhs(tmp, k3);
        for (int i = 0; i < 6; ++i) tmp[i] = y[i] + h * k3[i];
        rhs(tmp, k4);
        for (int i = 0; i < 6; ++i) y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        for (double v : y)
            if (!std::isfinite(v))
                throw Error(ErrorKind::numerical_failure, "non-finite classical state");
        t = (h < dt) ? t_end : t + h;
        out.push_back(y);
    }
    return out;
}

}  // namespace monodyn::oracle
