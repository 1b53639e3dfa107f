#pragma once

#include <Eigen/Core>

#include <cmath>

namespace pinn {

// Forward-mode scalar carrying a value and N partial derivatives. The
// component right-hand sides are templated on the scalar type, so
// instantiating them with Dual<N> yields exact Jacobian columns without a
// separate derivative implementation.
template <int N>
struct Dual {
    using Partials = Eigen::Matrix<double, 1, N>;

    double v = 0.0;
    Partials d = Partials::Zero();

    Dual() = default;
    Dual(double value) : v(value) {}  // NOLINT(google-explicit-constructor)
    Dual(double value, const Partials& partials) : v(value), d(partials) {}

    // Seeds the k-th independent variable.
    [[nodiscard]] static Dual variable(double value, int k) {
        Dual r(value);
        r.d[k] = 1.0;
        return r;
    }

    Dual& operator+=(const Dual& o) { v += o.v; d += o.d; return *this; }
    Dual& operator-=(const Dual& o) { v -= o.v; d -= o.d; return *this; }
    Dual& operator*=(const Dual& o) { d = d * o.v + o.d * v; v *= o.v; return *this; }
    Dual& operator/=(const Dual& o) { d = (d * o.v - o.d * v) / (o.v * o.v); v /= o.v; return *this; }
};

template <int N> [[nodiscard]] inline Dual<N> operator+(Dual<N> a, const Dual<N>& b) { return a += b; }
template <int N> [[nodiscard]] inline Dual<N> operator-(Dual<N> a, const Dual<N>& b) { return a -= b; }
template <int N> [[nodiscard]] inline Dual<N> operator*(Dual<N> a, const Dual<N>& b) { return a *= b; }
template <int N> [[nodiscard]] inline Dual<N> operator/(Dual<N> a, const Dual<N>& b) { return a /= b; }
template <int N> [[nodiscard]] inline Dual<N> operator-(const Dual<N>& a) { return {-a.v, (-a.d).eval()}; }

template <int N> [[nodiscard]] inline Dual<N> operator+(double a, Dual<N> b) { b.v += a; return b; }
template <int N> [[nodiscard]] inline Dual<N> operator-(double a, const Dual<N>& b) { return {a - b.v, (-b.d).eval()}; }
template <int N> [[nodiscard]] inline Dual<N> operator*(double a, Dual<N> b) { b.v *= a; b.d *= a; return b; }
template <int N> [[nodiscard]] inline Dual<N> operator/(double a, const Dual<N>& b) {
    return {a / b.v, (-(a / (b.v * b.v)) * b.d).eval()};
}
template <int N> [[nodiscard]] inline Dual<N> operator+(Dual<N> a, double b) { a.v += b; return a; }
template <int N> [[nodiscard]] inline Dual<N> operator-(Dual<N> a, double b) { a.v -= b; return a; }
template <int N> [[nodiscard]] inline Dual<N> operator*(Dual<N> a, double b) { a.v *= b; a.d *= b; return a; }
template <int N> [[nodiscard]] inline Dual<N> operator/(Dual<N> a, double b) { a.v /= b; a.d /= b; return a; }

template <int N> [[nodiscard]] inline Dual<N> sin(const Dual<N>& a) {
    return {std::sin(a.v), (std::cos(a.v) * a.d).eval()};
}
template <int N> [[nodiscard]] inline Dual<N> cos(const Dual<N>& a) {
    return {std::cos(a.v), (-std::sin(a.v) * a.d).eval()};
}
template <int N> [[nodiscard]] inline Dual<N> exp(const Dual<N>& a) {
    const double e = std::exp(a.v);
    return {e, (e * a.d).eval()};
}
template <int N> [[nodiscard]] inline Dual<N> sqrt(const Dual<N>& a) {
    const double s = std::sqrt(a.v);
    return {s, (a.d / (2.0 * s)).eval()};
}

[[nodiscard]] inline double value(double x) { return x; }
template <int N> [[nodiscard]] inline double value(const Dual<N>& x) { return x.v; }

}  // namespace pinn
