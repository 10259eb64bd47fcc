#pragma once

#include <array>
#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include "errors.hpp"

namespace accsim {

using Vec3 = std::array<double, 3>;
using EigenTriple = std::array<std::complex<double>, 3>;

// Row-major 3x3. Everything here is small enough to do in closed form,
// so there is no dependency on a general linear algebra package.
struct Matrix3 {
    std::array<double, 9> a{};

    double& operator()(int r, int c) { return a[3 * r + c]; }
    double operator()(int r, int c) const { return a[3 * r + c]; }

    static Matrix3 identity() {
        Matrix3 m;
        m(0, 0) = m(1, 1) = m(2, 2) = 1.0;
        return m;
    }

    static Matrix3 diagonal(double d0, double d1, double d2) {
        Matrix3 m;
        m(0, 0) = d0;
        m(1, 1) = d1;
        m(2, 2) = d2;
        return m;
    }

    Matrix3 transposed() const {
        Matrix3 t;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                t(c, r) = (*this)(r, c);
        return t;
    }
};

inline Matrix3 operator+(const Matrix3& x, const Matrix3& y) {
    Matrix3 r;
    for (int i = 0; i < 9; ++i) r.a[i] = x.a[i] + y.a[i];
    return r;
}

inline Matrix3 operator-(const Matrix3& x, const Matrix3& y) {
    Matrix3 r;
    for (int i = 0; i < 9; ++i) r.a[i] = x.a[i] - y.a[i];
    return r;
}

inline Matrix3 operator*(double s, const Matrix3& x) {
    Matrix3 r;
    for (int i = 0; i < 9; ++i) r.a[i] = s * x.a[i];
    return r;
}

inline Matrix3 operator*(const Matrix3& x, const Matrix3& y) {
    Matrix3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += x(i, k) * y(k, j);
            r(i, j) = s;
        }
    return r;
}

inline Vec3 operator*(const Matrix3& m, const Vec3& v) {
    Vec3 r{};
    for (int i = 0; i < 3; ++i)
        r[i] = m(i, 0) * v[0] + m(i, 1) * v[1] + m(i, 2) * v[2];
    return r;
}

inline double max_abs(const Matrix3& m) {
    double r = 0.0;
    for (double x : m.a) r = std::max(r, std::abs(x));
    return r;
}

inline bool is_symmetric(const Matrix3& m, double tol = 1e-12) {
    const double scale = std::max(1.0, max_abs(m));
    return std::abs(m(0, 1) - m(1, 0)) <= tol * scale &&
           std::abs(m(0, 2) - m(2, 0)) <= tol * scale &&
           std::abs(m(1, 2) - m(2, 1)) <= tol * scale;
}

// x^T M x.
inline double quad_form(const Matrix3& m, const Vec3& x) {
    const Vec3 mx = m * x;
    return x[0] * mx[0] + x[1] * mx[1] + x[2] * mx[2];
}

// Sylvester criterion on the leading principal minors. Requires symmetry up
// to a small tolerance; deliberately strict so a typo in a hand-built matrix
// fails loudly instead of passing as "almost symmetric".
inline bool is_positive_definite(const Matrix3& m) {
    if (!is_symmetric(m))
        throw std::invalid_argument("is_positive_definite: matrix is not symmetric");
    const double m1 = m(0, 0);
    const double m2 = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    const double m3 = m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
                      m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
                      m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
    return m1 > 0.0 && m2 > 0.0 && m3 > 0.0;
}

// Coefficient map between an eigenvalue triple and the observer gain triple.
// The error matrix has characteristic polynomial
//   lambda^3 - g1 lambda^2 - g2 lambda - g3,
// so by Vieta: g1 = sum, g2 = -(sum of pairwise products), g3 = product.
// Input must be a real triple or one real value plus a conjugate pair.
inline std::array<double, 3> gains_from_eigenvalues(const EigenTriple& lambda) {
    double scale = 1.0;
    for (const auto& l : lambda) scale = std::max(scale, std::abs(l));
    const double tol = 1e-9 * scale;

    int complex_count = 0;
    for (const auto& l : lambda)
        if (std::abs(l.imag()) > tol) ++complex_count;

    if (complex_count == 1 || complex_count == 3)
        throw spectrum_error("eigenvalue triple is not closed under conjugation");
    if (complex_count == 2) {
        // Exactly two non-real values: they must be conjugates of each other.
        std::array<std::complex<double>, 2> c;
        int n = 0;
        for (const auto& l : lambda)
            if (std::abs(l.imag()) > tol) c[n++] = l;
        if (std::abs(c[0] - std::conj(c[1])) > tol)
            throw spectrum_error("complex eigenvalues must form a conjugate pair");
    }

    const std::complex<double> s1 = lambda[0] + lambda[1] + lambda[2];
    const std::complex<double> s2 =
        lambda[0] * lambda[1] + lambda[0] * lambda[2] + lambda[1] * lambda[2];
    const std::complex<double> s3 = lambda[0] * lambda[1] * lambda[2];
    return {s1.real(), -s2.real(), s3.real()};
}

namespace detail {

// One Newton polish pass on lambda^3 + a2 l^2 + a1 l + a0; keeps the root
// where the derivative is too small to trust (multiple root).
inline double polish_real_root(double a2, double a1, double a0, double x) {
    for (int it = 0; it < 8; ++it) {
        const double f = ((x + a2) * x + a1) * x + a0;
        const double fp = (3.0 * x + 2.0 * a2) * x + a1;
        if (std::abs(fp) < 1e-12 * std::max(1.0, std::abs(x) * std::abs(x)))
            break;
        const double step = f / fp;
        x -= step;
        if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(x)))
            break;
    }
    return x;
}

} // namespace detail

// Roots of lambda^3 - g1 lambda^2 - g2 lambda - g3 (the observer error
// matrix spectrum), closed form with a Newton polish, sorted by real part
// then imaginary part. Conjugate symmetry of complex pairs is exact by
// construction.
inline EigenTriple eigenvalues_of_error_matrix(double g1, double g2, double g3) {
    // Monic form lambda^3 + a2 l^2 + a1 l + a0.
    const double a2 = -g1;
    const double a1 = -g2;
    const double a0 = -g3;

    // Depressed cubic t^3 + p t + q with lambda = t - a2/3.
    const double shift = a2 / 3.0;
    const double p = a1 - a2 * a2 / 3.0;
    const double q = 2.0 * a2 * a2 * a2 / 27.0 - a2 * a1 / 3.0 + a0;

    const double disc = q * q / 4.0 + p * p * p / 27.0;

    EigenTriple out;
    if (disc > 0.0) {
        // One real root; pick the Cardano branch that avoids cancellation.
        const double sd = std::sqrt(disc);
        const double u = std::cbrt(-q / 2.0 - std::copysign(sd, q));
        const double v = (u == 0.0) ? 0.0 : -p / (3.0 * u);
        double r = detail::polish_real_root(a2, a1, a0, u + v - shift);
        // Deflate: lambda^2 + b l + c remains.
        const double b = a2 + r;
        const double c = a1 + r * b;
        const double qd = b * b - 4.0 * c;
        if (qd >= 0.0) {
            // Borderline discriminant; all roots effectively real.
            const double s = std::sqrt(qd);
            out = {std::complex<double>(r, 0.0),
                   std::complex<double>((-b - s) / 2.0, 0.0),
                   std::complex<double>((-b + s) / 2.0, 0.0)};
        } else {
            const double re = -b / 2.0;
            const double im = std::sqrt(-qd) / 2.0;
            out = {std::complex<double>(r, 0.0),
                   std::complex<double>(re, -im),
                   std::complex<double>(re, im)};
        }
    } else {
        // Three real roots (trigonometric form), then polish each.
        double r0, r1, r2;
        if (p == 0.0) {
            r0 = r1 = r2 = std::cbrt(-q);
        } else {
            const double m = 2.0 * std::sqrt(-p / 3.0);
            double arg = 3.0 * q / (p * m);
            arg = std::clamp(arg, -1.0, 1.0);
            const double theta = std::acos(arg) / 3.0;
            constexpr double pi = std::numbers::pi;
            r0 = m * std::cos(theta);
            r1 = m * std::cos(theta - 2.0 * pi / 3.0);
            r2 = m * std::cos(theta - 4.0 * pi / 3.0);
        }
        std::array<double, 3> roots = {r0 - shift, r1 - shift, r2 - shift};
        for (double& r : roots) r = detail::polish_real_root(a2, a1, a0, r);
        out = {std::complex<double>(roots[0], 0.0),
               std::complex<double>(roots[1], 0.0),
               std::complex<double>(roots[2], 0.0)};
    }

    std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
        if (x.real() != y.real()) return x.real() < y.real();
        return x.imag() < y.imag();
    });
    return out;
}

// Routh-Hurwitz test specialized to lambda^3 - g1 l^2 - g2 l - g3:
// stable iff g1 < 0, g3 < 0 and g1*g2 > -g3.
inline bool is_hurwitz(double g1, double g2, double g3) {
    return g1 < 0.0 && g3 < 0.0 && g1 * g2 > -g3;
}

// Solve A^T P + P A + Q = 0 for symmetric P, with Q symmetric positive
// definite. Exploits symmetry: six unknowns, dense 6x6 Gaussian elimination
// with partial pivoting. Throws lyapunov_error when A is not Hurwitz (the
// system is singular, or the solution fails the definiteness check).
inline Matrix3 solve_continuous_lyapunov(const Matrix3& A, const Matrix3& Q) {
    if (!is_positive_definite(Q))
        throw std::invalid_argument("solve_continuous_lyapunov: Q must be symmetric positive definite");

    // Unknown ordering: p00 p01 p02 p11 p12 p22.
    constexpr int idx[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};

    double M[6][7] = {};
    int row = 0;
    for (int i = 0; i < 3; ++i) {
        for (int j = i; j < 3; ++j) {
            // Equation (i,j): sum_k A(k,i) P(k,j) + P(i,k) A(k,j) = -Q(i,j).
            for (int k = 0; k < 3; ++k) {
                M[row][idx[k][j]] += A(k, i);
                M[row][idx[i][k]] += A(k, j);
            }
            M[row][6] = -Q(i, j);
            ++row;
        }
    }

    for (int col = 0; col < 6; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 6; ++r)
            if (std::abs(M[r][col]) > std::abs(M[pivot][col])) pivot = r;
        if (std::abs(M[pivot][col]) < 1e-12 * std::max(1.0, max_abs(A)))
            throw lyapunov_error("Lyapunov system is singular; matrix is not Hurwitz");
        if (pivot != col)
            for (int c = 0; c < 7; ++c) std::swap(M[pivot][c], M[col][c]);
        for (int r = col + 1; r < 6; ++r) {
            const double f = M[r][col] / M[col][col];
            if (f == 0.0) continue;
            for (int c = col; c < 7; ++c) M[r][c] -= f * M[col][c];
        }
    }

    double x[6];
    for (int r = 5; r >= 0; --r) {
        double s = M[r][6];
        for (int c = r + 1; c < 6; ++c) s -= M[r][c] * x[c];
        x[r] = s / M[r][r];
    }

    Matrix3 P;
    P(0, 0) = x[0];
    P(0, 1) = P(1, 0) = x[1];
    P(0, 2) = P(2, 0) = x[2];
    P(1, 1) = x[3];
    P(1, 2) = P(2, 1) = x[4];
    P(2, 2) = x[5];

    if (!is_positive_definite(P))
        throw lyapunov_error("Lyapunov solution is not positive definite; matrix is not Hurwitz");
    return P;
}

} // namespace accsim
