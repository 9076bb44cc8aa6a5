#pragma once

// Small shared vocabulary: 2-vectors, 2x2 matrices, error types and a few
// numeric helpers used across the toolkit.

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace homog {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2() = default;
    constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

    constexpr Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    constexpr Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
    constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
    Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
    Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }

    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    // 2D scalar cross product: u x w = u1*w2 - u2*w1.
    double cross(const Vec2& o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
    double norm2() const { return x * x + y * y; }
    Vec2 normalized() const {
        const double n = norm();
        return {x / n, y / n};
    }
    // Rotate by -90 degrees: (x,y) -> (y,-x).
    Vec2 perp_cw() const { return {y, -x}; }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

struct Mat2 {
    // Row-major: m[r][c].
    std::array<std::array<double, 2>, 2> m{{{0.0, 0.0}, {0.0, 0.0}}};

    static Mat2 identity() {
        Mat2 r;
        r.m[0][0] = r.m[1][1] = 1.0;
        return r;
    }
    static Mat2 outer(const Vec2& a, const Vec2& b) {
        Mat2 r;
        r.m[0][0] = a.x * b.x;
        r.m[0][1] = a.x * b.y;
        r.m[1][0] = a.y * b.x;
        r.m[1][1] = a.y * b.y;
        return r;
    }

    double& operator()(int r, int c) { return m[r][c]; }
    double operator()(int r, int c) const { return m[r][c]; }

    Mat2 operator+(const Mat2& o) const {
        Mat2 r;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) r.m[i][j] = m[i][j] + o.m[i][j];
        return r;
    }
    Mat2 operator-(const Mat2& o) const {
        Mat2 r;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) r.m[i][j] = m[i][j] - o.m[i][j];
        return r;
    }
    Mat2 operator*(double s) const {
        Mat2 r;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) r.m[i][j] = m[i][j] * s;
        return r;
    }
    // Row-vector contraction (v . M)_j = v_i M_ij.
    Vec2 left_mul(const Vec2& v) const {
        return {v.x * m[0][0] + v.y * m[1][0], v.x * m[0][1] + v.y * m[1][1]};
    }
    // Column contraction (M . v)_i = M_ij v_j.
    Vec2 mul(const Vec2& v) const {
        return {m[0][0] * v.x + m[0][1] * v.y, m[1][0] * v.x + m[1][1] * v.y};
    }

    double frobenius() const {
        double s = 0.0;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) s += m[i][j] * m[i][j];
        return std::sqrt(s);
    }
    // Eigenvalues of the symmetric part, ascending.
    std::array<double, 2> sym_eigenvalues() const {
        const double a = m[0][0], d = m[1][1];
        const double b = 0.5 * (m[0][1] + m[1][0]);
        const double mean = 0.5 * (a + d);
        const double r = std::sqrt(0.25 * (a - d) * (a - d) + b * b);
        return {mean - r, mean + r};
    }
};

// Error taxonomy. Validation problems are data/config mistakes (CLI exit 2),
// numerical/geometry failures happen mid-solve (CLI exit 3).
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};
struct ValidationError : Error {
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};
struct NumericalError : Error {
    explicit NumericalError(const std::string& msg) : Error(msg) {}
};
struct GeometryError : Error {
    explicit GeometryError(const std::string& msg) : Error(msg) {}
};

inline constexpr double kPi = 3.14159265358979323846;

// Least-squares slope of log(y) vs log(x). Points with y below `floor` are
// excluded (rounding floor); throws if fewer than two usable points remain.
double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y,
                        double floor = 1e-13);

// Gauss-Legendre nodes/weights on [-1,1], n in [1,64].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace homog
