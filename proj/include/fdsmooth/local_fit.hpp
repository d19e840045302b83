#pragma once

#include <cmath>
#include <cstddef>
#include <optional>

namespace fdsmooth {

namespace detail {

// Relative determinant floor: a system is treated as singular when
// |det| <= tol * (trace/dim)^dim, which is scale invariant and zero-safe.
inline bool is_singular(double det, double trace, int dim, double tol = 1e-12) {
    double scale = trace / dim;
    double floor_ = tol;
    for (int d = 0; d < dim; ++d) floor_ *= scale;
    return !(std::fabs(det) > std::fabs(floor_));
}

}  // namespace detail

// Weighted local linear fit in one dimension. Accumulates the 2x2 normal
// equations over points with rescaled abscissa x = (u_obs - u0)/h and weight
// c = w * K_h(u_obs - u0), then returns the intercept.
struct LocalLinear1D {
    double s0 = 0, s1 = 0, s2 = 0;  // sum c * x^a
    double r0 = 0, r1 = 0;          // sum c * x^a * y

    void add(double x, double c, double y) {
        s0 += c;
        const double cx = c * x;
        s1 += cx;
        s2 += cx * x;
        r0 += c * y;
        r1 += cx * y;
    }
    void add_moments(double m0, double m1, double m2, double q0, double q1) {
        s0 += m0; s1 += m1; s2 += m2;
        r0 += q0; r1 += q1;
    }

    std::optional<double> intercept() const {
        const double det = s0 * s2 - s1 * s1;
        if (detail::is_singular(det, s0 + s2, 2)) return std::nullopt;
        return (s2 * r0 - s1 * r1) / det;
    }
};

// Weighted local plane fit in two dimensions: basis {1, x, y} with
// x = (u_obs - u0)/h, y = (v_obs - v0)/h, weight c = w * K_h(.) * K_h(.).
// The 3x3 moment matrix is symmetric:
//   [ m00 m10 m01 ]
//   [ m10 m20 m11 ]
//   [ m01 m11 m02 ]
struct LocalPlane {
    double m00 = 0, m10 = 0, m01 = 0, m20 = 0, m11 = 0, m02 = 0;
    double z0 = 0, z1 = 0, z2 = 0;  // responses against {1, x, y}

    void add(double x, double y, double c, double value) {
        m00 += c;
        const double cx = c * x, cy = c * y;
        m10 += cx;
        m01 += cy;
        m20 += cx * x;
        m11 += cx * y;
        m02 += cy * y;
        z0 += c * value;
        z1 += cx * value;
        z2 += cy * value;
    }
    void add_moments(double a00, double a10, double a01, double a20, double a11, double a02,
                     double b0, double b1, double b2) {
        m00 += a00; m10 += a10; m01 += a01;
        m20 += a20; m11 += a11; m02 += a02;
        z0 += b0; z1 += b1; z2 += b2;
    }

    std::optional<double> intercept() const {
        const double a = m00, b = m10, c = m01, d = m20, e = m11, f = m02;
        const double c00 = d * f - e * e;
        const double c01 = c * e - b * f;
        const double c02 = b * e - c * d;
        const double det = a * c00 + b * c01 + c * c02;
        if (detail::is_singular(det, a + d + f, 3)) return std::nullopt;
        return (c00 * z0 + c01 * z1 + c02 * z2) / det;
    }
};

}  // namespace fdsmooth
