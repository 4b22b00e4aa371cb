#ifndef DIRICHLET_MC_LINALG_HPP
#define DIRICHLET_MC_LINALG_HPP

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace dmc::linalg {

//! Largest |m_ij - m_ji| over a row-major d x d matrix.
inline double max_asymmetry(std::span<const double> m, std::size_t d) {
    double worst = 0.0;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j)
            worst = std::max(worst, std::abs(m[i * d + j] - m[j * d + i]));
    return worst;
}

inline bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

//! Smallest eigenvalue of the symmetric part of a d x d matrix
//! (cyclic Jacobi; exact for d = 1, closed form would do for d = 2 but the
//! sweep handles every d uniformly).
inline double min_eigenvalue_sym(std::span<const double> m, std::size_t d) {
    if (d == 1) return m[0];
    std::vector<double> a(d * d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            a[i * d + j] = 0.5 * (m[i * d + j] + m[j * d + i]);

    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = i + 1; j < d; ++j)
                off += a[i * d + j] * a[i * d + j];
        if (off < 1e-300) break;
        for (std::size_t p = 0; p < d; ++p) {
            for (std::size_t q = p + 1; q < d; ++q) {
                const double apq = a[p * d + q];
                if (apq == 0.0) continue;
                const double theta = (a[q * d + q] - a[p * d + p]) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double cs = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * cs;
                for (std::size_t k = 0; k < d; ++k) {
                    const double akp = a[k * d + p];
                    const double akq = a[k * d + q];
                    a[k * d + p] = cs * akp - sn * akq;
                    a[k * d + q] = sn * akp + cs * akq;
                }
                for (std::size_t k = 0; k < d; ++k) {
                    const double apk = a[p * d + k];
                    const double aqk = a[q * d + k];
                    a[p * d + k] = cs * apk - sn * aqk;
                    a[q * d + k] = sn * apk + cs * aqk;
                }
            }
        }
    }
    double lo = a[0];
    for (std::size_t i = 1; i < d; ++i) lo = std::min(lo, a[i * d + i]);
    return lo;
}

//! In-place lower Cholesky of a symmetric positive definite matrix.
//! Returns false when a pivot is not strictly positive.
inline bool cholesky(std::vector<double>& a, std::size_t d) {
    for (std::size_t j = 0; j < d; ++j) {
        double diag = a[j * d + j];
        for (std::size_t k = 0; k < j; ++k) diag -= a[j * d + k] * a[j * d + k];
        if (!(diag > 0.0) || !std::isfinite(diag)) return false;
        const double ljj = std::sqrt(diag);
        a[j * d + j] = ljj;
        for (std::size_t i = j + 1; i < d; ++i) {
            double s = a[i * d + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * d + k] * a[j * d + k];
            a[i * d + j] = s / ljj;
        }
    }
    return true;
}

struct QuadForm {
    double log_det = 0.0;   //!< log det of the factored matrix
    double quad = 0.0;      //!< z^T M^{-1} z
};

//! Factor M (symmetrized) and evaluate log det M and z^T M^{-1} z.
inline std::optional<QuadForm> cholesky_quad_form(std::span<const double> m,
                                                  std::span<const double> z,
                                                  std::size_t d) {
    std::vector<double> a(d * d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            a[i * d + j] = 0.5 * (m[i * d + j] + m[j * d + i]);
    if (!cholesky(a, d)) return std::nullopt;
    QuadForm out;
    std::vector<double> y(d);
    for (std::size_t i = 0; i < d; ++i) {
        double s = z[i];
        for (std::size_t k = 0; k < i; ++k) s -= a[i * d + k] * y[k];
        y[i] = s / a[i * d + i];
        out.quad += y[i] * y[i];
        out.log_det += 2.0 * std::log(a[i * d + i]);
    }
    return out;
}

} // namespace dmc::linalg

#endif
