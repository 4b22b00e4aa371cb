#ifndef DIRICHLET_MC_QUADRATURE_HPP
#define DIRICHLET_MC_QUADRATURE_HPP

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

namespace dmc::analysis {

struct QuadratureResult {
    double value = 0.0;
    double achieved = 0.0;   //!< error estimate actually reached
    bool converged = false;
};

namespace detail {

struct SimpsonState {
    const std::function<double(double)>* f;
    long evaluations = 0;
    long max_evaluations = 0;
};

inline double simpson(double fa, double fm, double fb, double a, double b) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adapt(SimpsonState& st, double a, double b, double fa, double fm,
                    double fb, double whole, double tol, int depth, double& err) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = (*st.f)(lm);
    const double frm = (*st.f)(rm);
    st.evaluations += 2;
    const double left = simpson(fa, flm, fm, a, m);
    const double right = simpson(fm, frm, fb, m, b);
    const double delta = left + right - whole;
    if (depth <= 0 || st.evaluations > st.max_evaluations) {
        err += std::abs(delta);
        return left + right + delta / 15.0;
    }
    if (std::abs(delta) <= 15.0 * tol) {
        err += std::abs(delta) / 15.0;
        return left + right + delta / 15.0;
    }
    return adapt(st, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, err) +
           adapt(st, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, err);
}

} // namespace detail

//! Adaptive Simpson quadrature with absolute tolerance; the brute-force
//! integrator used to produce reference values for statistical tests.
inline QuadratureResult integrate(const std::function<double(double)>& f, double a,
                                  double b, double tol = 1e-10) {
    if (!(b >= a)) throw std::invalid_argument("integrate: b must be >= a");
    if (a == b) return {0.0, 0.0, true};
    detail::SimpsonState st{&f, 0, 4'000'000};
    const double fa = f(a);
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    const double fb = f(b);
    st.evaluations = 3;
    double err = 0.0;
    const double whole = detail::simpson(fa, fm, fb, a, b);
    const double value = detail::adapt(st, a, b, fa, fm, fb, whole, tol, 48, err);
    return {value, err, err <= tol * 1.5};
}

//! Same, but a failure to reach the tolerance throws (carrying the achieved
//! error), so a silent low-quality oracle can never leak into a test.
inline double quadrature_oracle(const std::function<double(double)>& f, double a,
                                double b, double tol = 1e-10) {
    const QuadratureResult r = integrate(f, a, b, tol);
    if (!r.converged)
        throw std::runtime_error("quadrature_oracle: tolerance not reached, achieved " +
                                 std::to_string(r.achieved));
    return r.value;
}

} // namespace dmc::analysis

#endif
