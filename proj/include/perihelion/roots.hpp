#ifndef PERIHELION_ROOTS_HPP
#define PERIHELION_ROOTS_HPP

#include "errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace perihelion::roots {

struct NewtonOptions {
    double abs_tol = 1e-13;
    double rel_tol = 0.0;
    int max_newton_iterations = 50;
    int max_bisections = 200;
};

struct RootResult {
    double root = 0.0;
    int newton_iterations = 0;
    int bisections = 0;
    bool fell_back = false; ///< bisection took over after Newton stalled
};

/// Safeguarded Newton iteration on a bracket [lo, hi] with f(lo), f(hi) of opposite sign.
///
/// A Newton step is taken whenever it stays inside the current bracket and shrinks the
/// residual; otherwise the step is a bisection. After max_newton_iterations Newton steps
/// the solver switches to pure bisection. Convergence is declared when the last step is
/// below max(abs_tol, rel_tol*|x|, 4 ulp(x)).
template <class F, class DF>
RootResult newton_bisect(F&& f, DF&& df, double lo, double hi, double x0,
                         const NewtonOptions& opt = {}) {
    if (!(lo <= hi)) throw DomainError("newton_bisect: empty bracket");
    double flo = f(lo);
    double fhi = f(hi);
    RootResult res;
    if (flo == 0.0) { res.root = lo; return res; }
    if (fhi == 0.0) { res.root = hi; return res; }
    if ((flo > 0.0) == (fhi > 0.0)) {
        throw ConvergenceError("newton_bisect: no sign change on [" + std::to_string(lo) + ", " +
                               std::to_string(hi) + "]");
    }
    const bool increasing = flo < 0.0;

    auto tolerance = [&](double x) {
        const double ulp = std::nextafter(std::abs(x), std::numeric_limits<double>::infinity()) -
                           std::abs(x);
        return std::max({opt.abs_tol, opt.rel_tol * std::abs(x), 4.0 * ulp});
    };

    double x = (x0 > lo && x0 < hi) ? x0 : 0.5 * (lo + hi);
    const int max_total = opt.max_newton_iterations + opt.max_bisections;
    for (int it = 0; it < max_total; ++it) {
        const double fx = f(x);
        if (fx == 0.0) { res.root = x; return res; }
        if ((fx < 0.0) == increasing) lo = x; else hi = x;

        double next;
        const double d = (res.newton_iterations < opt.max_newton_iterations) ? df(x) : 0.0;
        const double newton = (d != 0.0 && std::isfinite(d)) ? x - fx / d : lo - 1.0;
        if (newton > lo && newton < hi) {
            next = newton;
            ++res.newton_iterations;
        } else {
            next = 0.5 * (lo + hi);
            ++res.bisections;
            if (res.newton_iterations >= opt.max_newton_iterations) res.fell_back = true;
        }
        const double step = std::abs(next - x);
        x = next;
        if (step <= tolerance(x) || (hi - lo) <= tolerance(x)) {
            res.root = x;
            return res;
        }
    }
    throw ConvergenceError("newton_bisect: no convergence within iteration budget");
}

/// Plain bisection, used by tests as an independent oracle and by event location.
template <class F>
double bisect(F&& f, double lo, double hi, double tol, int max_iter = 400) {
    double flo = f(lo);
    if (flo == 0.0) return lo;
    const double fhi = f(hi);
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0)) throw ConvergenceError("bisect: no sign change");
    for (int i = 0; i < max_iter && (hi - lo) > tol; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) { lo = mid; flo = fm; } else { hi = mid; }
    }
    return 0.5 * (lo + hi);
}

} // namespace perihelion::roots

#endif // PERIHELION_ROOTS_HPP
