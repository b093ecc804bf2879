#ifndef PERIHELION_QUADRATURE_HPP
#define PERIHELION_QUADRATURE_HPP

#include "errors.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <string>
#include <type_traits>

namespace perihelion::quadrature {

struct Result {
    double value = 0.0;
    double error_estimate = 0.0;
    std::size_t intervals = 0;
};

namespace detail {

inline std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

// GSL's default handler aborts; every call site here checks return codes instead.
inline void silence_gsl() {
    static const bool once = [] {
        gsl_set_error_handler_off();
        return true;
    }();
    (void)once;
}

struct WorkspaceDeleter {
    void operator()(gsl_integration_workspace* w) const { gsl_integration_workspace_free(w); }
};

template <class F>
double trampoline(double x, void* params) {
    return (*static_cast<F*>(params))(x);
}

} // namespace detail

/// Adaptive Gauss-Kronrod (21-point rule) integration to an absolute error target.
///
/// A result limited by rounding is accepted when its estimate is within the target or at the
/// rounding floor of the value;
/// any other failure throws ConvergenceError.
template <class F>
Result integrate(F&& f, double lo, double hi, double abs_tol, std::size_t max_intervals = 4000) {
    detail::silence_gsl();
    if (lo == hi) return {};
    using Fn = std::remove_reference_t<F>;
    gsl_function gf;
    gf.function = &detail::trampoline<Fn>;
    gf.params = const_cast<void*>(static_cast<const void*>(std::addressof(f)));
    std::unique_ptr<gsl_integration_workspace, detail::WorkspaceDeleter> ws(
        gsl_integration_workspace_alloc(max_intervals));
    Result r;
    const int status = gsl_integration_qag(&gf, lo, hi, abs_tol, 0.0, max_intervals, GSL_INTEG_GAUSS21,
                                           ws.get(), &r.value, &r.error_estimate);
    r.intervals = ws->size;
    const double rounding_floor = 64.0 * std::numeric_limits<double>::epsilon() * std::abs(r.value);
    if (status != GSL_SUCCESS &&
        !(status == GSL_EROUND && r.error_estimate <= std::max(abs_tol, rounding_floor))) {
        throw ConvergenceError("quadrature: tolerance " + detail::sci(abs_tol) + " not met on [" +
                               detail::sci(lo) + ", " + detail::sci(hi) + "] (" + gsl_strerror(status) +
                               ", estimate " + detail::sci(r.error_estimate) + ")");
    }
    return r;
}

/// Split [lo, hi] into equal panels and integrate each adaptively. Intended for long ranges
/// of an oscillating integrand, with roughly one panel per oscillation.
template <class F>
Result integrate_panels(F&& f, double lo, double hi, double abs_tol, int panels) {
    if (panels < 1) panels = 1;
    Result total;
    const double w = (hi - lo) / panels;
    for (int i = 0; i < panels; ++i) {
        const double a = lo + w * i;
        const double b = (i + 1 == panels) ? hi : lo + w * (i + 1);
        const Result part = integrate(f, a, b, abs_tol / panels);
        total.value += part.value;
        total.error_estimate += part.error_estimate;
        total.intervals += part.intervals;
    }
    return total;
}

} // namespace perihelion::quadrature

#endif // PERIHELION_QUADRATURE_HPP
