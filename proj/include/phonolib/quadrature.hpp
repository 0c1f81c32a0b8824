#pragma once

#include <cmath>
#include <cstddef>
#include <queue>
#include <string>
#include <vector>

#include "errors.hpp"

namespace phonolib {

struct QuadratureOptions {
    double abs_tol = 1e-12;
    double rel_tol = 1e-10;
    std::size_t max_panels = 4000;
};

struct QuadratureResult {
    double value = 0.0;
    double abs_error = 0.0;
    std::size_t panels = 0;
    std::size_t evaluations = 0;
};

namespace detail {

struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

// Gauss-Kronrod 7/15 on [a, b]; error is |K15 - G7|.
template <class F>
Panel gauss_kronrod_15(const F& f, double a, double b) {
    static constexpr double xk[8] = {
        0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
        0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
        0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
        0.207784955007898467600689403773245, 0.0};
    static constexpr double wk[8] = {
        0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
        0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
        0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
        0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
    static constexpr double wg[4] = {
        0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
        0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    double k15 = wk[7] * fc;
    double g7 = wg[3] * fc;
    for (int j = 0; j < 7; ++j) {
        const double dx = h * xk[j];
        const double s = f(c - dx) + f(c + dx);
        k15 += wk[j] * s;
        if (j % 2 == 1) g7 += wg[j / 2] * s;
    }
    k15 *= h;
    g7 *= h;
    return {a, b, k15, std::abs(k15 - g7)};
}

}  // namespace detail

// Globally adaptive bisection: always split the panel with the largest error.
template <class F>
QuadratureResult integrate(const F& f, double a, double b, const QuadratureOptions& opt = {}) {
    QuadratureResult out;
    if (a == b) return out;
    if (!std::isfinite(a) || !std::isfinite(b)) throw DomainError("integrate: bounds must be finite");
    const double sign = b < a ? -1.0 : 1.0;
    if (b < a) std::swap(a, b);

    std::priority_queue<detail::Panel> heap;
    heap.push(detail::gauss_kronrod_15(f, a, b));
    double total = heap.top().value;
    double error = heap.top().error;
    out.evaluations = 15;

    while (error > std::max(opt.abs_tol, opt.rel_tol * std::abs(total))) {
        if (heap.size() >= opt.max_panels) {
            throw NumericalError("integrate: no convergence on [" + std::to_string(a) + ", " + std::to_string(b) +
                                 "] after " + std::to_string(heap.size()) + " panels; estimate " +
                                 std::to_string(total) + ", error " + std::to_string(error));
        }
        const detail::Panel p = heap.top();
        heap.pop();
        const double m = 0.5 * (p.a + p.b);
        if (!(m > p.a && m < p.b)) {
            throw NumericalError("integrate: panel at " + std::to_string(p.a) +
                                 " cannot be split further; error " + std::to_string(error));
        }
        const auto left = detail::gauss_kronrod_15(f, p.a, m);
        const auto right = detail::gauss_kronrod_15(f, m, p.b);
        out.evaluations += 30;
        total += left.value + right.value - p.value;
        error += left.error + right.error - p.error;
        heap.push(left);
        heap.push(right);
    }

    // Re-sum to shed drift from incremental updates.
    double value = 0.0, err = 0.0;
    out.panels = heap.size();
    while (!heap.empty()) {
        value += heap.top().value;
        err += heap.top().error;
        heap.pop();
    }
    out.value = sign * value;
    out.abs_error = err;
    if (!std::isfinite(out.value)) throw NumericalError("integrate: non-finite result");
    return out;
}

}  // namespace phonolib
