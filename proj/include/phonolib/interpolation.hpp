#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "errors.hpp"

namespace phonolib {

// Shape-preserving piecewise cubic Hermite interpolant (Fritsch-Carlson limiter).
class MonotoneCubic {
public:
    MonotoneCubic() = default;
    MonotoneCubic(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
        if (x_.size() != y_.size()) throw PreconditionError("interpolation: x and y sizes differ");
        if (x_.size() < 2) throw PreconditionError("interpolation: need at least 2 samples");
        for (std::size_t i = 1; i < x_.size(); ++i)
            if (!(x_[i] > x_[i - 1])) throw PreconditionError("interpolation: x must be strictly increasing");
        build();
    }

    double lower() const { return x_.front(); }
    double upper() const { return x_.back(); }
    bool empty() const { return x_.empty(); }
    const std::vector<double>& xs() const { return x_; }
    const std::vector<double>& ys() const { return y_; }

    double operator()(double x) const {
        const std::size_t i = locate(x);
        const double h = x_[i + 1] - x_[i];
        const double t = (x - x_[i]) / h;
        const double t2 = t * t, t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * y_[i] + (t3 - 2 * t2 + t) * h * m_[i] + (-2 * t3 + 3 * t2) * y_[i + 1] +
               (t3 - t2) * h * m_[i + 1];
    }

    // Exact integral of the interpolant from lower() to x.
    double integral(double x) const {
        const std::size_t i = locate(x);
        double s = cumulative_[i];
        const double h = x_[i + 1] - x_[i];
        const double t = (x - x_[i]) / h;
        const double t2 = t * t, t3 = t2 * t, t4 = t3 * t;
        s += h * ((t4 / 2 - t3 + t) * y_[i] + (t4 / 4 - 2 * t3 / 3 + t2 / 2) * h * m_[i] +
                  (-t4 / 2 + t3) * y_[i + 1] + (t4 / 4 - t3 / 3) * h * m_[i + 1]);
        return s;
    }

private:
    std::size_t locate(double x) const {
        if (!(x >= x_.front() && x <= x_.back()))
            throw DomainError("interpolation: " + std::to_string(x) + " outside table [" +
                              std::to_string(x_.front()) + ", " + std::to_string(x_.back()) + "]");
        const auto it = std::upper_bound(x_.begin(), x_.end(), x);
        const std::size_t i = static_cast<std::size_t>(it - x_.begin());
        return std::min(i == 0 ? 0 : i - 1, x_.size() - 2);
    }

    void build() {
        const std::size_t n = x_.size();
        std::vector<double> d(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) d[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
        m_.assign(n, 0.0);
        m_[0] = d[0];
        m_[n - 1] = d[n - 2];
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
            m_[i] = (d[i - 1] * h1 + d[i] * h0) / (h0 + h1);
        }
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (d[i] == 0.0) {
                m_[i] = m_[i + 1] = 0.0;
                continue;
            }
            if (m_[i] * d[i] < 0.0) m_[i] = 0.0;
            if (m_[i + 1] * d[i] < 0.0) m_[i + 1] = 0.0;
            const double a = m_[i] / d[i], b = m_[i + 1] / d[i];
            const double r = a * a + b * b;
            if (r > 9.0) {
                const double tau = 3.0 / std::sqrt(r);
                m_[i] = tau * a * d[i];
                m_[i + 1] = tau * b * d[i];
            }
        }
        cumulative_.assign(n, 0.0);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double h = x_[i + 1] - x_[i];
            cumulative_[i + 1] = cumulative_[i] + h * (y_[i] + y_[i + 1]) / 2 + h * h * (m_[i] - m_[i + 1]) / 12;
        }
    }

    std::vector<double> x_, y_, m_, cumulative_;
};

}  // namespace phonolib
