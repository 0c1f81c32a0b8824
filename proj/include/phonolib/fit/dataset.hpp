#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "../errors.hpp"

namespace phonolib::fit {

struct DataPoint {
    double x = 0.0;
    double y = 0.0;
    double sigma = 1.0;
};

struct Dataset {
    std::vector<DataPoint> points;
    std::string x_unit;
    std::string y_unit;
    std::string source;
    bool unweighted = false;
    std::vector<std::string> warnings;

    std::size_t size() const { return points.size(); }
    std::vector<double> xs() const {
        std::vector<double> v;
        for (const auto& p : points) v.push_back(p.x);
        return v;
    }
    std::vector<double> ys() const {
        std::vector<double> v;
        for (const auto& p : points) v.push_back(p.y);
        return v;
    }
};

// Sort by x and merge equal-x points by inverse-variance averaging.
inline void canonicalize(Dataset& d) {
    for (const auto& p : d.points) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw PreconditionError("dataset contains non-finite values");
        if (!(p.sigma > 0.0) || !std::isfinite(p.sigma)) throw PreconditionError("dataset sigma must be > 0");
    }
    std::stable_sort(d.points.begin(), d.points.end(),
                     [](const DataPoint& a, const DataPoint& b) { return a.x < b.x; });
    std::vector<DataPoint> merged;
    for (std::size_t i = 0; i < d.points.size();) {
        std::size_t j = i;
        double w = 0.0, wy = 0.0;
        while (j < d.points.size() && d.points[j].x == d.points[i].x) {
            const double wi = 1.0 / (d.points[j].sigma * d.points[j].sigma);
            w += wi;
            wy += wi * d.points[j].y;
            ++j;
        }
        if (j - i > 1)
            d.warnings.push_back("averaged " + std::to_string(j - i) + " points at x = " + std::to_string(d.points[i].x));
        merged.push_back({d.points[i].x, wy / w, 1.0 / std::sqrt(w)});
        i = j;
    }
    d.points = std::move(merged);
}

inline Dataset make_dataset(const std::vector<double>& x, const std::vector<double>& y,
                            const std::vector<double>& sigma = {}) {
    if (x.size() != y.size() || (!sigma.empty() && sigma.size() != x.size()))
        throw PreconditionError("make_dataset: column lengths differ");
    Dataset d;
    d.unweighted = sigma.empty();
    for (std::size_t i = 0; i < x.size(); ++i) d.points.push_back({x[i], y[i], sigma.empty() ? 1.0 : sigma[i]});
    canonicalize(d);
    return d;
}

}  // namespace phonolib::fit
