#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "../errors.hpp"
#include "dataset.hpp"

namespace phonolib::fit {

struct Parameter {
    std::string name;
    double initial = 0.0;
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();
    bool fixed = false;
};

using ModelFunction = std::function<double(double, std::span<const double>)>;
using ModelGradient = std::function<void(double, std::span<const double>, std::span<double>)>;

struct ModelSpec {
    std::string id;
    std::vector<Parameter> params;
    ModelFunction value;
    ModelGradient gradient;  // empty: central finite differences

    std::size_t index(const std::string& name) const {
        for (std::size_t i = 0; i < params.size(); ++i)
            if (params[i].name == name) return i;
        throw UsageError("model " + id + " has no parameter '" + name + "'");
    }
    ModelSpec& set_initial(const std::string& name, double v) {
        params[index(name)].initial = v;
        return *this;
    }
    ModelSpec& set_bounds(const std::string& name, double lo, double hi) {
        auto& p = params[index(name)];
        p.lower = lo;
        p.upper = hi;
        return *this;
    }
    ModelSpec& fix(const std::string& name, double v) {
        auto& p = params[index(name)];
        p.initial = v;
        p.fixed = true;
        return *this;
    }
    std::vector<double> initial_values() const {
        std::vector<double> v;
        for (const auto& p : params) v.push_back(p.initial);
        return v;
    }
    std::size_t free_count() const {
        return static_cast<std::size_t>(std::count_if(params.begin(), params.end(), [](auto& p) { return !p.fixed; }));
    }
};

struct FitOptions {
    int max_iterations = 500;
    double cost_rtol = 1e-10;
    double step_tol = 1e-12;
    int starts = 8;
    std::uint64_t seed = 0x5eed1234ULL;
    bool parallel = true;
    double fd_step = 1e-6;
    double ill_condition_threshold = 1e10;
};

struct FitResult {
    std::string model_id;
    std::vector<std::string> names;
    std::vector<double> values;
    std::vector<double> sigmas;
    std::vector<bool> fixed;
    std::vector<bool> at_bound;
    Eigen::MatrixXd covariance;  // full parameter space, zero rows for fixed parameters
    double chi2 = 0.0;
    double reduced_chi2 = 0.0;
    int n_iter = 0;
    bool converged = false;
    bool unweighted = false;
    bool bound_projected = false;
    bool ill_conditioned = false;
    double condition_number = 1.0;
    std::size_t n_points = 0;
    std::size_t n_free = 0;

    std::size_t index(const std::string& name) const {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return i;
        throw UsageError("fit result has no parameter '" + name + "'");
    }
    double value(const std::string& name) const { return values[index(name)]; }
    double sigma(const std::string& name) const { return sigmas[index(name)]; }
};

inline double model_value(const ModelSpec& spec, double x, const std::vector<double>& theta) {
    return spec.value(x, std::span<const double>(theta));
}

// Residual-free Jacobian of the model, d f / d theta_j for every parameter.
inline void model_gradient(const ModelSpec& spec, double x, const std::vector<double>& theta, std::span<double> grad,
                           double fd_step = 1e-6, const std::vector<double>* scale = nullptr) {
    if (spec.gradient) {
        spec.gradient(x, std::span<const double>(theta), grad);
        return;
    }
    std::vector<double> t = theta;
    for (std::size_t j = 0; j < theta.size(); ++j) {
        const double s = scale ? (*scale)[j] : 0.0;
        double h = fd_step * std::max(std::abs(theta[j]), s);
        if (h == 0.0) h = fd_step;
        // One-sided next to a bound so the model is never evaluated outside its domain.
        const auto& par = spec.params[j];
        const double up = theta[j] + h > par.upper ? theta[j] : theta[j] + h;
        const double dn = theta[j] - h < par.lower ? theta[j] : theta[j] - h;
        t[j] = up;
        const double fp = spec.value(x, std::span<const double>(t));
        t[j] = dn;
        const double fm = spec.value(x, std::span<const double>(t));
        t[j] = theta[j];
        grad[j] = up > dn ? (fp - fm) / (up - dn) : 0.0;
    }
}

namespace detail {

inline std::vector<double> parameter_scale(const ModelSpec& spec, const std::vector<double>& theta) {
    std::vector<double> scale(theta.size(), 1.0);
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const auto& p = spec.params[i];
        double s = std::abs(theta[i]);
        if (s == 0.0) s = (std::isfinite(p.lower) && std::isfinite(p.upper)) ? 0.5 * (p.upper - p.lower) : 1.0;
        if (s == 0.0) s = 1.0;
        scale[i] = s;
    }
    return scale;
}

struct StartOutcome {
    std::vector<double> theta;
    double cost = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
    bool projected = false;
    bool ok = false;
    std::string error;
};

class Problem {
public:
    Problem(const ModelSpec& spec, const Dataset& data, const FitOptions& opt) : spec_(spec), data_(data), opt_(opt) {
        for (std::size_t i = 0; i < spec.params.size(); ++i)
            if (!spec.params[i].fixed) free_.push_back(i);
    }

    const std::vector<std::size_t>& free() const { return free_; }

    double cost(const std::vector<double>& theta) const {
        double c = 0.0;
        for (const auto& p : data_.points) {
            const double r = (p.y - spec_.value(p.x, std::span<const double>(theta))) / p.sigma;
            c += r * r;
        }
        return std::isfinite(c) ? c : std::numeric_limits<double>::infinity();
    }

    // Weighted Jacobian over free parameters and weighted residual vector.
    void linearize(const std::vector<double>& theta, const std::vector<double>& scale, Eigen::MatrixXd& J,
                   Eigen::VectorXd& r) const {
        const std::size_t n = data_.points.size(), m = free_.size();
        J.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
        r.resize(static_cast<Eigen::Index>(n));
        std::vector<double> grad(theta.size());
        for (std::size_t i = 0; i < n; ++i) {
            const auto& p = data_.points[i];
            r(static_cast<Eigen::Index>(i)) = (p.y - spec_.value(p.x, std::span<const double>(theta))) / p.sigma;
            model_gradient(spec_, p.x, theta, grad, opt_.fd_step, &scale);
            for (std::size_t k = 0; k < m; ++k)
                J(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = grad[free_[k]] / p.sigma;
        }
    }

    bool project(std::vector<double>& theta) const {
        bool hit = false;
        for (std::size_t i : free_) {
            const auto& p = spec_.params[i];
            const double c = std::clamp(theta[i], p.lower, p.upper);
            if (c != theta[i]) hit = true;
            theta[i] = c;
        }
        return hit;
    }

    // Levenberg-Marquardt in coordinates scaled by the starting magnitudes.
    StartOutcome solve(std::vector<double> theta) const {
        StartOutcome out;
        out.projected = project(theta);
        const std::size_t m = free_.size();
        const std::vector<double> scale = parameter_scale(spec_, theta);
        Eigen::VectorXd S(static_cast<Eigen::Index>(m));
        for (std::size_t k = 0; k < m; ++k) S(static_cast<Eigen::Index>(k)) = scale[free_[k]];

        Eigen::MatrixXd J;
        Eigen::VectorXd r;
        linearize(theta, scale, J, r);
        double cost = r.squaredNorm();
        if (!std::isfinite(cost)) {
            out.error = "non-finite cost at start";
            return out;
        }
        auto normal = [&](Eigen::MatrixXd& A, Eigen::VectorXd& g) {
            const Eigen::MatrixXd Ju = J * S.asDiagonal();
            A = Ju.transpose() * Ju;
            g = Ju.transpose() * r;
        };
        Eigen::MatrixXd A;
        Eigen::VectorXd g;
        normal(A, g);
        double lambda = 1e-3 * std::max(A.diagonal().maxCoeff(), std::numeric_limits<double>::min());
        const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));

        int iter = 0;
        bool converged = cost == 0.0;
        while (!converged && iter < opt_.max_iterations) {
            ++iter;
            const Eigen::VectorXd du = (A + lambda * I).ldlt().solve(g);
            std::vector<double> trial = theta;
            for (std::size_t k = 0; k < m; ++k) trial[free_[k]] += S(static_cast<Eigen::Index>(k)) * du(static_cast<Eigen::Index>(k));
            const bool hit = project(trial);
            double step = 0.0, unorm = 0.0;
            for (std::size_t k = 0; k < m; ++k) {
                const double d = (trial[free_[k]] - theta[free_[k]]) / scale[free_[k]];
                step += d * d;
                const double u = theta[free_[k]] / scale[free_[k]];
                unorm += u * u;
            }
            step = std::sqrt(step);
            const bool tiny_step = !(step >= opt_.step_tol * (std::sqrt(unorm) + opt_.step_tol));
            const double trial_cost = du.allFinite() ? cost_of(trial) : std::numeric_limits<double>::infinity();
            if (trial_cost < cost) {
                const double reduction = (cost - trial_cost) / cost;
                theta = std::move(trial);
                cost = trial_cost;
                out.projected = out.projected || hit;
                lambda /= 2.0;
                linearize(theta, scale, J, r);
                normal(A, g);
                if (reduction < opt_.cost_rtol || tiny_step || cost == 0.0) converged = true;
            } else {
                lambda *= 3.0;
                if (tiny_step || !std::isfinite(lambda)) converged = tiny_step;
                if (!std::isfinite(lambda)) break;
            }
        }
        out.theta = std::move(theta);
        out.cost = cost;
        out.iterations = iter;
        out.converged = converged;
        out.ok = true;
        return out;
    }

private:
    double cost_of(const std::vector<double>& theta) const { return cost(theta); }

    const ModelSpec& spec_;
    const Dataset& data_;
    const FitOptions& opt_;
    std::vector<std::size_t> free_;
};

inline std::vector<std::vector<double>> latin_hypercube_starts(const ModelSpec& spec, int n, std::uint64_t seed) {
    std::vector<std::vector<double>> starts;
    if (n <= 0) return starts;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto base = spec.initial_values();
    starts.assign(static_cast<std::size_t>(n), base);
    std::vector<int> strata(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < spec.params.size(); ++i) {
        const auto& p = spec.params[i];
        if (p.fixed) continue;
        double lo, hi;
        if (std::isfinite(p.lower) && std::isfinite(p.upper)) {
            lo = p.lower;
            hi = p.upper;
        } else {
            const double half = p.initial != 0.0 ? 0.5 * std::abs(p.initial) : 1.0;
            lo = std::max(p.lower, p.initial - half);
            hi = std::min(p.upper, p.initial + half);
        }
        std::iota(strata.begin(), strata.end(), 0);
        std::shuffle(strata.begin(), strata.end(), rng);
        for (int k = 0; k < n; ++k) {
            const double u = (strata[static_cast<std::size_t>(k)] + unit(rng)) / n;
            starts[static_cast<std::size_t>(k)][i] = lo + u * (hi - lo);
        }
    }
    return starts;
}

inline std::string correlation_report(const FitResult& partial, const Eigen::MatrixXd& A,
                                      const std::vector<std::size_t>& free) {
    std::ostringstream os;
    const Eigen::Index m = A.rows();
    for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = a + 1; b < m; ++b) {
            const double den = std::sqrt(A(a, a) * A(b, b));
            const double c = den > 0.0 ? A(a, b) / den : 1.0;
            if (std::abs(c) > 0.99)
                os << " " << partial.names[free[static_cast<std::size_t>(a)]] << "~"
                   << partial.names[free[static_cast<std::size_t>(b)]] << " (" << c << ")";
        }
    for (Eigen::Index a = 0; a < m; ++a)
        if (A(a, a) == 0.0) os << " " << partial.names[free[static_cast<std::size_t>(a)]] << " has no influence";
    const std::string s = os.str();
    return s.empty() ? " no strongly correlated pair" : s;
}

}  // namespace detail

inline void check_fit_inputs(const ModelSpec& spec, const Dataset& data) {
    if (!spec.value) throw PreconditionError("model " + spec.id + " has no value function");
    const std::size_t need = std::max<std::size_t>(4, spec.params.size() + 1);
    if (data.size() < need)
        throw PreconditionError("model " + spec.id + " needs at least " + std::to_string(need) + " points, got " +
                                std::to_string(data.size()));
    if (spec.free_count() == 0) throw PreconditionError("model " + spec.id + " has no free parameters");
    for (const auto& p : spec.params)
        if (!(p.lower <= p.upper)) throw PreconditionError("parameter " + p.name + " has empty bounds");
}

inline FitResult fit_model(const ModelSpec& spec, const Dataset& data, const FitOptions& opt = {}) {
    check_fit_inputs(spec, data);
    detail::Problem problem(spec, data, opt);

    std::vector<std::vector<double>> starts{spec.initial_values()};
    for (auto& s : detail::latin_hypercube_starts(spec, opt.starts, opt.seed)) starts.push_back(std::move(s));

    auto run = [&](const std::vector<double>& s) {
        try {
            return problem.solve(s);
        } catch (const std::exception& e) {
            detail::StartOutcome o;
            o.error = e.what();
            return o;
        }
    };
    std::vector<detail::StartOutcome> outcomes(starts.size());
    if (opt.parallel && starts.size() > 1) {
        std::vector<std::future<detail::StartOutcome>> futures;
        for (const auto& s : starts) futures.push_back(std::async(std::launch::async, run, std::cref(s)));
        for (std::size_t i = 0; i < futures.size(); ++i) outcomes[i] = futures[i].get();
    } else {
        for (std::size_t i = 0; i < starts.size(); ++i) outcomes[i] = run(starts[i]);
    }

    // Lowest cost wins; ties resolved by start order for determinism.
    const detail::StartOutcome* best = nullptr;
    for (const auto& o : outcomes)
        if (o.ok && std::isfinite(o.cost) && (!best || o.cost < best->cost)) best = &o;
    if (!best) throw FitError("model " + spec.id + ": every start failed (" + outcomes.front().error + ")");

    FitResult res;
    res.model_id = spec.id;
    for (const auto& p : spec.params) {
        res.names.push_back(p.name);
        res.fixed.push_back(p.fixed);
    }
    res.values = best->theta;
    res.chi2 = best->cost;
    res.n_iter = best->iterations;
    res.converged = best->converged;
    res.bound_projected = best->projected;
    res.unweighted = data.unweighted;
    res.n_points = data.size();
    res.n_free = problem.free().size();
    const double dof = static_cast<double>(res.n_points - res.n_free);
    res.reduced_chi2 = res.chi2 / dof;
    for (std::size_t i = 0; i < spec.params.size(); ++i) {
        const auto& p = spec.params[i];
        res.at_bound.push_back(!p.fixed && (res.values[i] == p.lower || res.values[i] == p.upper));
    }

    const std::vector<double> scale = detail::parameter_scale(spec, res.values);
    Eigen::MatrixXd J;
    Eigen::VectorXd r;
    problem.linearize(res.values, scale, J, r);
    const Eigen::MatrixXd A = J.transpose() * J;
    const auto& free = problem.free();
    const Eigen::Index m = A.rows();

    Eigen::VectorXd d = A.diagonal();
    bool degenerate = (d.array() <= 0.0).any() || !A.allFinite();
    double cond = std::numeric_limits<double>::infinity();
    Eigen::MatrixXd corr;
    if (!degenerate) {
        const Eigen::VectorXd inv_sqrt = d.array().sqrt().inverse();
        corr = inv_sqrt.asDiagonal() * A * inv_sqrt.asDiagonal();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr);
        const double lo = eig.eigenvalues().minCoeff(), hi = eig.eigenvalues().maxCoeff();
        cond = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
        degenerate = !(lo > 1e-14 * hi);
    }
    if (degenerate)
        throw FitError("model " + spec.id + ": singular normal matrix;" + detail::correlation_report(res, A, free));
    res.condition_number = cond;
    res.ill_conditioned = cond > opt.ill_condition_threshold;

    const Eigen::VectorXd inv_sqrt = d.array().sqrt().inverse();
    const Eigen::MatrixXd corr_inv = corr.ldlt().solve(Eigen::MatrixXd::Identity(m, m));
    const Eigen::MatrixXd cov_free = inv_sqrt.asDiagonal() * corr_inv * inv_sqrt.asDiagonal() * res.reduced_chi2;
    const Eigen::Index np = static_cast<Eigen::Index>(spec.params.size());
    res.covariance = Eigen::MatrixXd::Zero(np, np);
    for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = 0; b < m; ++b)
            res.covariance(static_cast<Eigen::Index>(free[static_cast<std::size_t>(a)]),
                           static_cast<Eigen::Index>(free[static_cast<std::size_t>(b)])) = cov_free(a, b);
    res.sigmas.assign(spec.params.size(), 0.0);
    for (Eigen::Index i = 0; i < np; ++i) res.sigmas[static_cast<std::size_t>(i)] = std::sqrt(std::max(0.0, res.covariance(i, i)));
    return res;
}

// Small-sample corrected Akaike criterion, computed from chi^2.
inline double aicc(double chi2, std::size_t n, std::size_t k) {
    const double nn = static_cast<double>(n), kk = static_cast<double>(k);
    if (nn - kk - 1.0 <= 0.0) return std::numeric_limits<double>::infinity();
    return chi2 + 2.0 * kk + 2.0 * kk * (kk + 1.0) / (nn - kk - 1.0);
}

inline double aicc(const FitResult& r) { return aicc(r.chi2, r.n_points, r.n_free); }

}  // namespace phonolib::fit
