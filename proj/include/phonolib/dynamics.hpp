#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "errors.hpp"
#include "fit/engine.hpp"
#include "rates.hpp"
#include "units.hpp"

namespace phonolib {

struct PumpChannel {
    std::size_t from = 0;
    std::size_t to = 0;
    double rate_per_ns = 0.0;
};

// Classical master equation dp/dt = M p; rates(i, j) is the rate j -> i.
struct LevelSystem {
    std::vector<std::string> labels;
    Eigen::MatrixXd rates;
    std::vector<PumpChannel> pump_channels;
    Eigen::VectorXd emission_weights;

    std::size_t n_states() const { return labels.size(); }

    void validate() const {
        const auto n = static_cast<Eigen::Index>(labels.size());
        if (n == 0) throw PreconditionError("level system has no states");
        if (rates.rows() != n || rates.cols() != n) throw PreconditionError("rate matrix shape does not match states");
        if (emission_weights.size() != n) throw PreconditionError("emission weights size does not match states");
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                if (i != j && !(rates(i, j) >= 0.0 && std::isfinite(rates(i, j))))
                    throw PreconditionError("rate " + labels[static_cast<std::size_t>(j)] + " -> " +
                                            labels[static_cast<std::size_t>(i)] + " must be finite and >= 0");
        for (const auto& c : pump_channels)
            if (c.from >= labels.size() || c.to >= labels.size() || c.from == c.to || !(c.rate_per_ns >= 0.0))
                throw PreconditionError("invalid pump channel");
        if ((emission_weights.array() < 0.0).any()) throw PreconditionError("emission weights must be >= 0");
    }

    // Columns sum to zero by construction.
    Eigen::MatrixXd generator(bool laser_on) const {
        validate();
        Eigen::MatrixXd m = rates;
        m.diagonal().setZero();
        if (laser_on)
            for (const auto& c : pump_channels)
                m(static_cast<Eigen::Index>(c.to), static_cast<Eigen::Index>(c.from)) += c.rate_per_ns;
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(j, j) = -(m.col(j).sum() - m(j, j));
        return m;
    }
};

struct PulseSegment {
    double duration_ns = 0.0;
    bool laser_on = false;
};

struct PulseSequence {
    std::vector<PulseSegment> segments;
    double time_resolution_ns = 0.2;

    void validate() const {
        if (segments.empty()) throw PreconditionError("pulse sequence is empty");
        double shortest = std::numeric_limits<double>::infinity();
        for (const auto& s : segments) {
            if (!(s.duration_ns > 0.0)) throw PreconditionError("segment durations must be > 0");
            shortest = std::min(shortest, s.duration_ns);
        }
        if (!(time_resolution_ns > 0.0) || time_resolution_ns > shortest / 10.0 * (1.0 + 1e-12))
            throw PreconditionError("time resolution must be positive and <= shortest segment / 10");
    }
};

struct FluorescenceTrace {
    std::vector<double> times_ns;
    std::vector<double> intensity;
    std::vector<double> segment_marks_ns;
};

inline void check_population(const Eigen::VectorXd& p, std::size_t n) {
    if (static_cast<std::size_t>(p.size()) != n) throw PreconditionError("population vector has wrong size");
    if ((p.array() < -1e-12).any() || std::abs(p.sum() - 1.0) > 1e-9)
        throw PreconditionError("population vector must lie on the simplex");
}

// exp(M t) with columns renormalised: repeated squaring of large |M t| leaks ~1e-10 of probability.
inline Eigen::MatrixXd propagator(const Eigen::MatrixXd& generator, double duration_ns) {
    if (duration_ns == 0.0) return Eigen::MatrixXd::Identity(generator.rows(), generator.cols());
    Eigen::MatrixXd u = (generator * duration_ns).exp();
    for (Eigen::Index j = 0; j < u.cols(); ++j) u.col(j) /= u.col(j).sum();
    return u;
}

inline Eigen::VectorXd evolve(const LevelSystem& system, const Eigen::VectorXd& initial, double duration_ns,
                              bool laser_on) {
    if (!(duration_ns >= 0.0)) throw DomainError("evolve: duration must be >= 0");
    const auto m = system.generator(laser_on);
    check_population(initial, system.n_states());
    return propagator(m, duration_ns) * initial;
}

// Normalised null vector of the generator.
inline Eigen::VectorXd stationary_state(const LevelSystem& system, bool laser_on) {
    Eigen::MatrixXd a = system.generator(laser_on);
    const Eigen::Index n = a.rows();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    a.row(n - 1).setOnes();
    b(n - 1) = 1.0;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (!lu.isInvertible()) throw NumericalError("stationary state is not unique (reducible generator)");
    return lu.solve(b);
}

inline FluorescenceTrace simulate_pulse_sequence(const LevelSystem& system, const PulseSequence& seq,
                                                 const Eigen::VectorXd& initial) {
    seq.validate();
    check_population(initial, system.n_states());
    const Eigen::MatrixXd m_on = system.generator(true), m_off = system.generator(false);
    const Eigen::MatrixXd step_on = propagator(m_on, seq.time_resolution_ns);
    const Eigen::MatrixXd step_off = propagator(m_off, seq.time_resolution_ns);
    FluorescenceTrace tr;
    Eigen::VectorXd p = initial;
    double t0 = 0.0;
    for (const auto& s : seq.segments) {
        tr.segment_marks_ns.push_back(t0);
        const auto steps = static_cast<long>(std::floor(s.duration_ns / seq.time_resolution_ns + 1e-9));
        const Eigen::MatrixXd& step = s.laser_on ? step_on : step_off;
        for (long k = 0; k < steps; ++k) {
            tr.times_ns.push_back(t0 + k * seq.time_resolution_ns);
            tr.intensity.push_back(std::max(0.0, system.emission_weights.dot(p)));
            p = step * p;
        }
        const double rest = s.duration_ns - steps * seq.time_resolution_ns;
        if (rest > 0.0) p = propagator(s.laser_on ? m_on : m_off, rest) * p;
        t0 += s.duration_ns;
    }
    tr.segment_marks_ns.push_back(t0);
    tr.times_ns.push_back(t0);
    tr.intensity.push_back(std::max(0.0, system.emission_weights.dot(p)));
    return tr;
}

// Three-level Lambda: lower (dark) and upper (bright) ground branches, one excited level.
struct LambdaPreset {
    double ground_splitting_ghz = 50.0;
    double temperature_k = 5.0;
    double relaxation_rate_per_ns = 1.0 / 39.0;  // gamma_up + gamma_down
    double pump_rate_per_ns = 5.0;
    double radiative_rate_per_ns = 1.0 / 1.7;
    double branching_to_bright = 0.5;
};

inline LevelSystem make_lambda_system(const LambdaPreset& p) {
    if (!(p.relaxation_rate_per_ns >= 0.0) || !(p.pump_rate_per_ns >= 0.0) || !(p.radiative_rate_per_ns > 0.0))
        throw DomainError("Lambda preset rates must be non-negative");
    if (!(p.branching_to_bright >= 0.0 && p.branching_to_bright <= 1.0)) throw DomainError("branching must be in [0, 1]");
    // gamma_up = R / (1 + e^x), gamma_down = R - gamma_up.
    const double ratio = thermal_ratio(p.ground_splitting_ghz, p.temperature_k);
    const double up = std::isinf(ratio) ? 0.0 : p.relaxation_rate_per_ns / (1.0 + ratio);
    const double down = p.relaxation_rate_per_ns - up;
    LevelSystem s;
    s.labels = {"g_lower", "g_upper", "e"};
    s.rates = Eigen::MatrixXd::Zero(3, 3);
    s.rates(1, 0) = up;
    s.rates(0, 1) = down;
    s.rates(1, 2) = p.radiative_rate_per_ns * p.branching_to_bright;
    s.rates(0, 2) = p.radiative_rate_per_ns * (1.0 - p.branching_to_bright);
    s.pump_channels = {{1, 2, p.pump_rate_per_ns}, {2, 1, p.pump_rate_per_ns}};
    s.emission_weights = Eigen::Vector3d(0.0, 0.0, p.radiative_rate_per_ns);
    return s;
}

// Boltzmann populations of the two ground branches, empty excited level.
inline Eigen::VectorXd lambda_thermal_state(const LambdaPreset& p) {
    const double ratio = thermal_ratio(p.ground_splitting_ghz, p.temperature_k);
    const double w = std::isinf(ratio) ? 0.0 : 1.0 / ratio;
    return Eigen::Vector3d(1.0 / (1.0 + w), w / (1.0 + w), 0.0);
}

// Two orbital branches per spin projection; phonons never flip spin.
inline LevelSystem make_four_ground_state_system(double gamma_up, double gamma_down) {
    LevelSystem s;
    s.labels = {"lower_up", "upper_up", "lower_down", "upper_down"};
    s.rates = Eigen::MatrixXd::Zero(4, 4);
    for (Eigen::Index b = 0; b < 4; b += 2) {
        s.rates(b + 1, b) = gamma_up;
        s.rates(b, b + 1) = gamma_down;
    }
    s.emission_weights = Eigen::VectorXd::Zero(4);
    return s;
}

struct RecoveryOptions {
    double pulse_ns = 80.0;
    double resolution_ns = 0.2;
    double settle_tolerance = 1e-9;  // fit only where faster modes have decayed below this
};

struct RecoveryResult {
    std::vector<double> taus_ns;
    std::vector<double> heights;
    double first_peak = 0.0;      // a
    double peak_offset_ns = 0.0;  // probe sampling point after pulse start
    double settle_ns = 0.0;
    double expected_t1_ns = 0.0;
    double t1_ns = 0.0;
    double t1_sigma_ns = 0.0;
    fit::FitResult fit;
};

// Slowest and next-distinct relaxation rates of the dark generator.
inline std::pair<double, double> relaxation_rates(const LevelSystem& system) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(system.generator(false));
    std::vector<double> mags;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) mags.push_back(std::abs(es.eigenvalues()(i).real()));
    std::sort(mags.begin(), mags.end());
    const double tiny = 1e-12 * std::max(mags.back(), 1e-300);
    double slow = 0.0, fast = 0.0;
    for (double m : mags) {
        if (m <= tiny) continue;
        if (slow == 0.0) slow = m;
        else if (m > 2.0 * slow) {
            fast = m;
            break;
        }
    }
    return {slow, fast};
}

inline fit::ModelSpec exponential_recovery_model() {
    fit::ModelSpec s{"exponential_recovery",
                     {{"h_inf", 1.0}, {"depth", 1.0}, {"t1_ns", 10.0, 1e-9, std::numeric_limits<double>::infinity()}},
                     {},
                     {}};
    s.value = [](double t, std::span<const double> p) { return p[0] - p[1] * std::exp(-t / p[2]); };
    s.gradient = [](double t, std::span<const double> p, std::span<double> g) {
        const double e = std::exp(-t / p[2]);
        g[0] = 1.0;
        g[1] = -e;
        g[2] = -p[1] * e * t / (p[2] * p[2]);
    };
    return s;
}

inline RecoveryResult peak_height_recovery(const LevelSystem& system, const std::vector<double>& tau_grid,
                                           const RecoveryOptions& opt = {}) {
    if (tau_grid.size() < 4) throw UsageError("peak_height_recovery: need at least 4 delays");
    for (std::size_t i = 0; i < tau_grid.size(); ++i)
        if (!(tau_grid[i] >= 0.0) || (i && !(tau_grid[i] > tau_grid[i - 1])))
            throw UsageError("peak_height_recovery: delays must be >= 0 and strictly increasing");
    RecoveryResult res;
    const auto [slow, fast] = relaxation_rates(system);
    if (!(slow > 0.0)) throw UsageError("peak_height_recovery: ground block does not relax");
    res.expected_t1_ns = 1.0 / slow;
    if (tau_grid.back() - tau_grid.front() < 2.0 * res.expected_t1_ns)
        throw UsageError("peak_height_recovery: delays span less than two relaxation times");
    res.settle_ns = fast > 0.0 ? std::log(1.0 / opt.settle_tolerance) / fast : 0.0;

    const Eigen::MatrixXd m_on = system.generator(true), m_off = system.generator(false);
    const Eigen::VectorXd thermal = stationary_state(system, false);
    const Eigen::MatrixXd step = propagator(m_on, opt.resolution_ns);
    Eigen::VectorXd p = thermal;
    const auto steps = static_cast<long>(std::floor(opt.pulse_ns / opt.resolution_ns + 1e-9));
    long best = 0;
    for (long k = 0; k <= steps; ++k) {
        const double v = system.emission_weights.dot(p);
        if (v > res.first_peak) {
            res.first_peak = v;
            best = k;
        }
        p = step * p;
    }
    res.peak_offset_ns = best * opt.resolution_ns;
    const Eigen::VectorXd after_pump = propagator(m_on, opt.pulse_ns) * thermal;
    const Eigen::RowVectorXd probe = system.emission_weights.transpose() * propagator(m_on, res.peak_offset_ns);
    for (double tau : tau_grid) {
        res.taus_ns.push_back(tau);
        res.heights.push_back(probe.dot(propagator(m_off, tau) * after_pump));
    }

    std::vector<double> x, y;
    for (std::size_t i = 0; i < tau_grid.size(); ++i)
        if (tau_grid[i] >= res.settle_ns) {
            x.push_back(tau_grid[i]);
            y.push_back(res.heights[i]);
        }
    if (x.size() < 4) throw UsageError("peak_height_recovery: fewer than 4 delays after the excited state settles");
    auto spec = exponential_recovery_model();
    spec.set_initial("h_inf", y.back())
        .set_initial("depth", (y.back() - y.front()) * std::exp(x.front() * slow))
        .set_initial("t1_ns", res.expected_t1_ns);
    res.fit = fit::fit_model(spec, fit::make_dataset(x, y));
    res.t1_ns = res.fit.value("t1_ns");
    res.t1_sigma_ns = res.fit.sigma("t1_ns");
    return res;
}

struct ContrastPoint {
    double temperature_k;
    double t1_ns;
    double first_peak;
    double h0;
    double bright_fraction;  // h(0) / 2a
    double contrast;         // 1 - h(0) / 2a
};

inline std::vector<ContrastPoint> steady_state_contrast(const LambdaPreset& base, const std::vector<double>& temps_k,
                                                        const T1Params& calib, const RecoveryOptions& opt = {}) {
    if (temps_k.empty()) throw UsageError("steady_state_contrast: empty temperature grid");
    std::vector<ContrastPoint> out;
    for (double t : temps_k) {
        LambdaPreset p = base;
        p.temperature_k = t;
        const double t1 = t1_model(calib, t);
        p.relaxation_rate_per_ns = std::isinf(t1) ? 0.0 : 1.0 / t1;
        const auto sys = make_lambda_system(p);
        const Eigen::MatrixXd m_on = sys.generator(true);
        const Eigen::VectorXd thermal = lambda_thermal_state(p);
        const Eigen::MatrixXd step = propagator(m_on, opt.resolution_ns);
        Eigen::VectorXd q = thermal;
        double a = 0.0, offset = 0.0;
        const auto steps = static_cast<long>(std::floor(opt.pulse_ns / opt.resolution_ns + 1e-9));
        for (long k = 0; k <= steps; ++k) {
            const double v = sys.emission_weights.dot(q);
            if (v > a) {
                a = v;
                offset = k * opt.resolution_ns;
            }
            q = step * q;
        }
        const double h0 = sys.emission_weights.dot(propagator(m_on, opt.pulse_ns + offset) * thermal);
        const double frac = h0 / (2.0 * a);
        out.push_back({t, t1, a, h0, frac, 1.0 - frac});
    }
    return out;
}

}  // namespace phonolib
