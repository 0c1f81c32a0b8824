#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "../errors.hpp"
#include "../shifts.hpp"
#include "../units.hpp"
#include "dataset.hpp"
#include "engine.hpp"

namespace phonolib::fit {

enum class ModelId {
    linear,
    power_law,
    offset_cubic,
    bose_t1,
    mott_seitz,
    splitting_t2,
    line_shift_quadrature,
    thermal_expansion,
    lorentzian_multi,
};

inline constexpr std::array<ModelId, 9> all_models = {
    ModelId::linear,       ModelId::power_law,           ModelId::offset_cubic,
    ModelId::bose_t1,      ModelId::mott_seitz,          ModelId::splitting_t2,
    ModelId::line_shift_quadrature, ModelId::thermal_expansion, ModelId::lorentzian_multi,
};

inline std::string to_string(ModelId id) {
    switch (id) {
        case ModelId::linear: return "linear";
        case ModelId::power_law: return "power_law";
        case ModelId::offset_cubic: return "offset_cubic";
        case ModelId::bose_t1: return "bose_t1";
        case ModelId::mott_seitz: return "mott_seitz";
        case ModelId::splitting_t2: return "splitting_t2";
        case ModelId::line_shift_quadrature: return "line_shift_quadrature";
        case ModelId::thermal_expansion: return "thermal_expansion";
        case ModelId::lorentzian_multi: return "lorentzian_multi";
    }
    return "unknown";
}

inline ModelId parse_model_id(const std::string& s) {
    for (auto id : all_models)
        if (to_string(id) == s) return id;
    std::string names;
    for (auto id : all_models) names += (names.empty() ? "" : ", ") + to_string(id);
    throw UsageError("unknown model '" + s + "' (expected one of: " + names + ")");
}

struct ModelContext {
    double debye_temp_k = constants::default_debye_temperature_k;
    std::optional<ExpansionModel> expansion;
    std::size_t n_peaks = 1;
    bool with_offset = false;
    std::optional<double> fixed_exponent;  // power_law only
};

namespace detail {

inline constexpr double inf = std::numeric_limits<double>::infinity();

// Thread-safe memo of a scalar function of x, shared by copies of a ModelSpec.
class XCache {
public:
    explicit XCache(std::function<double(double)> f) : f_(std::move(f)) {}
    double operator()(double x) {
        {
            std::lock_guard<std::mutex> lock(m_);
            auto it = values_.find(x);
            if (it != values_.end()) return it->second;
        }
        const double v = f_(x);
        std::lock_guard<std::mutex> lock(m_);
        values_.emplace(x, v);
        return v;
    }

private:
    std::function<double(double)> f_;
    std::mutex m_;
    std::map<double, double> values_;
};

inline double lorentzian(double x, double c, double w) {
    const double hw = 0.5 * w, dx = x - c;
    return hw / (constants::pi * (dx * dx + hw * hw));
}

inline ModelSpec linear_model() {
    ModelSpec s{"linear", {{"slope", 1.0}, {"intercept", 0.0}}, {}, {}};
    s.value = [](double x, std::span<const double> p) { return p[0] * x + p[1]; };
    s.gradient = [](double x, std::span<const double>, std::span<double> g) {
        g[0] = x;
        g[1] = 1.0;
    };
    return s;
}

inline ModelSpec power_law_model(bool with_offset) {
    ModelSpec s{"power_law", {{"amplitude", 1.0}, {"exponent", 1.0, -20.0, 20.0}}, {}, {}};
    if (with_offset) s.params.push_back({"offset", 0.0});
    s.value = [with_offset](double x, std::span<const double> p) {
        return p[0] * std::pow(x, p[1]) + (with_offset ? p[2] : 0.0);
    };
    s.gradient = [with_offset](double x, std::span<const double> p, std::span<double> g) {
        const double xa = std::pow(x, p[1]);
        g[0] = xa;
        g[1] = p[0] * xa * std::log(x);
        if (with_offset) g[2] = 1.0;
    };
    return s;
}

inline ModelSpec offset_cubic_model() {
    ModelSpec s{"offset_cubic", {{"offset", 0.0}, {"cubic", 1.0}}, {}, {}};
    s.value = [](double x, std::span<const double> p) { return p[0] + p[1] * x * x * x; };
    s.gradient = [](double x, std::span<const double>, std::span<double> g) {
        g[0] = 1.0;
        g[1] = x * x * x;
    };
    return s;
}

// 1/T1 = C n(Delta, T - T_off), in 1/ns.
inline ModelSpec bose_t1_model() {
    ModelSpec s{"bose_t1",
                {{"prefactor_per_ns", 0.01, 0.0, inf}, {"splitting_ghz", 50.0, 1e-6, inf}, {"temp_offset_k", 0.0, 0.0, inf}},
                {},
                {}};
    s.value = [](double t, std::span<const double> p) {
        const double te = t - p[2];
        if (!(te > 0.0)) return 0.0;
        const double u = p[1] * units::kelvin_per_ghz / te;
        return u > 700.0 ? 0.0 : p[0] / std::expm1(u);
    };
    s.gradient = [](double t, std::span<const double> p, std::span<double> g) {
        const double te = t - p[2];
        g[0] = g[1] = g[2] = 0.0;
        if (!(te > 0.0)) return;
        const double u = p[1] * units::kelvin_per_ghz / te;
        if (u > 700.0) return;
        const double n = 1.0 / std::expm1(u);
        const double dn_du = -n * (n + 1.0);
        g[0] = n;
        g[1] = p[0] * dn_du * units::kelvin_per_ghz / te;
        g[2] = p[0] * dn_du * u / te;
    };
    return s;
}

inline ModelSpec mott_seitz_model() {
    ModelSpec s{"mott_seitz",
                {{"tau0_ns", 1.7, 0.0, inf}, {"alpha", 1.0, 0.0, inf}, {"activation_mev", 50.0, 1e-6, inf}},
                {},
                {}};
    s.value = [](double t, std::span<const double> p) {
        if (!(t > 0.0)) return p[0];
        const double e = std::exp(-p[2] / units::kelvin_to_mev(t));
        return p[0] / (1.0 + p[1] * e);
    };
    s.gradient = [](double t, std::span<const double> p, std::span<double> g) {
        if (!(t > 0.0)) {
            g[0] = 1.0;
            g[1] = g[2] = 0.0;
            return;
        }
        const double kt = units::kelvin_to_mev(t);
        const double e = std::exp(-p[2] / kt);
        const double d = 1.0 + p[1] * e;
        g[0] = 1.0 / d;
        g[1] = -p[0] * e / (d * d);
        g[2] = p[0] * p[1] * e / (kt * d * d);
    };
    return s;
}

// Delta(T) = Delta_0 (1 - chi_rho (2 pi^2 / 3) (k_B T / h)^2), GHz.
inline ModelSpec splitting_t2_model() {
    ModelSpec s{"splitting_t2", {{"splitting_0_ghz", 50.0}, {"chi_rho_per_ghz2", 1e-9}}, {}, {}};
    constexpr double k = 2.0 * constants::pi * constants::pi / 3.0 * units::ghz_per_kelvin * units::ghz_per_kelvin;
    s.value = [](double t, std::span<const double> p) { return p[0] * (1.0 - p[1] * k * t * t); };
    s.gradient = [](double t, std::span<const double> p, std::span<double> g) {
        g[0] = 1.0 - p[1] * k * t * t;
        g[1] = -p[0] * k * t * t;
    };
    return s;
}

// offset + amplitude * q(T), q = thermal line shift per unit chi_rho (meV GHz^2).
inline ModelSpec line_shift_quadrature_model(double debye_temp_k, bool with_offset) {
    ModelSpec s{"line_shift_quadrature", {{"amplitude", 1e-9}}, {}, {}};
    if (with_offset) s.params.push_back({"offset", 0.0});
    auto cache = std::make_shared<XCache>([debye_temp_k](double t) {
        return line_position_shift(PhononBath{1.0, debye_temp_k, std::max(t, 0.0)});
    });
    s.value = [cache, with_offset](double t, std::span<const double> p) {
        return p[0] * (*cache)(t) + (with_offset ? p[1] : 0.0);
    };
    return s;
}

inline ModelSpec thermal_expansion_model(const ExpansionModel& em, bool with_offset) {
    em.validate();
    ModelSpec s{"thermal_expansion", {{"pressure_coeff_mev_per_gpa", 1.0}}, {}, {}};
    if (with_offset) s.params.push_back({"offset", 0.0});
    auto model = std::make_shared<ExpansionModel>(em);
    s.value = [model, with_offset](double t, std::span<const double> p) {
        return p[0] * model->pressure_gpa(t) + (with_offset ? p[1] : 0.0);
    };
    s.gradient = [model, with_offset](double t, std::span<const double>, std::span<double> g) {
        g[0] = model->pressure_gpa(t);
        if (with_offset) g[1] = 1.0;
    };
    return s;
}

// Sum of area-normalised Lorentzians; parameters per peak: center, fwhm, area.
inline ModelSpec lorentzian_multi_model(std::size_t n_peaks) {
    if (n_peaks == 0) throw PreconditionError("lorentzian_multi needs at least one peak");
    ModelSpec s{"lorentzian_multi", {}, {}, {}};
    for (std::size_t k = 0; k < n_peaks; ++k) {
        const std::string i = std::to_string(k);
        s.params.push_back({"center_" + i, 0.0});
        s.params.push_back({"fwhm_" + i, 1.0, 1e-12, inf});
        s.params.push_back({"area_" + i, 1.0, 0.0, inf});
    }
    s.value = [n_peaks](double x, std::span<const double> p) {
        double y = 0.0;
        for (std::size_t k = 0; k < n_peaks; ++k) y += p[3 * k + 2] * lorentzian(x, p[3 * k], p[3 * k + 1]);
        return y;
    };
    s.gradient = [n_peaks](double x, std::span<const double> p, std::span<double> g) {
        const double pi = constants::pi;
        for (std::size_t k = 0; k < n_peaks; ++k) {
            const double c = p[3 * k], w = p[3 * k + 1], a = p[3 * k + 2];
            const double hw = 0.5 * w, dx = x - c, d = dx * dx + hw * hw;
            g[3 * k] = a * hw * 2.0 * dx / (pi * d * d);
            g[3 * k + 1] = a * (dx * dx - hw * hw) / (2.0 * pi * d * d);
            g[3 * k + 2] = hw / (pi * d);
        }
    };
    return s;
}

// Weighted linear least squares y ~ sum_j c_j b_j(x).
inline std::vector<double> linear_solve(const Dataset& d, const std::vector<std::function<double(double)>>& basis) {
    const auto n = static_cast<Eigen::Index>(d.size());
    const auto m = static_cast<Eigen::Index>(basis.size());
    Eigen::MatrixXd A(n, m);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& p = d.points[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < m; ++j) A(i, j) = basis[static_cast<std::size_t>(j)](p.x) / p.sigma;
        b(i) = p.y / p.sigma;
    }
    const Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
    std::vector<double> out(static_cast<std::size_t>(m));
    for (Eigen::Index j = 0; j < m; ++j) out[static_cast<std::size_t>(j)] = std::isfinite(c(j)) ? c(j) : 0.0;
    return out;
}

}  // namespace detail

inline ModelSpec make_model(ModelId id, const ModelContext& ctx = {}) {
    switch (id) {
        case ModelId::linear: return detail::linear_model();
        case ModelId::power_law: {
            auto s = detail::power_law_model(ctx.with_offset);
            if (ctx.fixed_exponent) s.fix("exponent", *ctx.fixed_exponent);
            return s;
        }
        case ModelId::offset_cubic: return detail::offset_cubic_model();
        case ModelId::bose_t1: return detail::bose_t1_model();
        case ModelId::mott_seitz: return detail::mott_seitz_model();
        case ModelId::splitting_t2: return detail::splitting_t2_model();
        case ModelId::line_shift_quadrature: return detail::line_shift_quadrature_model(ctx.debye_temp_k, ctx.with_offset);
        case ModelId::thermal_expansion:
            if (!ctx.expansion) throw PreconditionError("thermal_expansion model needs an e(T) table");
            return detail::thermal_expansion_model(*ctx.expansion, ctx.with_offset);
        case ModelId::lorentzian_multi: return detail::lorentzian_multi_model(ctx.n_peaks);
    }
    throw UsageError("unknown model");
}

// Data-driven starting values so that fits run without hand-tuned guesses.
inline void apply_initial_guess(ModelSpec& s, ModelId id, const Dataset& d) {
    if (d.size() < 2) return;
    const auto& first = d.points.front();
    const auto& last = d.points.back();
    auto has = [&](const char* n) {
        for (auto& p : s.params)
            if (p.name == n) return !p.fixed;
        return false;
    };
    switch (id) {
        case ModelId::linear: {
            const auto c = detail::linear_solve(d, {[](double x) { return x; }, [](double) { return 1.0; }});
            s.set_initial("slope", c[0]).set_initial("intercept", c[1]);
            break;
        }
        case ModelId::power_law: {
            double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
            double sign = 0.0;
            for (const auto& p : d.points)
                if (p.x > 0 && p.y != 0) {
                    const double lx = std::log(p.x), ly = std::log(std::abs(p.y));
                    sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly; n += 1;
                    sign += p.y > 0 ? 1 : -1;
                }
            if (n >= 2 && sxx * n - sx * sx > 0) {
                double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
                if (!has("exponent")) slope = s.params[s.index("exponent")].initial;
                const double amp = std::exp((sy - slope * sx) / n) * (sign >= 0 ? 1.0 : -1.0);
                s.set_initial("exponent", slope).set_initial("amplitude", amp);
            }
            break;
        }
        case ModelId::offset_cubic: {
            const auto c = detail::linear_solve(d, {[](double) { return 1.0; }, [](double x) { return x * x * x; }});
            s.set_initial("offset", c[0]).set_initial("cubic", c[1]);
            break;
        }
        case ModelId::bose_t1: {
            const double n = bose_occupation(50.0, std::max(last.x, 1e-3));
            s.set_initial("prefactor_per_ns", std::max(last.y / n, 1e-12));
            break;
        }
        case ModelId::mott_seitz: {
            const double tau0 = std::max(first.y, 1e-12);
            s.set_initial("tau0_ns", tau0).set_initial("alpha", std::max(tau0 / std::max(last.y, 1e-12) - 1.0, 0.1));
            break;
        }
        case ModelId::splitting_t2: {
            constexpr double k = 2.0 * constants::pi * constants::pi / 3.0 * units::ghz_per_kelvin * units::ghz_per_kelvin;
            const double d0 = first.y;
            const double chi = (d0 != 0.0) ? (1.0 - last.y / d0) / (k * last.x * last.x) : 0.0;
            s.set_initial("splitting_0_ghz", d0).set_initial("chi_rho_per_ghz2", chi != 0.0 ? chi : 1e-12);
            break;
        }
        case ModelId::line_shift_quadrature:
        case ModelId::thermal_expansion: {
            const std::string amp = id == ModelId::thermal_expansion ? "pressure_coeff_mev_per_gpa" : "amplitude";
            const ModelSpec& probe = s;
            std::vector<double> unit = probe.initial_values();
            unit[0] = 1.0;
            if (has("offset")) unit[1] = 0.0;
            std::vector<std::function<double(double)>> basis{[&](double x) { return model_value(probe, x, unit); }};
            if (has("offset")) basis.push_back([](double) { return 1.0; });
            const auto c = detail::linear_solve(d, basis);
            s.set_initial(amp, c[0] != 0.0 ? c[0] : 1.0);
            if (has("offset")) s.set_initial("offset", c[1]);
            break;
        }
        case ModelId::lorentzian_multi: {
            const std::size_t n_peaks = s.params.size() / 3;
            std::vector<std::size_t> maxima;
            for (std::size_t i = 1; i + 1 < d.size(); ++i)
                if (d.points[i].y >= d.points[i - 1].y && d.points[i].y > d.points[i + 1].y) maxima.push_back(i);
            std::sort(maxima.begin(), maxima.end(), [&](auto a, auto b) { return d.points[a].y > d.points[b].y; });
            const double span = last.x - first.x;
            for (std::size_t k = 0; k < n_peaks; ++k) {
                const std::string i = std::to_string(k);
                const double c = k < maxima.size() ? d.points[maxima[k]].x
                                                   : first.x + span * (k + 1.0) / (n_peaks + 1.0);
                const double h = k < maxima.size() ? d.points[maxima[k]].y : 0.0;
                const double w = span / (10.0 * n_peaks);
                s.set_initial("center_" + i, c).set_initial("fwhm_" + i, w);
                s.set_initial("area_" + i, std::max(h * constants::pi * w / 2.0, 1e-12));
                s.set_bounds("center_" + i, first.x, last.x);
            }
            break;
        }
    }
}

inline ModelSpec make_model(ModelId id, const ModelContext& ctx, const Dataset& data) {
    auto s = make_model(id, ctx);
    apply_initial_guess(s, id, data);
    return s;
}

}  // namespace phonolib::fit
