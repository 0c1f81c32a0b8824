#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "errors.hpp"
#include "units.hpp"

namespace phonolib {

enum class Branch { ground, excited };

struct OrbitalDoublet {
    double splitting_ghz = 50.0;
    Branch branch = Branch::ground;

    double thermal_temperature_k() const { return units::ghz_to_kelvin(splitting_ghz); }
    void validate() const {
        if (!(splitting_ghz > 0.0) || !std::isfinite(splitting_ghz))
            throw DomainError("doublet splitting must be > 0 GHz");
    }
};

struct RateSet {
    double gamma_up = 0.0;
    double gamma_down = 0.0;
    double gamma_dephase = 0.0;
};

struct T1Params {
    double prefactor_per_ns = 0.0099;
    double splitting_ghz = 50.0;
    double temp_offset_k = 0.0;

    void validate() const {
        if (!(prefactor_per_ns > 0.0)) throw DomainError("T1 prefactor must be > 0");
        if (!(splitting_ghz > 0.0)) throw DomainError("T1 splitting must be > 0");
        if (!(temp_offset_k >= 0.0)) throw DomainError("T1 temp_offset must be >= 0");
    }
    // chi*rho implied by the prefactor C = 2 pi chi rho Delta^3.
    double chi_rho() const {
        return prefactor_per_ns / (2.0 * constants::pi * splitting_ghz * splitting_ghz * splitting_ghz);
    }
};

inline void check_bath_scale(const OrbitalDoublet& d, const PhononBath& bath) {
    d.validate();
    bath.validate();
    if (!(bath.debye_frequency_ghz() / d.splitting_ghz > min_debye_ratio)) {
        throw PreconditionError("Debye frequency " + std::to_string(bath.debye_frequency_ghz()) +
                                " GHz is not >> splitting " + std::to_string(d.splitting_ghz) + " GHz");
    }
}

namespace detail {
inline double direct_prefactor(double chi_rho, double delta) {
    return 2.0 * constants::pi * chi_rho * delta * delta * delta;
}
}  // namespace detail

inline RateSet single_phonon_rates(const OrbitalDoublet& d, const PhononBath& bath) {
    check_bath_scale(d, bath);
    const double k = detail::direct_prefactor(bath.chi_rho, d.splitting_ghz);
    const double n = bose_occupation(d.splitting_ghz, bath.temperature_k);
    return {k * n, k * (n + 1.0), 0.0};
}

// High-temperature limit 2 pi chi rho Delta^2 k_B T / h.
inline double single_phonon_linear_approx(const OrbitalDoublet& d, const PhononBath& bath) {
    check_bath_scale(d, bath);
    if (!(bath.temperature_k > d.thermal_temperature_k()))
        throw PreconditionError("linear approximation needs T > h*Delta/k_B = " +
                                std::to_string(d.thermal_temperature_k()) + " K");
    return 2.0 * constants::pi * bath.chi_rho * d.splitting_ghz * d.splitting_ghz * bath.thermal_frequency_ghz();
}

enum class DephasingWindow { inside, too_cold, too_hot };

inline DephasingWindow dephasing_window(const OrbitalDoublet& d, const PhononBath& bath) {
    const double t = bath.temperature_k;
    if (t < 5.0 * d.thermal_temperature_k()) return DephasingWindow::too_cold;
    if (5.0 * t > bath.debye_temp_k) return DephasingWindow::too_hot;
    return DephasingWindow::inside;
}

// Elastic two-phonon dephasing, lowest order in Delta: (2 pi^3 / 3) Delta^2 (chi rho)^2 (k_B T/h)^3.
inline double two_phonon_dephasing_rate(const OrbitalDoublet& d, const PhononBath& bath) {
    check_bath_scale(d, bath);
    if (bath.temperature_k == 0.0) throw DomainError("two_phonon_dephasing_rate: T must be > 0");
    const double theta = bath.thermal_frequency_ghz();
    const double pi = constants::pi;
    return 2.0 * pi * pi * pi / 3.0 * d.splitting_ghz * d.splitting_ghz * bath.chi_rho * bath.chi_rho * theta *
           theta * theta;
}

inline double raman_rate_scaling(double prefactor, double t_k) {
    if (!(prefactor >= 0.0)) throw DomainError("raman prefactor must be >= 0");
    if (!(t_k >= 0.0)) throw DomainError("temperature must be >= 0");
    const double t2 = t_k * t_k;
    return prefactor * t2 * t2 * t_k;
}

inline double t1_model(const T1Params& p, double t_k) {
    p.validate();
    if (!(t_k > p.temp_offset_k)) throw DomainError("t1_model: T must exceed temp_offset");
    const double n = bose_occupation(p.splitting_ghz, t_k - p.temp_offset_k);
    if (n == 0.0) return std::numeric_limits<double>::infinity();
    return 1.0 / (p.prefactor_per_ns * n);
}

struct BudgetRow {
    double splitting_ghz;
    double temperature_k;
    double inv_gamma_up_ns;
    double inv_gamma_down_ns;
    double t1_ns;
    double t2_upper_bound_ns;
    bool within_validity;
};

// chi*rho comes from calib; rows scale Delta^3 n(Delta, T - T_off) at fixed chi*rho.
inline std::vector<BudgetRow> coherence_budget(const PhononBath& bath, const std::vector<double>& splittings_ghz,
                                               const std::vector<double>& temperatures_k, const T1Params& calib) {
    if (splittings_ghz.empty() || temperatures_k.empty()) throw UsageError("coherence_budget: empty grid");
    calib.validate();
    bath.validate();
    const double chi_rho = calib.chi_rho();
    std::vector<BudgetRow> rows;
    rows.reserve(splittings_ghz.size() * temperatures_k.size());
    for (double delta : splittings_ghz) {
        if (!(delta > 0.0)) throw DomainError("coherence_budget: splitting must be > 0");
        const bool valid = bath.debye_frequency_ghz() / delta > min_debye_ratio;
        for (double t : temperatures_k) {
            if (!(t >= calib.temp_offset_k)) throw DomainError("coherence_budget: T below temp_offset");
            const double k = detail::direct_prefactor(chi_rho, delta);
            const double n = bose_occupation(delta, t - calib.temp_offset_k);
            const double up = k * n, down = k * (n + 1.0);
            const double inf = std::numeric_limits<double>::infinity();
            const double t1 = 1.0 / (up + down);
            rows.push_back({delta, t, up > 0.0 ? 1.0 / up : inf, 1.0 / down, t1, 2.0 * t1, valid});
        }
    }
    return rows;
}

}  // namespace phonolib
