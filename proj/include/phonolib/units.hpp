#pragma once

#include <cmath>
#include <limits>
#include <numbers>

#include "errors.hpp"

// Canonical units: frequency GHz (ordinary, not angular), temperature K,
// time ns, energy meV, rate 1/ns. The dimensionless thermal argument is
// x = h*nu / (k_B*T), so a 50 GHz splitting corresponds to 2.3998 K.
namespace phonolib {

namespace constants {
inline constexpr double planck = 6.62607015e-34;       // J s
inline constexpr double boltzmann = 1.380649e-23;      // J / K
inline constexpr double elementary_charge = 1.602176634e-19;  // C
inline constexpr double pi = std::numbers::pi;
inline constexpr double default_debye_temperature_k = 2230.0;
}  // namespace constants

namespace units {
inline constexpr double kelvin_per_ghz = constants::planck * 1e9 / constants::boltzmann;
inline constexpr double ghz_per_kelvin = 1.0 / kelvin_per_ghz;
inline constexpr double mev_per_ghz = constants::planck * 1e9 / constants::elementary_charge * 1e3;
inline constexpr double mev_per_kelvin = constants::boltzmann / constants::elementary_charge * 1e3;

constexpr double ghz_to_kelvin(double ghz) { return ghz * kelvin_per_ghz; }
constexpr double kelvin_to_ghz(double k) { return k * ghz_per_kelvin; }
constexpr double ghz_to_mev(double ghz) { return ghz * mev_per_ghz; }
constexpr double mev_to_ghz(double mev) { return mev / mev_per_ghz; }
constexpr double kelvin_to_mev(double k) { return k * mev_per_kelvin; }
constexpr double mev_to_kelvin(double mev) { return mev / mev_per_kelvin; }
// FWHM contribution in MHz of a decay rate in 1/ns.
constexpr double rate_to_fwhm_mhz(double rate_per_ns) { return rate_per_ns / (2.0 * constants::pi) * 1e3; }
constexpr double fwhm_mhz_to_rate(double mhz) { return mhz * 1e-3 * 2.0 * constants::pi; }
}  // namespace units

struct PhononBath {
    double chi_rho = 0.0;  // GHz^-2
    double debye_temp_k = constants::default_debye_temperature_k;
    double temperature_k = 0.0;

    double debye_frequency_ghz() const { return units::kelvin_to_ghz(debye_temp_k); }
    // k_B T / h in GHz.
    double thermal_frequency_ghz() const { return units::kelvin_to_ghz(temperature_k); }

    void validate() const {
        if (!(chi_rho >= 0.0) || !std::isfinite(chi_rho)) throw DomainError("chi_rho must be finite and >= 0");
        if (!(debye_temp_k > 0.0) || !std::isfinite(debye_temp_k)) throw DomainError("debye_temp_k must be > 0");
        if (!(temperature_k >= 0.0) || !std::isfinite(temperature_k)) throw DomainError("temperature_k must be >= 0");
    }

    PhononBath at(double t_k) const {
        PhononBath b = *this;
        b.temperature_k = t_k;
        return b;
    }
};

inline constexpr double min_debye_ratio = 100.0;

inline double bose_occupation(double delta_ghz, double t_k) {
    if (!(delta_ghz > 0.0)) throw DomainError("bose_occupation: splitting must be > 0 GHz");
    if (!(t_k >= 0.0)) throw DomainError("bose_occupation: temperature must be >= 0 K");
    if (t_k == 0.0) return 0.0;
    const double x = units::ghz_to_kelvin(delta_ghz) / t_k;
    if (x > 700.0) return 0.0;
    if (x < 1e-6) return 1.0 / x - 0.5;
    return 1.0 / std::expm1(x);
}

// exp(h*delta / k_B T) = (n+1)/n; +inf at T = 0.
inline double thermal_ratio(double delta_ghz, double t_k) {
    if (!(delta_ghz > 0.0)) throw DomainError("thermal_ratio: splitting must be > 0 GHz");
    if (!(t_k >= 0.0)) throw DomainError("thermal_ratio: temperature must be >= 0 K");
    if (t_k == 0.0) return std::numeric_limits<double>::infinity();
    return std::exp(units::ghz_to_kelvin(delta_ghz) / t_k);
}

}  // namespace phonolib
