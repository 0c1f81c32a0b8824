#pragma once

#include <cmath>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "interpolation.hpp"
#include "io/csv.hpp"
#include "quadrature.hpp"
#include "rates.hpp"
#include "units.hpp"

namespace phonolib {

struct MottSeitzParams {
    double tau0_ns = 1.72;
    double alpha = 3.3;
    double activation_mev = 55.0;

    void validate() const {
        if (!(tau0_ns > 0.0)) throw DomainError("Mott-Seitz tau0 must be > 0");
        if (!(alpha >= 0.0)) throw DomainError("Mott-Seitz alpha must be >= 0");
        if (!(activation_mev > 0.0)) throw DomainError("Mott-Seitz activation must be > 0");
    }
};

inline double mott_seitz_lifetime(const MottSeitzParams& p, double t_k) {
    p.validate();
    if (!(t_k >= 0.0)) throw DomainError("mott_seitz_lifetime: T must be >= 0");
    if (t_k == 0.0) return p.tau0_ns;
    return p.tau0_ns / (1.0 + p.alpha * std::exp(-p.activation_mev / units::kelvin_to_mev(t_k)));
}

// Second-order splitting shift -chi_rho Delta (Omega^2 + (2 pi^2/3) theta^2), GHz.
inline double splitting_shift(const OrbitalDoublet& d, const PhononBath& bath) {
    check_bath_scale(d, bath);
    const double omega = bath.debye_frequency_ghz();
    const double theta = bath.thermal_frequency_ghz();
    const double pi = constants::pi;
    return -bath.chi_rho * d.splitting_ghz * (omega * omega + 2.0 * pi * pi / 3.0 * theta * theta);
}

inline double splitting_shift_static(const OrbitalDoublet& d, const PhononBath& bath) {
    return splitting_shift(d, bath.at(0.0));
}

inline double splitting_shift_thermal(const OrbitalDoublet& d, const PhononBath& bath) {
    check_bath_scale(d, bath);
    const double theta = bath.thermal_frequency_ghz();
    const double pi = constants::pi;
    return -bath.chi_rho * d.splitting_ghz * 2.0 * pi * pi / 3.0 * theta * theta;
}

// (f(x) - 2) x^2 with f(x) = 2 e^x (e^{2x} + 3) / ((e^x - 1)(e^x + 1)^2).
inline double line_position_integrand(double x) {
    if (x <= 0.0) return 0.0;
    if (x < 1e-4) {
        const double g = 2.0 / x - 2.0 + x / 6.0 + x * x / 4.0 - x * x * x / 360.0;
        return g * x * x;
    }
    const double u = std::exp(-x);
    const double one_minus_u = -std::expm1(-x);
    const double g = (-2.0 * u + 8.0 * u * u + 2.0 * u * u * u) / (one_minus_u * (1.0 + u) * (1.0 + u));
    return g * x * x;
}

// Integral of line_position_integrand over [0, x_max]; beyond x = 200 the integrand is below 1e-80.
inline QuadratureResult line_position_integral(double x_max, const QuadratureOptions& opt = {}) {
    static constexpr double breaks[] = {0.0, 1.0, 4.0, 16.0, 64.0, 200.0};
    QuadratureResult total;
    const double top = std::min(x_max, 200.0);
    for (std::size_t i = 0; i + 1 < std::size(breaks) && breaks[i] < top; ++i) {
        const auto part = integrate(line_position_integrand, breaks[i], std::min(breaks[i + 1], top), opt);
        total.value += part.value;
        total.abs_error += part.abs_error;
        total.panels += part.panels;
        total.evaluations += part.evaluations;
    }
    return total;
}

// Thermal part of the mean optical line shift in meV, zero at T = 0.
inline double line_position_shift(const PhononBath& bath, const QuadratureOptions& opt = {}) {
    bath.validate();
    if (bath.temperature_k == 0.0) return 0.0;
    const double theta = bath.thermal_frequency_ghz();
    const double x_max = bath.debye_temp_k / bath.temperature_k;
    const double integral = line_position_integral(x_max, opt).value;
    return units::ghz_to_mev(-2.0 * bath.chi_rho * theta * theta * theta * integral);
}

// Temperature-independent part -(4/3) chi_rho Omega^3, meV.
inline double line_position_static(const PhononBath& bath) {
    bath.validate();
    const double omega = bath.debye_frequency_ghz();
    return units::ghz_to_mev(-4.0 / 3.0 * bath.chi_rho * omega * omega * omega);
}

struct ExpansionModel {
    double pressure_coeff_mev_per_gpa = 1.0;
    double bulk_modulus_gpa = 442.0;
    MonotoneCubic alpha_table;

    void validate() const {
        if (!(bulk_modulus_gpa > 0.0)) throw DomainError("bulk modulus must be > 0");
        if (!std::isfinite(pressure_coeff_mev_per_gpa)) throw DomainError("pressure coefficient must be finite");
        if (alpha_table.empty()) throw PreconditionError("expansion model has no e(T) table");
    }

    // P(T) = -B * integral_0^T e(x) dx, GPa.
    double pressure_gpa(double t_k) const {
        validate();
        if (!(t_k >= 0.0)) throw DomainError("thermal expansion: T must be >= 0");
        if (t_k == 0.0) return 0.0;
        return -bulk_modulus_gpa * alpha_table.integral(t_k);
    }
};

inline MonotoneCubic make_expansion_table(std::vector<double> t_k, std::vector<double> alpha_per_k) {
    if (t_k.empty() || t_k.front() != 0.0) throw PreconditionError("expansion table must start at T = 0 K");
    for (double a : alpha_per_k)
        if (!(a >= 0.0)) throw PreconditionError("expansion coefficient must be >= 0");
    return MonotoneCubic(std::move(t_k), std::move(alpha_per_k));
}

inline MonotoneCubic read_expansion_table(std::istream& in) {
    const auto t = io::read_csv(in);
    if (t.header != std::vector<std::string>{"temperature_k", "alpha_per_k"})
        throw ParseError("expansion table header must be temperature_k,alpha_per_k", 0);
    std::vector<double> x, y;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        if (!x.empty() && !(t.rows[i][0] > x.back()))
            throw ParseError("temperatures must be strictly increasing", t.lines[i]);
        x.push_back(t.rows[i][0]);
        y.push_back(t.rows[i][1]);
    }
    return make_expansion_table(std::move(x), std::move(y));
}

inline MonotoneCubic read_expansion_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open " + path.string());
    try {
        return read_expansion_table(in);
    } catch (const ParseError& e) {
        throw ParseError(e.detail(), e.line(), path.string());
    }
}

inline double thermal_expansion_shift(const ExpansionModel& m, double t_k) {
    return m.pressure_coeff_mev_per_gpa * m.pressure_gpa(t_k);
}

}  // namespace phonolib
