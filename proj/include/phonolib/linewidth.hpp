#pragma once

#include <cmath>
#include <optional>

#include "rates.hpp"
#include "shifts.hpp"
#include "units.hpp"

namespace phonolib {

struct LinewidthParams {
    double gamma_r_per_ns = 0.47;  // total decay rate at T = 0
    MottSeitzParams nr_model;
    OrbitalDoublet doublet_u{260.0, Branch::excited};
    PhononBath bath;  // temperature ignored; chi_rho drives the one-phonon term
    std::optional<double> dephasing_chi_rho;  // defaults to bath.chi_rho

    void validate() const {
        if (!(gamma_r_per_ns > 0.0)) throw DomainError("gamma_r must be > 0");
        nr_model.validate();
        check_bath_scale(doublet_u, bath);
        if (dephasing_chi_rho && !(*dephasing_chi_rho >= 0.0)) throw DomainError("dephasing chi_rho must be >= 0");
    }
};

// FWHM contributions in MHz.
struct LinewidthComponents {
    double radiative = 0.0;
    double nonradiative = 0.0;
    double one_phonon = 0.0;
    double dephasing = 0.0;
    double total() const { return radiative + nonradiative + one_phonon + dephasing; }
};

// Thermally activated increase of the decay rate above its T = 0 value.
inline double nonradiative_rate(const MottSeitzParams& ms, double t_k) {
    return 1.0 / mott_seitz_lifetime(ms, t_k) - 1.0 / ms.tau0_ns;
}

inline LinewidthComponents linewidth_components(const LinewidthParams& p, double t_k) {
    p.validate();
    if (!(t_k >= 0.0)) throw DomainError("linewidth_model: T must be >= 0");
    LinewidthComponents c;
    c.radiative = units::rate_to_fwhm_mhz(p.gamma_r_per_ns);
    if (t_k == 0.0) return c;
    const PhononBath bath = p.bath.at(t_k);
    c.nonradiative = units::rate_to_fwhm_mhz(nonradiative_rate(p.nr_model, t_k));
    c.one_phonon = units::rate_to_fwhm_mhz(single_phonon_rates(p.doublet_u, bath).gamma_up);
    PhononBath deph = bath;
    deph.chi_rho = p.dephasing_chi_rho.value_or(p.bath.chi_rho);
    c.dephasing = units::rate_to_fwhm_mhz(two_phonon_dephasing_rate(p.doublet_u, deph));
    return c;
}

inline double linewidth_model(const LinewidthParams& p, double t_k) { return linewidth_components(p, t_k).total(); }

// Highest temperature at which the dephasing term overtakes the one-phonon term. At very low T the
// frozen-out one-phonon term can also lose to the T^3 term, so the bracket is found from the hot end.
inline double linewidth_crossover_k(const LinewidthParams& p, double t_lo = 0.5, double t_hi = 2000.0) {
    auto diff = [&](double t) {
        const auto c = linewidth_components(p, t);
        return c.dephasing - c.one_phonon;
    };
    if (!(t_lo > 0.0) || !(t_hi > t_lo)) throw PreconditionError("linewidth crossover: need 0 < t_lo < t_hi");
    if (diff(t_hi) < 0.0) throw NumericalError("linewidth crossover: one-phonon term still dominates at t_hi");
    double b = t_hi, a = t_hi;
    while (diff(a) >= 0.0) {
        b = a;
        a /= 1.02;
        if (a < t_lo) throw NumericalError("linewidth crossover not bracketed");
    }
    for (int i = 0; i < 200 && b - a > 1e-9 * b; ++i) {
        const double m = 0.5 * (a + b);
        (diff(m) < 0.0 ? a : b) = m;
    }
    return 0.5 * (a + b);
}

struct LinewidthCalibration {
    double linear_slope_mhz_per_k = 24.26;
    double cubic_mhz_per_k3 = 0.12;
    double anchor_temperature_k = 4.0;
    double anchor_fwhm_mhz = -1.05 + 24.26 * 4.0;
};

// One-phonon chi_rho from the high-T slope, dephasing chi_rho from the T^3
// coefficient, and gamma_r so that the model passes through the anchor.
inline LinewidthParams calibrate_linewidth(const LinewidthCalibration& cal, const OrbitalDoublet& doublet_u,
                                           double debye_temp_k, const MottSeitzParams& ms) {
    const double delta = doublet_u.splitting_ghz;
    const double g = units::ghz_per_kelvin;
    const double pi = constants::pi;
    LinewidthParams p;
    p.doublet_u = doublet_u;
    p.nr_model = ms;
    p.bath.debye_temp_k = debye_temp_k;
    p.bath.chi_rho = cal.linear_slope_mhz_per_k / (1e3 * delta * delta * g);
    p.dephasing_chi_rho = std::sqrt(cal.cubic_mhz_per_k3 / (1e3 * pi * pi / 3.0 * delta * delta * g * g * g));
    p.gamma_r_per_ns = 1.0;
    const auto c = linewidth_components(p, cal.anchor_temperature_k);
    const double floor_mhz = cal.anchor_fwhm_mhz - c.nonradiative - c.one_phonon - c.dephasing;
    if (!(floor_mhz > 0.0)) throw NumericalError("linewidth calibration leaves no room for a positive floor");
    p.gamma_r_per_ns = units::fwhm_mhz_to_rate(floor_mhz);
    return p;
}

}  // namespace phonolib
