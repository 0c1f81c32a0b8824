#pragma once

#include "dynamics.hpp"
#include "linewidth.hpp"
#include "rates.hpp"
#include "shifts.hpp"
#include "spectra.hpp"
#include "units.hpp"

// Parameter sets calibrated to the published SiV- temperature laws.
namespace phonolib::presets {

inline constexpr double ground_splitting_ghz = 50.0;
inline constexpr double excited_splitting_ghz = 260.0;
inline constexpr double center_wavelength_nm = 737.0;

// 1/gamma_up = 101 (e^{h Delta/k_B T} - 1) ns at Delta = 50 GHz.
inline T1Params relaxation_calibration() { return {1.0 / 101.0, ground_splitting_ghz, 0.0}; }

// Empirical pump-probe fit with its temperature offset.
inline T1Params pump_probe_t1_fit() { return {0.0099, ground_splitting_ghz, 2.26}; }

inline double ground_chi_rho() { return relaxation_calibration().chi_rho(); }

inline MottSeitzParams lifetime() { return {1.7, 3.3, 55.0}; }

// Linear law -1.05 + 24.26 T below 20 K, cubic law 103 + 0.12 T^3 above 70 K.
inline LinewidthParams linewidth() {
    return calibrate_linewidth(LinewidthCalibration{}, OrbitalDoublet{excited_splitting_ghz, Branch::excited},
                               constants::default_debye_temperature_k, lifetime());
}

inline FineStructure fine_structure() { return {center_wavelength_nm, ground_splitting_ghz, excited_splitting_ghz}; }

inline SpectralModels spectral_models() {
    SpectralModels m;
    m.linewidth = linewidth();
    return m;
}

// Ground-block relaxation of 39 ns at 5 K.
inline LambdaPreset pump_probe() { return {}; }

}  // namespace phonolib::presets
