#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "fit/compare.hpp"
#include "fit/engine.hpp"
#include "fit/models.hpp"
#include "linewidth.hpp"
#include "shifts.hpp"
#include "units.hpp"

namespace phonolib {

struct FineStructure {
    double center_wavelength_nm = 737.0;
    double ground_splitting_ghz = 50.0;
    double excited_splitting_ghz = 260.0;

    void validate() const {
        if (!(ground_splitting_ghz > 0.0) || !(excited_splitting_ghz > 0.0))
            throw DomainError("fine-structure splittings must be > 0");
    }
    // Boltzmann populations of the {upper, lower} excited branches.
    std::array<double, 2> branch_weights(double t_k) const {
        const double ratio = thermal_ratio(excited_splitting_ghz, t_k);
        const double w = std::isinf(ratio) ? 0.0 : 1.0 / ratio;
        return {w / (1.0 + w), 1.0 / (1.0 + w)};
    }
};

struct SpectralModels {
    LinewidthParams linewidth;
    double ground_split_chi_rho = 2.7e-9;   // GHz^-2, T^2 splitting reduction
    double excited_split_chi_rho = 2.7e-9;
    double line_shift_chi_rho = 1e-10;      // common line position
    double resolution_ghz = 0.0;            // instrument Lorentzian width
};

struct SpectralLine {
    char label;
    double center_ghz;
    double fwhm_ghz;
    double area;
};

struct Spectrum {
    std::vector<double> grid_ghz;
    std::vector<double> intensity;

    void validate() const {
        if (grid_ghz.size() != intensity.size() || grid_ghz.size() < 3)
            throw PreconditionError("spectrum needs matching grid and intensity with at least 3 samples");
        for (std::size_t i = 1; i < grid_ghz.size(); ++i)
            if (!(grid_ghz[i] > grid_ghz[i - 1])) throw PreconditionError("spectrum grid must be strictly increasing");
        for (double v : intensity)
            if (!std::isfinite(v)) throw PreconditionError("spectrum intensity must be finite");
    }
};

// Lines A-D in order of increasing wavelength, frequencies relative to the T = 0 line centre.
inline std::array<SpectralLine, 4> spectral_lines(const FineStructure& fs, const SpectralModels& m, double t_k) {
    fs.validate();
    if (!(t_k >= 0.0)) throw DomainError("temperature must be >= 0");
    const double debye = m.linewidth.bath.debye_temp_k;
    const OrbitalDoublet g{fs.ground_splitting_ghz, Branch::ground}, u{fs.excited_splitting_ghz, Branch::excited};
    const double dg = fs.ground_splitting_ghz + splitting_shift_thermal(g, PhononBath{m.ground_split_chi_rho, debye, t_k});
    const double du = fs.excited_splitting_ghz + splitting_shift_thermal(u, PhononBath{m.excited_split_chi_rho, debye, t_k});
    const double s = units::mev_to_ghz(line_position_shift(PhononBath{m.line_shift_chi_rho, debye, t_k}));

    LinewidthParams lw = m.linewidth;
    lw.doublet_u = u;
    const double base = linewidth_model(lw, t_k) * 1e-3;
    const auto r = single_phonon_rates(u, lw.bath.at(t_k));
    // Upper-branch lines lose the absorption term and gain the faster emission term.
    const double upper = base + (units::rate_to_fwhm_mhz(r.gamma_down) - units::rate_to_fwhm_mhz(r.gamma_up)) * 1e-3;
    const auto w = fs.branch_weights(t_k);
    const double res = m.resolution_ghz;
    return {{{'A', s + 0.5 * (du + dg), upper + res, 0.5 * w[0]},
             {'B', s + 0.5 * (du - dg), upper + res, 0.5 * w[0]},
             {'C', s - 0.5 * (du - dg), base + res, 0.5 * w[1]},
             {'D', s - 0.5 * (du + dg), base + res, 0.5 * w[1]}}};
}

inline double lorentzian_profile(double x, double center, double fwhm, double area) {
    const double hw = 0.5 * fwhm, dx = x - center;
    return area * hw / (constants::pi * (dx * dx + hw * hw));
}

// Uniform grid resolving the narrowest line and reaching five widest widths past the outer lines.
inline std::vector<double> auto_grid(const std::array<SpectralLine, 4>& lines, std::size_t max_points = 200000) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo, wmin = lo, wmax = 0.0;
    for (const auto& l : lines) {
        lo = std::min(lo, l.center_ghz);
        hi = std::max(hi, l.center_ghz);
        wmin = std::min(wmin, l.fwhm_ghz);
        wmax = std::max(wmax, l.fwhm_ghz);
    }
    lo -= 5.0 * wmax;
    hi += 5.0 * wmax;
    const double step = std::max(wmin / 10.0, (hi - lo) / static_cast<double>(max_points - 1));
    std::vector<double> g;
    for (std::size_t i = 0; lo + i * step <= hi; ++i) g.push_back(lo + i * step);
    return g;
}

inline Spectrum synthesize_spectrum(const FineStructure& fs, const SpectralModels& m, double t_k,
                                    std::vector<double> grid = {}) {
    const auto lines = spectral_lines(fs, m, t_k);
    if (grid.empty()) grid = auto_grid(lines);
    double wmax = 0.0;
    for (const auto& l : lines) wmax = std::max(wmax, l.fwhm_ghz);
    for (const auto& l : lines)
        if (grid.empty() || l.center_ghz - 0.5 * wmax < grid.front() || l.center_ghz + 0.5 * wmax > grid.back())
            throw UsageError(std::string("grid does not span line ") + l.label);
    Spectrum sp{std::move(grid), {}};
    sp.intensity.reserve(sp.grid_ghz.size());
    for (double x : sp.grid_ghz) {
        double y = 0.0;
        for (const auto& l : lines) y += lorentzian_profile(x, l.center_ghz, l.fwhm_ghz, l.area);
        sp.intensity.push_back(y);
    }
    sp.validate();
    return sp;
}

// Local maxima whose topographic prominence is at least the given fraction of the global maximum.
inline int count_resolvable_peaks(const Spectrum& s, double prominence_fraction = 0.05) {
    s.validate();
    const auto& y = s.intensity;
    const std::size_t n = y.size();
    const double top = *std::max_element(y.begin(), y.end());
    if (!(top > 0.0)) return 0;
    int count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const bool left_ok = i == 0 || y[i] > y[i - 1];
        std::size_t j = i;
        while (j + 1 < n && y[j + 1] == y[i]) ++j;  // plateau
        const bool right_ok = j + 1 == n || y[j + 1] < y[i];
        if (!left_ok || !right_ok || (i == 0 && j + 1 == n)) continue;
        double left_base = y[i], right_base = y[i];
        for (std::size_t k = i; k-- > 0;) {
            if (y[k] > y[i]) break;
            left_base = std::min(left_base, y[k]);
        }
        for (std::size_t k = j + 1; k < n; ++k) {
            if (y[k] > y[i]) break;
            right_base = std::min(right_base, y[k]);
        }
        if (y[i] - std::max(left_base, right_base) >= prominence_fraction * top) ++count;
        i = j;
    }
    return count;
}

struct PeakParams {
    double center_ghz;
    double fwhm_ghz;
    double area;
};

struct PeakFit {
    std::vector<PeakParams> peaks;
    double residual_norm = 0.0;
    double max_relative_sigma = 0.0;  // centres relative to their own width
    bool ill_conditioned = false;
    fit::FitResult fit;
};

inline constexpr double peak_sigma_blowup = 0.25;

inline fit::Dataset spectrum_dataset(const Spectrum& s) {
    s.validate();
    auto d = fit::make_dataset(s.grid_ghz, s.intensity);
    d.x_unit = "ghz";
    return d;
}

inline PeakFit fit_lorentzians(const Spectrum& s, std::size_t n_peaks, const std::vector<PeakParams>& init = {},
                               const fit::FitOptions& opt = {}) {
    if (n_peaks == 0) throw PreconditionError("fit_lorentzians: n_peaks must be >= 1");
    if (!init.empty() && init.size() != n_peaks) throw PreconditionError("fit_lorentzians: one initial guess per peak");
    const auto d = spectrum_dataset(s);
    fit::ModelContext ctx;
    ctx.n_peaks = n_peaks;
    auto spec = fit::make_model(fit::ModelId::lorentzian_multi, ctx, d);
    for (std::size_t k = 0; k < init.size(); ++k) {
        const std::string i = std::to_string(k);
        if (init[k].center_ghz < s.grid_ghz.front() || init[k].center_ghz > s.grid_ghz.back())
            throw PreconditionError("fit_lorentzians: initial centre outside grid");
        spec.set_initial("center_" + i, init[k].center_ghz)
            .set_initial("fwhm_" + i, init[k].fwhm_ghz)
            .set_initial("area_" + i, init[k].area);
    }
    PeakFit pf;
    pf.fit = fit::fit_model(spec, d, opt);
    if (!pf.fit.converged) throw FitError("fit_lorentzians: no convergence after " + std::to_string(pf.fit.n_iter) + " iterations");
    const auto& v = pf.fit.values;
    const auto& e = pf.fit.sigmas;
    for (std::size_t k = 0; k < n_peaks; ++k) {
        pf.peaks.push_back({v[3 * k], v[3 * k + 1], v[3 * k + 2]});
        for (std::size_t j = 0; j < 3; ++j) {
            const double scale = std::abs(v[3 * k + (j == 0 ? 1 : j)]);
            const double rel = scale > 0.0 ? e[3 * k + j] / scale : std::numeric_limits<double>::infinity();
            pf.max_relative_sigma = std::max(pf.max_relative_sigma, rel);
        }
    }
    pf.ill_conditioned = pf.fit.ill_conditioned || !(pf.max_relative_sigma <= peak_sigma_blowup);
    std::sort(pf.peaks.begin(), pf.peaks.end(), [](auto& a, auto& b) { return a.center_ghz < b.center_ghz; });
    pf.residual_norm = std::sqrt(pf.fit.chi2);
    return pf;
}

}  // namespace phonolib
