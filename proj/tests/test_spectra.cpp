#include <gtest/gtest.h>

#include <cmath>

#include "phonolib/presets.hpp"
#include "phonolib/spectra.hpp"
#include "support.hpp"

using namespace phonolib;

namespace {

Spectrum lorentz_sum(const std::vector<PeakParams>& peaks, double lo, double hi, double step) {
    Spectrum s;
    for (double x : testsupport::range(lo, hi, step)) {
        double y = 0.0;
        for (const auto& p : peaks) y += lorentzian_profile(x, p.center_ghz, p.fwhm_ghz, p.area);
        s.grid_ghz.push_back(x);
        s.intensity.push_back(y);
    }
    return s;
}

// Trapezoid with the Euler-Maclaurin endpoint term, plus the analytic Lorentzian tails beyond the grid.
double total_area(const Spectrum& s, const std::array<SpectralLine, 4>& lines) {
    double a = 0.0;
    for (std::size_t i = 1; i < s.grid_ghz.size(); ++i)
        a += 0.5 * (s.intensity[i] + s.intensity[i - 1]) * (s.grid_ghz[i] - s.grid_ghz[i - 1]);
    const double h = s.grid_ghz[1] - s.grid_ghz[0];
    for (const auto& l : lines) {
        const double hw = 0.5 * l.fwhm_ghz;
        const auto slope = [&](double x) {
            const double d = x - l.center_ghz;
            return -2.0 * l.area * hw * d / (constants::pi * std::pow(d * d + hw * hw, 2));
        };
        a -= h * h / 12.0 * (slope(s.grid_ghz.back()) - slope(s.grid_ghz.front()));
        const double lo = std::atan((s.grid_ghz.front() - l.center_ghz) / hw);
        const double hi = std::atan((s.grid_ghz.back() - l.center_ghz) / hw);
        a += l.area * (1.0 - (hi - lo) / constants::pi);
    }
    return a;
}

}  // namespace

TEST(SpectralLines, OrderingAndAreas) {
    const auto fs = presets::fine_structure();
    const auto m = presets::spectral_models();
    for (double t : {1.0, 10.0, 50.0, 200.0}) {
        const auto l = spectral_lines(fs, m, t);
        EXPECT_GT(l[0].center_ghz, l[1].center_ghz);
        EXPECT_GT(l[1].center_ghz, l[2].center_ghz);
        EXPECT_GT(l[2].center_ghz, l[3].center_ghz);
        double area = 0.0;
        for (const auto& x : l) area += x.area;
        EXPECT_NEAR(area, 1.0, 1e-14);
    }
}

TEST(SpectralLines, UpperBranchFadesAtLowTemperature) {
    const auto fs = presets::fine_structure();
    const auto m = presets::spectral_models();
    double prev = 1.0;
    for (double t : {20.0, 10.0, 5.0, 2.0, 1.0, 0.5}) {
        const auto l = spectral_lines(fs, m, t);
        const double ratio = l[1].area / l[3].area;
        EXPECT_NEAR(ratio, std::exp(-units::ghz_to_kelvin(fs.excited_splitting_ghz) / t), 1e-12);
        EXPECT_LT(ratio, prev);
        prev = ratio;
    }
    EXPECT_LT(prev, 1e-10);
    EXPECT_EQ(spectral_lines(fs, m, 0.0)[0].area, 0.0);
}

TEST(SpectralLines, UpperBranchLinesBroaderAt5K) {
    const auto l = spectral_lines(presets::fine_structure(), presets::spectral_models(), 5.0);
    EXPECT_GT(l[1].fwhm_ghz / l[3].fwhm_ghz, 1.0);
    EXPECT_DOUBLE_EQ(l[0].fwhm_ghz, l[1].fwhm_ghz);
    EXPECT_DOUBLE_EQ(l[2].fwhm_ghz, l[3].fwhm_ghz);
}

TEST(SpectralLines, InstrumentResolutionAddsToEveryWidth) {
    const auto fs = presets::fine_structure();
    auto m = presets::spectral_models();
    const auto a = spectral_lines(fs, m, 15.0);
    m.resolution_ghz = 0.3;
    const auto b = spectral_lines(fs, m, 15.0);
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(b[i].fwhm_ghz - a[i].fwhm_ghz, 0.3, 1e-12);
}

TEST(Synthesize, PeakCountsAtCalibratedTemperatures) {
    const auto fs = presets::fine_structure();
    const auto m = presets::spectral_models();
    EXPECT_EQ(count_resolvable_peaks(synthesize_spectrum(fs, m, 10.0)), 4);
    EXPECT_EQ(count_resolvable_peaks(synthesize_spectrum(fs, m, 90.0)), 2);
    EXPECT_EQ(count_resolvable_peaks(synthesize_spectrum(fs, m, 150.0)), 1);
}

TEST(Synthesize, PeakCountNonIncreasingAboveTenKelvin) {
    const auto fs = presets::fine_structure();
    const auto m = presets::spectral_models();
    int prev = 4;
    for (double t : testsupport::range(10.0, 350.0, 2.0)) {
        const int n = count_resolvable_peaks(synthesize_spectrum(fs, m, t));
        EXPECT_LE(n, prev) << t;
        prev = n;
    }
    EXPECT_EQ(prev, 1);
}

TEST(Synthesize, AreaConservedUnderBroadening) {
    const auto fs = presets::fine_structure();
    testsupport::Gen g(11);
    for (int i = 0; i < 10; ++i) {
        auto m = presets::spectral_models();
        const double t = g.uniform(5.0, 300.0);
        m.resolution_ghz = g.log_uniform(1e-3, 50.0);
        const auto lines = spectral_lines(fs, m, t);
        EXPECT_NEAR(total_area(synthesize_spectrum(fs, m, t), lines), 1.0, 1e-6) << t;
    }
}

TEST(Synthesize, SplittingsFollowShiftModel) {
    const auto fs = presets::fine_structure();
    const auto m = presets::spectral_models();
    const double debye = m.linewidth.bath.debye_temp_k;
    for (double t : {15.0, 25.0, 35.0, 45.0}) {
        const auto s = synthesize_spectrum(fs, m, t);
        const auto lines = spectral_lines(fs, m, t);
        std::vector<PeakParams> init;
        for (int k = 3; k >= 0; --k) init.push_back({lines[k].center_ghz + 0.02, lines[k].fwhm_ghz * 1.05, lines[k].area});
        const auto pf = fit_lorentzians(s, 4, init);
        const double dg = pf.peaks[3].center_ghz - pf.peaks[2].center_ghz;
        const double du = pf.peaks[3].center_ghz - pf.peaks[1].center_ghz;
        const double shrink_g = fs.ground_splitting_ghz - dg;
        const double shrink_u = fs.excited_splitting_ghz - du;
        const double expect_g = -splitting_shift_thermal({fs.ground_splitting_ghz, Branch::ground},
                                                         PhononBath{m.ground_split_chi_rho, debye, t});
        const double expect_u = -splitting_shift_thermal({fs.excited_splitting_ghz, Branch::excited},
                                                         PhononBath{m.excited_split_chi_rho, debye, t});
        EXPECT_LT(testsupport::relerr(shrink_g, expect_g), 0.02) << t;
        EXPECT_LT(testsupport::relerr(shrink_u, expect_u), 0.02) << t;
    }
}

TEST(Synthesize, GridMustSpanLines) {
    const auto fs = presets::fine_structure();
    const auto m = presets::spectral_models();
    EXPECT_THROW(synthesize_spectrum(fs, m, 10.0, testsupport::range(-120.0, 120.0, 0.01)), UsageError);
    EXPECT_NO_THROW(synthesize_spectrum(fs, m, 10.0, testsupport::range(-200.0, 200.0, 0.01)));
    EXPECT_THROW(synthesize_spectrum(fs, m, -1.0), DomainError);
}

TEST(Spectrum, Validation) {
    EXPECT_THROW((Spectrum{{0.0, 1.0, 1.0}, {1.0, 2.0, 3.0}}.validate()), PreconditionError);
    EXPECT_THROW((Spectrum{{0.0, 1.0, 2.0}, {1.0, NAN, 3.0}}.validate()), PreconditionError);
    EXPECT_THROW((Spectrum{{0.0, 1.0}, {1.0, 2.0}}.validate()), PreconditionError);
}

TEST(CountPeaks, HandBuiltProfiles) {
    EXPECT_EQ(count_resolvable_peaks(Spectrum{{0, 1, 2, 3}, {1, 1, 1, 1}}), 0);
    EXPECT_EQ(count_resolvable_peaks(lorentz_sum({{0.0, 1.0, 1.0}}, -10, 10, 0.01)), 1);
    EXPECT_EQ(count_resolvable_peaks(lorentz_sum({{-5.0, 1.0, 1.0}, {5.0, 1.0, 1.0}}, -20, 20, 0.01)), 2);
    // A shoulder far below the threshold is ignored, one above it is not.
    EXPECT_EQ(count_resolvable_peaks(lorentz_sum({{-5.0, 1.0, 1.0}, {5.0, 1.0, 0.01}}, -20, 20, 0.01)), 1);
    EXPECT_EQ(count_resolvable_peaks(lorentz_sum({{-5.0, 1.0, 1.0}, {5.0, 1.0, 0.2}}, -20, 20, 0.01)), 2);
    EXPECT_EQ(count_resolvable_peaks(lorentz_sum({{-5.0, 1.0, 1.0}, {5.0, 1.0, 0.2}}, -20, 20, 0.01), 0.5), 1);
}

TEST(FitLorentzians, SingleLineHundredMegahertz) {
    const auto s = lorentz_sum({{0.0, 0.1, 2.0}}, -2.0, 2.0, 0.002);
    const auto pf = fit_lorentzians(s, 1);
    EXPECT_NEAR(pf.peaks[0].fwhm_ghz * 1e3, 100.0, 0.01);
    EXPECT_NEAR(pf.peaks[0].center_ghz, 0.0, 1e-8);
    EXPECT_LT(testsupport::relerr(pf.peaks[0].area, 2.0), 1e-6);
    EXPECT_FALSE(pf.ill_conditioned);
}

TEST(FitLorentzians, NoiselessRecoveryOneInAMillion) {
    testsupport::Gen g(5);
    for (int i = 0; i < 5; ++i) {
        const std::vector<PeakParams> truth{{g.uniform(-3, -1), g.uniform(0.3, 1.0), g.uniform(0.5, 2.0)},
                                            {g.uniform(1, 3), g.uniform(0.3, 1.0), g.uniform(0.5, 2.0)}};
        const auto s = lorentz_sum(truth, -15, 15, 0.02);
        const auto pf = fit_lorentzians(s, 2);
        for (int k = 0; k < 2; ++k) {
            EXPECT_NEAR(pf.peaks[k].center_ghz, truth[k].center_ghz, 1e-6 * truth[k].fwhm_ghz);
            EXPECT_LT(testsupport::relerr(pf.peaks[k].fwhm_ghz, truth[k].fwhm_ghz), 1e-6);
            EXPECT_LT(testsupport::relerr(pf.peaks[k].area, truth[k].area), 1e-6);
        }
    }
}

TEST(FitLorentzians, SeparatedByFiveWidths) {
    const auto s = lorentz_sum({{-2.5, 1.0, 1.0}, {2.5, 1.0, 0.7}}, -20, 20, 0.02);
    const auto pf = fit_lorentzians(s, 2, {{-2.0, 1.5, 1.0}, {3.0, 1.5, 1.0}});
    EXPECT_LT(std::abs(pf.peaks[0].center_ghz + 2.5) / 2.5, 1e-3);
    EXPECT_LT(std::abs(pf.peaks[1].center_ghz - 2.5) / 2.5, 1e-3);
    EXPECT_LT(testsupport::relerr(pf.peaks[0].fwhm_ghz, 1.0), 1e-3);
    EXPECT_LT(testsupport::relerr(pf.peaks[1].area, 0.7), 1e-3);
    EXPECT_FALSE(pf.ill_conditioned);
}

TEST(FitLorentzians, UnresolvablePairFlaggedAndSinglePreferred) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        testsupport::Gen g(seed);
        auto s = lorentz_sum({{-0.1, 1.0, 0.5}, {0.1, 1.0, 0.5}}, -10, 10, 0.05);
        const double h = *std::max_element(s.intensity.begin(), s.intensity.end());
        for (double& y : s.intensity) y += 0.01 * h * g.normal();
        const auto one = fit_lorentzians(s, 1);
        const auto two = fit_lorentzians(s, 2, {{-0.2, 1.0, 0.5}, {0.2, 1.0, 0.5}});
        EXPECT_TRUE(two.ill_conditioned) << seed << " " << two.max_relative_sigma;
        EXPECT_FALSE(one.ill_conditioned) << seed;
        EXPECT_LT(fit::aicc(one.fit), fit::aicc(two.fit)) << seed;
    }
}

TEST(FitLorentzians, RoundTripInResolvedRegime) {
    const auto fs = presets::fine_structure();
    const auto m = presets::spectral_models();
    for (double t : {6.0, 10.0, 15.0, 20.0}) {
        const auto lines = spectral_lines(fs, m, t);
        std::vector<PeakParams> init;
        for (int k = 3; k >= 0; --k)
            init.push_back({lines[k].center_ghz + 0.1 * lines[k].fwhm_ghz, lines[k].fwhm_ghz * 1.2, lines[k].area * 0.8});
        const auto pf = fit_lorentzians(synthesize_spectrum(fs, m, t), 4, init);
        for (int k = 0; k < 4; ++k) {
            const auto& l = lines[3 - k];
            EXPECT_LT(std::abs(pf.peaks[k].center_ghz - l.center_ghz) / std::abs(l.center_ghz), 5e-3) << t;
            EXPECT_LT(testsupport::relerr(pf.peaks[k].fwhm_ghz, l.fwhm_ghz), 5e-3) << t;
        }
    }
}

TEST(FitLorentzians, Preconditions) {
    const auto s = lorentz_sum({{0.0, 1.0, 1.0}}, -5, 5, 0.1);
    EXPECT_THROW(fit_lorentzians(s, 0), PreconditionError);
    EXPECT_THROW(fit_lorentzians(s, 1, {{9.0, 1.0, 1.0}}), PreconditionError);
    EXPECT_THROW(fit_lorentzians(s, 2, {{0.0, 1.0, 1.0}}), PreconditionError);
}
