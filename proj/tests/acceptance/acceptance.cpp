// Acceptance suite: one PASS/FAIL line per criterion. With an argument N only criterion N runs.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "phonolib/fit/compare.hpp"
#include "phonolib/fit/engine.hpp"
#include "phonolib/fit/models.hpp"
#include "phonolib/phonolib.hpp"
#include "phonolib/presets.hpp"

using namespace phonolib;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void check(bool ok, const std::string& what) {
        if (!ok) pass = false;
        if (!detail.empty()) detail += "; ";
        detail += (ok ? "" : "FAILED ") + what;
    }
};

std::string fmt(const char* f, double a) {
    char buf[96];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string fmt(const char* f, double a, double b) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

std::vector<double> grid(double start, double stop, double step) {
    std::vector<double> v;
    for (int i = 0;; ++i) {
        const double x = start + i * step;
        if (x > stop + 1e-9 * step) break;
        v.push_back(x);
    }
    return v;
}

double slope_loglog(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]), ly = std::log(std::abs(y[i]));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : rng_(seed) {}
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }

private:
    std::mt19937_64 rng_;
};

// 1/gamma_up = 1/(k n) with k chosen so that 1/gamma_up -> 101 ns (e^x - 1) at 50 GHz.
double inv_gamma_up_oracle(double delta_ghz, double t_k) {
    const double x = 6.62607015e-34 * delta_ghz * 1e9 / (1.380649e-23 * t_k);
    return std::expm1(x) * 101.0 / std::pow(delta_ghz / 50.0, 3.0);
}

Outcome criterion_1() {
    Outcome o;
    const auto rows = coherence_budget(PhononBath{}, {50.0}, {1.0, 0.26}, presets::relaxation_calibration());
    const double at1 = rows[0].inv_gamma_up_ns, at026 = rows[1].inv_gamma_up_ns;
    o.check(std::abs(at1 / 1.01e3 - 1.0) <= 0.05, fmt("1/gamma_up(1 K) = %.4g ns", at1));
    o.check(std::abs(at026 / 1.03e6 - 1.0) <= 0.05, fmt("1/gamma_up(0.26 K) = %.4g ns", at026));
    o.check(std::abs(at1 / inv_gamma_up_oracle(50.0, 1.0) - 1.0) < 1e-9, "matches closed form at 1 K");
    return o;
}

Outcome criterion_2() {
    Outcome o;
    const auto rows = coherence_budget(PhononBath{}, {1600.0}, {4.0}, presets::relaxation_calibration());
    const double v = rows[0].inv_gamma_up_ns;
    o.check(v >= 1e6 / 2.5 && v <= 1e6 * 2.5, fmt("1/gamma_up(1.6 THz, 4 K) = %.4g ns", v));
    o.check(std::abs(v / inv_gamma_up_oracle(1600.0, 4.0) - 1.0) < 1e-9, "matches closed form");
    return o;
}

// Composite linewidth with Delta_u fixed; parameters are the floor and the coefficients of the
// asymptotic linear and cubic laws they imply.
LinewidthParams composite_params(std::span<const double> p) {
    const double delta = presets::excited_splitting_ghz, g = units::ghz_per_kelvin;
    LinewidthParams lp;
    lp.doublet_u = OrbitalDoublet{delta, Branch::excited};
    lp.nr_model = presets::lifetime();
    lp.bath.chi_rho = p[1] / (1e3 * delta * delta * g);
    lp.dephasing_chi_rho = std::sqrt(p[2] / (1e3 * constants::pi * constants::pi / 3.0 * delta * delta * g * g * g));
    lp.gamma_r_per_ns = units::fwhm_mhz_to_rate(p[0]);
    return lp;
}

fit::ModelSpec composite_linewidth_model() {
    fit::ModelSpec s{"composite_linewidth",
                     {{"floor_mhz", 100.0, 1e-3, 1e6}, {"slope_mhz_per_k", 20.0, 1e-6, 1e4}, {"cubic_mhz_per_k3", 0.1, 1e-9, 1e3}},
                     {},
                     {}};
    s.value = [](double t, std::span<const double> p) { return linewidth_model(composite_params(p), t); };
    return s;
}

Outcome criterion_3() {
    Outcome o;
    Rng rng(3);
    std::vector<double> t, y, s;
    for (double x : grid(4.0, 20.0, 1.0)) {
        const double v = -1.05 + 24.26 * x;
        t.push_back(x);
        y.push_back(v * (1.0 + 0.05 * rng.normal()));
        s.push_back(0.05 * v);
    }
    for (double x : grid(70.0, 350.0, 10.0)) {
        const double v = 103.0 + 0.12 * x * x * x;
        t.push_back(x);
        y.push_back(v * (1.0 + 0.05 * rng.normal()));
        s.push_back(0.05 * v);
    }
    const auto r = fit::fit_model(composite_linewidth_model(), fit::make_dataset(t, y, s));
    const auto lp = composite_params(r.values);
    std::vector<double> lo = grid(5.0, 15.0, 0.5), hi = grid(100.0, 350.0, 10.0), ylo, yhi;
    for (double x : lo) ylo.push_back(linewidth_model(lp, x));
    for (double x : hi) yhi.push_back(linewidth_model(lp, x));
    const double s_lo = slope_loglog(lo, ylo), s_hi = slope_loglog(hi, yhi);
    o.check(r.converged, fmt("fit converged (slope %.4g MHz/K, cubic %.4g MHz/K^3)", r.values[1], r.values[2]));
    double cross = std::numeric_limits<double>::quiet_NaN();
    try {
        cross = linewidth_crossover_k(lp);
    } catch (const NumericalError&) {
        // Dephasing dominates everywhere on the search interval.
    }
    o.check(std::abs(s_lo - 1.0) <= 0.1, fmt("slope 5-15 K = %.3f", s_lo));
    o.check(std::abs(s_hi - 3.0) <= 0.1, fmt("slope 100-350 K = %.3f", s_hi));
    o.check(cross >= 20.0 && cross <= 70.0, fmt("crossover = %.2f K", cross));
    return o;
}

Outcome criterion_4() {
    Outcome o;
    const auto sys = make_lambda_system(presets::pump_probe());
    const auto r = peak_height_recovery(sys, grid(0.0, 200.0, 5.0));
    o.check(std::abs(r.t1_ns - 39.0) <= 0.1, fmt("refit T1 = %.4f ns", r.t1_ns));
    const auto pts = steady_state_contrast(presets::pump_probe(), grid(4.5, 22.0, 0.5), presets::pump_probe_t1_fit());
    bool mono = true;
    for (std::size_t i = 1; i < pts.size(); ++i) mono = mono && pts[i].contrast <= pts[i - 1].contrast + 1e-12;
    o.check(mono, fmt("contrast non-increasing 4.5-22 K (%.3f -> %.3f)", pts.front().contrast, pts.back().contrast));
    return o;
}

Outcome criterion_5() {
    Outcome o;
    const MottSeitzParams ms{1.7, 3.3, 55.0};
    const double kb_mev = 1.380649e-23 / 1.602176634e-19 * 1e3;
    const double oracle = 1.0 / (1.0 + 3.3 * std::exp(-55.0 / (kb_mev * 300.0)));
    const double ratio = mott_seitz_lifetime(ms, 300.0) / mott_seitz_lifetime(ms, 0.0);
    o.check(std::abs(ratio - 0.718) <= 0.001 && std::abs(ratio - oracle) < 1e-12, fmt("tau(300 K)/tau(0) = %.5f", ratio));

    // Ten emitters per temperature, 3% noise each.
    Rng rng(5);
    const auto spec = fit::make_model(fit::ModelId::mott_seitz);
    int within = 0;
    std::vector<double> sig;
    for (int seed = 0; seed < 100; ++seed) {
        std::vector<double> t, y, s;
        for (double x : grid(5.0, 345.0, 10.0)) {
            const double v = fit::model_value(spec, x, {1.7, 3.3, 55.0});
            double mean = 0.0;
            for (int e = 0; e < 10; ++e) mean += v * (1.0 + 0.03 * rng.normal());
            t.push_back(x);
            y.push_back(mean / 10.0);
            s.push_back(0.03 * v / std::sqrt(10.0));
        }
        const auto d = fit::make_dataset(t, y, s);
        const auto r = fit::fit_model(fit::make_model(fit::ModelId::mott_seitz, {}, d), d);
        within += std::abs(r.value("activation_mev") - 55.0) <= 2.0;
        sig.push_back(r.sigma("activation_mev"));
    }
    std::sort(sig.begin(), sig.end());
    o.check(within >= 68, fmt("|dE - 55| <= 2 meV in %.0f/100 seeds", within));
    o.check(sig[50] <= 2.0, fmt("median sigma(dE) = %.3f meV", sig[50]));
    return o;
}

// Midpoint sum over phonon frequency of -2 chi_rho (f - 2) nu^2, in long double.
double line_shift_riemann(double chi_rho, double debye_k, double t_k, long n = 1000000) {
    const long double h = 6.62607015e-34L, kb = 1.380649e-23L;
    const long double omega = kb * debye_k / h / 1e9L, theta = kb * t_k / h / 1e9L;
    const long double dnu = omega / n;
    long double sum = 0.0L;
    for (long i = 0; i < n; ++i) {
        const long double nu = (i + 0.5L) * dnu;
        const long double x = nu / theta;
        long double g = 0.0L;
        if (x < 11000.0L) {
            const long double e = std::exp(x);
            g = 2.0L * e * (e * e + 3.0L) / ((e - 1.0L) * (e + 1.0L) * (e + 1.0L)) - 2.0L;
        }
        sum += g * nu * nu;
    }
    const long double ghz = -2.0L * chi_rho * sum * dnu;
    return static_cast<double>(ghz * h * 1e9L / 1.602176634e-19L * 1e3L);
}

Outcome criterion_6() {
    Outcome o;
    Rng rng(6);
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        const double chi = rng.log_uniform(1e-11, 1e-8), debye = rng.uniform(1000.0, 3000.0), t = rng.uniform(5.0, 400.0);
        const double a = line_position_shift(PhononBath{chi, debye, t}), b = line_shift_riemann(chi, debye, t);
        worst = std::max(worst, std::abs(a - b) / std::abs(b));
    }
    o.check(worst <= 1e-8, fmt("max relative deviation from Riemann oracle = %.2e", worst));

    std::vector<double> t = grid(50.0, 350.0, 10.0), q, s;
    for (double x : t) {
        q.push_back(line_position_shift(PhononBath{1e-10, constants::default_debye_temperature_k, x}));
        s.push_back(0.01 * std::abs(q.back()));
    }
    const double alpha = fit::power_law_exponent(fit::make_dataset(t, q, s), false).exponent;
    o.check(alpha >= 2.7 && alpha <= 3.1, fmt("free exponent 50-350 K = %.3f", alpha));
    return o;
}

Outcome criterion_7() {
    Outcome o;
    const OrbitalDoublet d{presets::excited_splitting_ghz, Branch::excited};
    std::vector<double> t = grid(20.0, 350.0, 10.0), y, s;
    for (double x : t) {
        y.push_back(splitting_shift_thermal(d, PhononBath{2.7e-9, constants::default_debye_temperature_k, x}));
        s.push_back(0.01 * std::abs(y.back()));
    }
    const double e = fit::power_law_exponent(fit::make_dataset(t, y, s), false).exponent;
    o.check(std::abs(e - 2.0) <= 0.02, fmt("splitting-shift exponent = %.4f", e));

    fit::ModelContext ctx;
    ctx.with_offset = true;
    ctx.expansion = ExpansionModel{1.0, 442.0, read_expansion_table(std::string(PHONOLIB_DATA_DIR) + "/diamond_thermal_expansion.csv")};
    Rng rng(7);
    int wins = 0;
    double worst = std::numeric_limits<double>::infinity();
    for (int seed = 0; seed < 100; ++seed) {
        std::vector<double> tt, yy, ss;
        for (double x : grid(20.0, 350.0, 15.0)) {
            const double q = line_position_shift(PhononBath{1e-10, constants::default_debye_temperature_k, x});
            const double sg = 0.002 + 0.02 * q;
            tt.push_back(x);
            yy.push_back(q + sg * rng.normal());
            ss.push_back(sg);
        }
        const auto data = fit::make_dataset(tt, yy, ss);
        const auto rep = fit::compare_models({fit::make_model(fit::ModelId::line_shift_quadrature, ctx, data),
                                              fit::make_model(fit::ModelId::thermal_expansion, ctx, data)},
                                             data);
        const double margin = rep.entry("thermal_expansion").aicc - rep.entry("line_shift_quadrature").aicc;
        worst = std::min(worst, margin);
        wins += margin > 10.0;
    }
    o.check(wins >= 95, fmt("quadrature preferred by dAICc > 10 in %.0f/100 seeds (worst %.1f)", wins, worst));
    return o;
}

Outcome criterion_8() {
    Outcome o;
    const auto fs = presets::fine_structure();
    const auto m = presets::spectral_models();
    const int expected[] = {4, 2, 1};
    const double temps[] = {10.0, 90.0, 150.0};
    for (int i = 0; i < 3; ++i) {
        const int n = count_resolvable_peaks(synthesize_spectrum(fs, m, temps[i]));
        o.check(n == expected[i], fmt("%.0f K: %.0f peaks", temps[i], n));
    }
    return o;
}

struct RoundTripCase {
    fit::ModelId id;
    fit::ModelContext ctx;
    std::vector<double> truth;
    std::vector<double> x;
};

std::vector<RoundTripCase> round_trip_cases() {
    fit::ModelContext lor, off, exp;
    lor.n_peaks = 2;
    off.with_offset = true;
    exp.with_offset = true;
    exp.expansion = ExpansionModel{1.0, 442.0, read_expansion_table(std::string(PHONOLIB_DATA_DIR) + "/diamond_thermal_expansion.csv")};
    return {
        {fit::ModelId::linear, {}, {2.0, 1.0}, grid(1, 20, 1)},
        {fit::ModelId::power_law, off, {0.02, 2.78, 4.0}, grid(20, 350, 10)},
        {fit::ModelId::offset_cubic, {}, {103.0, 0.12}, grid(70, 350, 10)},
        {fit::ModelId::bose_t1, {}, {0.0099, 50.0, 2.26}, grid(4, 30, 1)},
        {fit::ModelId::mott_seitz, {}, {1.7, 3.3, 55.0}, grid(5, 350, 15)},
        {fit::ModelId::splitting_t2, {}, {50.0, 1e-9}, grid(5, 350, 15)},
        {fit::ModelId::line_shift_quadrature, off, {-2e-9, 0.5}, grid(10, 350, 20)},
        {fit::ModelId::thermal_expansion, exp, {-0.7, 1.2}, grid(20, 400, 20)},
        {fit::ModelId::lorentzian_multi, lor, {-2.0, 0.5, 3.0, 4.0, 1.0, 1.5}, grid(-10, 10, 0.1)},
    };
}

Outcome criterion_9() {
    Outcome o;
    Rng rng(9);

    double db = 0.0;
    for (int i = 0; i < 20000; ++i) {
        const double delta = rng.log_uniform(1.0, 400.0), t = rng.log_uniform(0.1, 400.0);
        if (units::ghz_to_kelvin(delta) / t > 700.0) continue;
        const auto r = single_phonon_rates(OrbitalDoublet{delta, Branch::ground}, PhononBath{1e-9, 2230.0, t});
        const double exact = std::exp(6.62607015e-34 * delta * 1e9 / (1.380649e-23 * t));
        if (r.gamma_up > 0.0) db = std::max(db, std::abs(r.gamma_down / r.gamma_up / exact - 1.0));
    }
    o.check(db <= 1e-10, fmt("detailed balance %.1e", db));

    double cons = 0.0;
    for (int i = 0; i < 200; ++i) {
        LambdaPreset pre;
        pre.temperature_k = rng.uniform(1.0, 30.0);
        pre.relaxation_rate_per_ns = rng.log_uniform(1e-6, 1.0);
        pre.pump_rate_per_ns = rng.log_uniform(0.01, 100.0);
        Eigen::Vector3d p(rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1));
        p /= p.sum();
        const auto q = evolve(make_lambda_system(pre), p, rng.log_uniform(1e-3, 1e6), i % 2 == 0);
        cons = std::max(cons, std::abs(q.sum() - 1.0));
    }
    o.check(cons <= 1e-12, fmt("probability conservation %.1e", cons));

    double jac = 0.0;
    for (const auto& c : round_trip_cases()) {
        const auto spec = fit::make_model(c.id, c.ctx);
        if (!spec.gradient) continue;
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<double> theta = c.truth;
            for (auto& v : theta) v *= rng.uniform(0.8, 1.2);
            const double x = c.x[static_cast<std::size_t>(rng.uniform(0.0, 0.999) * static_cast<double>(c.x.size()))];
            std::vector<double> ana(theta.size()), fd(theta.size());
            spec.gradient(x, theta, ana);
            auto numeric = spec;
            numeric.gradient = nullptr;
            fit::model_gradient(numeric, x, theta, fd, 1e-6);
            const double f = std::abs(fit::model_value(spec, x, theta));
            for (std::size_t j = 0; j < theta.size(); ++j) {
                // Relative to the larger of the derivative and the rounding floor of the difference quotient.
                const double floor = 10.0 * 2.2e-16 * f / (1e-6 * std::abs(theta[j]));
                jac = std::max(jac, std::abs(ana[j] - fd[j]) / std::max(std::abs(ana[j]), floor * 1e6));
            }
        }
    }
    o.check(jac <= 1e-6, fmt("Jacobian vs finite differences %.1e", jac));

    double rt = 0.0;
    for (const auto& c : round_trip_cases()) {
        const auto base = fit::make_model(c.id, c.ctx);
        std::vector<double> y;
        for (double x : c.x) y.push_back(fit::model_value(base, x, c.truth));
        const auto d = fit::make_dataset(c.x, y);
        const auto r = fit::fit_model(fit::make_model(c.id, c.ctx, d), d);
        for (std::size_t j = 0; j < c.truth.size(); ++j)
            rt = std::max(rt, std::abs(r.values[j] - c.truth[j]) / std::abs(c.truth[j]));
    }
    o.check(rt <= 1e-6, fmt("noiseless round trips %.1e", rt));

    const auto lin = fit::make_model(fit::ModelId::linear);
    const auto x = grid(0, 19, 1);
    fit::FitOptions opt;
    opt.starts = 0;
    int covered = 0;
    const int runs = 1000;
    for (int i = 0; i < runs; ++i) {
        std::vector<double> y, s;
        for (double xi : x) {
            y.push_back(2.0 * xi + 1.0 + 0.5 * rng.normal());
            s.push_back(0.5);
        }
        const auto r = fit::fit_model(lin, fit::make_dataset(x, y, s), opt);
        covered += std::abs(r.value("slope") - 2.0) <= r.sigma("slope");
    }
    const double cov = 100.0 * covered / runs;
    o.check(cov >= 61.0 && cov <= 75.0, fmt("1-sigma coverage %.1f%%", cov));
    return o;
}

struct Criterion {
    int id;
    double budget_s;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all = {
        {1, 1.0, criterion_1},   {2, 1.0, criterion_2},  {3, 5.0, criterion_3},
        {4, 10.0, criterion_4},  {5, 10.0, criterion_5}, {6, 30.0, criterion_6},
        {7, 60.0, criterion_7},  {8, 5.0, criterion_8},  {9, 300.0, criterion_9},
    };
    const int only = argc > 1 ? std::atoi(argv[1]) : 0;
    if (argc > 1 && (only < 1 || only > 9)) {
        std::fprintf(stderr, "usage: %s [criterion 1-9]\n", argv[0]);
        return 2;
    }
    bool ok = true;
    for (const auto& c : all) {
        if (only && c.id != only) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.check(false, std::string("exception: ") + e.what());
        }
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        o.check(dt < c.budget_s, fmt("runtime %.2f s < %.0f s", dt, c.budget_s));
        std::printf("criterion %d: %s  %s\n", c.id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        ok = ok && o.pass;
    }
    return ok ? 0 : 1;
}
