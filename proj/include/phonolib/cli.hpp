#pragma once

#include <algorithm>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dynamics.hpp"
#include "errors.hpp"
#include "fit/compare.hpp"
#include "fit/models.hpp"
#include "io/config.hpp"
#include "io/csv.hpp"
#include "io/dataset.hpp"
#include "io/manifest.hpp"
#include "io/report.hpp"
#include "linewidth.hpp"
#include "rates.hpp"
#include "shifts.hpp"
#include "spectra.hpp"
#include "version.hpp"

namespace phonolib::cli {

enum ExitCode : int { ok = 0, usage = 1, numerical = 2 };

// "start:stop:step" inclusive of stop, or a single value.
inline std::vector<double> parse_range(const std::string& text) {
    const auto parts = io::split(text, ':');
    std::vector<double> v(parts.size());
    for (std::size_t i = 0; i < parts.size(); ++i)
        if (!io::parse_double(parts[i], v[i]) || !std::isfinite(v[i]))
            throw UsageError("bad range '" + text + "', expected start:stop:step");
    if (v.size() == 1) return v;
    if (v.size() != 3) throw UsageError("bad range '" + text + "', expected start:stop:step");
    const double start = v[0], stop = v[1], step = v[2];
    if (!(step > 0.0)) throw UsageError("range step must be > 0 in '" + text + "'");
    if (stop < start) throw UsageError("range stop precedes start in '" + text + "'");
    const double count = std::floor((stop - start) / step * (1.0 + 1e-12) + 1e-9);
    if (count > 1e7) throw UsageError("range '" + text + "' has too many points");
    std::vector<double> out;
    for (long i = 0; i <= static_cast<long>(count); ++i) out.push_back(start + static_cast<double>(i) * step);
    return out;
}

inline std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    for (auto f : io::split(text, ',')) {
        double x;
        if (!io::parse_double(f, x)) throw UsageError("bad number '" + std::string(f) + "' in list '" + text + "'");
        out.push_back(x);
    }
    return out;
}

inline std::pair<std::string, double> parse_assignment(const std::string& text) {
    const auto eq = text.find('=');
    double v;
    if (eq == std::string::npos || !io::parse_double(std::string_view(text).substr(eq + 1), v))
        throw UsageError("expected name=value, got '" + text + "'");
    return {std::string(io::trim(std::string_view(text).substr(0, eq))), v};
}

// Expected {x, y} column units per model; empty accepts any.
inline io::ExpectedUnits model_units(fit::ModelId id) {
    switch (id) {
        case fit::ModelId::offset_cubic: return {"k", ""};
        case fit::ModelId::bose_t1: return {"k", "per_ns"};
        case fit::ModelId::mott_seitz: return {"k", "ns"};
        case fit::ModelId::splitting_t2: return {"k", "ghz"};
        case fit::ModelId::line_shift_quadrature: return {"k", ""};
        case fit::ModelId::thermal_expansion: return {"k", "mev"};
        case fit::ModelId::lorentzian_multi: return {"ghz", ""};
        default: return {};
    }
}

struct Session {
    std::string command;
    std::string config_path;
    io::Config config;
    std::optional<std::filesystem::path> config_source;
    std::ostream& out;
    std::ostream& err;

    void load() {
        auto [c, src] = io::resolve_config(config_path);
        config = std::move(c);
        config_source = std::move(src);
    }

    io::RunManifest manifest() const {
        io::RunManifest m;
        m.command = command;
        m.config_hash = io::sha256_hex(io::canonical_config(config));
        m.config_source = config_source ? config_source->string() : "defaults";
        if (config_source) m.add_input(*config_source);
        return m;
    }

    // Writes to `path` plus its manifest, or to stdout when no path was given.
    void emit(const std::string& path, const std::string& content, const std::vector<std::filesystem::path>& inputs = {}) {
        if (path.empty() || path == "-") {
            out << content;
            return;
        }
        io::write_file_atomic(path, content);
        auto m = manifest();
        for (const auto& p : inputs) m.add_input(p);
        m.add_output(path);
        io::write_manifest(m, path);
        err << "wrote " << path << "\n";
    }
};

struct PredictArgs {
    std::string t_range;
    std::string out;
};

inline void predict_linewidth(Session& s, const PredictArgs& a) {
    const auto p = s.config.linewidth();
    std::vector<std::vector<double>> rows;
    for (double t : parse_range(a.t_range)) {
        const auto c = linewidth_components(p, t);
        rows.push_back({t, c.total(), c.radiative, c.nonradiative, c.one_phonon, c.dephasing});
    }
    s.emit(a.out, io::format_csv({"temperature_k", "fwhm_mhz", "radiative_mhz", "nonradiative_mhz", "one_phonon_mhz",
                                  "dephasing_mhz"},
                                 rows, {"crossover_k = " + io::format_number(linewidth_crossover_k(p))}));
}

inline void predict_t1(Session& s, const PredictArgs& a) {
    const auto& c = s.config;
    std::vector<std::vector<double>> rows;
    for (const auto& r : coherence_budget(c.ground_bath(0.0), {c.ground_splitting_ghz}, parse_range(a.t_range),
                                          c.relaxation()))
        rows.push_back({r.temperature_k, r.inv_gamma_up_ns, r.inv_gamma_down_ns, r.t1_ns});
    s.emit(a.out, io::format_csv({"temperature_k", "inv_gamma_up_ns", "inv_gamma_down_ns", "t1_ns"}, rows));
}

inline void predict_lifetime(Session& s, const PredictArgs& a) {
    const auto ms = s.config.mott_seitz();
    std::vector<std::vector<double>> rows;
    for (double t : parse_range(a.t_range)) rows.push_back({t, mott_seitz_lifetime(ms, t)});
    s.emit(a.out, io::format_csv({"temperature_k", "lifetime_ns"}, rows));
}

inline void predict_line_shift(Session& s, const PredictArgs& a) {
    const auto& c = s.config;
    const auto em = c.expansion();
    std::vector<std::vector<double>> rows;
    for (double t : parse_range(a.t_range)) {
        const double q = line_position_shift(c.line_shift_bath(t));
        rows.push_back({t, q, units::mev_to_ghz(q), thermal_expansion_shift(em, t)});
    }
    s.emit(a.out, io::format_csv({"temperature_k", "shift_mev", "shift_ghz", "expansion_shift_mev"}, rows),
           {c.expansion_table()});
}

inline void predict_splitting(Session& s, const PredictArgs& a) {
    const auto& c = s.config;
    std::vector<std::vector<double>> rows;
    for (double t : parse_range(a.t_range)) {
        const double dg = splitting_shift_thermal(c.ground(), c.splitting_bath(t));
        const double du = splitting_shift_thermal(c.excited(), c.splitting_bath(t));
        rows.push_back({t, c.ground_splitting_ghz + dg, c.excited_splitting_ghz + du, dg, du});
    }
    s.emit(a.out, io::format_csv({"temperature_k", "ground_splitting_ghz", "excited_splitting_ghz", "ground_shift_ghz",
                                  "excited_shift_ghz"},
                                 rows));
}

struct PumpProbeArgs {
    std::string tau;
    std::string out;
    std::string trace;
    std::optional<double> trace_tau_ns;
};

inline void simulate_pump_probe(Session& s, const PumpProbeArgs& a) {
    const auto sys = make_lambda_system(s.config.lambda());
    const auto r = peak_height_recovery(sys, parse_range(a.tau), s.config.recovery());
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < r.taus_ns.size(); ++i) rows.push_back({r.taus_ns[i], r.heights[i]});
    s.emit(a.out, io::format_csv({"tau_ns", "height"}, rows,
                                 {"t1_ns = " + io::format_number(r.t1_ns) + " +- " + io::format_number(r.t1_sigma_ns),
                                  "expected_t1_ns = " + io::format_number(r.expected_t1_ns),
                                  "first_peak = " + io::format_number(r.first_peak),
                                  "fit_from_tau_ns = " + io::format_number(r.settle_ns)}));
    if (!a.trace.empty()) {
        // Thermal start, pump pulse, dark delay, probe pulse.
        const auto opt = s.config.recovery();
        const double tau = a.trace_tau_ns.value_or(r.taus_ns.back());
        const PulseSequence seq{{{opt.pulse_ns, true}, {tau, false}, {opt.pulse_ns, true}}, opt.resolution_ns};
        const auto tr = simulate_pulse_sequence(sys, seq, stationary_state(sys, false));
        std::vector<std::vector<double>> trows;
        for (std::size_t i = 0; i < tr.times_ns.size(); ++i) trows.push_back({tr.times_ns[i], tr.intensity[i]});
        std::vector<std::string> marks;
        for (double m : tr.segment_marks_ns) marks.push_back("segment_start_ns = " + io::format_number(m));
        s.emit(a.trace, io::format_csv({"time_ns", "intensity"}, trows, marks));
    }
}

struct SpectrumArgs {
    double temperature_k = 0.0;
    std::string grid;
    std::string out;
    std::string deconvolve;
};

inline void synth_spectrum(Session& s, const SpectrumArgs& a) {
    const auto fs = s.config.fine_structure();
    const auto m = s.config.spectral_models();
    const auto lines = spectral_lines(fs, m, a.temperature_k);
    const auto sp = synthesize_spectrum(fs, m, a.temperature_k, a.grid.empty() ? std::vector<double>{} : parse_range(a.grid));
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < sp.grid_ghz.size(); ++i) rows.push_back({sp.grid_ghz[i], sp.intensity[i]});
    std::vector<std::string> comments{"temperature_k = " + io::format_number(a.temperature_k),
                                      "resolvable_peaks = " +
                                          std::to_string(count_resolvable_peaks(sp, s.config.prominence_unitless))};
    for (const auto& l : lines)
        comments.push_back(std::string("line ") + l.label + ": center_ghz = " + io::format_number(l.center_ghz) +
                           ", fwhm_ghz = " + io::format_number(l.fwhm_ghz) + ", area = " + io::format_number(l.area));
    s.emit(a.out, io::format_csv({"offset_ghz", "intensity"}, rows, comments));
    if (!a.deconvolve.empty()) {
        std::vector<PeakParams> init;
        for (auto it = lines.rbegin(); it != lines.rend(); ++it) init.push_back({it->center_ghz, it->fwhm_ghz, it->area});
        const auto pf = fit_lorentzians(sp, 4, init);
        s.emit(a.deconvolve, io::to_json(pf).dump(2) + "\n");
    }
}

struct FitArgs {
    std::string model;
    std::vector<std::string> models;
    std::string data;
    std::string out;
    std::size_t n_peaks = 1;
    bool with_offset = false;
    std::optional<double> fixed_exponent;
    std::vector<std::string> fix;
    std::vector<std::string> init;
    int starts = 8;
    std::uint64_t seed = fit::FitOptions{}.seed;
};

inline fit::ModelSpec build_model(const Session& s, fit::ModelId id, const FitArgs& a, const fit::Dataset& d) {
    fit::ModelContext ctx;
    ctx.debye_temp_k = s.config.debye_temperature_k;
    ctx.n_peaks = a.n_peaks;
    ctx.with_offset = a.with_offset;
    ctx.fixed_exponent = a.fixed_exponent;
    if (id == fit::ModelId::thermal_expansion) ctx.expansion = s.config.expansion();
    auto spec = fit::make_model(id, ctx, d);
    for (const auto& i : a.init) {
        const auto [name, v] = parse_assignment(i);
        spec.set_initial(name, v);
    }
    for (const auto& f : a.fix) {
        const auto [name, v] = parse_assignment(f);
        spec.fix(name, v);
    }
    return spec;
}

inline fit::FitOptions fit_options(const FitArgs& a) {
    if (a.starts < 0) throw UsageError("--starts must be >= 0");
    fit::FitOptions o;
    o.starts = a.starts;
    o.seed = a.seed;
    return o;
}

inline std::vector<std::filesystem::path> fit_inputs(const Session& s, const FitArgs& a, bool expansion) {
    std::vector<std::filesystem::path> in{a.data};
    if (expansion) in.push_back(s.config.expansion_table());
    return in;
}

inline void run_fit(Session& s, const FitArgs& a) {
    const auto id = fit::parse_model_id(a.model);
    const auto d = io::load_dataset(a.data, model_units(id));
    for (const auto& w : d.warnings) s.err << "warning: " << w << "\n";
    const auto r = fit::fit_model(build_model(s, id, a, d), d, fit_options(a));
    if (r.ill_conditioned) s.err << "warning: fit is ill-conditioned (condition number " << r.condition_number << ")\n";
    s.emit(a.out, io::to_json(r, d).dump(2) + "\n", fit_inputs(s, a, id == fit::ModelId::thermal_expansion));
}

inline void run_compare(Session& s, const FitArgs& a) {
    if (a.models.empty()) throw UsageError("--models needs at least one model id");
    std::vector<fit::ModelId> ids;
    for (const auto& m : a.models) ids.push_back(fit::parse_model_id(m));
    const auto d = io::load_dataset(a.data);
    for (const auto& w : d.warnings) s.err << "warning: " << w << "\n";
    std::vector<fit::ModelSpec> specs;
    bool expansion = false;
    for (auto id : ids) {
        const auto u = model_units(id);
        if (!u.x.empty() && u.x != d.x_unit)
            throw UsageError("model " + fit::to_string(id) + " expects x in '" + u.x + "', data has '" + d.x_unit + "'");
        expansion = expansion || id == fit::ModelId::thermal_expansion;
        specs.push_back(build_model(s, id, a, d));
    }
    const auto rep = fit::compare_models(specs, d, fit_options(a));
    for (const auto& e : rep.entries)
        if (!e.error.empty()) s.err << "warning: " << e.model_id << " failed: " << e.error << "\n";
    rep.best();
    s.emit(a.out, io::to_json(rep).dump(2) + "\n", fit_inputs(s, a, expansion));
}

struct BudgetArgs {
    std::string splittings;
    std::string t_range;
    std::string out;
};

inline void run_budget(Session& s, const BudgetArgs& a) {
    const auto& c = s.config;
    const auto splittings = a.splittings.empty() ? std::vector<double>{c.ground_splitting_ghz} : parse_list(a.splittings);
    std::vector<std::vector<double>> rows;
    for (const auto& r : coherence_budget(c.ground_bath(0.0), splittings, parse_range(a.t_range), c.relaxation()))
        rows.push_back({r.splitting_ghz, r.temperature_k, r.inv_gamma_up_ns, r.inv_gamma_down_ns, r.t1_ns,
                        r.t2_upper_bound_ns, r.within_validity ? 1.0 : 0.0});
    s.emit(a.out, io::format_csv({"splitting_ghz", "temperature_k", "inv_gamma_up_ns", "inv_gamma_down_ns", "t1_ns",
                                  "t2_upper_bound_ns", "within_validity"},
                                 rows, {"within_validity = 0 marks splittings outside the bath-scale assumption"}));
}

// Runs one command line (without the program name) and returns the exit code.
inline int execute(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Electron-phonon modelling and fitting for SiV- centres", "phonolib"};
    app.set_version_flag("--version", std::string(phonolib::version));
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "config file (default: $PHONOLIB_CONFIG, then built-in values)");

    std::function<void(Session&)> action;

    auto* predict = app.add_subcommand("predict", "tabulate a model over temperature");
    predict->require_subcommand(1);
    PredictArgs pa;
    auto add_predict = [&](const char* name, const char* help, void (*fn)(Session&, const PredictArgs&)) {
        auto* sub = predict->add_subcommand(name, help);
        sub->add_option("--t-range", pa.t_range, "temperatures start:stop:step in K")->required();
        sub->add_option("--out", pa.out, "output CSV (default stdout)");
        sub->callback([&, fn] { action = [&, fn](Session& s) { fn(s, pa); }; });
    };
    add_predict("linewidth", "optical linewidth and its components, MHz", predict_linewidth);
    add_predict("t1", "ground-state orbital relaxation times", predict_t1);
    add_predict("lifetime", "excited-state lifetime", predict_lifetime);
    add_predict("line-shift", "line position shift and the thermal-expansion alternative", predict_line_shift);
    add_predict("splitting", "thermally shifted orbital splittings", predict_splitting);

    auto* simulate = app.add_subcommand("simulate", "rate-equation simulations");
    simulate->require_subcommand(1);
    PumpProbeArgs pp;
    auto* pump = simulate->add_subcommand("pump-probe", "peak-height recovery versus pulse delay");
    pump->add_option("--tau", pp.tau, "delays start:stop:step in ns")->required();
    pump->add_option("--out", pp.out, "output CSV (default stdout)");
    pump->add_option("--trace", pp.trace, "also write the fluorescence trace time_ns,intensity");
    pump->add_option("--trace-tau", pp.trace_tau_ns, "delay for the exported trace in ns (default: last delay)");
    pump->callback([&] { action = [&](Session& s) { simulate_pump_probe(s, pp); }; });

    auto* synth = app.add_subcommand("synth", "synthetic data");
    synth->require_subcommand(1);
    SpectrumArgs sa;
    auto* spectrum = synth->add_subcommand("spectrum", "four-line emission spectrum");
    spectrum->add_option("--temperature", sa.temperature_k, "temperature in K")->required();
    spectrum->add_option("--grid", sa.grid, "frequency grid start:stop:step in GHz (default automatic)");
    spectrum->add_option("--out", sa.out, "output CSV (default stdout)");
    spectrum->add_option("--deconvolve", sa.deconvolve, "also fit four Lorentzians and write the result as JSON");
    spectrum->callback([&] { action = [&](Session& s) { synth_spectrum(s, sa); }; });

    FitArgs fa;
    auto add_fit_options = [&](CLI::App* sub) {
        sub->add_option("--data", fa.data, "input CSV x,value[,sigma]")->required();
        sub->add_option("--out", fa.out, "output JSON (default stdout)");
        sub->add_option("--n-peaks", fa.n_peaks, "peaks for lorentzian_multi")->check(CLI::PositiveNumber);
        sub->add_flag("--with-offset", fa.with_offset, "add a constant offset where supported");
        sub->add_option("--fixed-exponent", fa.fixed_exponent, "pin the power_law exponent");
        sub->add_option("--fix", fa.fix, "fix a parameter, name=value (repeatable)");
        sub->add_option("--init", fa.init, "initial value, name=value (repeatable)");
        sub->add_option("--starts", fa.starts, "extra multi-start points");
        sub->add_option("--seed", fa.seed, "multi-start seed");
    };
    auto* fit_cmd = app.add_subcommand("fit", "fit one model to a dataset");
    fit_cmd->add_option("--model", fa.model, "model id")->required();
    add_fit_options(fit_cmd);
    fit_cmd->callback([&] { action = [&](Session& s) { run_fit(s, fa); }; });

    auto* compare = app.add_subcommand("compare-models", "rank models by AICc on one dataset");
    compare->add_option("--models", fa.models, "comma-separated model ids")->required()->delimiter(',');
    add_fit_options(compare);
    compare->callback([&] { action = [&](Session& s) { run_compare(s, fa); }; });

    BudgetArgs ba;
    auto* budget = app.add_subcommand("budget", "orbital relaxation and coherence limits");
    budget->add_option("--splittings-ghz", ba.splittings, "comma-separated splittings (default: ground splitting)");
    budget->add_option("--t-range", ba.t_range, "temperatures start:stop:step in K")->required();
    budget->add_option("--out", ba.out, "output CSV (default stdout)");
    budget->callback([&] { action = [&](Session& s) { run_budget(s, ba); }; });

    std::string command = "phonolib";
    for (const auto& a : args) command += " " + a;
    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? ok : usage;
    }
    try {
        Session s{command, config_path, {}, std::nullopt, out, err};
        s.load();
        action(s);
        return ok;
    } catch (const FitError& e) {
        err << "fit error: " << e.what() << "\n";
        return numerical;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << "\n";
        return numerical;
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << "\n";
        return usage;
    } catch (const std::logic_error& e) {
        err << "error: " << e.what() << "\n";
        return usage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return numerical;
    }
}

}  // namespace phonolib::cli
