#pragma once

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "../dynamics.hpp"
#include "../errors.hpp"
#include "../presets.hpp"
#include "csv.hpp"

namespace phonolib::io {

// Resolved configuration. Every field maps to one `section.key`; see config_keys().
struct Config {
    // [constants]
    double debye_temperature_k = constants::default_debye_temperature_k;
    double center_wavelength_nm = presets::center_wavelength_nm;
    // [bath]
    double relaxation_prefactor_per_ns = presets::relaxation_calibration().prefactor_per_ns;
    double relaxation_temp_offset_k = 0.0;
    double splitting_chi_rho_per_ghz2 = 2.7e-9;
    double line_shift_chi_rho_per_ghz2 = 1e-10;
    // [doublets]
    double ground_splitting_ghz = presets::ground_splitting_ghz;
    double excited_splitting_ghz = presets::excited_splitting_ghz;
    // [mott_seitz]
    double tau0_ns = 1.7;
    double alpha_unitless = 3.3;
    double activation_mev = 55.0;
    // [expansion]
    std::string table_path = "diamond_thermal_expansion.csv";
    double pressure_coeff_mev_per_gpa = 1.0;
    double bulk_modulus_gpa = 442.0;
    // [lambda_system]
    double temperature_k = 5.0;
    double relaxation_time_ns = 39.0;
    double pump_rate_per_ns = 5.0;
    double radiative_lifetime_ns = 1.7;
    double branching_unitless = 0.5;
    double pulse_ns = 80.0;
    double time_resolution_ns = 0.2;
    double contrast_prefactor_per_ns = 0.0099;
    double contrast_temp_offset_k = 2.26;
    // [fine_structure]
    double linewidth_slope_mhz_per_k = 24.26;
    double linewidth_cubic_mhz_per_k3 = 0.12;
    double linewidth_anchor_k = 4.0;
    double linewidth_anchor_mhz = 95.99;
    double resolution_ghz = 0.0;
    double prominence_unitless = 0.05;

    std::filesystem::path base_dir;  // relative table paths resolve against this

    std::filesystem::path expansion_table() const {
        std::filesystem::path p(table_path);
        if (p.is_absolute()) return p;
        if (!base_dir.empty() && std::filesystem::exists(base_dir / p)) return base_dir / p;
#ifdef PHONOLIB_DATA_DIR
        if (std::filesystem::exists(std::filesystem::path(PHONOLIB_DATA_DIR) / p))
            return std::filesystem::path(PHONOLIB_DATA_DIR) / p;
#endif
        return p;
    }

    T1Params relaxation() const { return {relaxation_prefactor_per_ns, ground_splitting_ghz, relaxation_temp_offset_k}; }
    T1Params contrast_t1() const { return {contrast_prefactor_per_ns, ground_splitting_ghz, contrast_temp_offset_k}; }
    MottSeitzParams mott_seitz() const { return {tau0_ns, alpha_unitless, activation_mev}; }
    OrbitalDoublet ground() const { return {ground_splitting_ghz, Branch::ground}; }
    OrbitalDoublet excited() const { return {excited_splitting_ghz, Branch::excited}; }

    PhononBath ground_bath(double t_k) const { return {relaxation().chi_rho(), debye_temperature_k, t_k}; }
    PhononBath line_shift_bath(double t_k) const { return {line_shift_chi_rho_per_ghz2, debye_temperature_k, t_k}; }
    PhononBath splitting_bath(double t_k) const { return {splitting_chi_rho_per_ghz2, debye_temperature_k, t_k}; }

    LinewidthParams linewidth() const {
        LinewidthCalibration cal;
        cal.linear_slope_mhz_per_k = linewidth_slope_mhz_per_k;
        cal.cubic_mhz_per_k3 = linewidth_cubic_mhz_per_k3;
        cal.anchor_temperature_k = linewidth_anchor_k;
        cal.anchor_fwhm_mhz = linewidth_anchor_mhz;
        return calibrate_linewidth(cal, excited(), debye_temperature_k, mott_seitz());
    }

    ExpansionModel expansion() const {
        return {pressure_coeff_mev_per_gpa, bulk_modulus_gpa, read_expansion_table(expansion_table())};
    }

    FineStructure fine_structure() const { return {center_wavelength_nm, ground_splitting_ghz, excited_splitting_ghz}; }

    SpectralModels spectral_models() const {
        SpectralModels m;
        m.linewidth = linewidth();
        m.ground_split_chi_rho = splitting_chi_rho_per_ghz2;
        m.excited_split_chi_rho = splitting_chi_rho_per_ghz2;
        m.line_shift_chi_rho = line_shift_chi_rho_per_ghz2;
        m.resolution_ghz = resolution_ghz;
        return m;
    }

    LambdaPreset lambda() const {
        LambdaPreset p;
        p.ground_splitting_ghz = ground_splitting_ghz;
        p.temperature_k = temperature_k;
        p.relaxation_rate_per_ns = 1.0 / relaxation_time_ns;
        p.pump_rate_per_ns = pump_rate_per_ns;
        p.radiative_rate_per_ns = 1.0 / radiative_lifetime_ns;
        p.branching_to_bright = branching_unitless;
        return p;
    }

    RecoveryOptions recovery() const {
        RecoveryOptions o;
        o.pulse_ns = pulse_ns;
        o.resolution_ns = time_resolution_ns;
        return o;
    }
};

struct ConfigKey {
    std::string section;
    std::string key;
    std::variant<double Config::*, std::string Config::*> slot;
    std::string doc;
};

inline const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys{
        {"constants", "debye_temperature_k", &Config::debye_temperature_k, "Debye temperature of the bath"},
        {"constants", "center_wavelength_nm", &Config::center_wavelength_nm, "zero-phonon line wavelength"},
        {"bath", "relaxation_prefactor_per_ns", &Config::relaxation_prefactor_per_ns,
         "C in gamma_up = C n(Delta_g, T - T_off); sets the single-phonon coupling"},
        {"bath", "relaxation_temp_offset_k", &Config::relaxation_temp_offset_k, "T_off of the relaxation law"},
        {"bath", "splitting_chi_rho_per_ghz2", &Config::splitting_chi_rho_per_ghz2, "coupling of the T^2 splitting shift"},
        {"bath", "line_shift_chi_rho_per_ghz2", &Config::line_shift_chi_rho_per_ghz2, "coupling of the line-position shift"},
        {"doublets", "ground_splitting_ghz", &Config::ground_splitting_ghz, "ground orbital splitting"},
        {"doublets", "excited_splitting_ghz", &Config::excited_splitting_ghz, "excited orbital splitting"},
        {"mott_seitz", "tau0_ns", &Config::tau0_ns, "low-temperature lifetime"},
        {"mott_seitz", "alpha_unitless", &Config::alpha_unitless, "nonradiative prefactor"},
        {"mott_seitz", "activation_mev", &Config::activation_mev, "activation energy"},
        {"expansion", "table_path", &Config::table_path, "volumetric expansion table, temperature_k,alpha_per_k"},
        {"expansion", "pressure_coeff_mev_per_gpa", &Config::pressure_coeff_mev_per_gpa, "line shift per unit pressure"},
        {"expansion", "bulk_modulus_gpa", &Config::bulk_modulus_gpa, "bulk modulus of the host"},
        {"lambda_system", "temperature_k", &Config::temperature_k, "simulation temperature"},
        {"lambda_system", "relaxation_time_ns", &Config::relaxation_time_ns, "ground-block T1 at that temperature"},
        {"lambda_system", "pump_rate_per_ns", &Config::pump_rate_per_ns, "optical pump rate"},
        {"lambda_system", "radiative_lifetime_ns", &Config::radiative_lifetime_ns, "excited-state lifetime"},
        {"lambda_system", "branching_unitless", &Config::branching_unitless, "decay fraction into the bright ground level"},
        {"lambda_system", "pulse_ns", &Config::pulse_ns, "pump and probe pulse length"},
        {"lambda_system", "time_resolution_ns", &Config::time_resolution_ns, "trace sampling step"},
        {"lambda_system", "contrast_prefactor_per_ns", &Config::contrast_prefactor_per_ns, "C of the contrast T1 law"},
        {"lambda_system", "contrast_temp_offset_k", &Config::contrast_temp_offset_k, "T_off of the contrast T1 law"},
        {"fine_structure", "linewidth_slope_mhz_per_k", &Config::linewidth_slope_mhz_per_k, "low-temperature linear law"},
        {"fine_structure", "linewidth_cubic_mhz_per_k3", &Config::linewidth_cubic_mhz_per_k3, "high-temperature cubic law"},
        {"fine_structure", "linewidth_anchor_k", &Config::linewidth_anchor_k, "temperature fixing the radiative floor"},
        {"fine_structure", "linewidth_anchor_mhz", &Config::linewidth_anchor_mhz, "linewidth at the anchor"},
        {"fine_structure", "resolution_ghz", &Config::resolution_ghz, "instrument Lorentzian width"},
        {"fine_structure", "prominence_unitless", &Config::prominence_unitless, "peak prominence fraction"},
    };
    return keys;
}

inline std::size_t levenshtein(std::string_view a, std::string_view b) {
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t up = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
            diag = up;
        }
    }
    return row[b.size()];
}

inline std::string nearest(std::string_view word, const std::vector<std::string>& candidates) {
    std::string best;
    std::size_t d = std::string::npos;
    for (const auto& c : candidates) {
        const auto k = levenshtein(word, c);
        if (k < d) {
            d = k;
            best = c;
        }
    }
    return best;
}

namespace detail {

inline std::string strip_comment(std::string_view s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') quoted = !quoted;
        if (s[i] == '#' && !quoted) return std::string(s.substr(0, i));
    }
    return std::string(s);
}

}  // namespace detail

inline Config parse_config(std::istream& in, const std::filesystem::path& base_dir = {}) {
    Config c;
    c.base_dir = base_dir;
    const auto& keys = config_keys();
    std::vector<std::string> sections;
    for (const auto& k : keys)
        if (std::find(sections.begin(), sections.end(), k.section) == sections.end()) sections.push_back(k.section);
    std::string section, line;
    std::map<std::string, std::size_t> seen;
    std::size_t lineno = 0;
    auto fail = [&](const std::string& msg) { throw ConfigError("config line " + std::to_string(lineno) + ": " + msg); };
    while (std::getline(in, line)) {
        ++lineno;
        const std::string body = detail::strip_comment(line);
        const auto s = trim(body);
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') fail("unterminated section header");
            section = std::string(trim(s.substr(1, s.size() - 2)));
            if (std::find(sections.begin(), sections.end(), section) == sections.end())
                fail("unknown section [" + section + "], did you mean [" + nearest(section, sections) + "]?");
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string_view::npos) fail("expected key = value");
        const std::string key(trim(s.substr(0, eq)));
        const auto value = trim(s.substr(eq + 1));
        if (section.empty()) fail("key '" + key + "' outside any section");
        if (value.empty()) fail("missing value for '" + key + "'");
        const ConfigKey* match = nullptr;
        std::vector<std::string> names;
        for (const auto& k : keys) {
            if (k.section != section) continue;
            names.push_back(k.key);
            if (k.key == key) match = &k;
        }
        if (!match) fail("unknown key '" + key + "' in [" + section + "], did you mean '" + nearest(key, names) + "'?");
        const std::string full = section + "." + key;
        if (seen.count(full)) fail("duplicate key '" + full + "' (first set on line " + std::to_string(seen[full]) + ")");
        seen[full] = lineno;
        if (auto p = std::get_if<double Config::*>(&match->slot)) {
            double v;
            if (!parse_double(value, v) || !std::isfinite(v)) fail("'" + key + "' needs a finite number");
            c.*(*p) = v;
        } else {
            if (value.size() < 2 || value.front() != '"' || value.back() != '"')
                fail("'" + key + "' needs a quoted string");
            c.*std::get<std::string Config::*>(match->slot) = std::string(value.substr(1, value.size() - 2));
        }
    }
    return c;
}

inline Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config " + path.string());
    try {
        return parse_config(in, path.parent_path());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

// Explicit path wins, then PHONOLIB_CONFIG, then built-in defaults.
inline std::pair<Config, std::optional<std::filesystem::path>> resolve_config(const std::string& explicit_path) {
    std::string p = explicit_path;
    if (p.empty())
        if (const char* env = std::getenv("PHONOLIB_CONFIG")) p = env;
    if (p.empty()) return {Config{}, std::nullopt};
    return {load_config(p), std::filesystem::path(p)};
}

// Canonical text of a resolved config: every key in table order with %.17g numbers.
inline std::string canonical_config(const Config& c) {
    std::ostringstream os;
    std::string section;
    for (const auto& k : config_keys()) {
        if (k.section != section) {
            os << (section.empty() ? "" : "\n") << "[" << k.section << "]\n";
            section = k.section;
        }
        os << k.key << " = ";
        if (auto p = std::get_if<double Config::*>(&k.slot)) {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", c.*(*p));
            os << buf;
        } else {
            os << '"' << c.*std::get<std::string Config::*>(k.slot) << '"';
        }
        os << '\n';
    }
    return os.str();
}

}  // namespace phonolib::io
