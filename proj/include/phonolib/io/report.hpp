#pragma once

#include <cmath>
#include <string>

#include <json.hpp>

#include "../fit/compare.hpp"
#include "../fit/dataset.hpp"
#include "../fit/engine.hpp"
#include "../spectra.hpp"

namespace phonolib::io {

using Json = nlohmann::ordered_json;

// Non-finite numbers become null.
inline Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json to_json(const fit::FitResult& r) {
    Json params = Json::array();
    for (std::size_t i = 0; i < r.names.size(); ++i)
        params.push_back({{"name", r.names[i]},
                          {"value", number(r.values[i])},
                          {"sigma", number(r.sigmas[i])},
                          {"fixed", static_cast<bool>(r.fixed[i])},
                          {"at_bound", static_cast<bool>(r.at_bound[i])}});
    Json cov = Json::array();
    for (Eigen::Index i = 0; i < r.covariance.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < r.covariance.cols(); ++j) row.push_back(number(r.covariance(i, j)));
        cov.push_back(std::move(row));
    }
    return {{"model", r.model_id},
            {"parameters", std::move(params)},
            {"chi2", number(r.chi2)},
            {"reduced_chi2", number(r.reduced_chi2)},
            {"aicc", number(fit::aicc(r))},
            {"n_points", r.n_points},
            {"n_free", r.n_free},
            {"iterations", r.n_iter},
            {"converged", r.converged},
            {"unweighted", r.unweighted},
            {"bound_projected", r.bound_projected},
            {"ill_conditioned", r.ill_conditioned},
            {"condition_number", number(r.condition_number)},
            {"covariance", std::move(cov)}};
}

inline Json to_json(const fit::FitResult& r, const fit::Dataset& d) {
    Json j = to_json(r);
    j["data"] = {{"source", d.source}, {"x_unit", d.x_unit}, {"y_unit", d.y_unit}, {"warnings", d.warnings}};
    return j;
}

inline Json to_json(const fit::ComparisonReport& rep) {
    Json entries = Json::array();
    for (const auto& e : rep.entries) {
        Json j = {{"model", e.model_id}, {"aicc", number(e.aicc)}, {"delta_aicc", number(e.delta)}};
        if (e.result) j["fit"] = to_json(*e.result);
        if (!e.error.empty()) j["error"] = e.error;
        entries.push_back(std::move(j));
    }
    Json out = {{"best", rep.entries.empty() || !rep.entries.front().result ? Json(nullptr)
                                                                              : Json(rep.entries.front().model_id)},
                {"models", std::move(entries)}};
    return out;
}

inline Json to_json(const PeakFit& pf) {
    Json peaks = Json::array();
    for (const auto& p : pf.peaks)
        peaks.push_back({{"center_ghz", number(p.center_ghz)}, {"fwhm_ghz", number(p.fwhm_ghz)}, {"area", number(p.area)}});
    return {{"peaks", std::move(peaks)},
            {"residual_norm", number(pf.residual_norm)},
            {"max_relative_sigma", number(pf.max_relative_sigma)},
            {"ill_conditioned", pf.ill_conditioned},
            {"fit", to_json(pf.fit)}};
}

}  // namespace phonolib::io
