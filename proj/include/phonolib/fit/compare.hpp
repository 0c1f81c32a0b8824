#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "../errors.hpp"
#include "engine.hpp"
#include "models.hpp"

namespace phonolib::fit {

struct ComparisonEntry {
    std::string model_id;
    std::optional<FitResult> result;
    double aicc = std::numeric_limits<double>::infinity();
    double delta = std::numeric_limits<double>::infinity();
    std::string error;
};

// Entries ordered by AICc; failed fits follow the survivors.
struct ComparisonReport {
    std::vector<ComparisonEntry> entries;

    const ComparisonEntry& best() const {
        if (entries.empty() || !entries.front().result) throw FitError("no model could be fitted");
        return entries.front();
    }
    const ComparisonEntry& entry(const std::string& id) const {
        for (const auto& e : entries)
            if (e.model_id == id) return e;
        throw UsageError("model " + id + " not in comparison");
    }
};

inline ComparisonReport compare_models(const std::vector<ModelSpec>& specs, const Dataset& data,
                                       const FitOptions& opt = {}) {
    if (specs.empty()) throw UsageError("compare_models: no models given");
    ComparisonReport rep;
    for (const auto& s : specs) {
        ComparisonEntry e;
        e.model_id = s.id;
        try {
            e.result = fit_model(s, data, opt);
            e.aicc = aicc(*e.result);
        } catch (const std::exception& ex) {
            e.error = ex.what();
        }
        rep.entries.push_back(std::move(e));
    }
    std::stable_sort(rep.entries.begin(), rep.entries.end(), [](const auto& a, const auto& b) {
        if (a.result.has_value() != b.result.has_value()) return a.result.has_value();
        return a.aicc < b.aicc;
    });
    const double best = rep.entries.front().aicc;
    for (auto& e : rep.entries) e.delta = e.result ? e.aicc - best : std::numeric_limits<double>::infinity();
    return rep;
}

struct ExponentEstimate {
    double exponent = 0.0;
    double sigma = 0.0;
    FitResult fit;
};

inline ExponentEstimate power_law_exponent(const Dataset& data, bool with_offset, const FitOptions& opt = {}) {
    if (data.size() < 6) throw PreconditionError("power_law_exponent needs at least 6 points");
    for (const auto& p : data.points)
        if (!(p.x > 0.0)) throw DomainError("power_law_exponent needs x > 0");
    if (!with_offset) {
        const bool pos = std::all_of(data.points.begin(), data.points.end(), [](auto& p) { return p.y > 0.0; });
        const bool neg = std::all_of(data.points.begin(), data.points.end(), [](auto& p) { return p.y < 0.0; });
        if (!pos && !neg) throw DomainError("power_law_exponent: y changes sign and no offset is fitted");
    }
    ModelContext ctx;
    ctx.with_offset = with_offset;
    const auto spec = make_model(ModelId::power_law, ctx, data);
    auto r = fit_model(spec, data, opt);
    return {r.value("exponent"), r.sigma("exponent"), std::move(r)};
}

}  // namespace phonolib::fit
