#include "rcrte/step_function.hpp"

#include <algorithm>
#include <cmath>

#include "rcrte/errors.hpp"

namespace rcrte {

StepFunction::StepFunction(std::vector<double> locations, std::vector<double> sizes)
    : locations_(std::move(locations)), sizes_(std::move(sizes)) {
    if (locations_.size() != sizes_.size())
        throw InputError("StepFunction: locations/sizes length mismatch");
    double prev = -std::numeric_limits<double>::infinity();
    cumulative_.reserve(sizes_.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < locations_.size(); ++k) {
        if (!std::isfinite(locations_[k]) || !(locations_[k] > prev))
            throw InputError("StepFunction: jump locations must be finite and strictly increasing");
        if (!(sizes_[k] > 0.0) || !std::isfinite(sizes_[k]))
            throw InputError("StepFunction: jump sizes must be positive and finite");
        prev = locations_[k];
        acc += sizes_[k];
        cumulative_.push_back(acc);
    }
}

double StepFunction::cumulative_at(double t) const {
    const auto it = std::upper_bound(locations_.begin(), locations_.end(), t);
    if (it == locations_.begin()) return 0.0;
    return cumulative_[static_cast<std::size_t>(it - locations_.begin()) - 1];
}

double StepFunction::cumulative_before(double t) const {
    const auto it = std::lower_bound(locations_.begin(), locations_.end(), t);
    if (it == locations_.begin()) return 0.0;
    return cumulative_[static_cast<std::size_t>(it - locations_.begin()) - 1];
}

double SurvivalCurve::at(double t) const {
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return 1.0;
    return values[static_cast<std::size_t>(it - times.begin()) - 1];
}

double SurvivalCurve::before(double t) const {
    const auto it = std::lower_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return 1.0;
    return values[static_cast<std::size_t>(it - times.begin()) - 1];
}

SurvivalCurve product_limit_survival(const StepFunction& hazard) {
    SurvivalCurve out;
    out.times = hazard.locations();
    out.values.reserve(out.times.size());
    double surv = 1.0;
    for (double d : hazard.sizes()) {
        if (d > 1.0) throw InputError("product_limit_survival: hazard jump exceeds 1");
        surv *= (1.0 - d);
        if (surv < 0.0) surv = 0.0;
        out.values.push_back(surv);
    }
    return out;
}

} // namespace rcrte
