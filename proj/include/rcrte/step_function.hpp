#ifndef RCRTE_STEP_FUNCTION_HPP
#define RCRTE_STEP_FUNCTION_HPP

#include <cstddef>
#include <vector>

namespace rcrte {

// Right-continuous nondecreasing step function: a cumulative hazard with
// strictly increasing jump locations and positive jump sizes. Value at t is
// the sum of sizes with location <= t; zero before the first jump. Flat
// beyond the last jump (no extrapolation).
class StepFunction {
public:
    StepFunction() = default;
    StepFunction(std::vector<double> locations, std::vector<double> sizes);

    double cumulative_at(double t) const;     // sum over locations <= t
    double cumulative_before(double t) const; // strict <, left limit

    bool empty() const { return locations_.empty(); }
    std::size_t n_jumps() const { return locations_.size(); }
    const std::vector<double>& locations() const { return locations_; }
    const std::vector<double>& sizes() const { return sizes_; }
    double total() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }

private:
    std::vector<double> locations_;
    std::vector<double> sizes_;
    std::vector<double> cumulative_; // prefix sums of sizes_
};

// Nonincreasing survival estimate: value values[k] holds on [times[k],
// times[k+1]); 1 before the first drop time.
struct SurvivalCurve {
    std::vector<double> times;
    std::vector<double> values;

    double at(double t) const;     // right-continuous
    double before(double t) const; // left limit
};

// Product-limit survival from a cumulative hazard: product over jumps <= t of
// (1 - jump size). Throws InputError when any jump exceeds 1; a jump of
// exactly 1 sends the survival to 0, where it stays.
SurvivalCurve product_limit_survival(const StepFunction& hazard);

} // namespace rcrte

#endif
