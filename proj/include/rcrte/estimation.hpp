#ifndef RCRTE_ESTIMATION_HPP
#define RCRTE_ESTIMATION_HPP

#include <optional>
#include <string>
#include <vector>

#include "rcrte/event_history.hpp"
#include "rcrte/params.hpp"
#include "rcrte/step_function.hpp"

namespace rcrte {

// Gamma posterior of one unit's frailty given its observed history.
struct FrailtyRecord {
    std::string unit_id;
    double shape = 1.0;    // xi + total observed events (RCR + TE)
    double rate = 1.0;     // xi + total frailty-free compensator
    double mean = 1.0;     // shape / rate
    double log_mean = 0.0; // E[log Z] = digamma(shape) - log(rate)
};

using FrailtyPosterior = std::vector<FrailtyRecord>;

struct TrainingMeta {
    int n = 0;
    int q_count = 0;
    int p = 0;
    double max_observed_time = 0.0; // largest min(tau, TE) across units
};

// Fitted joint model: finite-dimensional estimates, nonparametric baseline
// cumulative hazards (RCR baselines on the effective-age scale, TE baseline
// on calendar time), and per-unit frailty posteriors. The per-risk age grids
// and the TE time grid used for prediction are exactly the jump locations of
// the corresponding baselines.
struct FittedModel {
    ModelParams params;
    std::vector<StepFunction> baselines_rcr; // Q entries; empty when a risk had no events
    StepFunction baseline_te;                // empty when no TE was observed
    FrailtyPosterior frailty;
    RepairMode repair_mode = RepairMode::Perfect;
    TrainingMeta meta;
};

struct FitConfig {
    double em_tol = 1e-7;
    int em_max_iter = 500;
    double score_tol = 1e-6;
    int newton_max_iter = 100;
    double xi_min = 1e-3;
    double xi_max = 1e3;
    double xi_tol = 1e-8;
    std::optional<ModelParams> init; // default: all-zero coefficients, xi = 1
    std::optional<std::vector<double>> init_z; // default: all-ones frailty
};

struct EmTraceRow {
    int iteration = 0;
    double max_param_change = 0.0;
    double xi = 0.0;
    double max_score_residual = 0.0;
};

struct FitResult {
    FittedModel model;
    bool converged = false;
    int iterations = 0;
    double max_score_residual = 0.0;
    std::vector<EmTraceRow> trace;
    std::vector<std::string> warnings;
};

// --- compensators -----------------------------------------------------------

// Cumulative intensity of risk q for one unit up to `up_to` (<= observed
// end), for frailty value z: sums rho_q * exp(X beta_q) * dLambda over the
// baseline jumps traversed by the unit's effective-age path.
double unit_compensator_rcr(const UnitHistory& history, int q, const ModelParams& params,
                            const StepFunction& baseline_rcr_q, RepairMode mode, double z,
                            double up_to);

// Terminal-event analogue on calendar time.
double unit_compensator_te(const UnitHistory& history, const ModelParams& params,
                           const StepFunction& baseline_te, double z, double up_to);

// --- aggregate at-risk processes -------------------------------------------

// Sum over units and inter-reset age segments covering age w of
// z_i * rho_q * exp(X_i beta_q). Reference implementation; the baseline and
// score routines use an equivalent sweep.
double aggregate_at_risk_rcr(const Dataset& data, int q, double alpha_q,
                             const std::vector<double>& beta_q, const std::vector<double>& z,
                             RepairMode mode, double w);

// Sum over units still at risk at calendar time v of
// z_i * rho_0(counts_i(v-)) * exp(X_i beta_te).
double aggregate_at_risk_te(const Dataset& data, const std::vector<double>& gamma,
                            const std::vector<double>& beta_te, const std::vector<double>& z,
                            double v);

// --- baseline estimators ----------------------------------------------------

// Nelson-Aalen type baseline for risk q: jumps at observed risk-q effective
// ages with size (events at that age) / aggregate at-risk mass there.
// Empty when the dataset has no risk-q events; throws EstimationError on a
// vanishing denominator.
StepFunction baseline_nelson_aalen_rcr(const Dataset& data, int q, double alpha_q,
                                       const std::vector<double>& beta_q,
                                       const std::vector<double>& z, RepairMode mode);

StepFunction baseline_nelson_aalen_te(const Dataset& data, const std::vector<double>& gamma,
                                      const std::vector<double>& beta_te,
                                      const std::vector<double>& z);

// --- EM pieces ---------------------------------------------------------------

// Per-unit Gamma frailty posterior given current parameters and baselines;
// compensators are frailty-free (z = 1).
FrailtyPosterior e_step(const Dataset& data, const ModelParams& params,
                        const std::vector<StepFunction>& baselines_rcr,
                        const StepFunction& baseline_te, RepairMode mode);

struct ScoreSolveResult {
    std::vector<double> solution; // alpha_q followed by beta_q (or gamma, beta_te)
    double residual = 0.0;        // max-norm of the score at the solution
    bool converged = false;
    bool degenerate = false; // no events to estimate from; init returned
};

// Solves the estimating equations for (alpha_q, beta_q) with frailties z
// fixed. Damped Newton on the analytic score with a finite-difference
// Jacobian, with per-coordinate bracketing as fallback.
ScoreSolveResult solve_score_rcr(const Dataset& data, int q, const std::vector<double>& z,
                                 RepairMode mode, double init_alpha,
                                 const std::vector<double>& init_beta, const FitConfig& cfg = {});

// Analogue for (gamma, beta_te), summing over observed terminal events.
ScoreSolveResult solve_score_te(const Dataset& data, const std::vector<double>& z,
                                const std::vector<double>& init_gamma,
                                const std::vector<double>& init_beta, const FitConfig& cfg = {});

// Raw score vectors, exposed for residual checks.
std::vector<double> score_rcr(const Dataset& data, int q, const std::vector<double>& z,
                              RepairMode mode, double alpha_q, const std::vector<double>& beta_q);
std::vector<double> score_te(const Dataset& data, const std::vector<double>& z,
                             const std::vector<double>& gamma, const std::vector<double>& beta_te);

struct XiUpdate {
    double xi = 1.0;
    bool at_boundary = false;
};

// 1-D maximizer over [xi_min, xi_max] (golden section on the log scale) of
//   g(xi) = n xi log xi - n lgamma(xi) + (xi - 1) sum E[log Z] - xi sum E[Z].
XiUpdate update_xi(const FrailtyPosterior& posterior, const FitConfig& cfg = {});
double xi_objective(double xi, std::size_t n, double sum_mean, double sum_log_mean);

// Full EM fit. Deterministic given (dataset, config, initialization).
FitResult fit_em(const Dataset& data, RepairMode mode, const FitConfig& cfg = {});

} // namespace rcrte

#endif
