#ifndef RCRTE_PARAMS_HPP
#define RCRTE_PARAMS_HPP

#include <vector>

namespace rcrte {

// Finite-dimensional parameters of the joint model: Gamma frailty parameter
// xi (frailty ~ Ga(xi, xi), mean 1), per-risk count coefficients alpha and
// covariate coefficients beta_rcr, and the terminal-event analogues gamma
// (length Q) and beta_te (length p).
struct ModelParams {
    double xi = 1.0;
    std::vector<double> alpha;                 // length Q
    std::vector<std::vector<double>> beta_rcr; // Q vectors of length p
    std::vector<double> gamma;                 // length Q
    std::vector<double> beta_te;               // length p

    static ModelParams zeros(int q_count, int p, double xi = 1.0);
    void validate(int q_count, int p) const; // throws InputError on mismatch
};

double dot(const std::vector<double>& a, const std::vector<double>& b);

} // namespace rcrte

#endif
