#include "rcrte/params.hpp"

#include <cmath>

#include "rcrte/errors.hpp"

namespace rcrte {

ModelParams ModelParams::zeros(int q_count, int p, double xi) {
    ModelParams out;
    out.xi = xi;
    out.alpha.assign(static_cast<std::size_t>(q_count), 0.0);
    out.beta_rcr.assign(static_cast<std::size_t>(q_count),
                        std::vector<double>(static_cast<std::size_t>(p), 0.0));
    out.gamma.assign(static_cast<std::size_t>(q_count), 0.0);
    out.beta_te.assign(static_cast<std::size_t>(p), 0.0);
    return out;
}

void ModelParams::validate(int q_count, int p) const {
    const auto q = static_cast<std::size_t>(q_count);
    const auto pp = static_cast<std::size_t>(p);
    if (!(xi > 0.0) || !std::isfinite(xi)) throw InputError("params: xi must be positive");
    if (alpha.size() != q) throw InputError("params: alpha length != Q");
    if (gamma.size() != q) throw InputError("params: gamma length != Q");
    if (beta_te.size() != pp) throw InputError("params: beta_te length != p");
    if (beta_rcr.size() != q) throw InputError("params: beta_rcr has wrong risk count");
    for (const auto& b : beta_rcr)
        if (b.size() != pp) throw InputError("params: beta_rcr row length != p");
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

} // namespace rcrte
