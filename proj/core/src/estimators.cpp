#include "rctodds/estimators.hpp"

#include <cmath>

#include "rctodds/errors.hpp"

namespace rctodds {

PlugInResult plug_in(const FitResult& fit, const std::vector<double>& z_values) {
    if (!fit.converged) throw Error("plug_in requires a converged fit");
    if (z_values.empty()) throw Error("plug_in requires covariate values");

    const double n = static_cast<double>(z_values.size());
    double sum_t = 0.0;
    double sum_c = 0.0;
    for (double z : z_values) {
        sum_t += link_prob(fit.beta, 1, z, fit.link);
        sum_c += link_prob(fit.beta, 0, z, fit.link);
    }

    PlugInResult result;
    result.triple = make_triple(sum_t / n, sum_c / n);
    if (fit.link == Link::probit) {
        result.probit_contrast = normal_quantile(result.triple.alpha_t) -
                                 normal_quantile(result.triple.alpha_c);
    }
    return result;
}

EstimateTriple itt(const std::vector<int>& observed, const Assignment& a) {
    if (observed.size() != a.x.size()) {
        throw LengthMismatch("observed length does not match assignment length");
    }
    long long n_t = 0, n_c = 0, s_t = 0, s_c = 0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        if (a.x[i]) {
            ++n_t;
            s_t += observed[i];
        } else {
            ++n_c;
            s_c += observed[i];
        }
    }
    if (n_t == 0 || n_c == 0) throw Error("both arms must be nonempty");
    return make_triple(static_cast<double>(s_t) / n_t,
                       static_cast<double>(s_c) / n_c);
}

double coefficient_delta(const FitResult& fit) {
    if (!fit.converged) throw Error("coefficient_delta requires a converged fit");
    return fit.beta.b2;
}

}  // namespace rctodds
