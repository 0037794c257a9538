#pragma once

#include <optional>
#include <vector>

#include "rctodds/fitter.hpp"
#include "rctodds/population.hpp"

namespace rctodds {

struct PlugInResult {
    EstimateTriple triple;  // delta on the log-odds scale
    // For probit fits, the contrast on the quantile scale,
    // normal_quantile(alpha_t) - normal_quantile(alpha_c).
    std::optional<double> probit_contrast;
};

// Average predicted probability with treatment forced to 1 (resp. 0) over
// every subject's covariate, then differenced on the log-odds scale. The
// average runs over ALL n covariates, both arms.
PlugInResult plug_in(const FitResult& fit, const std::vector<double>& z_values);

// Group-mean success rates by assigned arm.
EstimateTriple itt(const std::vector<int>& observed, const Assignment& a);

// The model's claimed common log-odds shift, read straight off the fit.
// This is the quantity that does NOT consistently estimate the differential
// log odds when the covariate matters.
double coefficient_delta(const FitResult& fit);

}  // namespace rctodds
