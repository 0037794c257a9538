#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "rctodds/rng.hpp"

namespace rctodds {

// One member of the study population: a covariate plus the two fixed
// potential responses, of which at most one is ever observed.
struct Subject {
    double z = 0.0;
    int y_t = 0;  // response if assigned to treatment
    int y_c = 0;  // response if assigned to control
};

// Fixed list of subjects. Responses are parameters of the population, not
// random variables; the only stochastic object downstream is the assignment.
class StudyPopulation {
public:
    explicit StudyPopulation(std::vector<Subject> subjects);

    std::size_t size() const { return subjects_.size(); }
    const Subject& operator[](std::size_t i) const { return subjects_[i]; }
    const std::vector<Subject>& subjects() const { return subjects_; }

    std::vector<double> covariates() const;

private:
    std::vector<Subject> subjects_;
};

// 0/1 assignment indicators with exactly n_t ones.
struct Assignment {
    std::vector<int> x;
    int n_t = 0;
};

// (alpha_t, alpha_c, delta) with delta = logit(alpha_t) - logit(alpha_c).
// Used for the true parameters, the plug-in estimates, and the ITT
// estimates alike.
struct EstimateTriple {
    double alpha_t = 0.0;
    double alpha_c = 0.0;
    double delta = 0.0;
};

double logit(double p);

// Builds a triple from the two probabilities; throws DegenerateParameter if
// either one is 0 or 1.
EstimateTriple make_triple(double alpha_t, double alpha_c);

// Fraction of successes if everyone were treated / everyone were control,
// and the differential log odds between the two.
EstimateTriple population_params(const StudyPopulation& pop);

// Randomly assigns round(n * pi_t) subjects to treatment, uniformly over
// all subsets of that size.
Assignment assign(const StudyPopulation& pop, double pi_t, Rng& rng);

// Observed responses y_i = x_i * y_t_i + (1 - x_i) * y_c_i. Accepts
// all-treated and all-control assignments so the truth computations can
// reuse it.
std::vector<int> observe(const StudyPopulation& pop, const Assignment& a);

struct IndividualEstimate {
    double y_t = 0.0;
    double y_c = 0.0;
};

// Per-subject unbiased estimates y_i x_i / pi_t and y_i (1 - x_i) / (1 - pi_t).
std::vector<IndividualEstimate> individual_estimates(
    const std::vector<int>& observed, const Assignment& a, double pi_t);

// CSV with header `z,y_t,y_c`.
StudyPopulation read_population_csv(std::istream& in);
void write_population_csv(std::ostream& out, const StudyPopulation& pop);

}  // namespace rctodds
