#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rctodds/fitter.hpp"
#include "rctodds/population.hpp"

namespace rctodds {

// Exact fraction with int64 terms, reduced on construction.
struct Rational {
    long long num = 0;
    long long den = 1;

    Rational() = default;
    Rational(long long n, long long d);

    Rational operator+(const Rational& o) const;
    Rational operator*(const Rational& o) const;
    bool operator==(const Rational& o) const {
        return num == o.num && den == o.den;
    }
    double value() const { return static_cast<double>(num) / den; }
};

// Limiting distribution of subject types: covariate z in {0,1,2}, control
// response c, treatment response t. All twelve weights strictly positive and
// summing to 1; lambda_t is the limiting treated fraction.
struct TypeDistribution {
    double lambda_t = 0.5;
    // weight[z][c][t]
    std::array<std::array<std::array<double, 2>, 2>, 3> weight{};

    void validate() const;  // throws Error on violation
    double lambda_c() const { return 1.0 - lambda_t; }
    double lambda_z(int z) const;
    double alpha_t() const;  // limiting fraction with t = 1
    double alpha_c() const;  // limiting fraction with c = 1
};

// An all-positive reference distribution with a real treatment effect and
// an informative covariate; treated fraction 0.75.
TypeDistribution default_type_distribution();

// Deterministic finite population whose type counts match the distribution
// as closely as integer counts allow (largest-remainder apportionment).
StudyPopulation population_from_types(const TypeDistribution& dist, int n);

struct PooledResult {
    double p_bar = 0.0;
    double q_bar = 0.0;
    double pooled = 0.0;  // odds ratio of the averages
};

// Per-subject odds multiplied by lambda, then averaged: the pooled
// multiplier [p_bar/(1-p_bar)] / [q_bar/(1-q_bar)] lies strictly between 1
// and lambda whenever the q_i vary.
PooledResult pooled_multiplier(const std::vector<double>& q, double lambda);

// Checks both two-sided softplus bounds
//   e^x - e^{2x}/2 < log(1+e^x) < e^x
//   x + e^{-x} - e^{-2x}/2 < log(1+e^x) < x + e^{-x}
// with the given floating-point slack.
bool log1pexp_bounds_hold(double x, double slack = 1e-15);

struct FourthMomentResult {
    double exact = 0.0;          // E[(X - rm/n)^4], hypergeometric
    double count_bound = 0.0;    // m + 3m(m-1)
    double binomial = 0.0;       // same-margin binomial fourth central moment
};

// Exact fourth central moment of the hypergeometric count of reds in m
// draws without replacement from n objects of which r are red. Summed over
// the pmf in log space, so large n is safe.
FourthMomentResult hypergeometric_fourth_moment(int n, int r, int m);

// The twelve weighted (x, z, y) cells of the limiting problem, with cell
// weights from the limiting distribution of {Z, X, Y}.
FitData limiting_cells(const TypeDistribution& dist);

// Limiting per-subject log-likelihood, evaluated on the twelve cells.
double limiting_loglik(const TypeDistribution& dist, const Beta& beta);

// The beta maximizing the limiting log-likelihood (gradient sup-norm 1e-10).
Beta limiting_maximizer(const TypeDistribution& dist);

struct OracleResult {
    Rational alpha_t_mean;  // E over all assignments of the treated success rate
    Rational alpha_c_mean;
    std::vector<Rational> y_t_mean;  // E[y_i x_i / pi_t] per subject
    std::vector<Rational> y_c_mean;
};

// Enumerates every size-n_t assignment (C(n, n_t) <= 1e6) and returns exact
// expectations of the ITT and individual-level estimators.
OracleResult exact_randomization_oracle(const StudyPopulation& pop, int n_t);

// --- property suite -------------------------------------------------------

struct PropertyResult {
    std::string group;
    std::string name;
    bool pass = false;
    double worst_violation = 0.0;
};

struct TheoryOptions {
    std::string filter;     // substring match on group name; empty = all
    int grid_max_n = 200;   // largest n in the fourth-moment grid
    std::uint64_t seed = 20080237;
};

// Runs every executable check of the analytic apparatus: pooling
// inequalities, softplus bounds, hypergeometric concentration, limiting
// log-likelihood agreement, convergence of the MLE to its limit, balance
// identities, and the exact randomization oracle.
std::vector<PropertyResult> run_theory_suite(const TheoryOptions& opts);

}  // namespace rctodds
