#pragma once

#include <array>
#include <iosfwd>
#include <vector>

namespace rctodds {

enum class Link { logit, probit };

struct Beta {
    double b1 = 0.0;  // intercept
    double b2 = 0.0;  // treatment coefficient
    double b3 = 0.0;  // covariate coefficient
};

struct FitRow {
    int x = 0;
    double z = 0.0;
    int y = 0;
    double w = 1.0;
};

// Rows of (x, z, y, weight). Validates types and finiteness on
// construction; the rank-3 requirement on the design matrix (1, x, z) is
// checked where it matters, at fit time.
class FitData {
public:
    explicit FitData(std::vector<FitRow> rows);

    std::size_t size() const { return rows_.size(); }
    const FitRow& operator[](std::size_t i) const { return rows_[i]; }
    const std::vector<FitRow>& rows() const { return rows_; }

    double weight_total() const { return weight_total_; }

private:
    std::vector<FitRow> rows_;
    double weight_total_ = 0.0;
};

struct FitOptions {
    // Convergence when the gradient sup-norm is below tol_per_row * n_rows.
    double tol_per_row = 1e-8;
    int max_iterations = 100;
    int max_halvings = 50;
    bool trace = false;  // record the objective after each accepted step
};

struct FitResult {
    Beta beta;
    Link link = Link::logit;
    int iterations = 0;
    double grad_norm = 0.0;
    bool converged = false;
    std::vector<double> objective_trace;  // empty unless FitOptions::trace
};

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;

// Numerically stable scalar kernels.
double log1pexp(double x);  // log(1 + e^x)
double sigmoid(double x);
double normal_cdf(double x);
double normal_pdf(double x);
double normal_quantile(double p);

// Success probability p(beta, x, z) under the given link, strictly inside
// (0, 1) in floating point.
double link_prob(const Beta& beta, int x, double z, Link link);

// Weighted binary log-likelihood (a pseudo-log-likelihood when the model
// does not actually govern the data). Always <= 0.
double log_likelihood(const FitData& data, const Beta& beta, Link link);

Vec3 gradient(const FitData& data, const Beta& beta, Link link);

// Negative definite on rank-3 designs. For the probit this is the expected
// information (Fisher scoring) matrix rather than the observed Hessian.
Mat3 hessian(const FitData& data, const Beta& beta, Link link);

// Newton's method with step-halving from beta = 0. The objective is
// globally strictly concave, so the unique maximum is found whenever it
// exists; throws Separation when it does not.
FitResult fit_mle(const FitData& data, Link link, const FitOptions& opts = {});

// Residuals of the three likelihood equations in averaged form: mean fitted
// probability minus observed success rate over T, over C, and z-weighted
// over everyone. All three vanish at a converged logit fit.
Vec3 likelihood_residuals(const FitData& data, const Beta& beta, Link link);

// CSV with header `y,x,z`.
FitData read_fit_csv(std::istream& in);
void write_fit_csv(std::ostream& out, const FitData& data);

}  // namespace rctodds
