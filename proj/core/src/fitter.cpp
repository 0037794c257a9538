#include "rctodds/fitter.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "rctodds/errors.hpp"

namespace rctodds {

namespace {

constexpr double kLogClamp = 1e-12;          // only inside log terms
constexpr double kSeparationBound = 30.0;    // |eta|=30 pins p to 1e-13 of {0,1}

double clamp_prob(double p) {
    return std::clamp(p, kLogClamp, 1.0 - kLogClamp);
}

double eta_of(const Beta& beta, int x, double z) {
    return beta.b1 + beta.b2 * x + beta.b3 * z;
}

// Cholesky factorization of a symmetric positive definite 3x3 matrix.
// Returns false when a pivot falls below tol relative to the largest
// diagonal entry.
bool cholesky3(const Mat3& a, Mat3& l, double rel_tol = 1e-12) {
    const double scale =
        std::max({std::abs(a[0][0]), std::abs(a[1][1]), std::abs(a[2][2]), 1e-300});
    l = {};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = a[i][j];
            for (int k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
            if (i == j) {
                if (s <= rel_tol * scale) return false;
                l[i][i] = std::sqrt(s);
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    return true;
}

Vec3 cholesky_solve3(const Mat3& l, const Vec3& b) {
    Vec3 y{};
    for (int i = 0; i < 3; ++i) {
        double s = b[i];
        for (int k = 0; k < i; ++k) s -= l[i][k] * y[k];
        y[i] = s / l[i][i];
    }
    Vec3 x{};
    for (int i = 2; i >= 0; --i) {
        double s = y[i];
        for (int k = i + 1; k < 3; ++k) s -= l[k][i] * x[k];
        x[i] = s / l[i][i];
    }
    return x;
}

double sup_norm(const Vec3& v) {
    return std::max({std::abs(v[0]), std::abs(v[1]), std::abs(v[2])});
}

// Per-row score factor s such that the gradient contribution is
// w * s * (1, x, z).
double score_factor(double eta, int y, Link link) {
    if (link == Link::logit) {
        return y - sigmoid(eta);
    }
    // Probit: (y - p) phi / (p (1 - p)), computed as a tail ratio so the
    // cancellation-prone form never appears.
    const double phi = normal_pdf(eta);
    if (y == 1) {
        return phi / std::max(normal_cdf(eta), 1e-300);
    }
    return -phi / std::max(normal_cdf(-eta), 1e-300);
}

// Per-row curvature factor c such that the (expected) information
// contribution is w * c * (1, x, z)^T (1, x, z).
double curvature_factor(double eta, Link link) {
    if (link == Link::logit) {
        const double p = sigmoid(eta);
        return p * (1.0 - p);
    }
    const double phi = normal_pdf(eta);
    const double p = normal_cdf(eta);
    const double q = normal_cdf(-eta);
    return phi * phi / std::max(p * q, 1e-300);
}

}  // namespace

FitData::FitData(std::vector<FitRow> rows) : rows_(std::move(rows)) {
    if (rows_.size() < 3) throw Error("need at least 3 rows to fit 3 coefficients");
    for (const FitRow& r : rows_) {
        if (r.x != 0 && r.x != 1) throw Error("x must be 0 or 1");
        if (r.y != 0 && r.y != 1) throw Error("y must be 0 or 1");
        if (!std::isfinite(r.z)) throw Error("non-finite covariate");
        if (!(r.w > 0.0) || !std::isfinite(r.w)) throw Error("weights must be positive");
        weight_total_ += r.w;
    }
}

double log1pexp(double x) {
    // Regime split at 0: the softplus bounds show which form stays accurate
    // on each side.
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

double normal_pdf(double x) {
    static const double inv_sqrt_2pi = 0.3989422804014326779;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw Error("normal_quantile needs p in (0, 1)");
    }
    // Acklam's rational approximation, then one Newton step on the CDF.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double p_low = 0.02425;

    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    const double err = normal_cdf(x) - p;
    x -= err / normal_pdf(x);
    return x;
}

double link_prob(const Beta& beta, int x, double z, Link link) {
    const double eta = eta_of(beta, x, z);
    const double p = link == Link::logit ? sigmoid(eta) : normal_cdf(eta);
    // Strictly inside (0, 1) in floating point.
    return std::clamp(p, std::numeric_limits<double>::min(),
                      std::nextafter(1.0, 0.0));
}

double log_likelihood(const FitData& data, const Beta& beta, Link link) {
    double total = 0.0;
    for (const FitRow& r : data.rows()) {
        const double eta = eta_of(beta, r.x, r.z);
        if (link == Link::logit) {
            // y*eta - log(1 + e^eta), exact and clamp-free.
            total += r.w * (r.y * eta - log1pexp(eta));
        } else {
            const double p = clamp_prob(normal_cdf(eta));
            total += r.w * (r.y ? std::log(p) : std::log1p(-p));
        }
    }
    return total;
}

Vec3 gradient(const FitData& data, const Beta& beta, Link link) {
    Vec3 g{};
    for (const FitRow& r : data.rows()) {
        const double s = r.w * score_factor(eta_of(beta, r.x, r.z), r.y, link);
        g[0] += s;
        g[1] += s * r.x;
        g[2] += s * r.z;
    }
    return g;
}

Mat3 hessian(const FitData& data, const Beta& beta, Link link) {
    Mat3 h{};
    for (const FitRow& r : data.rows()) {
        const double c = r.w * curvature_factor(eta_of(beta, r.x, r.z), link);
        const double v[3] = {1.0, static_cast<double>(r.x), r.z};
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) h[i][j] -= c * v[i] * v[j];
        }
    }
    return h;
}

FitResult fit_mle(const FitData& data, Link link, const FitOptions& opts) {
    if (data.size() < 3) {
        throw RankDeficient("need at least 3 rows to fit 3 coefficients");
    }
    {
        // Rank of the design: the unweighted Gram of (1, x, z) must admit a
        // Cholesky factorization well away from singularity.
        Mat3 gram{};
        for (const FitRow& r : data.rows()) {
            const double v[3] = {1.0, static_cast<double>(r.x), r.z};
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) gram[i][j] += v[i] * v[j];
            }
        }
        Mat3 l;
        if (!cholesky3(gram, l, 1e-10)) {
            throw RankDeficient("design matrix (1, x, z) has rank < 3");
        }
    }

    const double tol = opts.tol_per_row * static_cast<double>(data.size());

    FitResult result;
    result.link = link;
    Beta beta{};
    double objective = log_likelihood(data, beta, link);
    if (opts.trace) result.objective_trace.push_back(objective);

    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        const Vec3 g = gradient(data, beta, link);
        const double gnorm = sup_norm(g);
        result.iterations = iter;
        result.grad_norm = gnorm;
        if (gnorm <= tol) {
            result.beta = beta;
            result.converged = true;
            return result;
        }
        const double beta_norm =
            std::max({std::abs(beta.b1), std::abs(beta.b2), std::abs(beta.b3)});
        if (beta_norm > kSeparationBound) {
            throw Separation("MLE diverging: coefficients exceed the separation bound");
        }

        const Mat3 h = hessian(data, beta, link);
        Mat3 neg_h{};
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) neg_h[i][j] = -h[i][j];
        }
        Mat3 l;
        if (!cholesky3(neg_h, l)) {
            throw RankDeficient("information matrix singular to working precision");
        }
        const Vec3 step = cholesky_solve3(l, g);

        // Step halving: shrink until the objective improves.
        double t = 1.0;
        bool accepted = false;
        for (int h_iter = 0; h_iter <= opts.max_halvings; ++h_iter) {
            const Beta candidate{beta.b1 + t * step[0], beta.b2 + t * step[1],
                                 beta.b3 + t * step[2]};
            const double cand_obj = log_likelihood(data, candidate, link);
            // Near the optimum the full Newton step improves the objective
            // by less than the rounding noise of the summed log-likelihood,
            // so the objective comparison can spuriously reject it even
            // though the step collapses the gradient. Fall back to the
            // gradient itself: accept the full step whenever it shrinks the
            // gradient sup-norm. Halved steps must strictly improve.
            const bool ascends = cand_obj > objective;
            if (ascends ||
                (h_iter == 0 &&
                 sup_norm(gradient(data, candidate, link)) < gnorm)) {
                beta = candidate;
                objective = ascends ? cand_obj : objective;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (opts.trace) result.objective_trace.push_back(objective);
        if (!accepted) {
            // No ascent direction left at floating-point resolution.
            break;
        }
    }

    const Vec3 g = gradient(data, beta, link);
    result.beta = beta;
    result.grad_norm = sup_norm(g);
    result.converged = result.grad_norm <= tol;
    if (!result.converged) {
        const double beta_norm =
            std::max({std::abs(beta.b1), std::abs(beta.b2), std::abs(beta.b3)});
        if (beta_norm > kSeparationBound) {
            throw Separation("MLE diverging: coefficients exceed the separation bound");
        }
        throw MaxIterations("Newton iteration limit reached before convergence");
    }
    return result;
}

Vec3 likelihood_residuals(const FitData& data, const Beta& beta, Link link) {
    double wt_t = 0.0, wt_c = 0.0, wt = 0.0;
    double fit_t = 0.0, obs_t = 0.0;
    double fit_c = 0.0, obs_c = 0.0;
    double fit_z = 0.0, obs_z = 0.0;
    for (const FitRow& r : data.rows()) {
        const double p = link_prob(beta, r.x, r.z, link);
        if (r.x == 1) {
            wt_t += r.w;
            fit_t += r.w * p;
            obs_t += r.w * r.y;
        } else {
            wt_c += r.w;
            fit_c += r.w * p;
            obs_c += r.w * r.y;
        }
        wt += r.w;
        fit_z += r.w * p * r.z;
        obs_z += r.w * r.y * r.z;
    }
    Vec3 res{};
    res[0] = wt_t > 0.0 ? (fit_t - obs_t) / wt_t : 0.0;
    res[1] = wt_c > 0.0 ? (fit_c - obs_c) / wt_c : 0.0;
    res[2] = (fit_z - obs_z) / wt;
    return res;
}

FitData read_fit_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty fit CSV");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "y,x,z") throw ParseError("fit CSV must start with header y,x,z");
    std::vector<FitRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream row(line);
        FitRow r;
        char c1 = 0, c2 = 0;
        if (!(row >> r.y >> c1 >> r.x >> c2 >> r.z) || c1 != ',' || c2 != ',') {
            throw ParseError("bad fit CSV row at line " + std::to_string(lineno));
        }
        if ((r.y != 0 && r.y != 1) || (r.x != 0 && r.x != 1)) {
            throw ParseError("y and x must be 0/1 at line " + std::to_string(lineno));
        }
        rows.push_back(r);
    }
    try {
        return FitData(std::move(rows));
    } catch (const Error& e) {
        throw ParseError(e.what());
    }
}

void write_fit_csv(std::ostream& out, const FitData& data) {
    out << "y,x,z\n";
    out.precision(17);
    for (const FitRow& r : data.rows()) {
        out << r.y << ',' << r.x << ',' << r.z << '\n';
    }
}

}  // namespace rctodds
