#include "rctodds/theory.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rctodds/errors.hpp"
#include "rctodds/estimators.hpp"
#include "rctodds/rng.hpp"

namespace rctodds {

// --- rational arithmetic ----------------------------------------------------

Rational::Rational(long long n, long long d) : num(n), den(d) {
    if (den == 0) throw Error("zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    const long long g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
}

Rational Rational::operator+(const Rational& o) const {
    return Rational(num * o.den + o.num * den, den * o.den);
}

Rational Rational::operator*(const Rational& o) const {
    return Rational(num * o.num, den * o.den);
}

// --- type distributions -----------------------------------------------------

void TypeDistribution::validate() const {
    if (!(lambda_t > 0.0 && lambda_t < 1.0)) {
        throw Error("treated fraction must be in (0, 1)");
    }
    double total = 0.0;
    for (int z = 0; z < 3; ++z) {
        for (int c = 0; c < 2; ++c) {
            for (int t = 0; t < 2; ++t) {
                if (!(weight[z][c][t] > 0.0)) {
                    throw Error("all type weights must be strictly positive");
                }
                total += weight[z][c][t];
            }
        }
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw Error("type weights must sum to 1");
    }
}

double TypeDistribution::lambda_z(int z) const {
    double s = 0.0;
    for (int c = 0; c < 2; ++c) {
        for (int t = 0; t < 2; ++t) s += weight[z][c][t];
    }
    return s;
}

double TypeDistribution::alpha_t() const {
    double s = 0.0;
    for (int z = 0; z < 3; ++z) {
        for (int c = 0; c < 2; ++c) s += weight[z][c][1];
    }
    return s;
}

double TypeDistribution::alpha_c() const {
    double s = 0.0;
    for (int z = 0; z < 3; ++z) {
        for (int t = 0; t < 2; ++t) s += weight[z][1][t];
    }
    return s;
}

TypeDistribution default_type_distribution() {
    TypeDistribution dist;
    dist.lambda_t = 0.75;
    // weight[z][c][t]; within each z, (c,t) shares; helped subjects (c=0,t=1)
    // grow with z so the covariate is informative about the effect.
    const double pz[3] = {0.3, 0.4, 0.3};
    const double q[3][2][2] = {
        // z = 0: {c0t0, c0t1}, {c1t0, c1t1}
        {{0.45, 0.25}, {0.10, 0.20}},
        {{0.30, 0.30}, {0.10, 0.30}},
        {{0.15, 0.35}, {0.10, 0.40}},
    };
    for (int z = 0; z < 3; ++z) {
        for (int c = 0; c < 2; ++c) {
            for (int t = 0; t < 2; ++t) dist.weight[z][c][t] = pz[z] * q[z][c][t];
        }
    }
    dist.validate();
    return dist;
}

StudyPopulation population_from_types(const TypeDistribution& dist, int n) {
    dist.validate();
    struct Cell {
        int z, c, t;
        double target;
        int count;
        double remainder;
    };
    std::vector<Cell> cells;
    int assigned = 0;
    for (int z = 0; z < 3; ++z) {
        for (int c = 0; c < 2; ++c) {
            for (int t = 0; t < 2; ++t) {
                const double target = dist.weight[z][c][t] * n;
                const int base = static_cast<int>(std::floor(target));
                cells.push_back({z, c, t, target, base, target - base});
                assigned += base;
            }
        }
    }
    std::stable_sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
        return a.remainder > b.remainder;
    });
    for (int i = 0; assigned < n; ++i, ++assigned) cells[i % cells.size()].count++;

    std::vector<Subject> subjects;
    subjects.reserve(n);
    for (const Cell& cell : cells) {
        for (int i = 0; i < cell.count; ++i) {
            subjects.push_back(Subject{static_cast<double>(cell.z), cell.t, cell.c});
        }
    }
    return StudyPopulation(std::move(subjects));
}

// --- pooling ------------------------------------------------------------

PooledResult pooled_multiplier(const std::vector<double>& q, double lambda) {
    if (q.empty()) throw Error("need at least one probability");
    if (!(lambda > 0.0)) throw Error("lambda must be positive");
    double p_sum = 0.0;
    double q_sum = 0.0;
    for (double qi : q) {
        if (!(qi > 0.0 && qi < 1.0)) throw Error("probabilities must lie in (0, 1)");
        p_sum += lambda * qi / (1.0 + (lambda - 1.0) * qi);
        q_sum += qi;
    }
    PooledResult r;
    r.p_bar = p_sum / static_cast<double>(q.size());
    r.q_bar = q_sum / static_cast<double>(q.size());
    r.pooled = (r.p_bar / (1.0 - r.p_bar)) / (r.q_bar / (1.0 - r.q_bar));
    return r;
}

bool log1pexp_bounds_hold(double x, double slack) {
    const double f = log1pexp(x);
    const double ex = std::exp(x);
    const double emx = std::exp(-x);
    const double tol = slack * std::max(1.0, std::abs(f));
    const bool first = (f > ex - 0.5 * ex * ex - tol) && (f < ex + tol);
    const bool second =
        (f > x + emx - 0.5 * emx * emx - tol) && (f < x + emx + tol);
    return first && second;
}

// --- hypergeometric concentration ----------------------------------------

namespace {

double log_choose(int n, int k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace

FourthMomentResult hypergeometric_fourth_moment(int n, int r, int m) {
    if (!(r > 0 && r < n && m > 0 && m <= n)) {
        throw Error("need 0 < r < n and 0 < m <= n");
    }
    FourthMomentResult result;
    const double mean = static_cast<double>(r) * m / n;

    const double log_total = log_choose(n, m);
    const int k_lo = std::max(0, m - (n - r));
    const int k_hi = std::min(r, m);
    double moment = 0.0;
    for (int k = k_lo; k <= k_hi; ++k) {
        const double logp =
            log_choose(r, k) + log_choose(n - r, m - k) - log_total;
        const double d = k - mean;
        moment += std::exp(logp) * d * d * d * d;
    }
    result.exact = moment;
    result.count_bound = m + 3.0 * m * (m - 1.0);

    // Matched binomial: m draws with replacement, p = r/n.
    const double p = static_cast<double>(r) / n;
    const double logp = std::log(p);
    const double logq = std::log1p(-p);
    double bin = 0.0;
    for (int k = 0; k <= m; ++k) {
        const double lp = log_choose(m, k) + k * logp + (m - k) * logq;
        const double d = k - mean;
        bin += std::exp(lp) * d * d * d * d;
    }
    result.binomial = bin;
    return result;
}

// --- limiting problem ------------------------------------------------------

FitData limiting_cells(const TypeDistribution& dist) {
    dist.validate();
    std::vector<FitRow> rows;
    rows.reserve(12);
    // Limiting distribution of {Z, X, Y}: a treated subject of covariate z
    // shows y iff its treatment response is y; control likewise.
    for (int z = 0; z < 3; ++z) {
        for (int y = 0; y < 2; ++y) {
            const double w_t =
                dist.lambda_t * (dist.weight[z][0][y] + dist.weight[z][1][y]);
            const double w_c =
                dist.lambda_c() * (dist.weight[z][y][0] + dist.weight[z][y][1]);
            rows.push_back(FitRow{1, static_cast<double>(z), y, w_t});
            rows.push_back(FitRow{0, static_cast<double>(z), y, w_c});
        }
    }
    return FitData(std::move(rows));
}

double limiting_loglik(const TypeDistribution& dist, const Beta& beta) {
    return log_likelihood(limiting_cells(dist), beta, Link::logit);
}

Beta limiting_maximizer(const TypeDistribution& dist) {
    FitOptions opts;
    opts.tol_per_row = 1e-10 / 12.0;  // gradient sup-norm 1e-10 over 12 cells
    const FitResult fit = fit_mle(limiting_cells(dist), Link::logit, opts);
    return fit.beta;
}

// --- exact randomization oracle ----------------------------------------------

OracleResult exact_randomization_oracle(const StudyPopulation& pop, int n_t) {
    const int n = static_cast<int>(pop.size());
    if (n_t < 1 || n_t > n - 1) throw Error("n_t must leave both arms nonempty");

    double log_count = log_choose(n, n_t);
    if (log_count > std::log(1e6)) {
        throw TooLarge("too many assignments to enumerate");
    }

    // Lexicographic combination walk; integer counters keep everything exact.
    std::vector<int> comb(n_t);
    std::iota(comb.begin(), comb.end(), 0);
    long long assignments = 0;
    long long sum_success_t = 0;
    long long sum_success_c = 0;
    std::vector<long long> treated_success(n, 0);
    std::vector<long long> control_success(n, 0);

    for (;;) {
        ++assignments;
        std::vector<char> treated(n, 0);
        for (int i : comb) treated[i] = 1;
        for (int i = 0; i < n; ++i) {
            if (treated[i]) {
                sum_success_t += pop[i].y_t;
                treated_success[i] += pop[i].y_t;
            } else {
                sum_success_c += pop[i].y_c;
                control_success[i] += pop[i].y_c;
            }
        }
        // Advance to the next combination.
        int j = n_t - 1;
        while (j >= 0 && comb[j] == n - n_t + j) --j;
        if (j < 0) break;
        ++comb[j];
        for (int k = j + 1; k < n_t; ++k) comb[k] = comb[k - 1] + 1;
    }

    const int n_c = n - n_t;
    OracleResult result;
    result.alpha_t_mean = Rational(sum_success_t, assignments * n_t);
    result.alpha_c_mean = Rational(sum_success_c, assignments * n_c);
    result.y_t_mean.reserve(n);
    result.y_c_mean.reserve(n);
    for (int i = 0; i < n; ++i) {
        // E[y_i x_i / pi_t] with pi_t = n_t / n, and the control analog.
        result.y_t_mean.push_back(Rational(treated_success[i] * n, assignments * n_t));
        result.y_c_mean.push_back(Rational(control_success[i] * n, assignments * n_c));
    }
    return result;
}

}  // namespace rctodds
