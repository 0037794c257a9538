#include "rctodds/population.hpp"

#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "rctodds/errors.hpp"

namespace rctodds {

StudyPopulation::StudyPopulation(std::vector<Subject> subjects)
    : subjects_(std::move(subjects)) {
    if (subjects_.size() < 2) {
        throw Error("study population needs at least 2 subjects");
    }
    for (const Subject& s : subjects_) {
        if (!std::isfinite(s.z)) throw Error("non-finite covariate");
        if ((s.y_t != 0 && s.y_t != 1) || (s.y_c != 0 && s.y_c != 1)) {
            throw Error("potential responses must be 0 or 1");
        }
    }
}

std::vector<double> StudyPopulation::covariates() const {
    std::vector<double> z;
    z.reserve(subjects_.size());
    for (const Subject& s : subjects_) z.push_back(s.z);
    return z;
}

double logit(double p) { return std::log(p / (1.0 - p)); }

EstimateTriple make_triple(double alpha_t, double alpha_c) {
    if (alpha_t <= 0.0 || alpha_t >= 1.0 || alpha_c <= 0.0 || alpha_c >= 1.0) {
        throw DegenerateParameter("success probability on the boundary, log odds undefined");
    }
    return {alpha_t, alpha_c, logit(alpha_t) - logit(alpha_c)};
}

EstimateTriple population_params(const StudyPopulation& pop) {
    const std::size_t n = pop.size();
    long long sum_t = 0;
    long long sum_c = 0;
    for (const Subject& s : pop.subjects()) {
        sum_t += s.y_t;
        sum_c += s.y_c;
    }
    return make_triple(static_cast<double>(sum_t) / n,
                       static_cast<double>(sum_c) / n);
}

Assignment assign(const StudyPopulation& pop, double pi_t, Rng& rng) {
    const std::size_t n = pop.size();
    // Nearest integer, ties to even.
    const long long n_t = std::llrint(static_cast<double>(n) * pi_t);
    if (n_t < 1 || n_t > static_cast<long long>(n) - 1) {
        throw InvalidFraction("round(n * pi_t) must leave both arms nonempty");
    }

    // Partial Fisher-Yates: after n_t swaps the prefix is a uniform
    // without-replacement sample of indices.
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (long long i = 0; i < n_t; ++i) {
        const std::size_t j = i + rng.below(n - i);
        std::swap(idx[i], idx[j]);
    }

    Assignment a;
    a.x.assign(n, 0);
    a.n_t = static_cast<int>(n_t);
    for (long long i = 0; i < n_t; ++i) a.x[idx[i]] = 1;
    return a;
}

std::vector<int> observe(const StudyPopulation& pop, const Assignment& a) {
    if (a.x.size() != pop.size()) {
        throw LengthMismatch("assignment length does not match population size");
    }
    std::vector<int> y(pop.size());
    for (std::size_t i = 0; i < pop.size(); ++i) {
        y[i] = a.x[i] ? pop[i].y_t : pop[i].y_c;
    }
    return y;
}

std::vector<IndividualEstimate> individual_estimates(
    const std::vector<int>& observed, const Assignment& a, double pi_t) {
    if (observed.size() != a.x.size()) {
        throw LengthMismatch("observed length does not match assignment length");
    }
    if (!(pi_t > 0.0 && pi_t < 1.0)) {
        throw InvalidFraction("pi_t must be strictly inside (0, 1)");
    }
    std::vector<IndividualEstimate> est(observed.size());
    for (std::size_t i = 0; i < observed.size(); ++i) {
        est[i].y_t = observed[i] * a.x[i] / pi_t;
        est[i].y_c = observed[i] * (1 - a.x[i]) / (1.0 - pi_t);
    }
    return est;
}

StudyPopulation read_population_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty population CSV");
    if (line == "z,y_t,y_c\r") line.pop_back();
    if (line != "z,y_t,y_c") {
        throw ParseError("population CSV must start with header z,y_t,y_c");
    }
    std::vector<Subject> subjects;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream row(line);
        Subject s;
        char c1 = 0, c2 = 0;
        if (!(row >> s.z >> c1 >> s.y_t >> c2 >> s.y_c) || c1 != ',' || c2 != ',') {
            throw ParseError("bad population CSV row at line " + std::to_string(lineno));
        }
        if ((s.y_t != 0 && s.y_t != 1) || (s.y_c != 0 && s.y_c != 1)) {
            throw ParseError("responses must be 0/1 at line " + std::to_string(lineno));
        }
        subjects.push_back(s);
    }
    return StudyPopulation(std::move(subjects));
}

void write_population_csv(std::ostream& out, const StudyPopulation& pop) {
    out << "z,y_t,y_c\n";
    out.precision(17);
    for (const Subject& s : pop.subjects()) {
        out << s.z << ',' << s.y_t << ',' << s.y_c << '\n';
    }
}

}  // namespace rctodds
