#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rctodds/errors.hpp"
#include "rctodds/population.hpp"

using namespace rctodds;

namespace {

StudyPopulation four_subject_pop() {
    // y_t = (1,1,0,0), y_c = (1,0,0,0), z arbitrary but varying
    return StudyPopulation{{{0.1, 1, 1}, {0.7, 1, 0}, {0.4, 0, 0}, {0.9, 0, 0}}};
}

}  // namespace

TEST_CASE("population_params hand example") {
    const EstimateTriple t = population_params(four_subject_pop());
    CHECK(t.alpha_t == doctest::Approx(0.5));
    CHECK(t.alpha_c == doctest::Approx(0.25));
    CHECK(t.delta == doctest::Approx(std::log(3.0)));
}

TEST_CASE("population_params no-effect symmetry") {
    StudyPopulation pop{{{0.0, 1, 1}, {1.0, 0, 0}, {2.0, 1, 1}}};
    CHECK(population_params(pop).delta == doctest::Approx(0.0));
}

TEST_CASE("population_params degenerate fractions are errors") {
    StudyPopulation all_t{{{0.0, 1, 1}, {1.0, 1, 0}}};
    CHECK_THROWS_AS(population_params(all_t), DegenerateParameter);
    StudyPopulation none_c{{{0.0, 1, 0}, {1.0, 0, 0}}};
    CHECK_THROWS_AS(population_params(none_c), DegenerateParameter);
}

TEST_CASE("population_params invariant under permutation") {
    std::vector<Subject> subjects = four_subject_pop().subjects();
    const EstimateTriple base = population_params(StudyPopulation{subjects});
    std::reverse(subjects.begin(), subjects.end());
    const EstimateTriple rev = population_params(StudyPopulation{subjects});
    CHECK(base.alpha_t == rev.alpha_t);
    CHECK(base.alpha_c == rev.alpha_c);
    CHECK(base.delta == rev.delta);
}

TEST_CASE("construction rejects bad subjects") {
    CHECK_THROWS_AS((StudyPopulation{{{0.0, 1, 1}}}), Error);  // n < 2
    CHECK_THROWS_AS((StudyPopulation{{{0.0, 2, 0}, {1.0, 0, 0}}}), Error);
    const double nan = std::nan("");
    CHECK_THROWS_AS((StudyPopulation{{{nan, 1, 0}, {1.0, 0, 0}}}), Error);
}

TEST_CASE("make_triple links delta to the two fractions") {
    const EstimateTriple t = make_triple(0.75, 0.25);
    CHECK(t.delta == doctest::Approx(logit(0.75) - logit(0.25)));
    CHECK_THROWS_AS(make_triple(1.0, 0.5), DegenerateParameter);
    CHECK_THROWS_AS(make_triple(0.5, 0.0), DegenerateParameter);
}

TEST_CASE("assign count forced by rounding") {
    const StudyPopulation pop = four_subject_pop();
    Rng rng(12);
    for (int i = 0; i < 50; ++i) {
        const Assignment a = assign(pop, 0.75, rng);
        CHECK(a.n_t == 3);
        int ones = 0;
        for (int x : a.x) ones += x;
        CHECK(ones == 3);
        CHECK(a.x.size() == pop.size());
    }
}

TEST_CASE("assign rejects degenerate treated counts") {
    const StudyPopulation pop = four_subject_pop();
    Rng rng(5);
    CHECK_THROWS_AS(assign(pop, 0.05, rng), InvalidFraction);
    CHECK_THROWS_AS(assign(pop, 0.95, rng), InvalidFraction);
}

TEST_CASE("assign uniform over the two n=2 assignments") {
    StudyPopulation pop{{{0.0, 1, 0}, {1.0, 0, 1}}};
    Rng rng(99);
    int first_treated = 0;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
        first_treated += assign(pop, 0.5, rng).x[0];
    }
    const double freq = static_cast<double>(first_treated) / draws;
    CHECK(freq == doctest::Approx(0.5).epsilon(0.04));  // 0.5 +/- 0.02
}

TEST_CASE("assign has exchangeable margins at n = 100") {
    std::vector<Subject> subjects(100);
    for (int i = 0; i < 100; ++i) subjects[i] = {i * 0.01, i % 2, 0};
    const StudyPopulation pop{subjects};
    Rng rng(7);
    const int draws = 4000;
    std::vector<int> hits(100, 0);
    for (int d = 0; d < draws; ++d) {
        const Assignment a = assign(pop, 0.75, rng);
        for (int i = 0; i < 100; ++i) hits[i] += a.x[i];
    }
    // P(x_i = 1) = 3/4 for every i; 3.5 sigma binomial band
    const double band = 3.5 * std::sqrt(0.75 * 0.25 / draws);
    for (int i = 0; i < 100; ++i) {
        const double p = static_cast<double>(hits[i]) / draws;
        CHECK(std::abs(p - 0.75) <= band);
    }
}

TEST_CASE("observe substitutes the assigned potential response") {
    const StudyPopulation pop = four_subject_pop();
    Assignment all_t{{1, 1, 1, 1}, 4};
    const std::vector<int> yt = observe(pop, all_t);
    Assignment all_c{{0, 0, 0, 0}, 0};
    const std::vector<int> yc = observe(pop, all_c);
    for (std::size_t i = 0; i < pop.size(); ++i) {
        CHECK(yt[i] == pop[i].y_t);
        CHECK(yc[i] == pop[i].y_c);
    }
    Assignment bad{{1, 0}, 1};
    CHECK_THROWS_AS(observe(pop, bad), LengthMismatch);
}

TEST_CASE("observe is deterministic") {
    const StudyPopulation pop = four_subject_pop();
    Assignment a{{1, 0, 1, 0}, 2};
    CHECK(observe(pop, a) == observe(pop, a));
}

TEST_CASE("individual_estimates direct substitution") {
    Assignment a{{1, 0}, 1};
    const std::vector<int> y = {1, 0};
    const auto est = individual_estimates(y, a, 0.75);
    CHECK(est[0].y_t == doctest::Approx(4.0 / 3.0));
    CHECK(est[0].y_c == 0.0);
    CHECK(est[1].y_t == 0.0);
    CHECK(est[1].y_c == 0.0);
}

TEST_CASE("individual_estimates unbiased over both n=2 assignments") {
    StudyPopulation pop{{{0.0, 1, 0}, {1.0, 0, 1}}};
    for (std::size_t i = 0; i < 2; ++i) {
        double sum_t = 0.0, sum_c = 0.0;
        for (int first : {1, 0}) {
            Assignment a{{first, 1 - first}, 1};
            const auto est = individual_estimates(observe(pop, a), a, 0.5);
            sum_t += est[i].y_t;
            sum_c += est[i].y_c;
        }
        CHECK(sum_t / 2.0 == doctest::Approx(pop[i].y_t));
        CHECK(sum_c / 2.0 == doctest::Approx(pop[i].y_c));
    }
}

TEST_CASE("population CSV round-trips") {
    const StudyPopulation pop = four_subject_pop();
    std::stringstream ss;
    write_population_csv(ss, pop);
    const StudyPopulation back = read_population_csv(ss);
    REQUIRE(back.size() == pop.size());
    for (std::size_t i = 0; i < pop.size(); ++i) {
        CHECK(back[i].z == pop[i].z);
        CHECK(back[i].y_t == pop[i].y_t);
        CHECK(back[i].y_c == pop[i].y_c);
    }
}

TEST_CASE("population CSV rejects malformed input") {
    std::stringstream bad_header("a,b,c\n0.5,1,0\n0.2,0,0\n");
    CHECK_THROWS_AS(read_population_csv(bad_header), ParseError);
    std::stringstream bad_value("z,y_t,y_c\n0.5,2,0\n0.2,0,0\n");
    CHECK_THROWS_AS(read_population_csv(bad_value), Error);
}
