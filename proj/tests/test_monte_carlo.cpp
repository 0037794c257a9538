#include <doctest.h>

#include <cmath>
#include <sstream>

#include "rctodds/errors.hpp"
#include "rctodds/monte_carlo.hpp"

using namespace rctodds;

namespace {

bool rows_equal(const ReplicationRow& a, const ReplicationRow& b) {
    return a.beta.b1 == b.beta.b1 && a.beta.b2 == b.beta.b2 &&
           a.beta.b3 == b.beta.b3 && a.plug_in_delta == b.plug_in_delta &&
           a.itt_delta == b.itt_delta &&
           a.plug_in_alpha_t == b.plug_in_alpha_t &&
           a.plug_in_alpha_c == b.plug_in_alpha_c;
}

}  // namespace

TEST_CASE("build_population reproduces the design fractions") {
    ScenarioSpec spec;
    spec.n = 1000000;
    spec.seed = 17;
    Rng rng = Rng::stream(spec.seed, 0);
    const StudyPopulation pop = build_population(spec, rng);
    double mean_t = 0.0, mean_c = 0.0;
    for (const Subject& s : pop.subjects()) {
        mean_t += s.y_t;
        mean_c += s.y_c;
    }
    mean_t /= pop.size();
    mean_c /= pop.size();
    // P(U + V > 3/4) = 23/32 and P(U > 1/2) = 1/2, CLT band 3 sigma
    CHECK(std::abs(mean_t - 23.0 / 32.0) <= 0.002);
    CHECK(std::abs(mean_c - 0.5) <= 0.002);
}

TEST_CASE("build_population covariate kinds") {
    ScenarioSpec spec;
    spec.n = 2000;
    spec.seed = 3;
    Rng rng_v = Rng::stream(spec.seed, 0);
    const StudyPopulation pop_v = build_population(spec, rng_v);
    spec.covariate = CovariateKind::u_plus_v;
    Rng rng_uv = Rng::stream(spec.seed, 0);
    const StudyPopulation pop_uv = build_population(spec, rng_uv);
    double zmax_v = 0.0, zmax_uv = 0.0;
    for (std::size_t i = 0; i < pop_v.size(); ++i) {
        zmax_v = std::max(zmax_v, pop_v[i].z);
        zmax_uv = std::max(zmax_uv, pop_uv[i].z);
        // same u, v draws underneath, so potential responses agree
        CHECK(pop_v[i].y_t == pop_uv[i].y_t);
        CHECK(pop_v[i].y_c == pop_uv[i].y_c);
    }
    CHECK(zmax_v <= 1.0);
    CHECK(zmax_uv > 1.0);  // u + v exceeds 1 for some subject
}

TEST_CASE("run_experiment is deterministic given its stream") {
    ScenarioSpec spec;
    spec.n = 120;
    spec.seed = 11;
    Rng pop_rng = Rng::stream(spec.seed, 0);
    const StudyPopulation pop = build_population(spec, pop_rng);
    Rng r1 = Rng::stream(spec.seed, 1);
    Rng r2 = Rng::stream(spec.seed, 1);
    const ReplicationRow a = run_experiment(pop, spec, r1);
    const ReplicationRow b = run_experiment(pop, spec, r2);
    CHECK(rows_equal(a, b));
}

TEST_CASE("run_study is bit-identical across thread counts") {
    ScenarioSpec spec;
    spec.n = 100;
    spec.replications = 60;
    spec.seed = 29;
    spec.threads = 1;
    const SimulationReport serial = run_study(spec);
    spec.threads = 4;
    const SimulationReport parallel = run_study(spec);
    REQUIRE(serial.rows.size() == parallel.rows.size());
    for (std::size_t i = 0; i < serial.rows.size(); ++i) {
        CHECK(rows_equal(serial.rows[i], parallel.rows[i]));
    }
    CHECK(serial.plug_in_delta.mean == parallel.plug_in_delta.mean);
    CHECK(serial.b2.sd == parallel.b2.sd);
    CHECK(serial.truth.delta == parallel.truth.delta);
}

TEST_CASE("report bookkeeping invariants") {
    ScenarioSpec spec;
    spec.n = 100;
    spec.replications = 200;
    spec.seed = 5;
    const SimulationReport rep = run_study(spec);
    CHECK(rep.rows.size() + rep.failures ==
          static_cast<std::size_t>(spec.replications));
    const double expected_mcse =
        rep.plug_in_delta.sd / std::sqrt(static_cast<double>(rep.rows.size()));
    CHECK(rep.plug_in_delta.mcse == doctest::Approx(expected_mcse));
    CHECK(rep.b2.mcse == doctest::Approx(rep.b2.sd / std::sqrt(
                             static_cast<double>(rep.rows.size()))));
}

TEST_CASE("plug-in tracks the frozen truth at modest n") {
    ScenarioSpec spec;
    spec.n = 100;
    spec.replications = 400;
    spec.seed = 2;
    const SimulationReport rep = run_study(spec);
    CHECK(std::abs(rep.plug_in_delta.mean - rep.truth.delta) <=
          4.0 * rep.plug_in_delta.mcse);
    // positive-bias direction of the coefficient reading
    CHECK(rep.b2.mean > rep.plug_in_delta.mean);
}

TEST_CASE("replication dataset round-trips through CSV and refits") {
    ScenarioSpec spec;
    spec.n = 200;
    spec.replications = 5;
    spec.seed = 13;
    spec.threads = 1;
    const SimulationReport rep = run_study(spec);
    Rng pop_rng = Rng::stream(spec.seed, 0);
    const StudyPopulation pop = build_population(spec, pop_rng);
    for (int k = 0; k < spec.replications; ++k) {
        const FitData data = replication_fit_data(pop, spec, k);
        std::stringstream ss;
        write_fit_csv(ss, data);
        const FitData back = read_fit_csv(ss);
        const FitResult refit = fit_mle(back, spec.link);
        CHECK(std::abs(refit.beta.b1 - rep.rows[k].beta.b1) <= 1e-10);
        CHECK(std::abs(refit.beta.b2 - rep.rows[k].beta.b2) <= 1e-10);
        CHECK(std::abs(refit.beta.b3 - rep.rows[k].beta.b3) <= 1e-10);
    }
}

TEST_CASE("spec validation") {
    ScenarioSpec spec;
    spec.n = 5;  // below the minimum population size
    Rng rng = Rng::stream(1, 0);
    CHECK_THROWS_AS(build_population(spec, rng), Error);
    ScenarioSpec bad_pi;
    bad_pi.pi_t = 1.5;
    CHECK_THROWS_AS(run_study(bad_pi), InvalidFraction);
}

TEST_CASE("report writers emit the headline numbers") {
    ScenarioSpec spec;
    spec.n = 100;
    spec.replications = 30;
    spec.seed = 21;
    const SimulationReport rep = run_study(spec);
    std::stringstream table;
    write_report_table(table, rep, spec);
    CHECK(table.str().find("truth") != std::string::npos);
    std::stringstream csv;
    write_report_csv(csv, rep);
    std::string header;
    std::getline(csv, header);
    CHECK(header.find("b2") != std::string::npos);
    // one line per replication plus the summary block
    int lines = 0;
    std::string line;
    while (std::getline(csv, line)) ++lines;
    CHECK(lines >= static_cast<int>(rep.rows.size()));
}
