#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "rctodds/estimators.hpp"
#include "rctodds/fitter.hpp"
#include "rctodds/population.hpp"

namespace rctodds {

enum class CovariateKind { v, u_plus_v };

struct ScenarioSpec {
    int n = 100;
    CovariateKind covariate = CovariateKind::v;
    double cut_c = 0.5;
    double cut_t = 0.75;
    double pi_t = 0.75;
    int replications = 1000;
    Link link = Link::logit;
    std::uint64_t seed = 0;
    int threads = 0;  // 0 = hardware concurrency
};

struct ReplicationRow {
    Beta beta;
    double plug_in_delta = 0.0;
    double itt_delta = 0.0;
    double plug_in_alpha_t = 0.0;
    double plug_in_alpha_c = 0.0;
};

struct ColumnStats {
    double mean = 0.0;
    double sd = 0.0;
    double mcse = 0.0;  // sd / sqrt(#rows)
};

struct SimulationReport {
    EstimateTriple truth;  // exact parameters of the frozen population
    std::vector<ReplicationRow> rows;  // converged replications only
    int failures = 0;
    ColumnStats b1, b2, b3, plug_in_delta, itt_delta;
};

// Subjects with u, v iid Uniform(0,1); z = v or u + v; y_c = [u > cut_c];
// y_t = [u + v > cut_t]. The caller freezes the result.
StudyPopulation build_population(const ScenarioSpec& spec, Rng& rng);

// One randomized experiment on a frozen population: assign, observe, fit,
// estimate. Throws on non-convergence; run_study records those as failures.
ReplicationRow run_experiment(const StudyPopulation& pop,
                              const ScenarioSpec& spec, Rng& rng);

// Builds and freezes one population (substream 0 of the seed), runs
// `replications` experiments on per-replication substreams, and aggregates.
// Bit-identical output for a given spec regardless of thread count.
SimulationReport run_study(const ScenarioSpec& spec);

// Rebuilds the exact dataset replication `rep_index` of a study fits, from
// the same substream; lets a written-out replication be re-fit externally.
FitData replication_fit_data(const StudyPopulation& pop,
                             const ScenarioSpec& spec, int rep_index);

// Aligned mean-over-SD summary table.
void write_report_table(std::ostream& out, const SimulationReport& report,
                        const ScenarioSpec& spec);

// One row per replication plus a summary block, full precision.
void write_report_csv(std::ostream& out, const SimulationReport& report);

}  // namespace rctodds
