#include "rctodds/monte_carlo.hpp"

#include <atomic>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <thread>

#include "rctodds/errors.hpp"

namespace rctodds {

namespace {

// Substream layout: stream 0 builds the population, stream 1 + k drives
// replication k. Population and replications are therefore independently
// reproducible.
constexpr std::uint64_t kPopulationStream = 0;

Rng replication_stream(const ScenarioSpec& spec, int rep_index) {
    return Rng::stream(spec.seed, 1 + static_cast<std::uint64_t>(rep_index));
}

FitData fit_data_from(const StudyPopulation& pop, const Assignment& a,
                      const std::vector<int>& observed) {
    std::vector<FitRow> rows;
    rows.reserve(pop.size());
    for (std::size_t i = 0; i < pop.size(); ++i) {
        rows.push_back(FitRow{a.x[i], pop[i].z, observed[i], 1.0});
    }
    return FitData(std::move(rows));
}

ColumnStats column_stats(const std::vector<ReplicationRow>& rows,
                         double (*pick)(const ReplicationRow&)) {
    ColumnStats stats;
    const std::size_t n = rows.size();
    if (n == 0) return stats;
    double sum = 0.0;
    for (const ReplicationRow& r : rows) sum += pick(r);
    stats.mean = sum / static_cast<double>(n);
    if (n > 1) {
        double ss = 0.0;
        for (const ReplicationRow& r : rows) {
            const double d = pick(r) - stats.mean;
            ss += d * d;
        }
        stats.sd = std::sqrt(ss / static_cast<double>(n - 1));
    }
    stats.mcse = stats.sd / std::sqrt(static_cast<double>(n));
    return stats;
}

}  // namespace

StudyPopulation build_population(const ScenarioSpec& spec, Rng& rng) {
    if (spec.n < 10) throw Error("scenario population size must be >= 10");
    std::vector<Subject> subjects;
    subjects.reserve(spec.n);
    for (int i = 0; i < spec.n; ++i) {
        const double u = rng.uniform01();
        const double v = rng.uniform01();
        Subject s;
        s.z = spec.covariate == CovariateKind::v ? v : u + v;
        s.y_c = u > spec.cut_c ? 1 : 0;
        s.y_t = u + v > spec.cut_t ? 1 : 0;
        subjects.push_back(s);
    }
    return StudyPopulation(std::move(subjects));
}

ReplicationRow run_experiment(const StudyPopulation& pop,
                              const ScenarioSpec& spec, Rng& rng) {
    const Assignment a = assign(pop, spec.pi_t, rng);
    const std::vector<int> observed = observe(pop, a);
    const FitData data = fit_data_from(pop, a, observed);
    const FitResult fit = fit_mle(data, spec.link);

    const PlugInResult plug = plug_in(fit, pop.covariates());
    const EstimateTriple hat = itt(observed, a);

    ReplicationRow row;
    row.beta = fit.beta;
    row.plug_in_delta = plug.triple.delta;
    row.itt_delta = hat.delta;
    row.plug_in_alpha_t = plug.triple.alpha_t;
    row.plug_in_alpha_c = plug.triple.alpha_c;
    return row;
}

FitData replication_fit_data(const StudyPopulation& pop,
                             const ScenarioSpec& spec, int rep_index) {
    Rng rng = replication_stream(spec, rep_index);
    const Assignment a = assign(pop, spec.pi_t, rng);
    return fit_data_from(pop, a, observe(pop, a));
}

SimulationReport run_study(const ScenarioSpec& spec) {
    if (spec.replications < 1) throw Error("need at least one replication");
    if (!(spec.pi_t > 0.0 && spec.pi_t < 1.0)) {
        throw InvalidFraction("treated fraction must lie strictly in (0, 1)");
    }
    Rng pop_rng = Rng::stream(spec.seed, kPopulationStream);
    const StudyPopulation pop = build_population(spec, pop_rng);

    SimulationReport report;
    report.truth = population_params(pop);

    const int reps = spec.replications;
    std::vector<ReplicationRow> results(reps);
    std::vector<char> ok(reps, 0);

    int n_threads = spec.threads > 0
                        ? spec.threads
                        : static_cast<int>(std::thread::hardware_concurrency());
    n_threads = std::max(1, std::min(n_threads, reps));

    std::atomic<int> next{0};
    auto worker = [&]() {
        for (;;) {
            const int k = next.fetch_add(1);
            if (k >= reps) return;
            Rng rng = replication_stream(spec, k);
            try {
                results[k] = run_experiment(pop, spec, rng);
                ok[k] = 1;
            } catch (const Separation&) {
            } catch (const RankDeficient&) {
            } catch (const MaxIterations&) {
            }
        }
    };

    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    // Collect in replication-index order so means and SDs are bit-stable
    // under any thread count.
    for (int k = 0; k < reps; ++k) {
        if (ok[k]) {
            report.rows.push_back(results[k]);
        } else {
            ++report.failures;
        }
    }
    if (report.failures * 100 > reps) {
        throw TooManyFailures("more than 1% of replications failed to converge");
    }

    report.b1 = column_stats(report.rows, [](const ReplicationRow& r) { return r.beta.b1; });
    report.b2 = column_stats(report.rows, [](const ReplicationRow& r) { return r.beta.b2; });
    report.b3 = column_stats(report.rows, [](const ReplicationRow& r) { return r.beta.b3; });
    report.plug_in_delta =
        column_stats(report.rows, [](const ReplicationRow& r) { return r.plug_in_delta; });
    report.itt_delta =
        column_stats(report.rows, [](const ReplicationRow& r) { return r.itt_delta; });
    return report;
}

void write_report_table(std::ostream& out, const SimulationReport& report,
                        const ScenarioSpec& spec) {
    out << "n = " << spec.n << "  pi_t = " << spec.pi_t
        << "  link = " << (spec.link == Link::logit ? "logit" : "probit")
        << "  covariate = " << (spec.covariate == CovariateKind::v ? "v" : "u+v")
        << "  reps = " << spec.replications << "  seed = " << spec.seed << "\n";
    out << "truth: alpha_t = " << std::setprecision(6) << report.truth.alpha_t
        << "  alpha_c = " << report.truth.alpha_c
        << "  delta = " << report.truth.delta << "\n\n";

    const ColumnStats* cols[] = {&report.b1, &report.b2, &report.b3,
                                 &report.plug_in_delta, &report.itt_delta};
    const char* names[] = {"b1", "b2", "b3", "plug-in", "itt"};

    out << std::setw(8) << "";
    for (const char* name : names) out << std::setw(12) << name;
    out << "\n";
    out << std::setw(8) << "mean";
    for (const ColumnStats* c : cols) out << std::setw(12) << std::setprecision(6) << c->mean;
    out << "\n";
    out << std::setw(8) << "sd";
    for (const ColumnStats* c : cols) out << std::setw(12) << std::setprecision(6) << c->sd;
    out << "\n";
    out << std::setw(8) << "mcse";
    for (const ColumnStats* c : cols) out << std::setw(12) << std::setprecision(6) << c->mcse;
    out << "\n\n";
    out << "failed fits: " << report.failures << " of " << spec.replications << "\n";
}

void write_report_csv(std::ostream& out, const SimulationReport& report) {
    out.precision(17);
    out << "row,b1,b2,b3,plug_in_delta,itt_delta\n";
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        const ReplicationRow& r = report.rows[i];
        out << i << ',' << r.beta.b1 << ',' << r.beta.b2 << ',' << r.beta.b3
            << ',' << r.plug_in_delta << ',' << r.itt_delta << '\n';
    }
    const ColumnStats* cols[] = {&report.b1, &report.b2, &report.b3,
                                 &report.plug_in_delta, &report.itt_delta};
    out << "mean";
    for (const ColumnStats* c : cols) out << ',' << c->mean;
    out << "\nsd";
    for (const ColumnStats* c : cols) out << ',' << c->sd;
    out << "\nmcse";
    for (const ColumnStats* c : cols) out << ',' << c->mcse;
    out << "\ntruth," << report.truth.alpha_t << ',' << report.truth.alpha_c
        << ',' << report.truth.delta << "\nfailures," << report.failures << '\n';
}

}  // namespace rctodds
