// Command-line surface: simulate randomized experiments on a frozen
// population, fit user data, run the analytic property suite, and evaluate
// pooled odds.
//
// Exit codes: 0 ok, 1 usage, 2 data error, 3 numerical failure
// (separation / rank deficiency), 4 property failure.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rctodds/errors.hpp"
#include "rctodds/estimators.hpp"
#include "rctodds/monte_carlo.hpp"
#include "rctodds/theory.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitProperty = 4;

using namespace rctodds;

std::ostream& open_out(std::ofstream& file, const std::string& path) {
    if (path.empty()) return std::cout;
    file.open(path);
    if (!file) throw Error("cannot open output file: " + path);
    return file;
}

int cmd_simulate(const ScenarioSpec& spec, const std::string& out_path,
                 const std::string& emit_data_path, int emit_rep, bool csv) {
    const SimulationReport report = run_study(spec);

    std::ofstream file;
    std::ostream& out = open_out(file, out_path);
    if (csv) {
        write_report_csv(out, report);
    } else {
        write_report_table(out, report, spec);
    }

    if (!emit_data_path.empty()) {
        Rng pop_rng = Rng::stream(spec.seed, 0);
        const StudyPopulation pop = build_population(spec, pop_rng);
        const FitData data = replication_fit_data(pop, spec, emit_rep);
        std::ofstream data_file(emit_data_path);
        if (!data_file) throw Error("cannot open output file: " + emit_data_path);
        write_fit_csv(data_file, data);
    }
    return kExitOk;
}

int cmd_fit(const std::string& csv_path, Link link) {
    std::ifstream in(csv_path);
    if (!in) {
        std::cerr << "error: cannot open " << csv_path << "\n";
        return kExitData;
    }
    const FitData data = read_fit_csv(in);
    const FitResult fit = fit_mle(data, link);

    std::vector<double> zs;
    std::vector<int> observed;
    Assignment a;
    for (const FitRow& r : data.rows()) {
        zs.push_back(r.z);
        observed.push_back(r.y);
        a.x.push_back(r.x);
        if (r.x) ++a.n_t;
    }
    const PlugInResult plug = plug_in(fit, zs);
    const EstimateTriple hat = itt(observed, a);

    std::cout.precision(6);
    std::cout << "link: " << (link == Link::logit ? "logit" : "probit") << "\n"
              << "beta: " << fit.beta.b1 << " " << fit.beta.b2 << " "
              << fit.beta.b3 << "  (iterations " << fit.iterations
              << ", grad sup-norm " << fit.grad_norm << ")\n"
              << "plug-in: alpha_t = " << plug.triple.alpha_t
              << "  alpha_c = " << plug.triple.alpha_c
              << "  delta = " << plug.triple.delta << "\n";
    if (plug.probit_contrast) {
        std::cout << "probit-scale contrast: " << *plug.probit_contrast << "\n";
    }
    std::cout << "itt: alpha_t = " << hat.alpha_t << "  alpha_c = " << hat.alpha_c
              << "  delta = " << hat.delta << "\n"
              << "coefficient b2: " << coefficient_delta(fit) << "\n";

    // Pooling inequality note: with a nonzero covariate coefficient and a
    // varying covariate, b2 overshoots the plug-in delta away from zero.
    bool z_varies = false;
    for (double z : zs) {
        if (z != zs.front()) {
            z_varies = true;
            break;
        }
    }
    if (link == Link::logit && z_varies && fit.beta.b3 != 0.0) {
        if (fit.beta.b2 > 0.0) {
            std::cout << "note: b2 > plug-in delta ("
                      << fit.beta.b2 - plug.triple.delta
                      << " above); b2 overstates the differential log odds\n";
        } else if (fit.beta.b2 < 0.0) {
            std::cout << "note: b2 < plug-in delta ("
                      << plug.triple.delta - fit.beta.b2
                      << " below); b2 overstates the differential log odds\n";
        }
    }
    return kExitOk;
}

int cmd_check(const TheoryOptions& opts, const std::string& out_path) {
    const std::vector<PropertyResult> results = run_theory_suite(opts);
    if (results.empty()) {
        std::cerr << "error: no properties match filter '" << opts.filter << "'\n";
        return kExitUsage;
    }

    std::ofstream file;
    std::ostream& out = open_out(file, out_path);
    out << "property,name,status,worst_violation\n";
    bool all_pass = true;
    for (const PropertyResult& r : results) {
        out << r.group << ',' << r.name << ','
            << (r.pass ? "pass" : "FAIL") << ',' << r.worst_violation << '\n';
        if (!r.pass) all_pass = false;
    }
    return all_pass ? kExitOk : kExitProperty;
}

int cmd_pooled_odds(const std::string& q_list, double lambda) {
    std::vector<double> q;
    std::stringstream ss(q_list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            q.push_back(std::stod(item));
        } catch (const std::exception&) {
            std::cerr << "error: bad probability '" << item << "'\n";
            return kExitUsage;
        }
    }
    const PooledResult r = pooled_multiplier(q, lambda);
    std::cout.precision(6);
    std::cout << "p_bar = " << r.p_bar << "  q_bar = " << r.q_bar
              << "  pooled = " << r.pooled << "  lambda = " << lambda << "\n";

    const bool constant = std::all_of(q.begin(), q.end(),
                                      [&](double qi) { return qi == q.front(); });
    if (constant) {
        std::cout << "verdict: degenerate: q constant, pooled = lambda\n";
    } else if (lambda > 1.0) {
        std::cout << "verdict: 1 < pooled < lambda\n";
    } else if (lambda < 1.0) {
        std::cout << "verdict: lambda < pooled < 1\n";
    } else {
        std::cout << "verdict: pooled = 1\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulator and estimators for randomized experiments with "
                 "binary outcomes"};
    app.require_subcommand(1);

    // simulate
    ScenarioSpec spec;
    std::string link_name = "logit";
    std::string covariate_name = "v";
    std::string out_path;
    std::string emit_data_path;
    int emit_rep = 0;
    bool csv = false;
    auto* sim = app.add_subcommand("simulate",
                                   "Replicate randomized experiments on a "
                                   "frozen synthetic population");
    sim->add_option("--n", spec.n, "population size")->check(CLI::Range(10, 100000000));
    sim->add_option("--reps", spec.replications, "number of simulated experiments")
        ->check(CLI::PositiveNumber);
    sim->add_option("--pi-t", spec.pi_t, "treated fraction")
        ->check(CLI::Range(1e-9, 1.0 - 1e-9));
    sim->add_option("--seed", spec.seed, "RNG seed");
    sim->add_option("--link", link_name, "logit or probit")
        ->check(CLI::IsMember({"logit", "probit"}));
    sim->add_option("--covariate", covariate_name, "v or u+v")
        ->check(CLI::IsMember({"v", "u+v"}));
    sim->add_option("--cut-c", spec.cut_c, "control cutpoint");
    sim->add_option("--cut-t", spec.cut_t, "treatment cutpoint");
    sim->add_option("--threads", spec.threads, "worker threads (0 = auto)");
    sim->add_option("--out", out_path, "output file (default stdout)");
    sim->add_option("--emit-data", emit_data_path,
                    "also write one replication's dataset as a fit CSV");
    sim->add_option("--emit-rep", emit_rep, "which replication --emit-data writes");
    sim->add_flag("--csv", csv, "machine CSV instead of the summary table");

    // fit
    std::string fit_csv_path;
    std::string fit_link_name = "logit";
    auto* fit = app.add_subcommand("fit", "Fit a CSV with header y,x,z");
    fit->add_option("csv", fit_csv_path, "input CSV")->required();
    fit->add_option("--link", fit_link_name, "logit or probit")
        ->check(CLI::IsMember({"logit", "probit"}));

    // check
    TheoryOptions theory_opts;
    std::string check_out;
    auto* check = app.add_subcommand("check", "Run the analytic property suite");
    check->add_option("--filter", theory_opts.filter, "substring filter on group");
    check->add_option("--grid-max-n", theory_opts.grid_max_n,
                      "largest n in the fourth-moment grid");
    check->add_option("--seed", theory_opts.seed, "suite RNG seed");
    check->add_option("--out", check_out, "output file (default stdout)");

    // pooled-odds
    std::string q_list;
    double lambda = 1.0;
    auto* pooled = app.add_subcommand("pooled-odds",
                                      "Pooled multiplier of averaged probabilities");
    pooled->add_option("--q", q_list, "comma list of probabilities in (0,1)")
        ->required();
    pooled->add_option("--lambda", lambda, "per-subject odds multiplier")
        ->required()
        ->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (sim->parsed()) {
            spec.link = link_name == "probit" ? Link::probit : Link::logit;
            spec.covariate = covariate_name == "u+v" ? CovariateKind::u_plus_v
                                                     : CovariateKind::v;
            return cmd_simulate(spec, out_path, emit_data_path, emit_rep, csv);
        }
        if (fit->parsed()) {
            return cmd_fit(fit_csv_path,
                           fit_link_name == "probit" ? Link::probit : Link::logit);
        }
        if (check->parsed()) {
            return cmd_check(theory_opts, check_out);
        }
        if (pooled->parsed()) {
            return cmd_pooled_odds(q_list, lambda);
        }
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const Separation& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const RankDeficient& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const MaxIterations& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const DegenerateParameter& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const TooManyFailures& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
