// Command-line front end: analyze a policy file, optimize a family, simulate,
// sweep the parameter-setting generator, and print problem-size tables.
//
// Exit codes: 0 success, 1 usage/config error, 2 infeasible or non-convergent.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "heterodispatch/policy_io.hpp"
#include "heterodispatch/simulator.hpp"
#include "heterodispatch/sweep.hpp"

namespace {

using nlohmann::json;

int parse_range(const std::string& text, std::vector<int>& out) {
    // "2..5" or "3"
    auto dots = text.find("..");
    try {
        if (dots == std::string::npos) {
            out.push_back(std::stoi(text));
        } else {
            int lo = std::stoi(text.substr(0, dots));
            int hi = std::stoi(text.substr(dots + 2));
            for (int v = lo; v <= hi; ++v) out.push_back(v);
        }
    } catch (const std::exception&) {
        return 1;
    }
    return 0;
}

hd::SystemParams params_from_options(int s, int d, double lambda,
                                     const std::vector<double>& mu,
                                     const std::vector<double>& q,
                                     const std::vector<double>& R,
                                     const std::vector<int>& shares) {
    if (!R.empty() || !shares.empty()) {
        std::vector<double> mu2, q2;
        hd::derive_mu_q(R, shares, mu2, q2);
        return hd::SystemParams::make(s, d, lambda, mu2, q2);
    }
    return hd::SystemParams::make(s, d, lambda, mu, q);
}

int cmd_sizes(const std::string& s_range, const std::string& d_range,
              const std::string& format) {
    std::vector<int> ss, ds;
    if (parse_range(s_range, ss) || parse_range(d_range, ds)) {
        std::cerr << "bad range\n";
        return 1;
    }
    const std::vector<hd::Family> families = {
        hd::Family::Gen, hd::Family::Ind, hd::Family::Iid, hd::Family::Det,
        hd::Family::Src, hd::Family::Sfc, hd::Family::FixedQR};

    if (format == "json") {
        json rows = json::array();
        for (int s : ss)
            for (int d : ds)
                for (hd::Family f : families) {
                    const hd::ProblemSizeReport r = hd::problem_size(f, s, d);
                    rows.push_back({{"family", hd::family_name(f)},
                                    {"s", s},
                                    {"d", d},
                                    {"var", r.max_size.vars},
                                    {"lec", r.max_size.lec},
                                    {"nec", r.max_size.nec},
                                    {"dim", r.max_size.dim},
                                    {"avg_var", r.avg_size.vars},
                                    {"avg_lec", r.avg_size.lec},
                                    {"avg_nec", r.avg_size.nec},
                                    {"avg_dim", r.avg_size.dim},
                                    {"sp", r.subproblems}});
                }
        std::cout << rows.dump(2) << "\n";
        return 0;
    }
    std::cout << "family,s,d,var,lec,nec,dim,avg_var,avg_lec,avg_nec,avg_dim,sp\n";
    for (int s : ss)
        for (int d : ds)
            for (hd::Family f : families) {
                const hd::ProblemSizeReport r = hd::problem_size(f, s, d);
                std::printf("%s,%d,%d,%lld,%lld,%lld,%lld,%lld,%lld,%lld,%lld,%lld\n",
                            hd::family_name(f), s, d,
                            static_cast<long long>(r.max_size.vars),
                            static_cast<long long>(r.max_size.lec),
                            static_cast<long long>(r.max_size.nec),
                            static_cast<long long>(r.max_size.dim),
                            static_cast<long long>(r.avg_size.vars),
                            static_cast<long long>(r.avg_size.lec),
                            static_cast<long long>(r.avg_size.nec),
                            static_cast<long long>(r.avg_size.dim),
                            static_cast<long long>(r.subproblems));
            }
    return 0;
}

int cmd_settings(const std::string& grid_name, const std::string& format) {
    const hd::LambdaGrid grid =
        grid_name == "fine" ? hd::LambdaGrid::Fine : hd::LambdaGrid::Coarse;
    const auto settings = hd::generate_settings(grid);
    if (format == "json") {
        json rows = json::array();
        for (const auto& ps : settings)
            rows.push_back({{"id", ps.id},
                            {"s", ps.s},
                            {"d", ps.d},
                            {"lambda", ps.lambda},
                            {"R", ps.R},
                            {"shares", ps.shares},
                            {"mu", ps.mu},
                            {"q", ps.q}});
        std::cout << rows.dump() << "\n";
        return 0;
    }
    std::cout << "id,s,d,lambda,R1,R2,R3,share1,share2,share3,share4\n";
    for (const auto& ps : settings) {
        std::printf("%d,%d,%d,%.17g", ps.id, ps.s, ps.d, ps.lambda);
        for (int t = 0; t < 3; ++t)
            t < static_cast<int>(ps.R.size()) ? std::printf(",%.17g", ps.R[t])
                                              : std::printf(",");
        for (int t = 0; t < 4; ++t)
            t < static_cast<int>(ps.shares.size()) ? std::printf(",%d", ps.shares[t])
                                                   : std::printf(",");
        std::printf("\n");
    }
    return 0;
}

void print_solution(const hd::SystemParams& params, const hd::RateSolution& sol,
                    double mean_t, const std::string& format) {
    if (format == "json") {
        json j = {{"mean_T", mean_t},
                  {"lambda_idle", sol.lambda_idle},
                  {"lambda_busy", sol.lambda_busy},
                  {"rho", sol.rho},
                  {"residual", sol.residual},
                  {"iterations", sol.iterations},
                  {"converged", sol.converged}};
        std::cout << j.dump(2) << "\n";
        return;
    }
    std::printf("E[T] = %.9f\n", mean_t);
    for (int i = 0; i < params.s(); ++i)
        std::printf("class %d: lambda_idle=%.9f lambda_busy=%.9f rho=%.9f\n", i + 1,
                    sol.lambda_idle[i], sol.lambda_busy[i], sol.rho[i]);
    std::printf("residual=%.3e iterations=%d converged=%d\n", sol.residual,
                sol.iterations, sol.converged ? 1 : 0);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"heterodispatch: power-of-d dispatching for heterogeneous servers"};
    app.require_subcommand(1);
    app.fallthrough();  // allow --format after the subcommand name

    std::string format = "text";
    app.add_option("--format", format, "Output format: text, csv or json")
        ->check(CLI::IsMember({"text", "csv", "json"}));

    // sizes
    auto* sizes = app.add_subcommand("sizes", "Optimization problem size table");
    std::string s_range = "2..5", d_range = "2..5";
    sizes->add_option("--s", s_range, "Class count or range, e.g. 2..5");
    sizes->add_option("--d", d_range, "Query size or range");

    // settings
    auto* settings_cmd = app.add_subcommand("settings", "Emit the parameter-setting design");
    std::string grid = "coarse";
    settings_cmd->add_option("--grid", grid, "coarse (0.05..0.95) or fine (0.02..0.98)")
        ->check(CLI::IsMember({"coarse", "fine"}));

    // analyze
    auto* analyze = app.add_subcommand("analyze", "Mean response time of a policy file");
    std::string policy_path;
    std::string service_name = "exp";
    double c2 = 1.0;
    analyze->add_option("--policy", policy_path, "Policy JSON file")->required();
    analyze->add_option("--service", service_name, "exp or fcfs")
        ->check(CLI::IsMember({"exp", "fcfs"}));
    analyze->add_option("--c2", c2, "Squared coefficient of variation for fcfs");

    // optimize
    auto* opt = app.add_subcommand("optimize", "Optimize a querying family");
    std::string family_name = "gen-seeded", out_path;
    int opt_s = 2, opt_d = 2;
    double opt_lambda = 0.5;
    std::vector<double> opt_mu, opt_q, opt_R;
    std::vector<int> opt_shares;
    std::uint64_t opt_seed = 0;
    int opt_starts = 8, opt_iters = 1200;
    opt->add_option("--family", family_name,
                    "gen, gen-seeded, iid, ind, det, src, sfc, br, uni, src-jsq");
    opt->add_option("--s", opt_s);
    opt->add_option("--d", opt_d);
    opt->add_option("--lambda", opt_lambda);
    opt->add_option("--mu", opt_mu, "Service rates, fastest first")->expected(-1);
    opt->add_option("--q", opt_q, "Class fractions")->expected(-1);
    opt->add_option("--R", opt_R, "Speed ratios (alternative to --mu/--q)")->expected(-1);
    opt->add_option("--shares", opt_shares, "Integer shares out of 6")->expected(-1);
    opt->add_option("--seed", opt_seed);
    opt->add_option("--starts", opt_starts);
    opt->add_option("--iters", opt_iters);
    opt->add_option("--out", out_path, "Write the optimized policy JSON here");

    // simulate
    auto* sim = app.add_subcommand("simulate", "Discrete-event simulation of a policy");
    std::string sim_policy, sim_assign = "cid", sim_service = "exp";
    int sim_k = 3000, sim_seeds = 1;
    std::int64_t sim_arrivals = 1'000'000, sim_warmup = -1;
    std::uint64_t sim_seed = 0;
    sim->add_option("--policy", sim_policy, "Policy JSON file")->required();
    sim->add_option("--assign", sim_assign, "cid, jsq, jsq*, sed, sed*, sew, sew*");
    sim->add_option("--service", sim_service, "exp or hyperexp")
        ->check(CLI::IsMember({"exp", "hyperexp"}));
    sim->add_option("--k", sim_k, "Server count");
    sim->add_option("--arrivals", sim_arrivals, "Arrivals to simulate");
    sim->add_option("--warmup", sim_warmup, "Arrivals to discard (default 10%)");
    sim->add_option("--seed", sim_seed);
    sim->add_option("--seeds", sim_seeds,
                    "Replications (seed..seed+N-1); the point is flagged for discard "
                    "when the run-to-run sd exceeds 1% of the mean");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Optimize families across generated settings");
    std::string sweep_out = "sweep.csv", sweep_families = "iid,src,br", sweep_grid = "coarse";
    int sweep_limit = 0, sweep_stride = 1, sweep_parallelism = 0;
    std::uint64_t sweep_seed = 0;
    int sweep_starts = 4, sweep_iters = 600;
    sweep->add_option("--out", sweep_out, "Output CSV (resumable)");
    sweep->add_option("--families", sweep_families, "Comma-separated family list");
    sweep->add_option("--grid", sweep_grid)->check(CLI::IsMember({"coarse", "fine"}));
    sweep->add_option("--limit", sweep_limit, "Only the first N settings (0 = all)");
    sweep->add_option("--stride", sweep_stride, "Take every Nth setting");
    sweep->add_option("--parallelism", sweep_parallelism,
                      "Worker threads (default: HETERODISPATCH_THREADS or all cores)");
    sweep->add_option("--seed", sweep_seed);
    sweep->add_option("--starts", sweep_starts);
    sweep->add_option("--iters", sweep_iters);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;  // usage error
    }

    try {
        if (sizes->parsed())
            return cmd_sizes(s_range, d_range, format == "text" ? "csv" : format);
        if (settings_cmd->parsed())
            return cmd_settings(grid, format == "text" ? "csv" : format);

        if (analyze->parsed()) {
            hd::PolicyDocument doc = hd::load_policy(policy_path);
            hd::MixSpace space(doc.params.s(), doc.params.d());
            hd::QueryDistribution pdist = hd::lower(doc.rule, doc.params, space);
            hd::RateSolution sol;
            try {
                sol = hd::solve_fixed_point(doc.params, space, pdist, doc.assign);
            } catch (const hd::InstabilityDetected& e) {
                std::cerr << "infeasible: " << e.what() << "\n";
                return 2;
            }
            if (!sol.converged) {
                std::cerr << "fixed point did not converge (residual " << sol.residual
                          << ")\n";
                return 2;
            }
            const hd::ServiceSpec service = service_name == "fcfs"
                                                ? hd::ServiceSpec::general_fcfs(c2)
                                                : hd::ServiceSpec::exponential();
            print_solution(doc.params, sol, hd::mean_response_time(doc.params, sol, service),
                           format);
            return 0;
        }

        if (opt->parsed()) {
            hd::SystemParams params =
                params_from_options(opt_s, opt_d, opt_lambda, opt_mu, opt_q, opt_R, opt_shares);
            hd::Budget budget{opt_starts, opt_iters};
            hd::OptimizedPolicy policy = [&] {
                if (family_name == "gen-seeded")
                    return hd::optimize_gen_seeded(params, budget, opt_seed);
                if (family_name == "src-jsq") return hd::optimize_src_jsq(params, budget);
                if (family_name == "br")
                    return hd::optimize(hd::OptimizationProblem(params, hd::QueryingRule{hd::BrRule{}}),
                                        std::nullopt, budget, opt_seed);
                if (family_name == "uni")
                    return hd::optimize(hd::OptimizationProblem(params, hd::QueryingRule{hd::UniRule{}}),
                                        std::nullopt, budget, opt_seed);
                return hd::optimize(
                    hd::OptimizationProblem(hd::family_from_name(family_name), params),
                    std::nullopt, budget, opt_seed);
            }();
            if (format == "json") {
                json j = {{"family", family_name},
                          {"rule_kind", hd::rule_kind(policy.rule)},
                          {"objective", policy.objective},
                          {"starts", policy.report.starts},
                          {"best_start", policy.report.best_start},
                          {"subproblems_solved", policy.report.subproblems_solved},
                          {"runtime_s", policy.report.runtime_s},
                          {"cld_jsq", policy.cld_jsq}};
                std::cout << j.dump(2) << "\n";
            } else {
                std::printf(
                    "family=%s objective=%.9f starts=%d best_start=%d runtime=%.3fs\n",
                    family_name.c_str(), policy.objective, policy.report.starts,
                    policy.report.best_start, policy.report.runtime_s);
            }
            if (!out_path.empty()) {
                hd::PolicyDocument doc{params, policy.rule, policy.assign, opt_seed};
                hd::save_policy(doc, out_path);
            }
            return 0;
        }

        if (sim->parsed()) {
            hd::PolicyDocument doc = hd::load_policy(sim_policy);
            hd::CldRule rule = hd::cld_rule_from_name(sim_assign);
            if (rule.kind == hd::CldRule::Kind::CidTable) rule.table = doc.assign;
            hd::SimConfig cfg;
            cfg.k = sim_k;
            cfg.horizon = sim_arrivals;
            cfg.warmup = sim_warmup;
            cfg.service.kind = sim_service == "hyperexp"
                                   ? hd::SimService::Kind::Hyperexponential
                                   : hd::SimService::Kind::Exponential;
            std::vector<hd::SimResult> runs;
            for (int r = 0; r < std::max(1, sim_seeds); ++r) {
                cfg.rng_seed = sim_seed + static_cast<std::uint64_t>(r);
                runs.push_back(hd::simulate(doc.params, doc.rule, rule, cfg));
            }
            double mean = 0;
            for (const auto& r : runs) mean += r.mean_T;
            mean /= runs.size();
            double var = 0;
            for (const auto& r : runs) var += (r.mean_T - mean) * (r.mean_T - mean);
            const double run_sd = runs.size() > 1 ? std::sqrt(var / (runs.size() - 1)) : 0.0;
            const bool discard = runs.size() > 1 && run_sd > 0.01 * mean;

            const hd::SimResult& res = runs.front();
            if (format == "json") {
                json j = {{"mean_T", mean},
                          {"stderr", res.stderr_T},
                          {"run_to_run_sd", run_sd},
                          {"discard", discard},
                          {"per_class_rho", res.per_class_rho},
                          {"independence_corr", res.independence_corr},
                          {"measured", res.measured},
                          {"seed", sim_seed},
                          {"seeds", static_cast<int>(runs.size())},
                          {"class_counts", res.class_counts}};
                std::cout << j.dump(2) << "\n";
            } else if (format == "csv") {
                std::printf("k,arrivals,warmup,assign,service,seed,seeds,mean_T,stderr,"
                            "run_to_run_sd,discard\n");
                std::printf("%d,%lld,%lld,%s,%s,%llu,%zu,%.9g,%.9g,%.9g,%d\n", sim_k,
                            static_cast<long long>(sim_arrivals),
                            static_cast<long long>(cfg.effective_warmup()),
                            sim_assign.c_str(), sim_service.c_str(),
                            static_cast<unsigned long long>(sim_seed), runs.size(), mean,
                            res.stderr_T, run_sd, discard ? 1 : 0);
            } else {
                std::printf("mean_T=%.6f stderr=%.6f run_to_run_sd=%.6f%s measured=%lld "
                            "seed=%llu seeds=%zu\n",
                            mean, res.stderr_T, run_sd, discard ? " DISCARD(>1%)" : "",
                            static_cast<long long>(res.measured),
                            static_cast<unsigned long long>(sim_seed), runs.size());
                for (int i = 0; i < doc.params.s(); ++i)
                    std::printf("class %d: k_i=%d rho=%.6f\n", i + 1, res.class_counts[i],
                                res.per_class_rho[i]);
                std::printf("independence_corr=%.6f\n", res.independence_corr);
            }
            return 0;
        }

        if (sweep->parsed()) {
            auto all = hd::generate_settings(sweep_grid == "fine" ? hd::LambdaGrid::Fine
                                                                  : hd::LambdaGrid::Coarse);
            std::vector<hd::ParameterSetting> chosen;
            for (std::size_t t = 0; t < all.size(); t += sweep_stride) {
                chosen.push_back(all[t]);
                if (sweep_limit > 0 && static_cast<int>(chosen.size()) >= sweep_limit) break;
            }
            hd::SweepOptions so;
            std::string cur;
            for (char ch : sweep_families + ",") {
                if (ch == ',') {
                    if (!cur.empty()) so.families.push_back(hd::sweep_family_from_name(cur));
                    cur.clear();
                } else {
                    cur.push_back(ch);
                }
            }
            so.budget = hd::Budget{sweep_starts, sweep_iters};
            so.parallelism = sweep_parallelism;
            so.out_path = sweep_out;
            so.rng_seed = sweep_seed;
            const auto records = hd::run_sweep(chosen, so);
            for (const hd::Aggregate& a : hd::aggregate_records(records)) {
                std::printf(
                    "%s: rows=%d feasible=%d mean_E[T]=%.6f median_E[T]=%.6f "
                    "mean_runtime=%.3fs median_runtime=%.3fs\n",
                    a.family.c_str(), a.rows, a.feasible_rows, a.mean_et, a.median_et,
                    a.mean_runtime, a.median_runtime);
            }
            return 0;
        }
    } catch (const hd::Infeasible& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return 2;
    } catch (const hd::InstabilityDetected& e) {
        std::cerr << "unstable: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
