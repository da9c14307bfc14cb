#include "heterodispatch/sweep.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "heterodispatch/common.hpp"

namespace hd {

const char* sweep_family_name(SweepFamily f) {
    switch (f) {
        case SweepFamily::Gen: return "gen";
        case SweepFamily::GenSeeded: return "gen-seeded";
        case SweepFamily::Iid: return "iid";
        case SweepFamily::Ind: return "ind";
        case SweepFamily::Det: return "det";
        case SweepFamily::Src: return "src";
        case SweepFamily::Sfc: return "sfc";
        case SweepFamily::Br: return "br";
        case SweepFamily::Uni: return "uni";
        case SweepFamily::SrcJsq: return "src-jsq";
    }
    return "?";
}

SweepFamily sweep_family_from_name(const std::string& name) {
    for (SweepFamily f :
         {SweepFamily::Gen, SweepFamily::GenSeeded, SweepFamily::Iid, SweepFamily::Ind,
          SweepFamily::Det, SweepFamily::Src, SweepFamily::Sfc, SweepFamily::Br,
          SweepFamily::Uni, SweepFamily::SrcJsq}) {
        if (name == sweep_family_name(f)) return f;
    }
    throw std::invalid_argument("unknown sweep family: " + name);
}

namespace {

std::string fmt_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string sweep_csv_header() {
    return "setting_id,s,d,lambda,R1,R2,R3,share1,share2,share3,share4,"
           "family,e_t,runtime_s,feasible,seed";
}

std::string sweep_record_to_csv(const SweepRecord& r) {
    std::ostringstream os;
    os << r.setting_id << ',' << r.s << ',' << r.d << ',' << fmt_double(r.lambda);
    for (int t = 0; t < 3; ++t)
        os << ',' << (t < static_cast<int>(r.R.size()) ? fmt_double(r.R[t]) : "");
    for (int t = 0; t < 4; ++t) {
        os << ',';
        if (t < static_cast<int>(r.shares.size())) os << r.shares[t];
    }
    os << ',' << r.family << ',' << fmt_double(r.e_t) << ',' << fmt_double(r.runtime_s)
       << ',' << (r.feasible ? 1 : 0) << ',' << r.seed;
    return os.str();
}

SweepRecord sweep_record_from_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    cells.push_back(cur);
    require(cells.size() == 16, "sweep CSV: wrong column count");

    SweepRecord r;
    r.setting_id = std::stoi(cells[0]);
    r.s = std::stoi(cells[1]);
    r.d = std::stoi(cells[2]);
    r.lambda = std::stod(cells[3]);
    for (int t = 0; t < 3; ++t)
        if (!cells[4 + t].empty()) r.R.push_back(std::stod(cells[4 + t]));
    for (int t = 0; t < 4; ++t)
        if (!cells[7 + t].empty()) r.shares.push_back(std::stoi(cells[7 + t]));
    r.family = cells[11];
    r.e_t = std::stod(cells[12]);
    r.runtime_s = std::stod(cells[13]);
    r.feasible = cells[14] == "1";
    r.seed = std::stoull(cells[15]);
    return r;
}

std::vector<SweepRecord> read_sweep_csv(const std::string& path) {
    std::vector<SweepRecord> out;
    std::ifstream in(path);
    if (!in.good()) return out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (line.rfind("setting_id,", 0) == 0) continue;  // header (possibly repeated)
        out.push_back(sweep_record_from_csv(line));
    }
    return out;
}

namespace {

SweepRecord solve_task(const ParameterSetting& setting, SweepFamily family,
                       const Budget& budget, std::uint64_t seed) {
    SweepRecord r;
    r.setting_id = setting.id;
    r.s = setting.s;
    r.d = setting.d;
    r.lambda = setting.lambda;
    r.R = setting.R;
    r.shares = setting.shares;
    r.family = sweep_family_name(family);
    r.seed = seed;

    const auto t0 = std::chrono::steady_clock::now();
    try {
        SystemParams params = setting.params();
        OptimizedPolicy policy = [&] {
            switch (family) {
                case SweepFamily::GenSeeded:
                    return optimize_gen_seeded(params, budget, seed);
                case SweepFamily::SrcJsq:
                    return optimize_src_jsq(params, budget);
                case SweepFamily::Br:
                    return optimize(OptimizationProblem(params, QueryingRule{BrRule{}}),
                                    std::nullopt, budget, seed);
                case SweepFamily::Uni:
                    return optimize(OptimizationProblem(params, QueryingRule{UniRule{}}),
                                    std::nullopt, budget, seed);
                case SweepFamily::Gen:
                    return optimize(OptimizationProblem(Family::Gen, params), std::nullopt,
                                    budget, seed);
                case SweepFamily::Iid:
                    return optimize(OptimizationProblem(Family::Iid, params), std::nullopt,
                                    budget, seed);
                case SweepFamily::Ind:
                    return optimize(OptimizationProblem(Family::Ind, params), std::nullopt,
                                    budget, seed);
                case SweepFamily::Det:
                    return optimize(OptimizationProblem(Family::Det, params), std::nullopt,
                                    budget, seed);
                case SweepFamily::Src:
                    return optimize(OptimizationProblem(Family::Src, params), std::nullopt,
                                    budget, seed);
                case SweepFamily::Sfc:
                    return optimize(OptimizationProblem(Family::Sfc, params), std::nullopt,
                                    budget, seed);
            }
            throw std::logic_error("unreachable");
        }();
        r.e_t = policy.objective;
        r.feasible = true;
    } catch (const Infeasible&) {
        r.e_t = std::nan("");
        r.feasible = false;
    } catch (const InstabilityDetected&) {
        r.e_t = std::nan("");
        r.feasible = false;
    }
    r.runtime_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

int resolve_parallelism(int requested) {
    const unsigned hw = std::thread::hardware_concurrency();
    int workers = requested > 0 ? requested : (hw == 0 ? 1 : static_cast<int>(hw));
    // HETERODISPATCH_THREADS caps whatever was requested.
    if (const char* env = std::getenv("HETERODISPATCH_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) workers = std::min(workers, v);
    }
    return workers;
}

}  // namespace

std::vector<SweepRecord> run_sweep(const std::vector<ParameterSetting>& settings,
                                   const SweepOptions& opts) {
    require(!opts.families.empty(), "run_sweep: no families selected");

    std::set<std::pair<int, std::string>> done;
    std::vector<SweepRecord> records;
    if (!opts.out_path.empty()) {
        records = read_sweep_csv(opts.out_path);
        for (const SweepRecord& r : records) done.insert({r.setting_id, r.family});
    }

    struct Task {
        const ParameterSetting* setting;
        SweepFamily family;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (const ParameterSetting& setting : settings) {
        for (SweepFamily family : opts.families) {
            if (done.count({setting.id, sweep_family_name(family)})) continue;
            // Per-task seed: stable under resume and reordering.
            const std::uint64_t seed =
                opts.rng_seed * 1000003ULL + static_cast<std::uint64_t>(setting.id) * 13ULL +
                static_cast<std::uint64_t>(family);
            tasks.push_back({&setting, family, seed});
        }
    }

    std::ofstream out;
    if (!opts.out_path.empty()) {
        const bool fresh = records.empty();
        out.open(opts.out_path, std::ios::app);
        require(out.good(), "run_sweep: cannot open " + opts.out_path);
        if (fresh) out << "# heterodispatch-sweep-v1\n" << sweep_csv_header() << '\n';
    }

    const int workers =
        std::max(1, std::min<int>(resolve_parallelism(opts.parallelism),
                                  static_cast<int>(tasks.size())));
    std::vector<SweepRecord> results(tasks.size());
    std::vector<char> ready(tasks.size(), 0);
    std::mutex mu;
    std::size_t next_task = 0, next_write = 0;

    auto worker = [&] {
        while (true) {
            std::size_t idx;
            {
                std::lock_guard<std::mutex> lock(mu);
                if (next_task >= tasks.size()) return;
                idx = next_task++;
            }
            SweepRecord r = solve_task(*tasks[idx].setting, tasks[idx].family,
                                       opts.budget, tasks[idx].seed);
            {
                std::lock_guard<std::mutex> lock(mu);
                results[idx] = std::move(r);
                ready[idx] = 1;
                // Commit the ready prefix so interruption leaves a clean resume point.
                while (next_write < tasks.size() && ready[next_write]) {
                    if (out.is_open()) out << sweep_record_to_csv(results[next_write]) << '\n';
                    ++next_write;
                }
                if (out.is_open()) out.flush();
            }
        }
    };

    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();

    for (SweepRecord& r : results) records.push_back(std::move(r));
    std::stable_sort(records.begin(), records.end(), [](const SweepRecord& a, const SweepRecord& b) {
        if (a.setting_id != b.setting_id) return a.setting_id < b.setting_id;
        return a.family < b.family;
    });
    return records;
}

namespace {

double median_of(std::vector<double> v) {
    if (v.empty()) return std::nan("");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::vector<Aggregate> aggregate_records(const std::vector<SweepRecord>& records) {
    std::map<std::string, std::vector<const SweepRecord*>> by_family;
    for (const SweepRecord& r : records) by_family[r.family].push_back(&r);

    std::vector<Aggregate> out;
    for (const auto& [family, rows] : by_family) {
        Aggregate a;
        a.family = family;
        a.rows = static_cast<int>(rows.size());
        std::vector<double> ets, runtimes;
        for (const SweepRecord* r : rows) {
            runtimes.push_back(r->runtime_s);
            if (r->feasible) {
                ets.push_back(r->e_t);
                ++a.feasible_rows;
            }
        }
        double sum = 0;
        for (double v : ets) sum += v;
        a.mean_et = ets.empty() ? std::nan("") : sum / ets.size();
        a.median_et = median_of(ets);
        sum = 0;
        for (double v : runtimes) sum += v;
        a.mean_runtime = runtimes.empty() ? std::nan("") : sum / runtimes.size();
        a.median_runtime = median_of(runtimes);
        out.push_back(std::move(a));
    }
    return out;
}

}  // namespace hd
