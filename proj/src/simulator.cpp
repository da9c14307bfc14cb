#include "heterodispatch/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <queue>

#include "heterodispatch/common.hpp"

namespace hd {

CldRule cld_rule_from_name(const std::string& name) {
    if (name == "jsq") return CldRule::jsq();
    if (name == "jsq*" || name == "jsq-star") return CldRule::jsq_star();
    if (name == "sed") return CldRule::sed();
    if (name == "sed*" || name == "sed-star") return CldRule::sed_star();
    if (name == "sew") return CldRule::sew();
    if (name == "sew*" || name == "sew-star") return CldRule::sew_star();
    if (name == "cid") return CldRule{CldRule::Kind::CidTable, std::nullopt};
    throw std::invalid_argument("unknown assignment rule: " + name);
}

const char* cld_rule_name(CldRule::Kind kind) {
    switch (kind) {
        case CldRule::Kind::Jsq: return "jsq";
        case CldRule::Kind::JsqStar: return "jsq*";
        case CldRule::Kind::Sed: return "sed";
        case CldRule::Kind::SedStar: return "sed*";
        case CldRule::Kind::Sew: return "sew";
        case CldRule::Kind::SewStar: return "sew*";
        case CldRule::Kind::CidTable: return "cid";
    }
    return "?";
}

std::vector<int> apportion_servers(int k, const std::vector<double>& q) {
    const int s = static_cast<int>(q.size());
    std::vector<int> counts(s);
    std::vector<std::pair<double, int>> rema(s);
    int assigned = 0;
    for (int i = 0; i < s; ++i) {
        const double exact = k * q[i];
        counts[i] = static_cast<int>(std::floor(exact));
        rema[i] = {exact - counts[i], i};
        assigned += counts[i];
    }
    std::stable_sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) {
        return a.first > b.first;  // largest remainder first; ties keep class order
    });
    for (int t = 0; t < k - assigned; ++t) counts[rema[t].second] += 1;
    return counts;
}

namespace {

// Per-class summary of a query: the shortest queue among the class's queried
// servers and how many of them sit at that length.
struct ClassView {
    int n_star = -1;  // -1: class not queried
    int count_at_star = 0;
    int queried = 0;
    int idle = 0;
};

std::vector<ClassView> summarize(const SystemParams& params,
                                 const std::vector<QueriedServer>& queried) {
    std::vector<ClassView> views(params.s());
    for (const QueriedServer& qs : queried) {
        ClassView& v = views[qs.class_index];
        v.queried += 1;
        if (qs.queue_len == 0) v.idle += 1;
        if (v.n_star < 0 || qs.queue_len < v.n_star) {
            v.n_star = qs.queue_len;
            v.count_at_star = 1;
        } else if (qs.queue_len == v.n_star) {
            v.count_at_star += 1;
        }
    }
    return views;
}

int nth_at(const std::vector<QueriedServer>& queried, int class_index, int len, int nth) {
    for (const QueriedServer& qs : queried) {
        if (qs.class_index == class_index && qs.queue_len == len) {
            if (nth == 0) return qs.server;
            --nth;
        }
    }
    throw std::logic_error("nth_at: inconsistent query summary");
}

int pick_uniform_at(const std::vector<QueriedServer>& queried, int class_index, int len,
                    int count, SplitMix64& rng) {
    const int nth = count == 1 ? 0 : static_cast<int>(rng.uniform_int(count));
    return nth_at(queried, class_index, len, nth);
}

// Score-based rules: each class is represented by its shortest-queue servers;
// the winner class minimizes the score, uniformly over member servers (plain
// variants) or with ties broken toward the fastest class (star variants).
int assign_by_score(const SystemParams& params, const std::vector<QueriedServer>& queried,
                    const std::vector<ClassView>& views, bool star,
                    const std::function<double(int, int)>& score, SplitMix64& rng) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < params.s(); ++i) {
        if (views[i].n_star < 0) continue;
        best = std::min(best, score(i, views[i].n_star));
    }
    if (star) {
        for (int i = 0; i < params.s(); ++i) {
            if (views[i].n_star < 0) continue;
            if (score(i, views[i].n_star) <= best)
                return pick_uniform_at(queried, i, views[i].n_star, views[i].count_at_star, rng);
        }
        throw std::logic_error("assign_by_score: no minimizer");
    }
    int total = 0;
    for (int i = 0; i < params.s(); ++i) {
        if (views[i].n_star < 0) continue;
        if (score(i, views[i].n_star) <= best) total += views[i].count_at_star;
    }
    std::uint64_t target = total == 1 ? 0 : rng.uniform_int(total);
    for (int i = 0; i < params.s(); ++i) {
        if (views[i].n_star < 0) continue;
        if (score(i, views[i].n_star) > best) continue;
        if (target < static_cast<std::uint64_t>(views[i].count_at_star))
            return nth_at(queried, i, views[i].n_star, static_cast<int>(target));
        target -= views[i].count_at_star;
    }
    throw std::logic_error("assign_by_score: fell through");
}

}  // namespace

int cld_assign(const CldRule& rule, const SystemParams& params,
               const std::vector<QueriedServer>& queried, SplitMix64& rng) {
    require(!queried.empty(), "cld_assign: empty query");
    const std::vector<ClassView> views = summarize(params, queried);

    switch (rule.kind) {
        case CldRule::Kind::Jsq:
        case CldRule::Kind::JsqStar:
            return assign_by_score(
                params, queried, views, rule.kind == CldRule::Kind::JsqStar,
                [](int, int n) { return static_cast<double>(n); }, rng);
        case CldRule::Kind::Sed:
        case CldRule::Kind::SedStar:
            return assign_by_score(
                params, queried, views, rule.kind == CldRule::Kind::SedStar,
                [&](int i, int n) { return (n + 1) / params.mu(i); }, rng);
        case CldRule::Kind::Sew:
        case CldRule::Kind::SewStar:
            return assign_by_score(
                params, queried, views, rule.kind == CldRule::Kind::SewStar,
                [&](int i, int n) { return n / params.mu(i); }, rng);
        case CldRule::Kind::CidTable: {
            require(rule.table.has_value(), "CidTable rule without a table");
            const int s = params.s();
            std::vector<int> counts(s, 0);
            for (const QueriedServer& qs : queried) counts[qs.class_index] += 1;
            QueryMix mix(counts);

            int j = s;  // fastest idle class, s = none idle
            for (int i = 0; i < s; ++i) {
                if (views[i].idle > 0) {
                    j = i;
                    break;
                }
            }
            // Draw the target class by the table's weights over allowed rows.
            double u = rng.uniform(), acc = 0;
            int cls = -1;
            for (int i = 0; i <= j && i < s; ++i) {
                const double a = rule.table->lookup(i, j, mix);
                acc += a;
                if (u < acc) {
                    cls = i;
                    break;
                }
            }
            if (cls < 0) {
                // Guard against round-off on the row sum: last allowed class.
                for (int i = std::min(j, s - 1); i >= 0; --i) {
                    if (rule.table->lookup(i, j, mix) > 0) {
                        cls = i;
                        break;
                    }
                }
                require(cls >= 0, "CidTable: no allowed class for this query state");
            }
            // Idle member if the class has one (only possible when cls == j),
            // otherwise uniform among its (busy) queried members.
            if (views[cls].idle > 0)
                return pick_uniform_at(queried, cls, 0, views[cls].idle, rng);
            std::uint64_t target =
                views[cls].queried == 1 ? 0 : rng.uniform_int(views[cls].queried);
            for (const QueriedServer& qs : queried) {
                if (qs.class_index != cls) continue;
                if (target == 0) return qs.server;
                --target;
            }
            throw std::logic_error("CidTable: no member of the chosen class");
        }
    }
    throw std::logic_error("cld_assign: unreachable");
}

namespace {

struct Departure {
    double time = 0;
    std::int64_t seq = 0;  // FIFO tie order
    int server = 0;

    bool operator>(const Departure& o) const {
        if (time != o.time) return time > o.time;
        return seq > o.seq;
    }
};

struct Job {
    double arrival_time = 0;
    bool measured = false;
};

double sample_service(const SimService& service, double mu, SplitMix64& rng) {
    if (service.kind == SimService::Kind::Exponential) return rng.exponential(mu);
    const double rate = (rng.next() & 1ULL) ? 2.5 * mu : 0.625 * mu;
    return rng.exponential(rate);
}

}  // namespace

SimResult simulate(const SystemParams& params, const QueryingRule& rule,
                   const CldRule& assign, const SimConfig& cfg) {
    require(cfg.k >= 1, "simulate: k >= 1");
    require(cfg.horizon > 0, "simulate: horizon > 0");
    const std::int64_t warmup = cfg.effective_warmup();
    require(warmup < cfg.horizon, "simulate: warmup must be below horizon");

    const int s = params.s();
    const MixSpace space(s, params.d());
    const QueryDistribution pdist = lower(rule, params, space);
    std::vector<double> mix_cdf(pdist.size());
    double acc = 0;
    for (int m = 0; m < pdist.size(); ++m) {
        acc += pdist[m];
        mix_cdf[m] = acc;
    }

    const std::vector<int> class_counts = apportion_servers(cfg.k, params.q());
    for (int i = 0; i < s; ++i) {
        require(class_counts[i] >= params.d(),
                "simulate: class " + std::to_string(i + 1) +
                    " has fewer servers than the query size");
    }
    std::vector<int> class_offset(s + 1, 0);
    for (int i = 0; i < s; ++i) class_offset[i + 1] = class_offset[i] + class_counts[i];

    std::vector<int> server_class(cfg.k);
    for (int i = 0; i < s; ++i)
        for (int t = class_offset[i]; t < class_offset[i + 1]; ++t) server_class[t] = i;

    std::vector<std::deque<Job>> queues(cfg.k);
    std::priority_queue<Departure, std::vector<Departure>, std::greater<Departure>> departures;
    SplitMix64 rng(cfg.rng_seed, /*stream=*/0x51);

    // Busy-time accounting for per-class utilizations. The window runs from
    // the warmup arrival to the final arrival, so the drain phase after the
    // last arrival does not dilute the utilization estimates.
    std::vector<std::int64_t> busy_servers(s, 0);
    std::vector<double> busy_time(s, 0.0);
    double window_start = -1, window_end = -1, last_event_time = 0;

    // Pairwise busy-indicator diagnostics: up to 200 random server pairs per
    // class, sampled at a thinned subset of departure epochs. Covariance and
    // variance are taken within each snapshot (cross-sectionally), so slow
    // common fluctuations of the occupancy level do not masquerade as
    // dependence between servers.
    std::vector<std::vector<std::pair<int, int>>> pairs(s);
    for (int i = 0; i < s; ++i) {
        const int n = class_counts[i];
        if (n < 2) continue;
        for (int t = 0; t < 200; ++t) {
            int a = class_offset[i] + static_cast<int>(rng.uniform_int(n));
            int b = class_offset[i] + static_cast<int>(rng.uniform_int(n));
            if (a != b) pairs[i].emplace_back(a, b);
        }
    }
    bool any_pairs = false;
    for (int i = 0; i < s; ++i) any_pairs = any_pairs || !pairs[i].empty();
    const std::int64_t corr_stride = std::max<std::int64_t>(1, cfg.horizon / 4096);
    double corr_num = 0, corr_den = 0;

    const double arrival_rate = params.lambda() * cfg.k;
    double next_arrival = rng.exponential(arrival_rate);
    std::int64_t arrivals = 0, departures_seen = 0, seq = 0;

    // Batch means over the measured arrivals.
    const int n_batches = 32;
    const std::int64_t measured_total = cfg.horizon - warmup;
    const std::int64_t batch_size = std::max<std::int64_t>(1, measured_total / n_batches);
    std::vector<double> batch_sum;
    batch_sum.reserve(n_batches + 2);
    double cur_batch_sum = 0;
    std::int64_t cur_batch_count = 0, measured_done = 0;
    double response_sum = 0;

    std::vector<QueriedServer> queried;
    queried.reserve(params.d());
    std::vector<int> scratch;

    auto advance_clock = [&](double t) {
        if (window_start >= 0) {
            const double hi = window_end >= 0 ? std::min(t, window_end) : t;
            const double dt = hi - last_event_time;
            if (dt > 0)
                for (int i = 0; i < s; ++i) busy_time[i] += dt * busy_servers[i];
        }
        last_event_time = t;
    };

    while (arrivals < cfg.horizon || departures_seen < arrivals) {
        const bool take_arrival =
            arrivals < cfg.horizon &&
            (departures.empty() || next_arrival <= departures.top().time);

        if (take_arrival) {
            const double now = next_arrival;
            advance_clock(now);
            if (arrivals == warmup && window_start < 0) window_start = now;

            // Sample the query: a mix, then distinct servers within classes.
            const double u = rng.uniform();
            int m = static_cast<int>(std::lower_bound(mix_cdf.begin(), mix_cdf.end(), u) -
                                     mix_cdf.begin());
            if (m >= space.size()) m = space.size() - 1;
            const QueryMix& mix = space[m];

            queried.clear();
            for (int i = 0; i < s; ++i) {
                const int need = mix[i];
                if (need == 0) continue;
                scratch.clear();
                while (static_cast<int>(scratch.size()) < need) {
                    int srv = class_offset[i] + static_cast<int>(rng.uniform_int(class_counts[i]));
                    if (std::find(scratch.begin(), scratch.end(), srv) == scratch.end())
                        scratch.push_back(srv);
                }
                for (int srv : scratch)
                    queried.push_back(
                        {srv, i, static_cast<int>(queues[srv].size())});
            }

            const int target = cld_assign(assign, params, queried, rng);
            auto& q = queues[target];
            if (q.size() > 1'000'000)
                throw std::runtime_error("simulate: queue length exceeded 1e6 (unstable?)");
            q.push_back({now, arrivals >= warmup});
            if (q.size() == 1) {
                busy_servers[server_class[target]] += 1;
                departures.push(
                    {now + sample_service(cfg.service, params.mu(server_class[target]), rng),
                     seq++, target});
            }
            ++arrivals;
            if (arrivals == cfg.horizon) window_end = now;
            next_arrival = now + rng.exponential(arrival_rate);
        } else {
            const Departure ev = departures.top();
            departures.pop();
            advance_clock(ev.time);
            ++departures_seen;

            auto& q = queues[ev.server];
            const Job job = q.front();
            q.pop_front();
            if (job.measured) {
                const double resp = ev.time - job.arrival_time;
                response_sum += resp;
                cur_batch_sum += resp;
                ++measured_done;
                if (++cur_batch_count == batch_size) {
                    batch_sum.push_back(cur_batch_sum / cur_batch_count);
                    cur_batch_sum = 0;
                    cur_batch_count = 0;
                }
            }
            if (!q.empty()) {
                departures.push(
                    {ev.time + sample_service(cfg.service, params.mu(server_class[ev.server]), rng),
                     seq++, ev.server});
            } else {
                busy_servers[server_class[ev.server]] -= 1;
            }

            if (any_pairs && departures_seen % corr_stride == 0 && window_start >= 0 &&
                (window_end < 0 || ev.time <= window_end)) {
                for (int i = 0; i < s; ++i) {
                    if (pairs[i].empty()) continue;
                    double sx = 0, sy = 0, sxy = 0;
                    for (const auto& [a, b] : pairs[i]) {
                        const double xa = queues[a].empty() ? 0.0 : 1.0;
                        const double xb = queues[b].empty() ? 0.0 : 1.0;
                        sx += xa;
                        sy += xb;
                        sxy += xa * xb;
                    }
                    const double n = static_cast<double>(pairs[i].size());
                    const double mx = sx / n, my = sy / n;
                    corr_num += sxy / n - mx * my;
                    corr_den += std::sqrt(std::max(mx * (1 - mx) * my * (1 - my), 0.0));
                }
            }
        }
    }
    if (cur_batch_count > 0) batch_sum.push_back(cur_batch_sum / cur_batch_count);

    SimResult res;
    res.rng_seed = cfg.rng_seed;
    res.class_counts = class_counts;
    res.measured = measured_done;
    res.mean_T = measured_done > 0 ? response_sum / measured_done : 0.0;
    if (batch_sum.size() >= 2) {
        double mean = 0;
        for (double v : batch_sum) mean += v;
        mean /= batch_sum.size();
        double var = 0;
        for (double v : batch_sum) var += (v - mean) * (v - mean);
        var /= (batch_sum.size() - 1);
        res.stderr_T = std::sqrt(var / batch_sum.size());
    }
    res.per_class_rho.resize(s);
    const double window =
        (window_end >= 0 && window_start >= 0) ? window_end - window_start : 0.0;
    for (int i = 0; i < s; ++i)
        res.per_class_rho[i] =
            window > 0 ? busy_time[i] / (window * class_counts[i]) : 0.0;
    res.independence_corr = corr_den > 0 ? corr_num / corr_den : 0.0;
    return res;
}

std::vector<IndependencePoint> independence_experiment(
    const SystemParams& params, const QueryingRule& rule, const CidAssignment& table,
    const std::vector<int>& k_grid, const SimConfig& cfg) {
    const MixSpace space(params.s(), params.d());
    const QueryDistribution pdist = lower(rule, params, space);
    RateSolution sol = solve_fixed_point(params, space, pdist, table);
    // The limit value matches the configured service model: exponential, or
    // the FCFS form with the two-branch hyperexponential's C^2 = 1.72.
    const ServiceSpec service = cfg.service.kind == SimService::Kind::Hyperexponential
                                    ? ServiceSpec::general_fcfs(1.72)
                                    : ServiceSpec::exponential();
    const double analytic = mean_response_time(params, sol, service);

    std::vector<IndependencePoint> out;
    for (int k : k_grid) {
        SimConfig local = cfg;
        local.k = k;
        SimResult r = simulate(params, rule, CldRule::cid(table), local);
        out.push_back({k, r.mean_T, r.stderr_T, analytic});
    }
    return out;
}

}  // namespace hd
