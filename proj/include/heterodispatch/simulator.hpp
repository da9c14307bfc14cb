#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "heterodispatch/meanfield.hpp"
#include "heterodispatch/rng.hpp"

namespace hd {

// Queue-length-aware assignment rules plus the CID embedding.
struct CldRule {
    enum class Kind { Jsq, JsqStar, Sed, SedStar, Sew, SewStar, CidTable };
    Kind kind = Kind::Jsq;
    std::optional<CidAssignment> table;  // CidTable only

    static CldRule jsq() { return {Kind::Jsq, std::nullopt}; }
    static CldRule jsq_star() { return {Kind::JsqStar, std::nullopt}; }
    static CldRule sed() { return {Kind::Sed, std::nullopt}; }
    static CldRule sed_star() { return {Kind::SedStar, std::nullopt}; }
    static CldRule sew() { return {Kind::Sew, std::nullopt}; }
    static CldRule sew_star() { return {Kind::SewStar, std::nullopt}; }
    static CldRule cid(CidAssignment t) { return {Kind::CidTable, std::move(t)}; }
};

CldRule cld_rule_from_name(const std::string& name);  // jsq, jsq*, sed, ...
const char* cld_rule_name(CldRule::Kind kind);

struct SimService {
    enum class Kind { Exponential, Hyperexponential };
    Kind kind = Kind::Exponential;
    // Hyperexponential: rate 5*mu/2 or 5*mu/8, probability 1/2 each (C^2 = 1.72).
};

struct SimConfig {
    int k = 3000;                   // servers
    std::int64_t horizon = 10'000'000;  // arrivals simulated
    std::int64_t warmup = -1;       // arrivals discarded; -1 = 10% of horizon
    std::uint64_t rng_seed = 0;
    SimService service;

    std::int64_t effective_warmup() const { return warmup < 0 ? horizon / 10 : warmup; }
};

struct SimResult {
    double mean_T = 0;
    double stderr_T = 0;              // batch-means standard error
    std::vector<double> per_class_rho;
    double independence_corr = 0;     // mean pairwise busy-indicator correlation
    std::int64_t measured = 0;
    std::uint64_t rng_seed = 0;
    std::vector<int> class_counts;    // realized k_i after apportionment
};

// One queried server's visible state.
struct QueriedServer {
    int server = 0;
    int class_index = 0;
    int queue_len = 0;
};

// Pick the winner among the queried servers under the given rule. Exposed for
// direct testing; the simulator calls it on every arrival.
int cld_assign(const CldRule& rule, const SystemParams& params,
               const std::vector<QueriedServer>& queried, SplitMix64& rng);

// Event-driven FCFS simulation of the k-server system under (querying rule,
// CLD assignment). Poisson arrivals at rate lambda * k; every arrival samples
// a mix from the rule's lowered distribution and then distinct servers
// uniformly within each class.
SimResult simulate(const SystemParams& params, const QueryingRule& rule,
                   const CldRule& assign, const SimConfig& cfg);

struct IndependencePoint {
    int k = 0;
    double sim_mean_T = 0;
    double sim_stderr = 0;
    double analytic_mean_T = 0;
};

// Finite-k sweep against the mean-field prediction for a CID policy.
std::vector<IndependencePoint> independence_experiment(
    const SystemParams& params, const QueryingRule& rule, const CidAssignment& table,
    const std::vector<int>& k_grid, const SimConfig& cfg);

// Largest-remainder apportionment of k * q_i.
std::vector<int> apportion_servers(int k, const std::vector<double>& q);

}  // namespace hd
