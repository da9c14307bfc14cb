#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "heterodispatch/optimizer.hpp"
#include "heterodispatch/settings.hpp"

namespace hd {

// A sweep task's family column: the six optimizable families plus the two
// fixed rules and the seeded heuristic.
enum class SweepFamily { Gen, GenSeeded, Iid, Ind, Det, Src, Sfc, Br, Uni, SrcJsq };

const char* sweep_family_name(SweepFamily f);
SweepFamily sweep_family_from_name(const std::string& name);

struct SweepRecord {
    int setting_id = 0;
    int s = 0, d = 0;
    double lambda = 0;
    std::vector<double> R;    // padded with nan up to 3 columns on write
    std::vector<int> shares;  // padded with 0 up to 4 columns on write
    std::string family;
    double e_t = 0;             // nan when infeasible
    double runtime_s = 0;
    bool feasible = false;
    std::uint64_t seed = 0;
};

struct SweepOptions {
    std::vector<SweepFamily> families;
    Budget budget;
    int parallelism = 0;  // 0: HETERODISPATCH_THREADS or hardware_concurrency
    std::string out_path;
    std::uint64_t rng_seed = 0;
};

std::string sweep_csv_header();
std::string sweep_record_to_csv(const SweepRecord& r);
SweepRecord sweep_record_from_csv(const std::string& line);

// Runs one optimization per (setting, family), appending CSV rows in task
// order. Existing rows in the output are treated as completed and skipped, so
// an interrupted sweep resumes where it stopped.
std::vector<SweepRecord> run_sweep(const std::vector<ParameterSetting>& settings,
                                   const SweepOptions& opts);

struct Aggregate {
    std::string family;
    int rows = 0;
    int feasible_rows = 0;
    double mean_et = 0;    // over feasible rows only
    double median_et = 0;  // over feasible rows only
    double mean_runtime = 0;
    double median_runtime = 0;
};

// Mean/median per family; infeasible rows are excluded from the response-time
// aggregates but kept in the runtime aggregates.
std::vector<Aggregate> aggregate_records(const std::vector<SweepRecord>& records);

std::vector<SweepRecord> read_sweep_csv(const std::string& path);

}  // namespace hd
