#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include "heterodispatch/policy_io.hpp"
#include "heterodispatch/settings.hpp"
#include "heterodispatch/sweep.hpp"

using namespace hd;

namespace {

std::string temp_path(const std::string& stem) {
    return (std::filesystem::temp_directory_path() / stem).string();
}

}  // namespace

TEST_CASE("settings design: totals and breakdowns") {
    const auto settings = generate_settings(LambdaGrid::Coarse);
    CHECK(settings.size() == 12825);

    std::map<int, int> by_s;
    std::map<double, int> by_lambda;
    for (const auto& ps : settings) {
        by_s[ps.s] += 1;
        by_lambda[ps.lambda] += 1;
    }
    CHECK(by_s[2] == 1425);
    CHECK(by_s[3] == 5700);
    CHECK(by_s[4] == 5700);
    CHECK(by_lambda.size() == 19);
    for (const auto& [lambda, count] : by_lambda) CHECK(count == 675);

    // Fine grid swaps the 19-value lambda axis for 49 values.
    CHECK(generate_settings(LambdaGrid::Fine).size() == 12825 / 19 * 49);
}

TEST_CASE("settings design: every instance satisfies the normalization") {
    const auto settings = generate_settings(LambdaGrid::Coarse);
    for (std::size_t t = 0; t < settings.size(); t += 97) {
        const auto& ps = settings[t];
        double cap = 0;
        for (int i = 0; i < ps.s; ++i) cap += ps.mu[i] * ps.q[i];
        CHECK(cap == doctest::Approx(1.0).epsilon(1e-12));
        for (int i = 0; i + 1 < ps.s; ++i) CHECK(ps.mu[i] > ps.mu[i + 1]);
        CHECK(static_cast<int>(ps.R.size()) == ps.s - 1);
        int total = 0;
        for (int v : ps.shares) total += v;
        CHECK(total == 6);
        static_cast<void>(ps.params());  // must construct cleanly
    }
}

TEST_CASE("share/speed derivation reproduces the three-class example") {
    std::vector<double> mu, q;
    derive_mu_q({5.0, 2.0}, {2, 1, 3}, mu, q);
    CHECK(q[0] == doctest::Approx(1.0 / 3).epsilon(1e-15));
    CHECK(q[1] == doctest::Approx(1.0 / 6).epsilon(1e-15));
    CHECK(q[2] == doctest::Approx(1.0 / 2).epsilon(1e-15));
    CHECK(mu[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(mu[1] == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(mu[2] == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("policy json round-trip preserves parameters and table") {
    SystemParams params = SystemParams::make(2, 2, 0.6, {1.5, 0.5}, {0.5, 0.5});
    MixSpace space(2, 2);
    IndexSets sets = build_index_sets(space);
    CidAssignment table = CidAssignment::uniform(sets, 2);
    PolicyDocument doc{params, IidRule{{0.7, 0.3}}, table, 42, "test"};

    const std::string text = policy_to_json(doc);
    PolicyDocument back = policy_from_json(text);
    CHECK(back.params.s() == 2);
    CHECK(back.params.lambda() == doctest::Approx(0.6));
    CHECK(std::get<IidRule>(back.rule).ptilde[0] == doctest::Approx(0.7));
    CHECK(back.rng_seed == 42);
    back.assign.validate(sets);
    CHECK(policy_to_json(back) == text);  // canonical form is stable
}

TEST_CASE("policy json round-trip with the filler key variant") {
    SystemParams params = SystemParams::make(2, 3, 0.4, {1.5, 0.5}, {0.5, 0.5});
    MixSpace space(2, 3);
    IndexSets sets = build_index_sets(space, GammaVariant::Filler);
    CidAssignment table = CidAssignment::uniform(sets, 2);
    PolicyDocument doc{params, BrRule{}, table, 7, "test"};
    PolicyDocument back = policy_from_json(policy_to_json(doc));
    CHECK(back.assign.variant() == GammaVariant::Filler);
    back.assign.validate(sets);
    // Lookups must agree entry-for-entry after the round trip.
    for (int m = 0; m < space.size(); ++m)
        for (int j = 0; j <= 2; ++j)
            for (int i = 0; i <= j && i < 2; ++i)
                CHECK(back.assign.lookup(i, j, space[m]) ==
                      doc.assign.lookup(i, j, space[m]));
}

TEST_CASE("sweep csv: write-read-write is byte identical") {
    SweepRecord r;
    r.setting_id = 17;
    r.s = 3;
    r.d = 2;
    r.lambda = 0.35;
    r.R = {5.0, 1.25};
    r.shares = {2, 2, 2};
    r.family = "iid";
    r.e_t = 1.234567890123456789;
    r.runtime_s = 0.125;
    r.feasible = true;
    r.seed = 99;
    const std::string line = sweep_record_to_csv(r);
    SweepRecord back = sweep_record_from_csv(line);
    CHECK(sweep_record_to_csv(back) == line);
}

TEST_CASE("small sweep runs, aggregates and resumes") {
    auto all = generate_settings(LambdaGrid::Coarse);
    std::vector<ParameterSetting> chosen;
    for (std::size_t t = 0; t < all.size() && chosen.size() < 6; t += 2000)
        chosen.push_back(all[t]);

    const std::string path = temp_path("hd_sweep_test.csv");
    std::filesystem::remove(path);

    SweepOptions opts;
    opts.families = {SweepFamily::Iid, SweepFamily::Src, SweepFamily::Br};
    opts.budget = Budget{2, 150};
    opts.parallelism = 2;
    opts.out_path = path;
    opts.rng_seed = 5;
    const auto records = run_sweep(chosen, opts);
    CHECK(records.size() == chosen.size() * 3);

    const auto aggs = aggregate_records(records);
    CHECK(aggs.size() == 3);
    for (const auto& a : aggs) {
        CHECK(a.rows == static_cast<int>(chosen.size()));
        // Independent recomputation of the mean over feasible rows.
        double sum = 0;
        int n = 0;
        for (const auto& r : records) {
            if (r.family == a.family && r.feasible) {
                sum += r.e_t;
                ++n;
            }
        }
        CHECK(a.feasible_rows == n);
        if (n > 0) CHECK(a.mean_et == doctest::Approx(sum / n).epsilon(1e-12));
    }

    // Every row in the written file re-serializes to the same bytes.
    {
        std::ifstream in(path);
        std::string line;
        int rows_checked = 0;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#' || line.rfind("setting_id,", 0) == 0)
                continue;
            CHECK(sweep_record_to_csv(sweep_record_from_csv(line)) == line);
            ++rows_checked;
        }
        CHECK(rows_checked == static_cast<int>(records.size()));
    }

    // Resume: nothing left to do, identical rows come back from the file.
    const auto resumed = run_sweep(chosen, opts);
    CHECK(resumed.size() == records.size());
    for (std::size_t t = 0; t < records.size(); ++t) {
        CHECK(resumed[t].setting_id == records[t].setting_id);
        CHECK(resumed[t].family == records[t].family);
        CHECK(resumed[t].e_t == doctest::Approx(records[t].e_t).epsilon(1e-15));
    }

    // Determinism modulo the runtime column: a fresh run reproduces e_t.
    const std::string path2 = temp_path("hd_sweep_test2.csv");
    std::filesystem::remove(path2);
    SweepOptions opts2 = opts;
    opts2.out_path = path2;
    const auto fresh = run_sweep(chosen, opts2);
    REQUIRE(fresh.size() == records.size());
    for (std::size_t t = 0; t < records.size(); ++t)
        CHECK(fresh[t].e_t == doctest::Approx(records[t].e_t).epsilon(1e-15));
    std::filesystem::remove(path);
    std::filesystem::remove(path2);
}

#ifdef HDX_CLI_PATH
TEST_CASE("cli: sizes and settings smoke, analyze round-trip") {
    const std::string cli = HDX_CLI_PATH;

    auto run = [&](const std::string& args) {
        const std::string cmd = cli + " " + args + " 2>/dev/null";
        FILE* pipe = popen(cmd.c_str(), "r");
        REQUIRE(pipe != nullptr);
        std::string out;
        char buf[4096];
        while (std::size_t n = fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
        const int status = pclose(pipe);
        return std::make_pair(status, out);
    };

    auto [st1, sizes_out] = run("sizes --s 2..2 --d 2..2");
    CHECK(st1 == 0);
    CHECK(sizes_out.find("gen,2,2,15,7,4,4") != std::string::npos);

    auto [st2, settings_out] = run("settings --format json");
    CHECK(st2 == 0);

    // optimize (seeded heuristic) then analyze: the objective must round-trip.
    const std::string policy = temp_path("hd_cli_policy.json");
    auto [st3, opt_out] = run(
        "optimize --family gen-seeded --s 2 --d 2 --lambda 0.5 --R 2 --shares 3 3 "
        "--seed 1 --starts 2 --iters 200 --out " + policy);
    CHECK(st3 == 0);
    auto [st4, analyze_out] = run("analyze --policy " + policy + " --format json");
    CHECK(st4 == 0);
    const double reported = std::stod(opt_out.substr(opt_out.find("objective=") + 10));
    const auto pos = analyze_out.find("\"mean_T\":");
    REQUIRE(pos != std::string::npos);
    const double analyzed = std::stod(analyze_out.substr(pos + 9));
    CHECK(std::abs(reported - analyzed) < 1e-8);
    std::filesystem::remove(policy);
}

TEST_CASE("cli: m/m/1 analyze prints 2.000000 and infeasible exits with 2") {
    const std::string cli = HDX_CLI_PATH;
    auto run = [&](const std::string& args) {
        const std::string cmd = cli + " " + args + " 2>/dev/null";
        FILE* pipe = popen(cmd.c_str(), "r");
        REQUIRE(pipe != nullptr);
        std::string out;
        char buf[4096];
        while (std::size_t n = fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
        const int raw = pclose(pipe);
        return std::make_pair(WEXITSTATUS(raw), out);
    };

    // Hand-written single-class policy file at lambda = 0.5.
    const std::string policy = temp_path("hd_cli_mm1.json");
    {
        SystemParams params = SystemParams::make(1, 1, 0.5, {1.0}, {1.0});
        MixSpace space(1, 1);
        CidAssignment table = CidAssignment::uniform(build_index_sets(space), 1);
        save_policy(PolicyDocument{params, SfcRule{0}, table, 0, "test"}, policy);
    }
    auto [st, out] = run("analyze --policy " + policy);
    CHECK(st == 0);
    CHECK(out.find("E[T] = 2.000000") != std::string::npos);

    // SFC cannot carry lambda = 0.9 when max mu_i q_i = 2/3: exit code 2.
    auto [st2, out2] = run(
        "optimize --family sfc --s 3 --d 3 --lambda 0.9 --R 5 2 --shares 2 1 3 --starts 1 "
        "--iters 50");
    CHECK(st2 == 2);

    // Usage errors exit with 1.
    auto [st3, out3] = run("no-such-subcommand");
    CHECK(st3 == 1);
    std::filesystem::remove(policy);
}

TEST_CASE("cli: sweep subcommand end to end") {
    const std::string cli = HDX_CLI_PATH;
    const std::string out_csv = temp_path("hd_cli_sweep.csv");
    std::filesystem::remove(out_csv);
    const std::string cmd = cli + " sweep --families br --limit 3 --stride 500 --out " +
                            out_csv + " --starts 2 --iters 150 --parallelism 2 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    char buf[4096];
    while (std::size_t n = fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
    const int st = WEXITSTATUS(pclose(pipe));
    CHECK(st == 0);
    CHECK(out.find("br: rows=3") != std::string::npos);
    const auto rows = read_sweep_csv(out_csv);
    CHECK(rows.size() == 3);
    std::filesystem::remove(out_csv);
}
#endif
