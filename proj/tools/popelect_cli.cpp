#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "popelect/acceptance.hpp"
#include "popelect/analytics.hpp"
#include "popelect/runner.hpp"
#include "popelect/sim.hpp"
#include "popelect/stats.hpp"

namespace {

constexpr const char* kVersion = "1.0.0";

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitExhausted = 3;
constexpr int kExitSafety = 4;
constexpr int kExitCriterion = 5;

struct CommonOpts {
    std::uint64_t n = 0;
    std::vector<std::uint64_t> n_list;
    std::uint32_t trials = 1;
    std::uint64_t seed = 1;
    std::uint32_t gamma = 0; // 0 = default
    std::uint32_t phi = 0;
    std::uint32_t psi = 0;
    bool backup_only = false;
    bool variant = false;
    std::uint64_t max_interactions = 1ull << 40;
    std::string stop = "single-alive";
    std::string format = "lines";
    bool trace = false;
    unsigned workers = 0;
};

void add_common_flags(CLI::App* cmd, CommonOpts& o, bool with_n_list) {
    cmd->add_option("--n", o.n, "population size");
    if (with_n_list)
        cmd->add_option("--n-list", o.n_list, "population sizes, ascending");
    cmd->add_option("--trials", o.trials, "number of independent trials");
    cmd->add_option("--seed", o.seed, "master seed (trial seeds derive from it)");
    cmd->add_option("--gamma", o.gamma, "clock modulus override");
    cmd->add_option("--phi", o.phi, "coin level cap override");
    cmd->add_option("--psi", o.psi, "drag cap override");
    cmd->add_flag("--backup-only", o.backup_only,
                  "start as all-candidates and run only the pairwise rule");
    cmd->add_flag("--drag-advance-on-noncoin", o.variant,
                  "inverted inhibitor advance rule (comparison variant)");
    cmd->add_option("--max-interactions", o.max_interactions, "interaction budget");
    cmd->add_option("--stop", o.stop,
                    "single-alive|single-active|resolved|budget|epoch2|boundary2|drag");
    cmd->add_option("--format", o.format, "lines|csv")
        ->check(CLI::IsMember({"lines", "csv"}));
    cmd->add_flag("--trace", o.trace, "stream per-event trace lines (run only)");
    cmd->add_option("--workers", o.workers,
                    "worker pool size (default: POPELECT_WORKERS or hardware)");
}

popelect::ProtocolParams make_params(const CommonOpts& o, std::uint64_t n) {
    auto p = popelect::ProtocolParams::for_population(n);
    if (o.gamma != 0)
        p.gamma = o.gamma;
    if (o.phi != 0) {
        p.phi = o.phi;
        p.phi_overridden = true;
    }
    if (o.psi != 0)
        p.psi = o.psi;
    p.backup_only = o.backup_only;
    p.drag_advance_on_noncoin = o.variant;
    p.validate();
    return p;
}

bool parse_stop(const std::string& name, std::uint64_t budget,
                popelect::StopCondition& out) {
    using K = popelect::StopCondition::Kind;
    out.max_interactions = budget;
    if (name == "single-alive")
        out.kind = K::SingleAlive;
    else if (name == "single-active")
        out.kind = K::SingleActive;
    else if (name == "resolved")
        out.kind = K::AllPassiveResolved;
    else if (name == "budget")
        out.kind = K::MaxInteractions;
    else if (name == "epoch2")
        out.kind = K::Epoch2Done;
    else if (name == "boundary2")
        out.kind = K::SecondBoundary;
    else if (name == "drag")
        out.kind = K::Composite; // caller fills drag_target from params.psi
    else
        return false;
    return true;
}

void emit_record_lines(std::ostream& os, const popelect::TrialRecord& r) {
    os << "trial version=" << kVersion << " n=" << r.n << " seed=" << r.seed
       << " gamma=" << r.gamma << " phi=" << r.phi << " psi=" << r.psi
       << " phi_overridden=" << r.phi_overridden << " backup_only=" << r.backup_only
       << " drag_advance_on_noncoin=" << r.drag_advance_on_noncoin
       << " interactions=" << r.interactions << " parallel_time=" << r.parallel_time()
       << " exhausted=" << r.exhausted << " safety_violation=" << r.safety_violation
       << " final_alive=" << r.final_alive << " final_active=" << r.final_active
       << " single_active_at=" << r.single_active_at
       << " single_alive_at=" << r.single_alive_at << " resolved_at=" << r.resolved_at
       << " epoch1_end=" << r.epoch1_end << " epoch2_end=" << r.epoch2_end
       << " epoch2_survivors=" << r.epoch2_survivors
       << " epoch2_alive=" << r.epoch2_alive
       << " round_boundaries=" << r.round_boundaries
       << " epoch3_rounds=" << r.epoch3_rounds << " coins=" << r.n_coins
       << " inhibitors=" << r.n_inhibitors;
    os << " coin_reach=";
    for (std::size_t l = 0; l < r.coin_reach.size(); ++l)
        os << (l ? "/" : "") << r.coin_reach[l];
    os << " drag_reach=";
    for (std::size_t l = 0; l < r.drag_reach.size(); ++l)
        os << (l ? "/" : "") << r.drag_reach[l];
    os << " drag_first=";
    for (std::size_t l = 0; l < r.drag_first.size(); ++l)
        os << (l ? "/" : "") << r.drag_first[l];
    os << "\n";
}

void emit_record_csv_header(std::ostream& os) {
    os << "version,n,seed,gamma,phi,psi,backup_only,drag_advance_on_noncoin,"
          "interactions,parallel_time,exhausted,safety_violation,final_alive,"
          "final_active,single_alive_at,epoch1_end,epoch2_end,epoch2_survivors,"
          "epoch3_rounds,coins,inhibitors\n";
}

void emit_record_csv(std::ostream& os, const popelect::TrialRecord& r) {
    os << kVersion << ',' << r.n << ',' << r.seed << ',' << r.gamma << ',' << r.phi
       << ',' << r.psi << ',' << r.backup_only << ',' << r.drag_advance_on_noncoin
       << ',' << r.interactions << ',' << r.parallel_time() << ',' << r.exhausted
       << ',' << r.safety_violation << ',' << r.final_alive << ',' << r.final_active
       << ',' << r.single_alive_at << ',' << r.epoch1_end << ',' << r.epoch2_end
       << ',' << r.epoch2_survivors << ',' << r.epoch3_rounds << ',' << r.n_coins
       << ',' << r.n_inhibitors << "\n";
}

void emit_aggregate(std::ostream& os, const popelect::AggregateStats& s) {
    os << "aggregate version=" << kVersion << " n=" << s.n
       << " trials=" << s.trial_count << " mean_interactions=" << s.mean_interactions
       << " mean_parallel_time=" << s.mean_parallel_time
       << " median_parallel_time=" << s.median_parallel_time
       << " q05_parallel_time=" << s.q05_parallel_time
       << " q95_parallel_time=" << s.q95_parallel_time
       << " median_epoch2_survivors=" << s.median_epoch2_survivors
       << " exhausted=" << s.exhausted_count
       << " safety_violations=" << s.safety_violation_count << "\n";
}

int records_exit_code(const std::vector<popelect::TrialRecord>& recs) {
    bool exhausted = false;
    for (const auto& r : recs) {
        if (r.safety_violation)
            return kExitSafety;
        exhausted = exhausted || r.exhausted;
    }
    return exhausted ? kExitExhausted : kExitOk;
}

const char* trace_kind_name(popelect::TraceEvent::Kind k) {
    using K = popelect::TraceEvent::Kind;
    switch (k) {
    case K::RoundBoundary: return "round-boundary";
    case K::EpochTransition: return "epoch-transition";
    case K::Elimination: return "elimination";
    case K::DragAdvance: return "drag-advance";
    case K::SafetyViolation: return "safety-violation";
    }
    return "?";
}

int cmd_run(const CommonOpts& o) {
    if (o.n == 0) {
        std::cerr << "run: --n is required\n";
        return kExitConfig;
    }
    auto params = make_params(o, o.n);
    popelect::StopCondition stop;
    if (!parse_stop(o.stop, o.max_interactions, stop)) {
        std::cerr << "run: unknown --stop value '" << o.stop << "'\n";
        return kExitConfig;
    }
    if (stop.kind == popelect::StopCondition::Kind::Composite)
        stop.drag_target = params.psi;
    popelect::TraceSink sink;
    if (o.trace)
        sink = [](const popelect::TraceEvent& e) {
            std::cout << "trace kind=" << trace_kind_name(e.kind)
                      << " interaction=" << e.interaction << " agent=" << e.agent
                      << " payload=" << e.payload << "\n";
        };
    auto state = popelect::SimState::create(params, o.seed);
    auto rec = run_until(state, stop, sink);
    if (o.format == "csv") {
        emit_record_csv_header(std::cout);
        emit_record_csv(std::cout, rec);
    } else {
        emit_record_lines(std::cout, rec);
    }
    return records_exit_code({rec});
}

int cmd_bench(const CommonOpts& o) {
    if (o.n == 0 || o.trials < 1) {
        std::cerr << "bench: --n and --trials >= 1 are required\n";
        return kExitConfig;
    }
    auto params = make_params(o, o.n);
    popelect::StopCondition stop;
    if (!parse_stop(o.stop, o.max_interactions, stop)) {
        std::cerr << "bench: unknown --stop value '" << o.stop << "'\n";
        return kExitConfig;
    }
    if (stop.kind == popelect::StopCondition::Kind::Composite)
        stop.drag_target = params.psi;
    auto recs = popelect::run_trials(params, o.trials, o.seed, stop, o.workers);
    if (o.format == "csv") {
        emit_record_csv_header(std::cout);
        for (const auto& r : recs)
            emit_record_csv(std::cout, r);
    } else {
        for (const auto& r : recs)
            emit_record_lines(std::cout, r);
    }
    emit_aggregate(std::cout, popelect::aggregate(recs));
    return records_exit_code(recs);
}

int cmd_sweep(const CommonOpts& o) {
    if (o.n_list.size() < 2 || !std::is_sorted(o.n_list.begin(), o.n_list.end()) ||
        o.trials < 1) {
        std::cerr << "sweep: --n-list (>= 2 ascending sizes) and --trials >= 1 "
                     "are required\n";
        return kExitConfig;
    }
    popelect::StopCondition stop;
    if (!parse_stop(o.stop, o.max_interactions, stop)) {
        std::cerr << "sweep: unknown --stop value '" << o.stop << "'\n";
        return kExitConfig;
    }
    const bool csv = o.format == "csv";
    if (csv)
        std::cout << "version,n,trials,median_parallel_time,mean_parallel_time,"
                     "time_per_log2sq,time_per_logloglog,exhausted,"
                     "safety_violations\n";
    int code = kExitOk;
    for (std::uint64_t n : o.n_list) {
        auto params = make_params(o, n);
        if (stop.kind == popelect::StopCondition::Kind::Composite)
            stop.drag_target = params.psi;
        auto recs = popelect::run_trials(params, o.trials, o.seed, stop, o.workers);
        auto agg = popelect::aggregate(recs);
        double l = std::log2(static_cast<double>(n));
        double per_sq = agg.median_parallel_time / (l * l);
        double per_ll = agg.median_parallel_time / (l * std::log2(l));
        if (csv) {
            std::cout << kVersion << ',' << n << ',' << agg.trial_count << ','
                      << agg.median_parallel_time << ',' << agg.mean_parallel_time
                      << ',' << per_sq << ',' << per_ll << ','
                      << agg.exhausted_count << ',' << agg.safety_violation_count
                      << "\n";
        } else {
            emit_aggregate(std::cout, agg);
            std::cout << "sweep n=" << n << " time_per_log2sq=" << per_sq
                      << " time_per_logloglog=" << per_ll << "\n";
        }
        int rc = records_exit_code(recs);
        code = std::max(code, rc);
    }
    return code;
}

int cmd_validate(const std::vector<int>& criteria, bool criteria_given,
                 const CommonOpts& o) {
    if (criteria_given && criteria.empty()) {
        std::cerr << "validate: empty criterion selection\n";
        return kExitConfig;
    }
    for (int id : criteria) {
        if (id < 1 || id > popelect::accept::kCriterionCount) {
            std::cerr << "validate: no criterion " << id << "\n";
            return kExitConfig;
        }
    }
    popelect::accept::SuiteOptions opts;
    opts.criteria = criteria;
    opts.seed = o.seed;
    opts.workers = o.workers;
    opts.drag_advance_on_noncoin = o.variant;
    auto res = popelect::accept::run_acceptance_suite(opts, std::cout);
    return res.all_passed() ? kExitOk : kExitCriterion;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"population-protocol leader election simulator"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    CommonOpts run_o, bench_o, sweep_o, val_o;
    run_o.seed = 1;
    bench_o.trials = 0; // force explicit --trials
    sweep_o.trials = 0;

    auto* run = app.add_subcommand("run", "single seeded trial");
    add_common_flags(run, run_o, false);

    auto* bench = app.add_subcommand("bench", "multi-trial statistics at one n");
    add_common_flags(bench, bench_o, false);

    auto* sweep = app.add_subcommand("sweep", "scaling table over a list of n");
    add_common_flags(sweep, sweep_o, true);

    std::vector<int> criteria;
    auto* validate = app.add_subcommand("validate", "run the validation suite");
    validate->add_option("--criteria", criteria,
                         "criterion ids to run (default: all)")
        ->expected(0, popelect::accept::kCriterionCount)
        ->delimiter(',');
    validate->add_option("--seed", val_o.seed, "suite master seed");
    validate->add_option("--workers", val_o.workers, "worker pool size");
    validate->add_flag("--drag-advance-on-noncoin", val_o.variant,
                       "run the suite under the inverted inhibitor rule");
    val_o.seed = popelect::accept::SuiteOptions{}.seed;

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (run->parsed())
            return cmd_run(run_o);
        if (bench->parsed())
            return cmd_bench(bench_o);
        if (sweep->parsed())
            return cmd_sweep(sweep_o);
        if (validate->parsed())
            return cmd_validate(criteria, validate->count("--criteria") > 0, val_o);
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}
