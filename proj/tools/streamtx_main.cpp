#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "streamtx/harness.hpp"

namespace {

using namespace streamtx;

// String-valued options shared by both subcommands; parsed into enums after
// CLI11 runs.
struct Opts {
    std::string app = "gs";
    std::string scheme = "tstream";
    std::string placement = "shared-nothing";
    std::uint32_t threads = 1;
    std::uint32_t interval = 500;
    std::uint64_t events = 100000;
    std::uint64_t seed = 1;
    std::int64_t table_size = 10000;
    double skew = 0.6;
    double read_ratio = 0.5;
    double mp_ratio = 0.25;
    std::uint32_t mp_length = 4;
    std::uint32_t partitions = 0;
    double sl_init_balance = 10000.0;
    std::uint64_t warmup = UINT64_MAX;
    bool verify = false;
    bool no_verify = false;
    std::string out;
};

void add_common_flags(CLI::App* cmd, Opts& o) {
    cmd->add_option("--app", o.app, "application: gs, sl, ob, tp");
    cmd->add_option("--scheme", o.scheme, "scheme: tstream, lock, mvlk, pat, nolock");
    cmd->add_option("--threads", o.threads, "executor threads");
    cmd->add_option("--interval", o.interval, "data events per punctuation");
    cmd->add_option("--events", o.events, "data events to stream");
    cmd->add_option("--seed", o.seed, "workload seed");
    cmd->add_option("--table-size", o.table_size, "records per table");
    cmd->add_option("--skew", o.skew, "Zipf exponent of key popularity");
    cmd->add_option("--read-ratio", o.read_ratio, "fraction of read events (gs)");
    cmd->add_option("--mp-ratio", o.mp_ratio, "fraction of multi-partition events (gs, ob)");
    cmd->add_option("--mp-length", o.mp_length, "partitions per multi-partition event");
    cmd->add_option("--partitions", o.partitions, "state partitions; 0 = max(threads, mp-length)");
    cmd->add_option("--placement", o.placement,
                    "shared-nothing, shared-everything, shared-group:G");
    cmd->add_option("--sl-init-balance", o.sl_init_balance, "initial ledger balances (sl)");
    cmd->add_option("--warmup", o.warmup, "emissions excluded from rates; default events/10");
    cmd->add_flag("--verify", o.verify, "force the serial-reference check on");
    cmd->add_flag("--no-verify", o.no_verify, "force the serial-reference check off");
    cmd->add_option("--out", o.out, "append CSV rows to this file");
    cmd->set_config("--config", "", "read options from a key=value file");
}

RunConfig to_config(const Opts& o) {
    RunConfig cfg;
    if (!parse_app(o.app, cfg.workload.app)) throw ConfigError("unknown app: " + o.app);
    if (!parse_scheme(o.scheme, cfg.scheme)) throw ConfigError("unknown scheme: " + o.scheme);
    if (!parse_placement(o.placement, cfg.placement))
        throw ConfigError("unknown placement: " + o.placement);
    cfg.workload.events = o.events;
    cfg.workload.seed = o.seed;
    cfg.workload.table_size = o.table_size;
    cfg.workload.skew = o.skew;
    cfg.workload.read_ratio = o.read_ratio;
    cfg.workload.mp_ratio = o.mp_ratio;
    cfg.workload.mp_length = o.mp_length;
    cfg.workload.sl_init_balance = o.sl_init_balance;
    cfg.threads = o.threads;
    cfg.interval = o.interval;
    cfg.partitions = o.partitions;
    cfg.warmup = o.warmup;
    if (o.verify && o.no_verify) throw ConfigError("--verify conflicts with --no-verify");
    if (o.verify) cfg.verify = true;
    if (o.no_verify) cfg.verify = false;
    return cfg;
}

// Writes rows to stdout and, when requested, appends them to a CSV file
// (header added only when the file is new or empty).
void emit(const std::vector<RunRow>& rows, const std::string& out) {
    std::cout << csv_header() << '\n';
    for (const auto& row : rows) std::cout << csv_row(row) << '\n';
    if (out.empty()) return;
    bool fresh = !std::filesystem::exists(out) || std::filesystem::file_size(out) == 0;
    std::ofstream f(out, std::ios::app);
    if (!f) throw ConfigError("cannot open output file: " + out);
    if (fresh) f << csv_header() << '\n';
    for (const auto& row : rows) f << csv_row(row) << '\n';
}

// Exit code 2 when a consistency-preserving scheme diverged from the serial
// reference; nolock divergence is reported in the CSV but not fatal.
int verdict(const std::vector<RunRow>& rows) {
    for (const auto& row : rows)
        if (row.verified && !row.oracle_match && row.cfg.scheme != Scheme::NoLock) {
            std::cerr << "oracle mismatch: " << csv_row(row) << '\n';
            return 2;
        }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stream transaction engine benchmark harness"};
    app.require_subcommand(1);

    Opts ro;
    CLI::App* run = app.add_subcommand("run", "execute one configured run");
    add_common_flags(run, ro);

    Opts so;
    std::vector<std::string> apps, schemes, placements;
    std::vector<std::uint32_t> threads_list, intervals;
    std::vector<double> skews, read_ratios, mp_ratios;
    std::vector<std::uint64_t> seeds;
    CLI::App* sweep = app.add_subcommand("sweep", "execute a cross-product of runs");
    add_common_flags(sweep, so);
    sweep->add_option("--apps", apps, "applications to sweep");
    sweep->add_option("--schemes", schemes, "schemes to sweep");
    sweep->add_option("--threads-list", threads_list, "thread counts to sweep");
    sweep->add_option("--intervals", intervals, "punctuation intervals to sweep");
    sweep->add_option("--skews", skews, "skews to sweep");
    sweep->add_option("--read-ratios", read_ratios, "read ratios to sweep");
    sweep->add_option("--mp-ratios", mp_ratios, "multi-partition ratios to sweep");
    sweep->add_option("--placements", placements, "placements to sweep");
    sweep->add_option("--seeds", seeds, "seeds to sweep");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            std::vector<RunRow> rows{run_one(to_config(ro))};
            emit(rows, ro.out);
            return verdict(rows);
        }
        RunConfig base = to_config(so);
        SweepAxes ax;
        auto parse_all = [](auto& out, const std::vector<std::string>& in, auto parse,
                            const char* what) {
            for (const auto& s : in) {
                typename std::decay_t<decltype(out)>::value_type v;
                if (!parse(s, v)) throw ConfigError(std::string("unknown ") + what + ": " + s);
                out.push_back(v);
            }
        };
        parse_all(ax.apps, apps, parse_app, "app");
        parse_all(ax.schemes, schemes, parse_scheme, "scheme");
        parse_all(ax.placements, placements, parse_placement, "placement");
        if (ax.apps.empty()) ax.apps = {base.workload.app};
        if (ax.schemes.empty()) ax.schemes = {base.scheme};
        if (ax.placements.empty()) ax.placements = {base.placement};
        ax.threads = threads_list.empty() ? std::vector<std::uint32_t>{base.threads} : threads_list;
        ax.intervals = intervals.empty() ? std::vector<std::uint32_t>{base.interval} : intervals;
        ax.skews = skews.empty() ? std::vector<double>{base.workload.skew} : skews;
        ax.read_ratios =
            read_ratios.empty() ? std::vector<double>{base.workload.read_ratio} : read_ratios;
        ax.mp_ratios =
            mp_ratios.empty() ? std::vector<double>{base.workload.mp_ratio} : mp_ratios;
        ax.seeds = seeds.empty() ? std::vector<std::uint64_t>{base.workload.seed} : seeds;
        std::vector<RunRow> rows = run_sweep(base, ax);
        emit(rows, so.out);
        return verdict(rows);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
