#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "streamtx/bench_apps.hpp"
#include "streamtx/engine.hpp"

namespace streamtx {

// ---------------------------------------------------------------------------
// Experiment driver
//
// One run = populate tables, stream the configured workload through the
// engine under one scheme, and (by default) replay the identical stream
// through the serial reference to check digests. Results land in one CSV row
// with a pinned column order.
// ---------------------------------------------------------------------------

struct RunConfig {
    WorkloadConfig workload;
    Scheme scheme = Scheme::TStream;
    std::uint32_t threads = 1;
    std::uint32_t interval = 500;
    std::uint32_t partitions = 0;  // 0: max(threads, mp_length)
    PlacementConfig placement{};
    std::uint64_t warmup = UINT64_MAX;  // UINT64_MAX: events / 10
    std::optional<bool> verify;         // default: on for runs up to 1e6 events
    TraceSink* trace = nullptr;
};

// Outcome of the serial reference over the identical stream (identical
// timestamp consumption, including punctuations).
struct SerialOutcome {
    std::vector<std::uint64_t> table_digests;
    std::uint64_t result_digest = 0;
    std::uint64_t committed = 0;
    std::uint64_t rejected = 0;
};

SerialOutcome run_serial(const WorkloadConfig& workload, std::uint32_t interval);

struct RunRow {
    RunConfig cfg;  // fully resolved
    RunStats stats;
    bool verified = false;
    bool oracle_match = false;
};

// Executes one configured run; throws ConfigError / EngineAborted.
RunRow run_one(const RunConfig& cfg);

// Axis lists for parameter sweeps; the cross product is executed in
// axis-major order with `base` supplying everything not swept. Any empty
// axis yields zero runs.
struct SweepAxes {
    std::vector<AppKind> apps;
    std::vector<Scheme> schemes;
    std::vector<std::uint32_t> threads;
    std::vector<std::uint32_t> intervals;
    std::vector<double> skews;
    std::vector<double> read_ratios;
    std::vector<double> mp_ratios;
    std::vector<PlacementConfig> placements;
    std::vector<std::uint64_t> seeds;
};

std::vector<RunRow> run_sweep(const RunConfig& base, const SweepAxes& axes);

// --- naming and parsing -----------------------------------------------------

const char* scheme_name(Scheme s);
bool parse_scheme(std::string_view text, Scheme& out);

std::string placement_name(const PlacementConfig& pc);
bool parse_placement(std::string_view text, PlacementConfig& out);

// --- CSV --------------------------------------------------------------------

std::string csv_header();
std::string csv_row(const RunRow& row);

}  // namespace streamtx
