#include "streamtx/harness.hpp"

#include <charconv>
#include <cstdio>

#include "streamtx/oracle.hpp"
#include "streamtx/txn_api.hpp"

namespace streamtx {

// Mirrors the engine's ingress loop: one timestamp per data event, one per
// punctuation (every `interval` data events plus the closing one), so serial
// and concurrent runs see byte-identical streams.
SerialOutcome run_serial(const WorkloadConfig& workload, std::uint32_t interval) {
    if (interval == 0) throw ConfigError("punctuation interval must be >= 1");
    WorkloadConfig wl = resolve_workload(workload);
    StateStore store;
    populate_tables(wl, store);
    FunctionRegistry reg;
    register_standard_functions(reg);
    auto logic = make_logic(wl);
    auto source = make_source(wl);

    TimestampAllocator alloc;
    TxnBuilder builder;
    std::vector<SinkRecord> sink;
    sink.reserve(wl.events);
    SerialOutcome out;

    AppPayload payload;
    std::uint64_t sent = 0;
    while (sent < wl.events && source->next(payload)) {
        Event ev;
        ev.ts = alloc.allocate();
        ev.kind = EventKind::Data;
        ev.payload = std::move(payload);
        EventBlotter eb;
        logic->pre_process(ev, eb);
        builder.begin(ev.ts, &eb);
        logic->state_access(ev, eb, builder);
        StateTransaction txn = builder.take();
        TxnStatus status = oracle_execute(store, reg, txn);
        std::uint64_t oh = logic->post_process(ev, eb);
        sink.push_back(SinkRecord{ev.ts.v, status == TxnStatus::Committed, oh, 0, 0});
        if (status == TxnStatus::Committed)
            ++out.committed;
        else
            ++out.rejected;
        ++sent;
        if (sent % interval == 0) alloc.allocate();  // punctuation timestamp
    }
    alloc.allocate();  // closing punctuation

    out.table_digests = store.digests();
    out.result_digest = fold_result_digest(sink);
    return out;
}

RunRow run_one(const RunConfig& raw) {
    RunConfig cfg = raw;
    cfg.workload = resolve_workload(cfg.workload);
    if (cfg.partitions == 0)
        cfg.partitions = std::max(cfg.threads, cfg.workload.mp_length);
    cfg.workload.partitions = cfg.partitions;

    StateStore store;
    populate_tables(cfg.workload, store);
    FunctionRegistry reg;
    register_standard_functions(reg);
    auto logic = make_logic(cfg.workload);
    auto source = make_source(cfg.workload);

    EngineConfig ec;
    ec.scheme = cfg.scheme;
    ec.threads = cfg.threads;
    ec.interval = cfg.interval;
    ec.placement = cfg.placement;
    ec.partitions = cfg.partitions;
    ec.events = cfg.workload.events;
    ec.warmup = cfg.warmup;
    ec.trace = cfg.trace;

    RunRow row;
    row.stats = run_engine(ec, store, reg, *logic, *source);
    if (cfg.verify.value_or(cfg.workload.events <= 1000000)) {
        SerialOutcome oracle = run_serial(cfg.workload, cfg.interval);
        row.verified = true;
        row.oracle_match = oracle.table_digests == row.stats.table_digests &&
                           oracle.result_digest == row.stats.result_digest;
    }
    row.cfg = cfg;
    return row;
}

std::vector<RunRow> run_sweep(const RunConfig& base, const SweepAxes& ax) {
    std::vector<RunRow> rows;
    for (auto app : ax.apps)
        for (auto scheme : ax.schemes)
            for (auto threads : ax.threads)
                for (auto interval : ax.intervals)
                    for (auto skew : ax.skews)
                        for (auto read_ratio : ax.read_ratios)
                            for (auto mp_ratio : ax.mp_ratios)
                                for (const auto& placement : ax.placements)
                                    for (auto seed : ax.seeds) {
                                        RunConfig cfg = base;
                                        cfg.workload.app = app;
                                        cfg.workload.skew = skew;
                                        cfg.workload.read_ratio = read_ratio;
                                        cfg.workload.mp_ratio = mp_ratio;
                                        cfg.workload.seed = seed;
                                        cfg.scheme = scheme;
                                        cfg.threads = threads;
                                        cfg.interval = interval;
                                        cfg.placement = placement;
                                        rows.push_back(run_one(cfg));
                                    }
    return rows;
}

// ---------------------------------------------------------------------------
// Names, parsing, CSV
// ---------------------------------------------------------------------------

const char* scheme_name(Scheme s) {
    switch (s) {
        case Scheme::TStream: return "tstream";
        case Scheme::Lock: return "lock";
        case Scheme::Mvlk: return "mvlk";
        case Scheme::Pat: return "pat";
        case Scheme::NoLock: return "nolock";
    }
    return "?";
}

bool parse_scheme(std::string_view text, Scheme& out) {
    if (text == "tstream") out = Scheme::TStream;
    else if (text == "lock") out = Scheme::Lock;
    else if (text == "mvlk") out = Scheme::Mvlk;
    else if (text == "pat") out = Scheme::Pat;
    else if (text == "nolock") out = Scheme::NoLock;
    else return false;
    return true;
}

std::string placement_name(const PlacementConfig& pc) {
    switch (pc.kind) {
        case Placement::SharedNothing: return "shared-nothing";
        case Placement::SharedEverything: return "shared-everything";
        case Placement::SharedGroup: return "shared-group:" + std::to_string(pc.groups);
    }
    return "?";
}

bool parse_placement(std::string_view text, PlacementConfig& out) {
    if (text == "shared-nothing") {
        out = PlacementConfig{Placement::SharedNothing, 1, false};
        return true;
    }
    if (text == "shared-everything") {
        out = PlacementConfig{Placement::SharedEverything, 1, true};
        return true;
    }
    constexpr std::string_view prefix = "shared-group:";
    if (text.substr(0, prefix.size()) == prefix) {
        std::string_view num = text.substr(prefix.size());
        std::uint32_t g = 0;
        auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), g);
        if (ec != std::errc{} || p != num.data() + num.size() || g == 0) return false;
        out = PlacementConfig{Placement::SharedGroup, g, true};
        return true;
    }
    return false;
}

std::string csv_header() {
    return "app,scheme,threads,interval,skew,read_ratio,mp_ratio,mp_length,placement,seed,"
           "events,throughput_eps,p50_ms,p95_ms,p99_ms,useful_ns,sync_ns,lock_ns,others_ns,"
           "rejected,digest_tables,result_digest,oracle_match";
}

namespace {

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string hex64(std::uint64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

std::string csv_row(const RunRow& row) {
    const RunConfig& c = row.cfg;
    const RunStats& s = row.stats;
    double txns = s.txns ? double(s.txns) : 1.0;  // per-transaction means
    std::string digests;
    for (std::size_t i = 0; i < s.table_digests.size(); ++i) {
        if (i) digests += '+';
        digests += hex64(s.table_digests[i]);
    }
    std::string r;
    r += app_name(c.workload.app);
    r += ',';
    r += scheme_name(c.scheme);
    r += ',' + std::to_string(c.threads);
    r += ',' + std::to_string(c.interval);
    r += ',' + fmt("%g", c.workload.skew);
    r += ',' + fmt("%g", c.workload.read_ratio);
    r += ',' + fmt("%g", c.workload.mp_ratio);
    r += ',' + std::to_string(c.workload.mp_length);
    r += ',' + placement_name(c.placement);
    r += ',' + std::to_string(c.workload.seed);
    r += ',' + std::to_string(s.events);
    r += ',' + fmt("%.1f", s.throughput_eps);
    r += ',' + fmt("%.4f", s.p50_ms);
    r += ',' + fmt("%.4f", s.p95_ms);
    r += ',' + fmt("%.4f", s.p99_ms);
    r += ',' + fmt("%.0f", double(s.breakdown.useful_ns) / txns);
    r += ',' + fmt("%.0f", double(s.breakdown.sync_ns) / txns);
    r += ',' + fmt("%.0f", double(s.breakdown.lock_ns) / txns);
    r += ',' + fmt("%.0f", double(s.breakdown.others_ns) / txns);
    r += ',' + std::to_string(s.rejected);
    r += ',' + digests;
    r += ',' + hex64(s.result_digest);
    r += ',';
    r += row.verified ? (row.oracle_match ? "1" : "0") : "-";
    return r;
}

}  // namespace streamtx
