#pragma once

#include <cstdint>
#include <vector>

#include "streamtx/baselines.hpp"
#include "streamtx/chains.hpp"
#include "streamtx/metrics.hpp"
#include "streamtx/restructure.hpp"
#include "streamtx/scheduler.hpp"
#include "streamtx/store.hpp"
#include "streamtx/trace.hpp"
#include "streamtx/txn_api.hpp"

namespace streamtx {

// Pulls application payloads for the ingress thread; the engine stamps
// timestamps and ingress times itself so every scheme sees byte-identical
// streams for a given source.
class PayloadSource {
public:
    virtual ~PayloadSource() = default;
    virtual bool next(AppPayload& out) = 0;
};

struct EngineConfig {
    Scheme scheme = Scheme::TStream;
    std::uint32_t threads = 1;
    std::uint32_t interval = 500;  // data events per punctuation
    PlacementConfig placement{};
    std::uint32_t partitions = 0;       // partitioned baseline; 0 = use thread count
    std::uint64_t events = 0;           // data events to ingest
    std::uint64_t warmup = UINT64_MAX;  // emissions excluded from rates; default events/10
    // Per-executor ingress queue depth, counted in event blocks. 0 sizes it
    // to roughly one punctuation interval across all queues, which keeps
    // end-to-end latency proportional to the batch period instead of queue
    // depth.
    std::size_t queue_capacity = 0;
    TraceSink* trace = nullptr;
};

struct RunStats {
    std::uint64_t events = 0;
    std::uint64_t committed = 0;
    std::uint64_t rejected = 0;
    std::uint64_t txns = 0;
    double throughput_eps = 0.0;
    double p50_ms = 0.0, p95_ms = 0.0, p99_ms = 0.0;
    Breakdown breakdown;
    std::vector<std::uint64_t> table_digests;
    std::uint64_t result_digest = 0;
    std::uint64_t batches = 0;
    std::uint64_t rounds = 0;    // evaluation passes, >= batches
    std::uint64_t excluded = 0;  // transactions aborted out of the schedule
    std::uint64_t versions_peak = 0;  // max versions alive in one pass
    std::int64_t wall_ns = 0;
};

// Runs one configured stream to completion: one ingress thread, `threads`
// executors, and the scheme's coordination in between. Throws ConfigError
// for invalid setups and EngineAborted when any thread dies.
RunStats run_engine(const EngineConfig& cfg, StateStore& store, const FunctionRegistry& reg,
                    OperatorLogic& logic, PayloadSource& source);

// Folds per-event emissions into the run-level result digest (ascending
// timestamp). Exposed for the serial reference path, which must fold its
// emissions identically.
std::uint64_t fold_result_digest(std::vector<SinkRecord>& recs);

}  // namespace streamtx
