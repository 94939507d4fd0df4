#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <vector>

#include "streamtx/chains.hpp"
#include "streamtx/functions.hpp"
#include "streamtx/metrics.hpp"
#include "streamtx/trace.hpp"

namespace streamtx {

// ---------------------------------------------------------------------------
// Batch evaluation with dynamic restructuring
//
// State-access mode evaluates the decomposed batch level by level: inside a
// level every unit touches disjoint state, so workers walk them without
// synchronization; a rendezvous separates levels so dependency reads always
// find fully evaluated sources.
//
// Condition failures abort transactions. A failed transaction that already
// applied writes may have contaminated the values later transactions saw,
// so after each pass only failures at or below the earliest write-applying
// failure are final; the batch state is reset and re-evaluated without them
// until a pass yields no new failure. Failures that never wrote anything
// are all final immediately and need no replay.
// ---------------------------------------------------------------------------

// Per-transaction evaluation state, owned by the executor that cached the
// event. `failed`/`applied_any` are per-pass scratch written by walkers of
// any worker; `excluded` is the cross-pass verdict, written by the leader
// between rendezvous points only.
struct TxnEntry {
    Timestamp ts;
    EventBlotter* blotter = nullptr;
    std::uint32_t op_count = 0;
    std::atomic<bool> failed{false};
    std::atomic<bool> applied_any{false};
    bool excluded = false;
};

struct WalkStats {
    std::uint64_t ops_executed = 0;
    std::uint64_t versions_created = 0;
};

// Evaluates one unit: all its operations in (ts, seq) order, skipping
// operations of excluded or already-failed transactions.
void walk_unit(const EvalUnit& unit, const FunctionRegistry& reg, std::uint32_t worker,
               WalkStats& stats, TraceSink* trace);

struct BatchOutcome {
    std::uint32_t rounds = 0;
    std::uint32_t excluded = 0;
    std::uint64_t versions_peak = 0;  // max versions alive in any single pass
};

// Shared coordination state of one batch evaluation. The leader fills plan
// and entries before releasing the workers and is the only writer of the
// control fields between rendezvous points.
struct BatchEval {
    BatchPlan* plan = nullptr;
    std::vector<TxnEntry*>* entries = nullptr;
    const FunctionRegistry* reg = nullptr;
    Barrier* barrier = nullptr;
    TraceSink* trace_sink = nullptr;
    PlacementConfig placement;
    std::uint32_t workers = 1;

    std::atomic<std::uint64_t> pass_versions{0};
    bool replay = false;
    BatchOutcome outcome;

    // Leader-only hook run after garbage collection but before the final
    // rendezvous, i.e. while every worker is still quiescent. The engine
    // uses it to recycle the chain index before compute mode resumes.
    std::function<void()> leader_epilogue;

    // Leader-side verdict after one full pass: marks final failures,
    // resets state for a replay when needed. Returns whether to replay.
    bool decide_after_pass();

    // Promotes surviving versions and clears batch bookkeeping.
    void collect_garbage();
};

// Runs the level/replay protocol for one worker. Every worker of the engine
// calls this at the same rendezvous; the worker with id 0 acts as leader.
// On return the batch is fully evaluated and garbage-collected.
void evaluate_batch(BatchEval& ev, std::uint32_t worker, WorkerMetrics& metrics);

}  // namespace streamtx
