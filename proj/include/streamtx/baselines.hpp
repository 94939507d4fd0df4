#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <set>
#include <unordered_map>
#include <vector>

#include "streamtx/functions.hpp"
#include "streamtx/metrics.hpp"
#include "streamtx/store.hpp"
#include "streamtx/trace.hpp"

namespace streamtx {

enum class Scheme : std::uint8_t { TStream, Lock, Mvlk, Pat, NoLock };

// ---------------------------------------------------------------------------
// Admission gate
//
// Serializes transaction admission in ascending timestamp order: a
// transaction enters only when every smaller timestamp has entered (or been
// skipped — punctuations consume timestamps but never execute). While a
// transaction holds the gate it registers its claims, which is what makes
// every per-key queue timestamp-ordered without further sorting.
// ---------------------------------------------------------------------------

class PermitGate {
public:
    // Blocks until `ts` is the next timestamp to admit.
    void wait_for(std::uint64_t ts);

    // Admits the next timestamp; called by the current holder.
    void advance();

    // Marks a non-executing timestamp (punctuation) as admitted. Idempotent
    // across the broadcast copies every executor receives.
    void skip(std::uint64_t ts);

    std::uint64_t next() const;

private:
    void drain_skips_locked();

    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::uint64_t next_ = 0;
    std::set<std::uint64_t> skips_;
};

// ---------------------------------------------------------------------------
// Strict two-phase locking with ordered claim queues
//
// Claims are inserted under the admission gate, so each key's queue is in
// timestamp order. A claim is granted when nothing ahead of it conflicts:
// the head always is, and a prefix run of shared claims is granted together.
// Waiting happens strictly on smaller timestamps, which rules out deadlock.
// ---------------------------------------------------------------------------

class LockManager {
public:
    explicit LockManager(std::uint32_t shards = 64);

    void enqueue(const StateRef& ref, std::uint64_t ts, bool exclusive);
    void wait_granted(const StateRef& ref, std::uint64_t ts);
    void release(const StateRef& ref, std::uint64_t ts);

private:
    struct Claim {
        std::uint64_t ts;
        bool exclusive;
    };
    struct RefHash {
        std::size_t operator()(const StateRef& r) const { return state_hash(r.table, r.key); }
    };
    struct Shard {
        std::mutex mu;
        std::condition_variable cv;
        std::unordered_map<StateRef, std::deque<Claim>, RefHash> queues;
    };

    Shard& shard_of(const StateRef& ref);
    static bool granted(const std::deque<Claim>& q, std::uint64_t ts);

    std::vector<Shard> shards_;
};

// ---------------------------------------------------------------------------
// Multiversion locking
//
// Writers register per-key in admission order; the head of a key's writer
// queue is the key's low-water mark. A write applies only at the low-water
// mark; a read at ts proceeds once no registered writer is below ts, then
// picks the latest version under its timestamp. All record access of this
// scheme goes through the manager so version lists are never raced.
// ---------------------------------------------------------------------------

struct AlignedTs {
    std::atomic<std::uint64_t> v{~0ull};
};

class MvlkManager {
public:
    MvlkManager(StateStore* store, std::uint32_t executors, std::uint32_t shards = 64);

    // Admission-side: registers the transaction's distinct write targets.
    void register_writes(const std::vector<StateRef>& writes, std::uint64_t ts);

    // Marks/clears the executor's in-flight timestamp (bounds version pruning).
    void set_active(std::uint32_t executor, std::uint64_t ts);
    void clear_active(std::uint32_t executor);

    // Read for a result slot: waits for the read floor, returns the summary
    // of the visible value.
    RecordValue read_summary(const StateRef& ref, std::uint64_t ts, bool own, std::int64_t& wait_ns);

    // Read the full visible value (modify sources, condition guards).
    RecordValue read_value(const StateRef& ref, std::uint64_t ts, bool own, std::int64_t& wait_ns);

    // Write: waits until `ts` is the key's low-water mark, then installs.
    void write(const StateRef& ref, std::uint64_t ts, RecordValue value, std::int64_t& wait_ns);

    // Abort path: surgically removes this transaction's versions.
    void rollback(const std::vector<StateRef>& written, std::uint64_t ts);

    // Commit/abort: pops the write registrations, advancing low-water marks.
    void finish_writes(const std::vector<StateRef>& writes, std::uint64_t ts);

private:
    struct RefHash {
        std::size_t operator()(const StateRef& r) const { return state_hash(r.table, r.key); }
    };
    struct Shard {
        std::mutex mu;
        std::condition_variable cv;
        std::unordered_map<StateRef, std::deque<std::uint64_t>, RefHash> writers;
    };

    Shard& shard_of(const StateRef& ref);
    std::uint64_t min_active() const;
    void prune_locked(VersionedRecord& rec);

    StateStore* store_;
    std::vector<Shard> shards_;
    std::vector<AlignedTs> active_;
};

// ---------------------------------------------------------------------------
// Partitioned admission
//
// State is hash-partitioned; each partition keeps a FIFO of admitted
// transactions (timestamp order, courtesy of the gate). A transaction runs
// once it heads every target partition, giving partition-exclusive
// execution; multi-partition transactions therefore stall on every partition
// they span.
// ---------------------------------------------------------------------------

class PatGate {
public:
    explicit PatGate(std::uint32_t partitions);

    std::uint32_t partition_count() const { return std::uint32_t(parts_.size()); }

    void register_txn(const std::vector<std::uint32_t>& parts, std::uint64_t ts);
    void wait_turn(const std::vector<std::uint32_t>& parts, std::uint64_t ts);
    void finish(const std::vector<std::uint32_t>& parts, std::uint64_t ts);

private:
    struct Part {
        std::mutex mu;
        std::condition_variable cv;
        std::deque<std::uint64_t> q;
    };
    std::vector<Part> parts_;
};

// ---------------------------------------------------------------------------
// Per-record latches for the unsynchronized baseline
//
// The no-lock scheme gives up transaction isolation entirely, but raw
// concurrent mutation of container values would corrupt memory rather than
// just results. Single-operation latches keep each individual record access
// memory-safe while providing no ordering whatsoever.
// ---------------------------------------------------------------------------

class NoLockLatches {
public:
    explicit NoLockLatches(StateStore* store);

    std::atomic<std::uint8_t>& latch_for(const StateRef& ref);

private:
    StateStore* store_;
    std::vector<std::vector<std::atomic<std::uint8_t>>> latches_;
};

// ---------------------------------------------------------------------------
// Baseline runtime: one facade the engine drives per executor
// ---------------------------------------------------------------------------

class BaselineRuntime {
public:
    BaselineRuntime(Scheme scheme, StateStore* store, const FunctionRegistry* reg,
                    std::uint32_t executors, std::uint32_t partitions);

    // Evaluates one transaction under the scheme; fills slots and status.
    TxnStatus execute(StateTransaction& txn, std::uint32_t executor, WorkerMetrics& wm,
                      TraceSink* trace);

    // Punctuations consume timestamps in every scheme; ordered schemes must
    // skip them at the gate.
    void on_punctuation(Timestamp ts);

    // End of run: promotes multiversion state back to plain committed values.
    void finish_run();

private:
    TxnStatus exec_inplace(StateTransaction& txn, WorkerMetrics& wm, bool latched);
    TxnStatus exec_mvlk(StateTransaction& txn, std::uint32_t executor, WorkerMetrics& wm);

    Scheme scheme_;
    StateStore* store_;
    const FunctionRegistry* reg_;
    PermitGate gate_;
    std::unique_ptr<LockManager> locks_;
    std::unique_ptr<MvlkManager> mvlk_;
    std::unique_ptr<PatGate> pat_;
    std::unique_ptr<NoLockLatches> latches_;
};

}  // namespace streamtx
