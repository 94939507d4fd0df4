#pragma once

#include <atomic>
#include <deque>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "streamtx/core.hpp"
#include "streamtx/scheduler.hpp"
#include "streamtx/store.hpp"

namespace streamtx {

// ---------------------------------------------------------------------------
// Operation chains
//
// During compute mode, decomposition splits every postponed transaction into
// per-(table,key) operation chains. Conditions and modify functions that
// read a *different* key add a dependency edge from the issuing chain to the
// source chain; everything else stays independent, which is what lets a
// whole level of chains run in parallel without any locking.
// ---------------------------------------------------------------------------

struct OperationChain {
    StateRef key;
    VersionedRecord* record = nullptr;
    std::uint32_t pool = 0;
    std::vector<Operation> ops;           // sorted by (ts, seq) after freeze
    std::vector<OperationChain*> deps;    // chains this chain's guards/sources read
    bool is_dependency_source = false;    // some chain reads this one

    // freeze() scratch
    std::uint32_t scc_index = UINT32_MAX;
    std::uint32_t scc_low = 0;
    bool on_stack = false;
    std::uint32_t unit = UINT32_MAX;
    std::uint32_t order = 0;  // position in the batch chain list

    std::mutex mu;  // guards ops/deps during concurrent decomposition
};

// A strongly connected component of mutually dependent chains, evaluated as
// one timestamp-ordered sequence by a single worker.
struct MergedGroup {
    struct MergedOp {
        const Operation* op;
        VersionedRecord* rec;
    };
    std::vector<OperationChain*> members;
    std::vector<MergedOp> ops;  // all member ops, sorted by (ts, seq)
    std::uint32_t pool = 0;
};

// One schedulable walk: either a single chain or a merged component.
struct EvalUnit {
    OperationChain* solo = nullptr;
    MergedGroup* merged = nullptr;
    std::uint32_t pool = 0;
};

// Copyable atomic wrapper so cursors can live in plain vectors. Copies only
// happen while the plan is built single-threaded.
struct AtomicCursor {
    std::atomic<std::uint32_t> v{0};
    AtomicCursor() = default;
    AtomicCursor(const AtomicCursor& o) : v(o.v.load()) {}
    AtomicCursor& operator=(const AtomicCursor& o) {
        v.store(o.v.load());
        return *this;
    }
};

// Units of one dependency level, segregated by owning pool. Workers drain
// their home pool through the cursor and steal from the others when allowed.
struct LevelPlan {
    std::vector<std::vector<EvalUnit>> pools;
    std::vector<AtomicCursor> cursors;
};

struct BatchPlan {
    std::vector<OperationChain*> chains;  // every chain of the batch
    std::deque<MergedGroup> merged_storage;
    std::vector<LevelPlan> levels;
    std::uint64_t op_count = 0;
    std::uint32_t dep_sources = 0;
    std::uint32_t merged_chains = 0;

    void reset_cursors() {
        for (auto& lvl : levels)
            for (auto& c : lvl.cursors) c.v.store(0, std::memory_order_relaxed);
    }
};

// ---------------------------------------------------------------------------
// Chain index: concurrent build during compute mode, frozen into a level
// plan at the start of state-access mode.
// ---------------------------------------------------------------------------

class ChainIndex {
public:
    ChainIndex(StateStore* store, PlacementConfig placement, std::uint32_t workers);

    // Appends every operation of `txn` to its chain, creating chains (and
    // dependency edges) on demand. Called concurrently by all executors.
    void decompose(StateTransaction&& txn, TxnEntry* entry);

    OperationChain* get_or_create(const StateRef& ref);

    // Single-threaded (rendezvous guarantees quiescence): sorts chains,
    // deduplicates edges, marks dependency sources and their records for
    // multiversioning, merges dependency cycles and layers everything into
    // levels. The plan borrows the chains; call clear() once the batch has
    // been garbage-collected.
    BatchPlan freeze();

    // Retires the evaluated batch. Chains are recycled, not destroyed, so a
    // steady-state batch allocates nothing.
    void clear();

    std::size_t chain_count() const;

private:
    static constexpr std::size_t kShards = 64;
    struct Slot {
        StateRef ref;
        OperationChain* chain = nullptr;  // null marks an empty slot
    };
    struct Shard {
        std::mutex mu;
        std::vector<Slot> table;          // open addressing over this batch's chains
        std::deque<OperationChain> arena; // stable storage, reused across batches
        std::size_t used = 0;             // arena prefix holding this batch's chains
    };

    OperationChain* acquire(Shard& sh, const StateRef& ref);
    static void grow(Shard& sh);

    StateStore* store_;
    PlacementConfig placement_;
    std::uint32_t workers_;
    std::vector<Shard> shards_;
};

// Builds dependency levels over the given chains: Tarjan condensation of
// dependency cycles into merged groups, then longest-path layering so every
// chain runs strictly after all chains it reads from. Exposed separately
// from freeze() for tests that construct chain graphs by hand.
void build_levels(BatchPlan& plan, std::uint32_t pools);

}  // namespace streamtx
