#pragma once

#include <chrono>
#include <cstdint>
#include <vector>

namespace streamtx {

// ---------------------------------------------------------------------------
// Time accounting
//
// Transaction-scoped wall time is attributed to four buckets:
//   useful  - operation execution and chain walking
//   sync    - waiting for other workers (barriers, admission gates, grants)
//   lock    - installing and releasing synchronization state
//   others  - scheduling overhead (decomposition, planning, gc, undo)
// Pre- and post-processing are outside the transaction scope and are not
// attributed.
// ---------------------------------------------------------------------------

inline std::int64_t now_ns() {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

struct Breakdown {
    std::int64_t useful_ns = 0;
    std::int64_t sync_ns = 0;
    std::int64_t lock_ns = 0;
    std::int64_t others_ns = 0;

    Breakdown& operator+=(const Breakdown& o) {
        useful_ns += o.useful_ns;
        sync_ns += o.sync_ns;
        lock_ns += o.lock_ns;
        others_ns += o.others_ns;
        return *this;
    }

    std::int64_t total() const { return useful_ns + sync_ns + lock_ns + others_ns; }
};

// Adds the elapsed time to an accumulator on destruction.
class ScopedTimer {
public:
    explicit ScopedTimer(std::int64_t& acc) : acc_(acc), start_(now_ns()) {}
    ~ScopedTimer() { acc_ += now_ns() - start_; }

    ScopedTimer(const ScopedTimer&) = delete;
    ScopedTimer& operator=(const ScopedTimer&) = delete;

private:
    std::int64_t& acc_;
    std::int64_t start_;
};

// One downstream emission per data event.
struct SinkRecord {
    std::uint64_t ts = 0;
    bool committed = false;
    std::uint64_t out_hash = 0;   // digest of the operator's downstream output
    std::int64_t latency_ns = 0;  // ingress stamp to emission
    std::int64_t emit_ns = 0;
};

// Per-worker accumulators; merged by the engine after the run.
struct WorkerMetrics {
    Breakdown breakdown;
    std::uint64_t txns = 0;
    std::uint64_t versions_created = 0;
    std::vector<SinkRecord> sink;
};

}  // namespace streamtx
