#pragma once

#include <cstdint>
#include <mutex>
#include <vector>

#include "streamtx/common.hpp"
#include "streamtx/core.hpp"

namespace streamtx {

// ---------------------------------------------------------------------------
// Execution tracing
//
// An optional hook that observes scheduling decisions: mode transitions,
// admissions, per-operation outcomes. Tests use it to assert ordering
// properties that digests alone cannot see; the CLI can dump it for
// debugging. A null sink costs one branch per would-be record.
// ---------------------------------------------------------------------------

enum class TraceKind : std::uint8_t {
    ModeEnterStateAccess,  // worker entered state-access mode (batch id in `a`)
    ModeExitStateAccess,   // worker left state-access mode
    TxnAdmitted,           // baseline gate passed (ts order check)
    OpApplied,             // operation executed and applied
    OpCondFailed,          // condition rejected the operation's transaction
    TxnExcluded,           // transaction excluded from the batch schedule
    BatchEvaluated,        // batch done; `a` = rounds used, `b` = txn count
};

struct TraceEvent {
    TraceKind kind;
    std::uint32_t worker = 0;
    Timestamp ts;       // event/transaction timestamp where applicable
    StateRef target;    // touched cell for op records
    std::uint64_t a = 0;
    std::uint64_t b = 0;
};

class TraceSink {
public:
    virtual ~TraceSink() = default;
    virtual void record(const TraceEvent& ev) = 0;
};

// Thread-safe in-memory sink for tests.
class VectorTraceSink : public TraceSink {
public:
    void record(const TraceEvent& ev) override {
        std::lock_guard<std::mutex> g(mu_);
        events_.push_back(ev);
    }

    std::vector<TraceEvent> snapshot() const {
        std::lock_guard<std::mutex> g(mu_);
        return events_;
    }

private:
    mutable std::mutex mu_;
    std::vector<TraceEvent> events_;
};

inline void trace(TraceSink* sink, const TraceEvent& ev) {
    if (sink) sink->record(ev);
}

}  // namespace streamtx
