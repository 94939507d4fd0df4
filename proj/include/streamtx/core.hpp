#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "streamtx/common.hpp"
#include "streamtx/values.hpp"

namespace streamtx {

// ---------------------------------------------------------------------------
// Timestamps
// ---------------------------------------------------------------------------

// Logical timestamp drawn from a shared gapless counter at ingress. Doubles
// as the transaction id: the state transaction of an event carries the
// event's timestamp.
struct Timestamp {
    std::uint64_t v = 0;

    friend bool operator==(Timestamp a, Timestamp b) { return a.v == b.v; }
    friend bool operator!=(Timestamp a, Timestamp b) { return a.v != b.v; }
    friend bool operator<(Timestamp a, Timestamp b) { return a.v < b.v; }
    friend bool operator<=(Timestamp a, Timestamp b) { return a.v <= b.v; }
    friend bool operator>(Timestamp a, Timestamp b) { return a.v > b.v; }
    friend bool operator>=(Timestamp a, Timestamp b) { return a.v >= b.v; }
};

// Shared monotone counter. fetch_add keeps allocation wait-free and gapless
// even when several ingress threads pull from it.
class TimestampAllocator {
public:
    explicit TimestampAllocator(std::uint64_t start = 0) : next_(start) {}

    Timestamp allocate() { return Timestamp{next_.fetch_add(1, std::memory_order_relaxed)}; }

    std::uint64_t allocated() const { return next_.load(std::memory_order_relaxed); }

private:
    std::atomic<std::uint64_t> next_;
};

// ---------------------------------------------------------------------------
// Events
// ---------------------------------------------------------------------------

enum class EventKind : std::uint8_t { Data, Punctuation, EndOfStream };

// --- application payloads (filled by the workload generators) ---

// Grep&Sum microbenchmark: one event touches `len` keys, either all reads or
// all writes.
struct GsPayload {
    bool is_read = true;
    std::uint8_t len = 0;
    std::array<Key, 10> keys{};
    std::array<double, 10> values{};  // written values (write events only)
};

// Streaming ledger: transfer between two accounts/asset books, or deposit.
struct SlPayload {
    bool is_transfer = true;
    Key src_acc = 0;
    Key dst_acc = 0;
    Key src_ast = 0;
    Key dst_ast = 0;
    double amount_acc = 0.0;
    double amount_ast = 0.0;
};

enum class ObKind : std::uint8_t { Bid, Alter, Top };

// Online bidding: a bid against one item, a 20-item re-pricing, or a 20-item
// quantity top-up.
struct ObPayload {
    ObKind kind = ObKind::Bid;
    std::uint8_t len = 0;
    std::array<Key, 20> items{};
    std::array<double, 20> prices{};  // alter: new prices
    std::array<double, 20> qtys{};    // alter: new quantities; top: deltas
    double bid_price = 0.0;           // bid only
    double bid_qty = 0.0;             // bid only
};

enum class TpKind : std::uint8_t { SpeedReport, VehicleCount, TollNotify };

// Toll processing: each position report expands into three consecutive
// events against the report's road segment.
struct TpPayload {
    TpKind kind = TpKind::SpeedReport;
    std::int64_t vid = 0;
    std::int32_t segment = 0;
    double speed = 0.0;
};

using AppPayload = std::variant<std::monostate, GsPayload, SlPayload, ObPayload, TpPayload>;

struct Event {
    Timestamp ts;
    EventKind kind = EventKind::Data;
    AppPayload payload;
    std::int64_t ingest_ns = 0;  // steady-clock stamp taken at ingress
};

// Punctuations are stream elements and draw timestamps from the same
// allocator as data events, so every scheme sees an identical stream.
inline Event make_punctuation(Timestamp ts) {
    return Event{ts, EventKind::Punctuation, std::monostate{}, 0};
}

inline Event make_end_of_stream() {
    return Event{Timestamp{~0ull}, EventKind::EndOfStream, std::monostate{}, 0};
}

// ---------------------------------------------------------------------------
// Event blotter
//
// Mutable scratchpad of one event: parameters extracted during
// pre-processing, one result slot per read-class state access, and the
// commit/reject status. It is the only channel between the postponed state
// access and the post-processing step.
// ---------------------------------------------------------------------------

enum class TxnStatus : std::uint8_t { Pending, Committed, Rejected };

struct EventBlotter {
    Timestamp ts;
    std::vector<double> params;        // app-extracted arguments
    std::vector<RecordValue> results;  // one slot per read-class op, program order
    TxnStatus status = TxnStatus::Pending;
};

// ---------------------------------------------------------------------------
// State transactions and their operations
// ---------------------------------------------------------------------------

enum class OpKind : std::uint8_t { Read, Write, ReadModify };

using FunId = std::uint16_t;
using CondId = std::uint16_t;

// Captured arguments of an application function or condition.
struct FunArgs {
    double a = 0.0;
    double b = 0.0;
    std::int64_t i = 0;
};

struct VersionedRecord;  // defined in store.hpp

// Invocation of a registered modify function: new value = fun(value of
// `src`, args). `src` defaults to the operation's own target.
struct FunCall {
    FunId id = 0;
    FunArgs args;
    StateRef src;
    bool src_is_self = true;
    // true when this transaction writes `src` earlier in program order, so
    // the source read must include the transaction's own version
    bool reads_own_write = false;
    // true when this transaction writes `src` again *after* this operation;
    // the two chains must then interleave (merged walk) so the read sees the
    // source as of this program position, not the transaction's final value
    bool written_later = false;
    VersionedRecord* src_rec = nullptr;  // resolved at decomposition
};

// Invocation of a registered condition: the operation applies only if
// cond(value of `target`, args) holds; otherwise the whole transaction
// aborts.
struct CondCall {
    CondId id = 0;
    FunArgs args;
    StateRef target;
    bool same_key = true;  // condition targets the operation's own key
    bool reads_own_write = false;
    bool written_later = false;  // see FunCall::written_later
    VersionedRecord* target_rec = nullptr;  // resolved at decomposition
};

struct TxnEntry;  // engine-side per-transaction state, defined in restructure.hpp

struct Operation {
    Timestamp ts;
    OpKind kind = OpKind::Read;
    StateRef target;
    RecordValue value;             // Write: the blind value to install
    std::optional<FunCall> fun;    // ReadModify only
    std::optional<CondCall> cond;  // optional guard on any kind
    std::int32_t slot = -1;        // blotter result slot; -1 for Write
    std::uint32_t seq = 0;         // program order within the transaction
    TxnEntry* entry = nullptr;     // owning transaction during batch evaluation
};

// All state accesses of one event at one operator, tagged with the event's
// timestamp. Built during the state_access step and either executed eagerly
// (baselines) or decomposed into operation chains.
struct StateTransaction {
    Timestamp ts;
    std::vector<Operation> ops;
    EventBlotter* blotter = nullptr;
};

}  // namespace streamtx
