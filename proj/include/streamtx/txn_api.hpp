#pragma once

#include <cstdint>

#include "streamtx/core.hpp"
#include "streamtx/functions.hpp"

namespace streamtx {

// ---------------------------------------------------------------------------
// Transaction builder
//
// The state_access step of an operator issues its state accesses through
// this builder. Nothing touches the store here: every primitive only appends
// an Operation tagged with the event's timestamp, and the engine decides
// when and how the resulting transaction is evaluated. Read-class primitives
// hand out blotter result slots that are filled at evaluation time.
// ---------------------------------------------------------------------------

class TxnBuilder {
public:
    // Arms the builder for one event. Only the engine calls this.
    void begin(Timestamp ts, EventBlotter* blotter);

    // Disarms the builder and hands the built transaction over.
    StateTransaction take();

    // READ(s): records a read of `s`; the visible value lands in the
    // returned blotter slot.
    std::int32_t issue_read(StateRef s);

    // WRITE(d, v): blind update of `d` with `v`.
    void issue_write(StateRef d, RecordValue v);

    // READ_MODIFY(d, fun): d <- fun(d). The pre-modification value of the
    // source lands in the returned blotter slot.
    std::int32_t issue_read_modify(StateRef d, FunId fun, FunArgs args);

    // READ_MODIFY(d, t, fun): d <- fun(t) with a foreign source t.
    std::int32_t issue_read_modify(StateRef d, StateRef t, FunId fun, FunArgs args);

    // Conditional variants: the operation applies only when
    // cond(value of cond_src) holds, otherwise the transaction aborts.
    std::int32_t issue_read_modify(StateRef d, FunId fun, FunArgs args, CondId cond,
                                   FunArgs cond_args, StateRef cond_src);

    bool active() const { return active_; }

private:
    void require_active() const;
    bool writes_earlier(const StateRef& s) const;
    std::int32_t new_slot();

    StateTransaction txn_;
    bool active_ = false;
};

// ---------------------------------------------------------------------------
// Operator logic
//
// One dual-mode operator. pre_process and post_process run in compute mode;
// state_access only declares the transaction. post_process returns a digest
// of whatever the operator emits downstream, which the harness folds into
// the run's result digest.
// ---------------------------------------------------------------------------

class OperatorLogic {
public:
    virtual ~OperatorLogic() = default;

    virtual void pre_process(const Event& e, EventBlotter& eb) = 0;
    virtual void state_access(const Event& e, EventBlotter& eb, TxnBuilder& txn) = 0;
    virtual std::uint64_t post_process(const Event& e, const EventBlotter& eb) = 0;
};

}  // namespace streamtx
