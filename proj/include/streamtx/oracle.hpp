#pragma once

#include <vector>

#include "streamtx/functions.hpp"
#include "streamtx/store.hpp"

namespace streamtx {

// ---------------------------------------------------------------------------
// Serial reference execution
//
// The correctness yardstick: transactions applied one at a time in ascending
// timestamp order, operations in program order, reading and writing only
// committed state. Every concurrent scheme must leave the store and the
// result slots exactly as this does. Deliberately shares no execution code
// with the engine paths.
// ---------------------------------------------------------------------------

// Runs one transaction to completion against committed state. A failed
// condition undoes the transaction's earlier writes and rejects it. Fills
// blotter slots and status.
TxnStatus oracle_execute(StateStore& store, const FunctionRegistry& reg, StateTransaction& txn);

// Convenience for batch-level tests: executes the given transactions in
// ascending timestamp order.
void oracle_execute_batch(StateStore& store, const FunctionRegistry& reg,
                          std::vector<StateTransaction*>& txns);

}  // namespace streamtx
