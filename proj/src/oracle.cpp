#include "streamtx/oracle.hpp"

#include <algorithm>

namespace streamtx {

TxnStatus oracle_execute(StateStore& store, const FunctionRegistry& reg, StateTransaction& txn) {
    struct Undo {
        VersionedRecord* rec;
        RecordValue value;
        std::int64_t ts;
    };
    std::vector<Undo> undo;

    auto fail = [&] {
        for (auto it = undo.rbegin(); it != undo.rend(); ++it) {
            it->rec->committed = std::move(it->value);
            it->rec->committed_ts = it->ts;
        }
        txn.blotter->status = TxnStatus::Rejected;
        return TxnStatus::Rejected;
    };

    for (const auto& op : txn.ops) {
        if (op.cond) {
            const RecordValue& guard = store.at(op.cond->target).committed;
            if (!reg.cond(op.cond->id)(guard, op.cond->args)) return fail();
        }
        VersionedRecord& rec = store.at(op.target);
        switch (op.kind) {
            case OpKind::Read:
                txn.blotter->results[op.slot] = slot_summary(rec.committed);
                break;
            case OpKind::Write:
                undo.push_back(Undo{&rec, rec.committed, rec.committed_ts});
                rec.committed = op.value;
                rec.committed_ts = std::int64_t(op.ts.v);
                break;
            case OpKind::ReadModify: {
                const RecordValue& src =
                    op.fun->src_is_self ? rec.committed : store.at(op.fun->src).committed;
                txn.blotter->results[op.slot] = slot_summary(src);
                RecordValue next = reg.fun(op.fun->id)(src, op.fun->args);
                undo.push_back(Undo{&rec, rec.committed, rec.committed_ts});
                rec.committed = std::move(next);
                rec.committed_ts = std::int64_t(op.ts.v);
                break;
            }
        }
    }
    txn.blotter->status = TxnStatus::Committed;
    return TxnStatus::Committed;
}

void oracle_execute_batch(StateStore& store, const FunctionRegistry& reg,
                          std::vector<StateTransaction*>& txns) {
    std::sort(txns.begin(), txns.end(),
              [](const StateTransaction* a, const StateTransaction* b) { return a->ts < b->ts; });
    for (auto* t : txns) oracle_execute(store, reg, *t);
}

}  // namespace streamtx
