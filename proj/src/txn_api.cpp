#include "streamtx/txn_api.hpp"

namespace streamtx {

void TxnBuilder::begin(Timestamp ts, EventBlotter* blotter) {
    if (active_) throw ApiMisuse("transaction builder re-armed while active");
    txn_ = StateTransaction{ts, {}, blotter};
    blotter->ts = ts;
    blotter->results.clear();
    blotter->status = TxnStatus::Pending;
    active_ = true;
}

StateTransaction TxnBuilder::take() {
    if (!active_) throw ApiMisuse("no transaction in progress");
    active_ = false;
    // Flag foreign reads whose source this transaction writes again later in
    // program order; their chains must interleave to stay program-ordered.
    for (std::size_t i = 0; i < txn_.ops.size(); ++i) {
        Operation& op = txn_.ops[i];
        auto writes_after = [&](const StateRef& s) {
            for (std::size_t j = i + 1; j < txn_.ops.size(); ++j)
                if (txn_.ops[j].kind != OpKind::Read && txn_.ops[j].target == s) return true;
            return false;
        };
        if (op.fun && op.fun->reads_own_write && writes_after(op.fun->src))
            op.fun->written_later = true;
        if (op.cond && op.cond->reads_own_write && writes_after(op.cond->target))
            op.cond->written_later = true;
    }
    return std::move(txn_);
}

void TxnBuilder::require_active() const {
    if (!active_) throw ApiMisuse("state access issued outside the state_access step");
}

bool TxnBuilder::writes_earlier(const StateRef& s) const {
    for (const auto& op : txn_.ops)
        if (op.kind != OpKind::Read && op.target == s) return true;
    return false;
}

std::int32_t TxnBuilder::new_slot() {
    txn_.blotter->results.emplace_back(0.0);
    return std::int32_t(txn_.blotter->results.size() - 1);
}

std::int32_t TxnBuilder::issue_read(StateRef s) {
    require_active();
    Operation op;
    op.ts = txn_.ts;
    op.kind = OpKind::Read;
    op.target = s;
    op.slot = new_slot();
    op.seq = std::uint32_t(txn_.ops.size());
    txn_.ops.push_back(std::move(op));
    return txn_.ops.back().slot;
}

void TxnBuilder::issue_write(StateRef d, RecordValue v) {
    require_active();
    Operation op;
    op.ts = txn_.ts;
    op.kind = OpKind::Write;
    op.target = d;
    op.value = std::move(v);
    op.seq = std::uint32_t(txn_.ops.size());
    txn_.ops.push_back(std::move(op));
}

std::int32_t TxnBuilder::issue_read_modify(StateRef d, FunId fun, FunArgs args) {
    return issue_read_modify(d, d, fun, args);
}

std::int32_t TxnBuilder::issue_read_modify(StateRef d, StateRef t, FunId fun, FunArgs args) {
    require_active();
    Operation op;
    op.ts = txn_.ts;
    op.kind = OpKind::ReadModify;
    op.target = d;
    FunCall fc;
    fc.id = fun;
    fc.args = args;
    fc.src = t;
    fc.src_is_self = t == d;
    fc.reads_own_write = t != d && writes_earlier(t);
    op.fun = fc;
    op.slot = new_slot();
    op.seq = std::uint32_t(txn_.ops.size());
    txn_.ops.push_back(std::move(op));
    return txn_.ops.back().slot;
}

std::int32_t TxnBuilder::issue_read_modify(StateRef d, FunId fun, FunArgs args, CondId cond,
                                           FunArgs cond_args, StateRef cond_src) {
    require_active();
    Operation op;
    op.ts = txn_.ts;
    op.kind = OpKind::ReadModify;
    op.target = d;
    FunCall fc;
    fc.id = fun;
    fc.args = args;
    fc.src = d;
    op.fun = fc;
    CondCall cc;
    cc.id = cond;
    cc.args = cond_args;
    cc.target = cond_src;
    cc.same_key = cond_src == d;
    cc.reads_own_write = cond_src != d && writes_earlier(cond_src);
    op.cond = cc;
    op.slot = new_slot();
    op.seq = std::uint32_t(txn_.ops.size());
    txn_.ops.push_back(std::move(op));
    return txn_.ops.back().slot;
}

}  // namespace streamtx
