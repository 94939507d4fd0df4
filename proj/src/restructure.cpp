#include "streamtx/restructure.hpp"

#include <algorithm>

namespace streamtx {

namespace {

inline bool skip_op(const Operation& op) {
    return op.entry->excluded || op.entry->failed.load(std::memory_order_relaxed);
}

inline void mark_applied(const Operation& op) {
    op.entry->applied_any.store(true, std::memory_order_relaxed);
}

// Walks one chain. Multiversioned chains append a version per write; plain
// chains accumulate the running value locally and install it once at the
// end, which keeps large container values at one copy per walk instead of
// one per operation.
void walk_solo(OperationChain* chain, const FunctionRegistry& reg, std::uint32_t worker,
               WalkStats& stats, TraceSink* sink) {
    VersionedRecord* rec = chain->record;
    const bool mv = rec->multiversion;
    RecordValue local;
    const RecordValue* cur = &rec->committed;
    if (!mv) {
        local = rec->committed;
        cur = &local;
    }
    bool wrote = false;
    std::int64_t last_write_ts = rec->committed_ts;
    std::uint32_t writes = 0;

    for (const auto& op : chain->ops) {
        if (skip_op(op)) continue;
        if (op.cond) {
            const RecordValue& guard =
                op.cond->same_key
                    ? *cur
                    : read_visible(*op.cond->target_rec, op.ts, op.cond->reads_own_write);
            if (!reg.cond(op.cond->id)(guard, op.cond->args)) {
                op.entry->failed.store(true, std::memory_order_relaxed);
                trace(sink, {TraceKind::OpCondFailed, worker, op.ts, op.target, 0, 0});
                continue;
            }
        }
        switch (op.kind) {
            case OpKind::Read:
                op.entry->blotter->results[op.slot] = slot_summary(*cur);
                break;
            case OpKind::Write:
                if (mv) {
                    apply_write(*rec, op.ts, op.value);
                    ++stats.versions_created;
                    cur = &rec->extra_versions.back().value;
                } else {
                    local = op.value;
                    last_write_ts = std::int64_t(op.ts.v);
                    wrote = true;
                    ++writes;
                }
                mark_applied(op);
                break;
            case OpKind::ReadModify: {
                if (op.fun->src_is_self) {
                    op.entry->blotter->results[op.slot] = slot_summary(*cur);
                    if (mv) {
                        apply_write(*rec, op.ts, reg.fun(op.fun->id)(*cur, op.fun->args));
                        ++stats.versions_created;
                        cur = &rec->extra_versions.back().value;
                    } else {
                        local = reg.fun(op.fun->id)(std::move(local), op.fun->args);
                        last_write_ts = std::int64_t(op.ts.v);
                        wrote = true;
                        ++writes;
                    }
                } else {
                    const RecordValue& src =
                        read_visible(*op.fun->src_rec, op.ts, op.fun->reads_own_write);
                    op.entry->blotter->results[op.slot] = slot_summary(src);
                    if (mv) {
                        apply_write(*rec, op.ts, reg.fun(op.fun->id)(src, op.fun->args));
                        ++stats.versions_created;
                        cur = &rec->extra_versions.back().value;
                    } else {
                        local = reg.fun(op.fun->id)(src, op.fun->args);
                        last_write_ts = std::int64_t(op.ts.v);
                        wrote = true;
                        ++writes;
                    }
                }
                mark_applied(op);
                break;
            }
        }
        ++stats.ops_executed;
        trace(sink, {TraceKind::OpApplied, worker, op.ts, op.target, 0, 0});
    }

    if (wrote) {
        if (!rec->pre_batch_image)
            rec->pre_batch_image = PreImage{rec->committed_ts, std::move(rec->committed)};
        rec->committed = std::move(local);
        rec->committed_ts = last_write_ts;
        rec->inplace_writes += writes;
    }
}

// Merged components interleave several records, so per-record running
// values are read back through the version lists (every member is a
// dependency source and therefore multiversioned).
void walk_merged(MergedGroup* group, const FunctionRegistry& reg, std::uint32_t worker,
                 WalkStats& stats, TraceSink* sink) {
    for (const auto& mop : group->ops) {
        const Operation& op = *mop.op;
        if (skip_op(op)) continue;
        if (op.cond) {
            const RecordValue& guard =
                op.cond->same_key
                    ? read_visible(*mop.rec, op.ts, true)
                    : read_visible(*op.cond->target_rec, op.ts, op.cond->reads_own_write);
            if (!reg.cond(op.cond->id)(guard, op.cond->args)) {
                op.entry->failed.store(true, std::memory_order_relaxed);
                trace(sink, {TraceKind::OpCondFailed, worker, op.ts, op.target, 0, 0});
                continue;
            }
        }
        switch (op.kind) {
            case OpKind::Read:
                op.entry->blotter->results[op.slot] =
                    slot_summary(read_visible(*mop.rec, op.ts, true));
                break;
            case OpKind::Write:
                apply_write(*mop.rec, op.ts, op.value);
                ++stats.versions_created;
                mark_applied(op);
                break;
            case OpKind::ReadModify: {
                const RecordValue& src =
                    op.fun->src_is_self
                        ? read_visible(*mop.rec, op.ts, true)
                        : read_visible(*op.fun->src_rec, op.ts, op.fun->reads_own_write);
                op.entry->blotter->results[op.slot] = slot_summary(src);
                apply_write(*mop.rec, op.ts, reg.fun(op.fun->id)(src, op.fun->args));
                ++stats.versions_created;
                mark_applied(op);
                break;
            }
        }
        ++stats.ops_executed;
        trace(sink, {TraceKind::OpApplied, worker, op.ts, op.target, 0, 0});
    }
}

}  // namespace

void walk_unit(const EvalUnit& unit, const FunctionRegistry& reg, std::uint32_t worker,
               WalkStats& stats, TraceSink* sink) {
    if (unit.solo)
        walk_solo(unit.solo, reg, worker, stats, sink);
    else
        walk_merged(unit.merged, reg, worker, stats, sink);
}

bool BatchEval::decide_after_pass() {
    outcome.versions_peak = std::max(outcome.versions_peak, pass_versions.exchange(0));
    ++outcome.rounds;

    std::vector<TxnEntry*> failing;
    for (auto* e : *entries)
        if (!e->excluded && e->failed.load(std::memory_order_relaxed)) failing.push_back(e);
    if (failing.empty()) {
        replay = false;
        return false;
    }

    Timestamp earliest_writer{~0ull};
    bool any_writer = false;
    for (auto* e : failing) {
        if (e->applied_any.load(std::memory_order_relaxed)) {
            any_writer = true;
            earliest_writer = std::min(earliest_writer, e->ts);
        }
    }

    if (!any_writer) {
        // Nothing these transactions did reached the store, so none of the
        // failures can be an artifact of another failure: all are final and
        // the surviving state is already correct.
        for (auto* e : failing) {
            e->excluded = true;
            ++outcome.excluded;
            trace(trace_sink, {TraceKind::TxnExcluded, 0, e->ts, {}, 0, 0});
        }
        replay = false;
        return false;
    }

    // Failures after the earliest write-applying failure may have read
    // contaminated values; only the prefix is final. Undo the batch and
    // re-evaluate without the newly excluded transactions.
    for (auto* e : failing) {
        if (e->ts <= earliest_writer) {
            e->excluded = true;
            ++outcome.excluded;
            trace(trace_sink, {TraceKind::TxnExcluded, 0, e->ts, {}, 0, 0});
        }
    }
    for (auto* chain : plan->chains) reset_record(*chain->record);
    for (auto* e : *entries) {
        e->failed.store(false, std::memory_order_relaxed);
        e->applied_any.store(false, std::memory_order_relaxed);
    }
    plan->reset_cursors();
    replay = true;
    return true;
}

void BatchEval::collect_garbage() {
    for (auto* chain : plan->chains) gc_record(*chain->record);
}

void evaluate_batch(BatchEval& ev, std::uint32_t worker, WorkerMetrics& metrics) {
    const bool leader = worker == 0;
    const std::uint32_t pools = pool_count(ev.placement, ev.workers);
    const std::uint32_t home = home_pool(ev.placement, ev.workers, worker);
    const bool steal = ev.placement.steal;

    while (true) {
        for (auto& level : ev.plan->levels) {
            WalkStats stats;
            {
                ScopedTimer t(metrics.breakdown.useful_ns);
                for (std::uint32_t probe = 0; probe < pools; ++probe) {
                    std::uint32_t p = (home + probe) % pools;
                    if (probe > 0 && !steal) break;
                    auto& units = level.pools[p];
                    auto& cursor = level.cursors[p].v;
                    while (true) {
                        std::uint32_t i = cursor.fetch_add(1, std::memory_order_relaxed);
                        if (i >= units.size()) break;
                        walk_unit(units[i], *ev.reg, worker, stats, ev.trace_sink);
                    }
                }
            }
            metrics.versions_created += stats.versions_created;
            ev.pass_versions.fetch_add(stats.versions_created, std::memory_order_relaxed);
            {
                ScopedTimer t(metrics.breakdown.sync_ns);
                ev.barrier->arrive_and_wait();
            }
        }
        // The leader settles the verdict and, when the batch is final, also
        // collects garbage before the shared rendezvous — one barrier serves
        // as both decision publication and batch completion.
        if (leader) {
            ScopedTimer t(metrics.breakdown.others_ns);
            if (!ev.decide_after_pass()) {
                ev.collect_garbage();
                trace(ev.trace_sink, {TraceKind::BatchEvaluated, worker, Timestamp{0}, {},
                                      ev.outcome.rounds, ev.entries->size()});
                if (ev.leader_epilogue) ev.leader_epilogue();
            }
        }
        {
            ScopedTimer t(metrics.breakdown.sync_ns);
            ev.barrier->arrive_and_wait();
        }
        if (!ev.replay) break;
    }
}

}  // namespace streamtx
