#include "streamtx/baselines.hpp"

#include <algorithm>
#include <thread>

namespace streamtx {

// ---------------------------------------------------------------------------
// PermitGate
// ---------------------------------------------------------------------------

void PermitGate::wait_for(std::uint64_t ts) {
    std::unique_lock<std::mutex> lk(mu_);
    cv_.wait(lk, [&] { return next_ == ts; });
}

void PermitGate::advance() {
    std::lock_guard<std::mutex> g(mu_);
    ++next_;
    drain_skips_locked();
    cv_.notify_all();
}

void PermitGate::skip(std::uint64_t ts) {
    std::lock_guard<std::mutex> g(mu_);
    if (ts < next_) return;  // duplicate broadcast copy, already passed
    skips_.insert(ts);
    drain_skips_locked();
    cv_.notify_all();
}

std::uint64_t PermitGate::next() const {
    std::lock_guard<std::mutex> g(mu_);
    return next_;
}

void PermitGate::drain_skips_locked() {
    auto it = skips_.begin();
    while (it != skips_.end() && *it == next_) {
        it = skips_.erase(it);
        ++next_;
    }
}

// ---------------------------------------------------------------------------
// LockManager
// ---------------------------------------------------------------------------

LockManager::LockManager(std::uint32_t shards) : shards_(shards) {}

LockManager::Shard& LockManager::shard_of(const StateRef& ref) {
    return shards_[state_hash(ref.table, ref.key) % shards_.size()];
}

bool LockManager::granted(const std::deque<Claim>& q, std::uint64_t ts) {
    bool first = true;
    for (const auto& c : q) {
        if (c.ts == ts) return first || !c.exclusive;
        if (c.exclusive) return false;
        first = false;
    }
    return false;  // claim not found: not yet enqueued
}

void LockManager::enqueue(const StateRef& ref, std::uint64_t ts, bool exclusive) {
    Shard& s = shard_of(ref);
    std::lock_guard<std::mutex> g(s.mu);
    s.queues[ref].push_back(Claim{ts, exclusive});
}

void LockManager::wait_granted(const StateRef& ref, std::uint64_t ts) {
    Shard& s = shard_of(ref);
    std::unique_lock<std::mutex> lk(s.mu);
    s.cv.wait(lk, [&] { return granted(s.queues[ref], ts); });
}

void LockManager::release(const StateRef& ref, std::uint64_t ts) {
    Shard& s = shard_of(ref);
    std::lock_guard<std::mutex> g(s.mu);
    auto it = s.queues.find(ref);
    auto& q = it->second;
    for (auto c = q.begin(); c != q.end(); ++c) {
        if (c->ts == ts) {
            q.erase(c);
            break;
        }
    }
    if (q.empty()) s.queues.erase(it);
    s.cv.notify_all();
}

// ---------------------------------------------------------------------------
// MvlkManager
// ---------------------------------------------------------------------------

MvlkManager::MvlkManager(StateStore* store, std::uint32_t executors, std::uint32_t shards)
    : store_(store), shards_(shards), active_(executors) {
    // Every record stays versioned for the whole run so an aborting writer can
    // surgically drop its version; finish_run promotes and clears the mode.
    for (std::size_t t = 0; t < store_->table_count(); ++t) {
        Table& tab = store_->table(TableId{std::uint16_t(t)});
        for (std::size_t i = 0; i < tab.size(); ++i) tab.row(std::uint32_t(i)).multiversion = true;
    }
}

MvlkManager::Shard& MvlkManager::shard_of(const StateRef& ref) {
    return shards_[state_hash(ref.table, ref.key) % shards_.size()];
}

std::uint64_t MvlkManager::min_active() const {
    std::uint64_t m = ~0ull;
    for (const auto& a : active_) m = std::min(m, a.v.load());
    return m;
}

void MvlkManager::register_writes(const std::vector<StateRef>& writes, std::uint64_t ts) {
    for (const auto& ref : writes) {
        Shard& s = shard_of(ref);
        std::lock_guard<std::mutex> g(s.mu);
        s.writers[ref].push_back(ts);
    }
}

void MvlkManager::set_active(std::uint32_t executor, std::uint64_t ts) {
    active_[executor].v.store(ts);
}

void MvlkManager::clear_active(std::uint32_t executor) {
    active_[executor].v.store(~0ull);
}

RecordValue MvlkManager::read_value(const StateRef& ref, std::uint64_t ts, bool own,
                                    std::int64_t& wait_ns) {
    VersionedRecord& rec = store_->at(ref);
    Shard& s = shard_of(ref);
    std::unique_lock<std::mutex> lk(s.mu);
    {
        ScopedTimer t(wait_ns);
        s.cv.wait(lk, [&] {
            auto it = s.writers.find(ref);
            return it == s.writers.end() || it->second.empty() || it->second.front() >= ts;
        });
    }
    return read_visible(rec, Timestamp{ts}, own);
}

RecordValue MvlkManager::read_summary(const StateRef& ref, std::uint64_t ts, bool own,
                                      std::int64_t& wait_ns) {
    VersionedRecord& rec = store_->at(ref);
    Shard& s = shard_of(ref);
    std::unique_lock<std::mutex> lk(s.mu);
    {
        ScopedTimer t(wait_ns);
        s.cv.wait(lk, [&] {
            auto it = s.writers.find(ref);
            return it == s.writers.end() || it->second.empty() || it->second.front() >= ts;
        });
    }
    return slot_summary(read_visible(rec, Timestamp{ts}, own));
}

void MvlkManager::write(const StateRef& ref, std::uint64_t ts, RecordValue value,
                        std::int64_t& wait_ns) {
    VersionedRecord& rec = store_->at(ref);
    Shard& s = shard_of(ref);
    std::unique_lock<std::mutex> lk(s.mu);
    {
        ScopedTimer t(wait_ns);
        s.cv.wait(lk, [&] {
            auto it = s.writers.find(ref);
            return it != s.writers.end() && !it->second.empty() && it->second.front() == ts;
        });
    }
    apply_write(rec, Timestamp{ts}, std::move(value));
    if (rec.extra_versions.size() > 64) prune_locked(rec);
}

void MvlkManager::rollback(const std::vector<StateRef>& written, std::uint64_t ts) {
    for (const auto& ref : written) {
        Shard& s = shard_of(ref);
        std::lock_guard<std::mutex> g(s.mu);
        rollback_write(store_->at(ref), Timestamp{ts});
    }
}

void MvlkManager::finish_writes(const std::vector<StateRef>& writes, std::uint64_t ts) {
    for (const auto& ref : writes) {
        Shard& s = shard_of(ref);
        std::unique_lock<std::mutex> g(s.mu);
        // A rejecting transaction skips its later writes, so it may reach here
        // before earlier writers on the key have finished; wait for headship
        // just like write() does instead of popping out of order.
        s.cv.wait(g, [&] {
            auto it = s.writers.find(ref);
            return it != s.writers.end() && !it->second.empty() && it->second.front() == ts;
        });
        auto it = s.writers.find(ref);
        auto& q = it->second;
        q.pop_front();
        if (q.empty()) s.writers.erase(it);
        s.cv.notify_all();
    }
}

// Promotes versions no in-flight or future transaction can ever read.
void MvlkManager::prune_locked(VersionedRecord& rec) {
    std::uint64_t floor = min_active();
    auto& vs = rec.extra_versions;
    std::size_t keep_from = 0;
    while (keep_from < vs.size() && vs[keep_from].ts.v < floor) ++keep_from;
    if (keep_from == 0) return;
    rec.committed = std::move(vs[keep_from - 1].value);
    rec.committed_ts = std::int64_t(vs[keep_from - 1].ts.v);
    vs.erase(vs.begin(), vs.begin() + std::ptrdiff_t(keep_from));
}

// ---------------------------------------------------------------------------
// PatGate
// ---------------------------------------------------------------------------

PatGate::PatGate(std::uint32_t partitions) : parts_(partitions) {
    if (partitions == 0) throw ConfigError("partition count must be >= 1");
}

void PatGate::register_txn(const std::vector<std::uint32_t>& parts, std::uint64_t ts) {
    for (auto p : parts) {
        std::lock_guard<std::mutex> g(parts_[p].mu);
        parts_[p].q.push_back(ts);
    }
}

void PatGate::wait_turn(const std::vector<std::uint32_t>& parts, std::uint64_t ts) {
    for (auto p : parts) {
        std::unique_lock<std::mutex> lk(parts_[p].mu);
        parts_[p].cv.wait(lk, [&] { return parts_[p].q.front() == ts; });
    }
}

void PatGate::finish(const std::vector<std::uint32_t>& parts, std::uint64_t ts) {
    for (auto p : parts) {
        std::lock_guard<std::mutex> g(parts_[p].mu);
        if (parts_[p].q.empty() || parts_[p].q.front() != ts)
            throw OrderViolation("partition queue head mismatch on finish");
        parts_[p].q.pop_front();
        parts_[p].cv.notify_all();
    }
}

// ---------------------------------------------------------------------------
// NoLockLatches
// ---------------------------------------------------------------------------

NoLockLatches::NoLockLatches(StateStore* store) : store_(store) {
    for (std::size_t t = 0; t < store->table_count(); ++t)
        latches_.emplace_back(store->table(TableId{std::uint16_t(t)}).size());
}

std::atomic<std::uint8_t>& NoLockLatches::latch_for(const StateRef& ref) {
    std::uint32_t row = store_->table(ref.table).row_of(ref.key);
    if (row == UINT32_MAX) throw KeyNotFound("latch for unknown key");
    return latches_[ref.table.value][row];
}

namespace {

inline void latch_acquire(std::atomic<std::uint8_t>& l) {
    int spins = 0;
    while (l.exchange(1, std::memory_order_acquire)) {
        if (++spins > 16) {
            std::this_thread::yield();
            spins = 0;
        }
    }
}

inline void latch_release(std::atomic<std::uint8_t>& l) {
    l.store(0, std::memory_order_release);
}

// Distinct (ref, exclusive) access list of a transaction, strongest mode
// wins. Includes condition guards and foreign modify sources as reads.
void collect_claims(const StateTransaction& txn, std::vector<std::pair<StateRef, bool>>& out) {
    auto add = [&](const StateRef& r, bool exclusive) {
        for (auto& c : out) {
            if (c.first == r) {
                c.second = c.second || exclusive;
                return;
            }
        }
        out.emplace_back(r, exclusive);
    };
    for (const auto& op : txn.ops) {
        add(op.target, op.kind != OpKind::Read);
        if (op.cond && !op.cond->same_key) add(op.cond->target, false);
        if (op.fun && !op.fun->src_is_self) add(op.fun->src, false);
    }
}

// Distinct write-class targets in program order.
void collect_writes(const StateTransaction& txn, std::vector<StateRef>& out) {
    for (const auto& op : txn.ops) {
        if (op.kind == OpKind::Read) continue;
        if (std::find(out.begin(), out.end(), op.target) == out.end()) out.push_back(op.target);
    }
}

// True when an earlier op of the same transaction writes `ref`.
bool writes_before(const StateTransaction& txn, std::size_t i, const StateRef& ref) {
    for (std::size_t j = 0; j < i; ++j)
        if (txn.ops[j].kind != OpKind::Read && txn.ops[j].target == ref) return true;
    return false;
}

}  // namespace

// ---------------------------------------------------------------------------
// BaselineRuntime
// ---------------------------------------------------------------------------

BaselineRuntime::BaselineRuntime(Scheme scheme, StateStore* store, const FunctionRegistry* reg,
                                 std::uint32_t executors, std::uint32_t partitions)
    : scheme_(scheme), store_(store), reg_(reg) {
    switch (scheme) {
        case Scheme::Lock: locks_ = std::make_unique<LockManager>(); break;
        case Scheme::Mvlk: mvlk_ = std::make_unique<MvlkManager>(store, executors); break;
        case Scheme::Pat: pat_ = std::make_unique<PatGate>(partitions); break;
        case Scheme::NoLock: latches_ = std::make_unique<NoLockLatches>(store); break;
        case Scheme::TStream: throw ConfigError("baseline runtime cannot run the engine scheme");
    }
}

void BaselineRuntime::on_punctuation(Timestamp ts) {
    if (scheme_ != Scheme::NoLock) gate_.skip(ts.v);
}

void BaselineRuntime::finish_run() {
    if (scheme_ != Scheme::Mvlk) return;
    for (std::size_t t = 0; t < store_->table_count(); ++t) {
        Table& tab = store_->table(TableId{std::uint16_t(t)});
        for (std::size_t i = 0; i < tab.size(); ++i) gc_record(tab.row(std::uint32_t(i)));
    }
}

// Program-order in-place execution with an undo log; the common core of the
// locking, partitioned and unsynchronized baselines. `latched` guards every
// record access with its per-record latch (no-lock memory safety).
TxnStatus BaselineRuntime::exec_inplace(StateTransaction& txn, WorkerMetrics&, bool latched) {
    struct Undo {
        VersionedRecord* rec;
        std::atomic<std::uint8_t>* latch;  // null when unlatched
        RecordValue val;
        std::int64_t ts;
    };
    std::vector<Undo> undo;
    EventBlotter& eb = *txn.blotter;

    auto fail = [&] {
        for (auto it = undo.rbegin(); it != undo.rend(); ++it) {
            if (it->latch) latch_acquire(*it->latch);
            it->rec->committed = std::move(it->val);
            it->rec->committed_ts = it->ts;
            if (it->latch) latch_release(*it->latch);
        }
        eb.status = TxnStatus::Rejected;
        return TxnStatus::Rejected;
    };

    for (std::size_t i = 0; i < txn.ops.size(); ++i) {
        const Operation& op = txn.ops[i];
        if (op.cond) {
            VersionedRecord& rec = store_->at(op.cond->target);
            bool ok;
            if (latched) {
                auto& l = latches_->latch_for(op.cond->target);
                latch_acquire(l);
                ok = reg_->cond(op.cond->id)(rec.committed, op.cond->args);
                latch_release(l);
            } else {
                ok = reg_->cond(op.cond->id)(rec.committed, op.cond->args);
            }
            if (!ok) return fail();
        }
        VersionedRecord& rec = store_->at(op.target);
        switch (op.kind) {
            case OpKind::Read: {
                if (latched) {
                    auto& l = latches_->latch_for(op.target);
                    latch_acquire(l);
                    eb.results[op.slot] = slot_summary(rec.committed);
                    latch_release(l);
                } else {
                    eb.results[op.slot] = slot_summary(rec.committed);
                }
                break;
            }
            case OpKind::Write: {
                if (latched) {
                    auto& l = latches_->latch_for(op.target);
                    latch_acquire(l);
                    undo.push_back(Undo{&rec, &l, std::move(rec.committed), rec.committed_ts});
                    rec.committed = op.value;
                    rec.committed_ts = std::int64_t(op.ts.v);
                    latch_release(l);
                } else {
                    undo.push_back(Undo{&rec, nullptr, std::move(rec.committed), rec.committed_ts});
                    rec.committed = op.value;
                    rec.committed_ts = std::int64_t(op.ts.v);
                }
                break;
            }
            case OpKind::ReadModify: {
                if (op.fun->src_is_self) {
                    if (latched) {
                        auto& l = latches_->latch_for(op.target);
                        latch_acquire(l);
                        eb.results[op.slot] = slot_summary(rec.committed);
                        undo.push_back(Undo{&rec, &l, rec.committed, rec.committed_ts});
                        rec.committed = reg_->fun(op.fun->id)(std::move(rec.committed), op.fun->args);
                        rec.committed_ts = std::int64_t(op.ts.v);
                        latch_release(l);
                    } else {
                        eb.results[op.slot] = slot_summary(rec.committed);
                        undo.push_back(Undo{&rec, nullptr, rec.committed, rec.committed_ts});
                        rec.committed = reg_->fun(op.fun->id)(std::move(rec.committed), op.fun->args);
                        rec.committed_ts = std::int64_t(op.ts.v);
                    }
                } else {
                    RecordValue src;
                    VersionedRecord& srec = store_->at(op.fun->src);
                    if (latched) {
                        auto& l = latches_->latch_for(op.fun->src);
                        latch_acquire(l);
                        src = srec.committed;
                        latch_release(l);
                    } else {
                        src = srec.committed;
                    }
                    eb.results[op.slot] = slot_summary(src);
                    RecordValue next = reg_->fun(op.fun->id)(std::move(src), op.fun->args);
                    if (latched) {
                        auto& l = latches_->latch_for(op.target);
                        latch_acquire(l);
                        undo.push_back(Undo{&rec, &l, std::move(rec.committed), rec.committed_ts});
                        rec.committed = std::move(next);
                        rec.committed_ts = std::int64_t(op.ts.v);
                        latch_release(l);
                    } else {
                        undo.push_back(Undo{&rec, nullptr, std::move(rec.committed), rec.committed_ts});
                        rec.committed = std::move(next);
                        rec.committed_ts = std::int64_t(op.ts.v);
                    }
                }
                break;
            }
        }
    }
    eb.status = TxnStatus::Committed;
    return TxnStatus::Committed;
}

TxnStatus BaselineRuntime::exec_mvlk(StateTransaction& txn, std::uint32_t executor,
                                     WorkerMetrics& wm) {
    const std::uint64_t ts = txn.ts.v;
    EventBlotter& eb = *txn.blotter;
    std::vector<StateRef> writes;
    collect_writes(txn, writes);

    {
        ScopedTimer t(wm.breakdown.lock_ns);
        mvlk_->set_active(executor, ts);
        mvlk_->register_writes(writes, ts);
        gate_.advance();
    }

    std::int64_t waits = 0;
    std::int64_t body_start = now_ns();
    TxnStatus status = TxnStatus::Committed;
    for (std::size_t i = 0; i < txn.ops.size(); ++i) {
        const Operation& op = txn.ops[i];
        if (op.cond) {
            RecordValue guard = mvlk_->read_value(
                op.cond->target, ts,
                op.cond->same_key ? writes_before(txn, i, op.cond->target) : op.cond->reads_own_write,
                waits);
            if (!reg_->cond(op.cond->id)(guard, op.cond->args)) {
                mvlk_->rollback(writes, ts);
                status = TxnStatus::Rejected;
                break;
            }
        }
        switch (op.kind) {
            case OpKind::Read:
                eb.results[op.slot] =
                    mvlk_->read_summary(op.target, ts, writes_before(txn, i, op.target), waits);
                break;
            case OpKind::Write:
                mvlk_->write(op.target, ts, op.value, waits);
                break;
            case OpKind::ReadModify: {
                RecordValue src =
                    op.fun->src_is_self
                        ? mvlk_->read_value(op.target, ts, writes_before(txn, i, op.target), waits)
                        : mvlk_->read_value(op.fun->src, ts, op.fun->reads_own_write, waits);
                eb.results[op.slot] = slot_summary(src);
                mvlk_->write(op.target, ts, reg_->fun(op.fun->id)(std::move(src), op.fun->args),
                             waits);
                break;
            }
        }
    }
    std::int64_t body = now_ns() - body_start;
    wm.breakdown.sync_ns += waits;
    wm.breakdown.useful_ns += std::max<std::int64_t>(body - waits, 0);

    {
        ScopedTimer t(wm.breakdown.lock_ns);
        mvlk_->finish_writes(writes, ts);
        mvlk_->clear_active(executor);
    }
    eb.status = status;
    return status;
}

TxnStatus BaselineRuntime::execute(StateTransaction& txn, std::uint32_t executor,
                                   WorkerMetrics& wm, TraceSink* sink) {
    const std::uint64_t ts = txn.ts.v;
    switch (scheme_) {
        case Scheme::Lock: {
            {
                ScopedTimer t(wm.breakdown.sync_ns);
                gate_.wait_for(ts);
            }
            trace(sink, {TraceKind::TxnAdmitted, executor, txn.ts, {}, 0, 0});
            std::vector<std::pair<StateRef, bool>> claims;
            {
                ScopedTimer t(wm.breakdown.lock_ns);
                collect_claims(txn, claims);
                for (const auto& [ref, ex] : claims) locks_->enqueue(ref, ts, ex);
                gate_.advance();
            }
            {
                ScopedTimer t(wm.breakdown.sync_ns);
                for (const auto& [ref, ex] : claims) locks_->wait_granted(ref, ts);
            }
            TxnStatus status;
            {
                ScopedTimer t(wm.breakdown.useful_ns);
                status = exec_inplace(txn, wm, false);
            }
            {
                ScopedTimer t(wm.breakdown.lock_ns);
                for (const auto& [ref, ex] : claims) locks_->release(ref, ts);
            }
            return status;
        }
        case Scheme::Mvlk: {
            {
                ScopedTimer t(wm.breakdown.sync_ns);
                gate_.wait_for(ts);
            }
            trace(sink, {TraceKind::TxnAdmitted, executor, txn.ts, {}, 0, 0});
            return exec_mvlk(txn, executor, wm);
        }
        case Scheme::Pat: {
            {
                ScopedTimer t(wm.breakdown.sync_ns);
                gate_.wait_for(ts);
            }
            trace(sink, {TraceKind::TxnAdmitted, executor, txn.ts, {}, 0, 0});
            std::vector<std::uint32_t> parts;
            {
                ScopedTimer t(wm.breakdown.lock_ns);
                auto add = [&](const StateRef& r) {
                    std::uint32_t p = partition_of(r.table, r.key, pat_->partition_count());
                    if (std::find(parts.begin(), parts.end(), p) == parts.end()) parts.push_back(p);
                };
                for (const auto& op : txn.ops) {
                    add(op.target);
                    if (op.cond && !op.cond->same_key) add(op.cond->target);
                    if (op.fun && !op.fun->src_is_self) add(op.fun->src);
                }
                std::sort(parts.begin(), parts.end());
                pat_->register_txn(parts, ts);
                gate_.advance();
            }
            {
                ScopedTimer t(wm.breakdown.sync_ns);
                pat_->wait_turn(parts, ts);
            }
            TxnStatus status;
            {
                ScopedTimer t(wm.breakdown.useful_ns);
                status = exec_inplace(txn, wm, false);
            }
            {
                ScopedTimer t(wm.breakdown.lock_ns);
                pat_->finish(parts, ts);
            }
            return status;
        }
        case Scheme::NoLock: {
            ScopedTimer t(wm.breakdown.useful_ns);
            return exec_inplace(txn, wm, true);
        }
        case Scheme::TStream: break;
    }
    throw ConfigError("unreachable baseline scheme");
}

}  // namespace streamtx
