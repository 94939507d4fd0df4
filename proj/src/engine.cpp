#include "streamtx/engine.hpp"

#include <algorithm>
#include <thread>

namespace streamtx {

namespace {

// One postponed event: the cached (event, blotter) pair plus its
// transaction's evaluation state. Lives in a per-executor deque so addresses
// stay stable for the whole batch.
struct Cached {
    Event ev;
    EventBlotter eb;
    TxnEntry entry;
};

struct EngineState {
    const EngineConfig& cfg;
    StateStore& store;
    const FunctionRegistry& reg;
    OperatorLogic& logic;
    PayloadSource& source;

    PlacementConfig placement;
    std::vector<std::unique_ptr<EventQueue>> queues;
    Barrier barrier;
    TimestampAllocator alloc;

    std::unique_ptr<ChainIndex> chains;
    BatchPlan plan;
    std::vector<TxnEntry*> entries;
    BatchEval eval;
    std::vector<std::deque<Cached>*> caches;
    std::uint64_t batches = 0, rounds = 0, excluded = 0, versions_peak = 0;

    std::unique_ptr<BaselineRuntime> baseline;

    std::vector<WorkerMetrics> wm;
    std::atomic<bool> failed{false};
    std::mutex fail_mu;
    std::string fail_reason;

    EngineState(const EngineConfig& c, StateStore& s, const FunctionRegistry& r, OperatorLogic& l,
                PayloadSource& src)
        : cfg(c),
          store(s),
          reg(r),
          logic(l),
          source(src),
          placement(resolve_placement(c.placement, c.threads)),
          barrier(c.threads),
          caches(c.threads, nullptr),
          wm(c.threads) {
        for (std::uint32_t i = 0; i < c.threads; ++i)
            queues.push_back(std::make_unique<EventQueue>(c.queue_capacity));
        if (c.scheme == Scheme::TStream) {
            chains = std::make_unique<ChainIndex>(&store, placement, c.threads);
            eval.reg = &reg;
            eval.barrier = &barrier;
            eval.trace_sink = c.trace;
            eval.placement = placement;
            eval.workers = c.threads;
            eval.leader_epilogue = [this] {
                chains->clear();
                ++batches;
                rounds += eval.outcome.rounds;
                excluded += eval.outcome.excluded;
                versions_peak = std::max(versions_peak, eval.outcome.versions_peak);
            };
        } else {
            std::uint32_t parts = c.partitions == 0 ? c.threads : c.partitions;
            baseline =
                std::make_unique<BaselineRuntime>(c.scheme, &store, &reg, c.threads, parts);
        }
    }

    void fail(const std::string& why) {
        {
            std::lock_guard<std::mutex> g(fail_mu);
            if (fail_reason.empty()) fail_reason = why;
        }
        failed.store(true);
        barrier.poison(why);
        for (auto& q : queues) q->abort();
    }
};

void ingest_loop(EngineState& st) {
    try {
        AppPayload payload;
        std::uint64_t sent = 0;
        const std::uint32_t n = st.cfg.threads;
        // Data events accumulate per worker and ship as whole blocks so the
        // queue mutex is crossed once per kIngressBlock events, not per event.
        std::vector<std::vector<Event>> pending(n);
        for (auto& p : pending) p.reserve(kIngressBlock);
        auto flush = [&](std::uint32_t i) {
            if (pending[i].empty()) return;
            st.queues[i]->push_block(std::move(pending[i]));
            pending[i] = {};
            pending[i].reserve(kIngressBlock);
        };
        auto broadcast_punctuation = [&] {
            Timestamp ts = st.alloc.allocate();  // punctuations consume stream timestamps
            for (std::uint32_t i = 0; i < n; ++i) {
                flush(i);  // every event of the closing batch must land first
                st.queues[i]->push(make_punctuation(ts));
            }
        };
        while (sent < st.cfg.events && st.source.next(payload)) {
            Event ev;
            ev.ts = st.alloc.allocate();
            ev.kind = EventKind::Data;
            ev.payload = std::move(payload);
            ev.ingest_ns = now_ns();
            std::uint32_t dst = std::uint32_t(sent % n);
            pending[dst].push_back(std::move(ev));
            if (pending[dst].size() == kIngressBlock) flush(dst);
            ++sent;
            if (sent % st.cfg.interval == 0) broadcast_punctuation();
        }
        broadcast_punctuation();  // close the final (possibly partial) batch
        for (auto& q : st.queues) q->push(make_end_of_stream());
    } catch (const std::exception& e) {
        st.fail(std::string("ingress thread: ") + e.what());
    }
}

// Punctuation handling under dual-mode scheduling: every executor enters
// state-access mode, the leader freezes the batch into a level plan, all
// workers evaluate it, and each executor then post-processes its own cached
// pairs before returning to compute mode.
void txn_start(EngineState& st, std::uint32_t w, std::deque<Cached>& cache) {
    WorkerMetrics& wm = st.wm[w];
    trace(st.cfg.trace, {TraceKind::ModeEnterStateAccess, w, Timestamp{0}, {}, st.batches, 0});
    {
        ScopedTimer t(wm.breakdown.sync_ns);
        st.barrier.arrive_and_wait();  // batch closed; decomposition quiescent
    }
    if (w == 0) {
        ScopedTimer t(wm.breakdown.others_ns);
        st.plan = st.chains->freeze();
        st.entries.clear();
        for (auto* c : st.caches)
            for (auto& cached : *c) st.entries.push_back(&cached.entry);
        st.eval.plan = &st.plan;
        st.eval.entries = &st.entries;
        st.eval.replay = false;
        st.eval.outcome = {};
        st.eval.pass_versions.store(0, std::memory_order_relaxed);
    }
    {
        ScopedTimer t(wm.breakdown.sync_ns);
        st.barrier.arrive_and_wait();  // plan published
    }
    evaluate_batch(st.eval, w, wm);

    for (auto& c : cache) {
        c.eb.status = c.entry.excluded ? TxnStatus::Rejected : TxnStatus::Committed;
        std::uint64_t out = st.logic.post_process(c.ev, c.eb);
        std::int64_t n = now_ns();
        wm.sink.push_back(
            {c.ev.ts.v, c.eb.status == TxnStatus::Committed, out, n - c.ev.ingest_ns, n});
    }
    cache.clear();
    trace(st.cfg.trace, {TraceKind::ModeExitStateAccess, w, Timestamp{0}, {}, st.batches, 0});
}

void executor_loop(EngineState& st, std::uint32_t w) {
    try {
        WorkerMetrics& wm = st.wm[w];
        TxnBuilder builder;
        std::deque<Cached> cache;
        st.caches[w] = &cache;  // published to the leader by the first rendezvous

        const bool tstream = st.cfg.scheme == Scheme::TStream;
        std::vector<Event> block;  // current block; pop_block never returns empty
        std::size_t next = 0;
        while (true) {
            if (next == block.size()) {
                block = st.queues[w]->pop_block();
                next = 0;
            }
            Event ev = std::move(block[next++]);
            if (ev.kind == EventKind::EndOfStream) break;
            if (ev.kind == EventKind::Punctuation) {
                if (tstream)
                    txn_start(st, w, cache);
                else
                    st.baseline->on_punctuation(ev.ts);
                continue;
            }
            if (tstream) {
                cache.emplace_back();
                Cached& c = cache.back();
                c.ev = std::move(ev);
                st.logic.pre_process(c.ev, c.eb);
                ScopedTimer t(wm.breakdown.others_ns);
                builder.begin(c.ev.ts, &c.eb);
                st.logic.state_access(c.ev, c.eb, builder);
                StateTransaction txn = builder.take();
                c.entry.ts = txn.ts;
                c.entry.blotter = &c.eb;
                c.entry.op_count = std::uint32_t(txn.ops.size());
                st.chains->decompose(std::move(txn), &c.entry);
                ++wm.txns;
            } else {
                EventBlotter eb;
                st.logic.pre_process(ev, eb);
                StateTransaction txn;
                {
                    ScopedTimer t(wm.breakdown.others_ns);
                    builder.begin(ev.ts, &eb);
                    st.logic.state_access(ev, eb, builder);
                    txn = builder.take();
                }
                st.baseline->execute(txn, w, wm, st.cfg.trace);
                ++wm.txns;
                std::uint64_t out = st.logic.post_process(ev, eb);
                std::int64_t n = now_ns();
                wm.sink.push_back(
                    {ev.ts.v, eb.status == TxnStatus::Committed, out, n - ev.ingest_ns, n});
            }
        }
    } catch (const std::exception& e) {
        st.fail("executor " + std::to_string(w) + ": " + e.what());
    }
}

double percentile_ms(std::vector<std::int64_t>& lat, double p) {
    if (lat.empty()) return 0.0;
    std::size_t k = std::size_t(p * double(lat.size() - 1));
    std::nth_element(lat.begin(), lat.begin() + k, lat.end());
    return double(lat[k]) / 1e6;
}

}  // namespace

std::uint64_t fold_result_digest(std::vector<SinkRecord>& recs) {
    std::sort(recs.begin(), recs.end(),
              [](const SinkRecord& a, const SinkRecord& b) { return a.ts < b.ts; });
    std::uint64_t h = mix64(0x135ea1);
    for (const auto& r : recs) {
        h = hash_combine(h, r.ts);
        h = hash_combine(h, r.committed ? 1 : 2);
        h = hash_combine(h, r.out_hash);
    }
    return h;
}

RunStats run_engine(const EngineConfig& cfg, StateStore& store, const FunctionRegistry& reg,
                    OperatorLogic& logic, PayloadSource& source) {
    if (cfg.threads == 0) throw ConfigError("threads must be >= 1");
    if (cfg.interval == 0) throw ConfigError("punctuation interval must be >= 1");
    EngineConfig ec = cfg;
    // Default: roughly one batch of blocks in flight per queue, so ingress
    // stays a batch ahead of the executors but no further.
    if (ec.queue_capacity == 0)
        ec.queue_capacity =
            std::max<std::size_t>(2, std::size_t(ec.interval) / ec.threads / kIngressBlock + 2);
    if (ec.queue_capacity < 2) throw ConfigError("queue capacity must be >= 2");

    EngineState st(ec, store, reg, logic, source);

    std::int64_t t0 = now_ns();
    std::vector<std::thread> threads;
    threads.reserve(cfg.threads + 1);
    for (std::uint32_t w = 0; w < cfg.threads; ++w)
        threads.emplace_back(executor_loop, std::ref(st), w);
    threads.emplace_back(ingest_loop, std::ref(st));
    for (auto& t : threads) t.join();
    std::int64_t t1 = now_ns();

    if (st.failed.load()) throw EngineAborted(st.fail_reason);
    if (st.baseline) st.baseline->finish_run();

    RunStats rs;
    std::vector<SinkRecord> all;
    for (auto& w : st.wm) {
        rs.breakdown += w.breakdown;
        rs.txns += w.txns;
        all.insert(all.end(), w.sink.begin(), w.sink.end());
    }
    rs.events = all.size();
    for (const auto& r : all) (r.committed ? rs.committed : rs.rejected)++;

    std::uint64_t warmup = cfg.warmup == UINT64_MAX ? cfg.events / 10 : cfg.warmup;
    if (warmup >= rs.events) warmup = 0;
    std::sort(all.begin(), all.end(),
              [](const SinkRecord& a, const SinkRecord& b) { return a.emit_ns < b.emit_ns; });
    if (rs.events > 0) {
        std::int64_t start = warmup > 0 ? all[warmup - 1].emit_ns : t0;
        std::int64_t end = all.back().emit_ns;
        std::int64_t dt = std::max<std::int64_t>(end - start, 1);
        rs.throughput_eps = double(rs.events - warmup) * 1e9 / double(dt);
        std::vector<std::int64_t> lat;
        lat.reserve(rs.events - warmup);
        for (std::size_t i = warmup; i < all.size(); ++i) lat.push_back(all[i].latency_ns);
        rs.p50_ms = percentile_ms(lat, 0.50);
        rs.p95_ms = percentile_ms(lat, 0.95);
        rs.p99_ms = percentile_ms(lat, 0.99);
    }

    rs.result_digest = fold_result_digest(all);
    rs.table_digests = store.digests();
    rs.batches = st.batches;
    rs.rounds = st.rounds;
    rs.excluded = st.excluded;
    rs.versions_peak = st.versions_peak;
    rs.wall_ns = t1 - t0;
    return rs;
}

}  // namespace streamtx
