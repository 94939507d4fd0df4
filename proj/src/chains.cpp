#include "streamtx/chains.hpp"

#include <algorithm>

namespace streamtx {

ChainIndex::ChainIndex(StateStore* store, PlacementConfig placement, std::uint32_t workers)
    : store_(store), placement_(placement), workers_(workers), shards_(kShards) {}

OperationChain* ChainIndex::acquire(Shard& sh, const StateRef& ref) {
    OperationChain* c;
    if (sh.used < sh.arena.size()) {
        c = &sh.arena[sh.used];
        c->ops.clear();
        c->deps.clear();
        c->is_dependency_source = false;
        c->scc_index = UINT32_MAX;
        c->scc_low = 0;
        c->on_stack = false;
        c->unit = UINT32_MAX;
        c->order = 0;
    } else {
        sh.arena.emplace_back();
        c = &sh.arena.back();
    }
    ++sh.used;
    c->key = ref;
    c->record = &store_->at(ref);
    c->pool = pool_of(placement_, workers_, ref);
    return c;
}

void ChainIndex::grow(Shard& sh) {
    constexpr std::size_t kInitialSlots = 256;
    std::vector<Slot> old = std::move(sh.table);
    sh.table.assign(old.empty() ? kInitialSlots : old.size() * 2, Slot{});
    const std::size_t mask = sh.table.size() - 1;
    for (const Slot& s : old) {
        if (!s.chain) continue;
        std::size_t i = (state_hash(s.ref.table, s.ref.key) >> 6) & mask;
        while (sh.table[i].chain) i = (i + 1) & mask;
        sh.table[i] = s;
    }
}

OperationChain* ChainIndex::get_or_create(const StateRef& ref) {
    // The low bits pick the shard, so probe with the high bits.
    const std::uint64_t h = state_hash(ref.table, ref.key);
    Shard& sh = shards_[h % kShards];
    std::lock_guard<std::mutex> g(sh.mu);
    if ((sh.used + 1) * 2 > sh.table.size()) grow(sh);
    const std::size_t mask = sh.table.size() - 1;
    std::size_t i = (h >> 6) & mask;
    while (sh.table[i].chain) {
        if (sh.table[i].ref == ref) return sh.table[i].chain;
        i = (i + 1) & mask;
    }
    OperationChain* c = acquire(sh, ref);
    sh.table[i] = Slot{ref, c};
    return c;
}

void ChainIndex::decompose(StateTransaction&& txn, TxnEntry* entry) {
    for (auto& op : txn.ops) {
        op.entry = entry;
        OperationChain* own = get_or_create(op.target);
        OperationChain* dep_cond = nullptr;
        OperationChain* dep_src = nullptr;
        if (op.cond && !op.cond->same_key) {
            dep_cond = get_or_create(op.cond->target);
            op.cond->target_rec = dep_cond->record;
        }
        if (op.fun && !op.fun->src_is_self) {
            dep_src = get_or_create(op.fun->src);
            op.fun->src_rec = dep_src->record;
        }
        // A source this transaction writes again after the read must walk
        // interleaved with the reader: the reverse edge closes a cycle that
        // freeze() merges into one (ts, seq)-ordered unit.
        if (dep_cond && dep_cond != own && op.cond->written_later) {
            std::lock_guard<std::mutex> g(dep_cond->mu);
            dep_cond->deps.push_back(own);
        }
        if (dep_src && dep_src != own && op.fun->written_later) {
            std::lock_guard<std::mutex> g(dep_src->mu);
            dep_src->deps.push_back(own);
        }
        std::lock_guard<std::mutex> g(own->mu);
        if (dep_cond && dep_cond != own) own->deps.push_back(dep_cond);
        if (dep_src && dep_src != own) own->deps.push_back(dep_src);
        own->ops.push_back(std::move(op));
    }
    txn.ops.clear();
}

std::size_t ChainIndex::chain_count() const {
    std::size_t n = 0;
    for (const auto& sh : shards_) n += sh.used;
    return n;
}

BatchPlan ChainIndex::freeze() {
    BatchPlan plan;
    for (auto& sh : shards_) {
        for (std::size_t j = 0; j < sh.used; ++j) {
            OperationChain& chain = sh.arena[j];
            std::sort(chain.ops.begin(), chain.ops.end(), [](const Operation& a, const Operation& b) {
                return a.ts != b.ts ? a.ts < b.ts : a.seq < b.seq;
            });
            std::sort(chain.deps.begin(), chain.deps.end());
            chain.deps.erase(std::unique(chain.deps.begin(), chain.deps.end()), chain.deps.end());
            plan.op_count += chain.ops.size();
            chain.order = std::uint32_t(plan.chains.size());
            plan.chains.push_back(&chain);
        }
    }
    for (auto* chain : plan.chains) {
        for (auto* dep : chain->deps) {
            if (!dep->is_dependency_source) {
                dep->is_dependency_source = true;
                dep->record->multiversion = true;
                ++plan.dep_sources;
            }
        }
    }
    build_levels(plan, pool_count(placement_, workers_));
    return plan;
}

void ChainIndex::clear() {
    for (auto& sh : shards_) {
        std::fill(sh.table.begin(), sh.table.end(), Slot{});
        sh.used = 0;
    }
}

// ---------------------------------------------------------------------------
// Level construction
// ---------------------------------------------------------------------------

namespace {

// Iterative Tarjan over the dependency edges; assigns chain->unit so that
// every strongly connected component gets a distinct unit id.
std::uint32_t condense(BatchPlan& plan) {
    std::uint32_t next_index = 0, next_unit = 0;
    std::vector<OperationChain*> stack;
    struct Frame {
        OperationChain* chain;
        std::size_t dep_i;
    };
    std::vector<Frame> frames;

    for (auto* root : plan.chains) {
        if (root->scc_index != UINT32_MAX) continue;
        frames.push_back({root, 0});
        while (!frames.empty()) {
            Frame& f = frames.back();
            OperationChain* c = f.chain;
            if (f.dep_i == 0) {
                c->scc_index = c->scc_low = next_index++;
                c->on_stack = true;
                stack.push_back(c);
            }
            if (f.dep_i < c->deps.size()) {
                OperationChain* d = c->deps[f.dep_i++];
                if (d->scc_index == UINT32_MAX) {
                    frames.push_back({d, 0});
                } else if (d->on_stack) {
                    c->scc_low = std::min(c->scc_low, d->scc_index);
                }
            } else {
                if (c->scc_low == c->scc_index) {
                    while (true) {
                        OperationChain* m = stack.back();
                        stack.pop_back();
                        m->on_stack = false;
                        m->unit = next_unit;
                        if (m == c) break;
                    }
                    ++next_unit;
                }
                frames.pop_back();
                if (!frames.empty()) {
                    OperationChain* parent = frames.back().chain;
                    parent->scc_low = std::min(parent->scc_low, c->scc_low);
                }
            }
        }
    }
    return next_unit;
}

}  // namespace

void build_levels(BatchPlan& plan, std::uint32_t pools) {
    // Without dependency edges every chain is its own unit and the whole
    // batch is one level; skip the condensation and layering machinery.
    if (plan.dep_sources == 0) {
        plan.levels.assign(1, LevelPlan{});
        LevelPlan& lvl = plan.levels[0];
        lvl.pools.assign(pools, {});
        lvl.cursors.assign(pools, AtomicCursor{});
        for (auto* c : plan.chains) {
            EvalUnit unit;
            unit.solo = c;
            unit.pool = c->pool;
            lvl.pools[c->pool].push_back(unit);
        }
        return;
    }

    std::uint32_t unit_count = condense(plan);

    // Gather members per unit; multi-member units become merged groups.
    std::vector<std::vector<OperationChain*>> members(unit_count);
    for (auto* c : plan.chains) members[c->unit].push_back(c);

    // Distinct inter-unit dependency edges (dependent <- source).
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;  // (source unit, dependent unit)
    for (auto* c : plan.chains)
        for (auto* d : c->deps)
            if (d->unit != c->unit) edges.emplace_back(d->unit, c->unit);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    std::vector<std::uint32_t> indegree(unit_count, 0);
    for (auto& [src, dst] : edges) ++indegree[dst];

    std::vector<std::uint32_t> level(unit_count, 0);
    std::vector<std::uint32_t> ready;
    for (std::uint32_t u = 0; u < unit_count; ++u)
        if (indegree[u] == 0) ready.push_back(u);

    // edges are sorted by source unit, so the out-list of each source is a
    // contiguous run; index it once.
    std::vector<std::size_t> first_edge(unit_count + 1, edges.size());
    for (std::size_t i = edges.size(); i-- > 0;) first_edge[edges[i].first] = i;
    for (std::uint32_t u = unit_count; u-- > 0;)
        if (first_edge[u] == edges.size() && u + 1 <= unit_count)
            first_edge[u] = first_edge[u + 1];

    std::size_t processed = 0;
    std::uint32_t max_level = 0;
    while (!ready.empty()) {
        std::uint32_t u = ready.back();
        ready.pop_back();
        ++processed;
        max_level = std::max(max_level, level[u]);
        for (std::size_t i = first_edge[u]; i < edges.size() && edges[i].first == u; ++i) {
            std::uint32_t v = edges[i].second;
            level[v] = std::max(level[v], level[u] + 1);
            if (--indegree[v] == 0) ready.push_back(v);
        }
    }
    if (processed != unit_count)
        throw OrderViolation("dependency condensation left a cycle");

    plan.levels.assign(max_level + 1, LevelPlan{});
    for (auto& lvl : plan.levels) {
        lvl.pools.assign(pools, {});
        lvl.cursors.assign(pools, AtomicCursor{});
    }

    for (std::uint32_t u = 0; u < unit_count; ++u) {
        EvalUnit unit;
        auto& mem = members[u];
        if (mem.size() == 1) {
            unit.solo = mem[0];
            unit.pool = mem[0]->pool;
        } else {
            std::sort(mem.begin(), mem.end(),
                      [](const OperationChain* a, const OperationChain* b) { return a->key < b->key; });
            plan.merged_storage.emplace_back();
            MergedGroup& g = plan.merged_storage.back();
            g.members = mem;
            for (auto* c : mem)
                for (const auto& op : c->ops) g.ops.push_back({&op, c->record});
            std::sort(g.ops.begin(), g.ops.end(),
                      [](const MergedGroup::MergedOp& a, const MergedGroup::MergedOp& b) {
                          return a.op->ts != b.op->ts ? a.op->ts < b.op->ts : a.op->seq < b.op->seq;
                      });
            g.pool = mem[0]->pool;
            plan.merged_chains += std::uint32_t(mem.size());
            unit.merged = &g;
            unit.pool = g.pool;
        }
        plan.levels[level[u]].pools[unit.pool].push_back(unit);
    }
}

}  // namespace streamtx
