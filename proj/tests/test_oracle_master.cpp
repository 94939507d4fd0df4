#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <deque>
#include <vector>

#include "streamtx/functions.hpp"
#include "streamtx/oracle.hpp"
#include "streamtx/store.hpp"
#include "streamtx/txn_api.hpp"

using namespace streamtx;

namespace {

constexpr TableId kT{0};

StateRef ref(Key k) { return StateRef{kT, k}; }

struct Fixture {
    StateStore store;
    FunctionRegistry reg;
    TxnBuilder builder;
    std::deque<StateTransaction> txns;
    std::deque<EventBlotter> blotters;

    explicit Fixture(std::vector<std::pair<Key, RecordValue>> rows) {
        store.add_table("t", rows.size());
        for (auto& [k, v] : rows) store.table(kT).insert(k, std::move(v));
        register_standard_functions(reg);
    }

    // Builds one transaction at `ts` with `fill` issuing the operations.
    template <typename F>
    StateTransaction& make(std::uint64_t ts, F&& fill) {
        blotters.emplace_back();
        builder.begin(Timestamp{ts}, &blotters.back());
        fill(builder);
        txns.push_back(builder.take());
        return txns.back();
    }
};

}  // namespace

TEST_CASE("oracle applies operations in program order against committed state") {
    Fixture fx({{0, 3.0}, {1, 10.0}, {2, 1.0}});
    auto& txn = fx.make(5, [&](TxnBuilder& b) {
        b.issue_read(ref(0));
        b.issue_read_modify(ref(1), kFunAdd, FunArgs{5.0, 0.0, 0});
        b.issue_write(ref(2), 9.0);
        b.issue_read(ref(1));  // sees its own earlier modification
    });
    CHECK(oracle_execute(fx.store, fx.reg, txn) == TxnStatus::Committed);
    CHECK(fx.blotters[0].status == TxnStatus::Committed);
    CHECK(as_double(fx.blotters[0].results[0]) == 3.0);
    CHECK(as_double(fx.blotters[0].results[1]) == 10.0);  // pre-modification image
    CHECK(as_double(fx.blotters[0].results[2]) == 15.0);
    CHECK(as_double(fx.store.table(kT).at(1).committed) == 15.0);
    CHECK(as_double(fx.store.table(kT).at(2).committed) == 9.0);
    CHECK(fx.store.table(kT).at(2).committed_ts == 5);
}

TEST_CASE("a failed condition undoes the transaction's earlier writes") {
    Fixture fx({{0, 7.0}, {1, 10.0}});
    auto& txn = fx.make(3, [&](TxnBuilder& b) {
        b.issue_write(ref(0), 99.0);
        // guard: value of key 1 must be >= 100, which it is not
        b.issue_read_modify(ref(1), kFunSub, FunArgs{5.0, 0.0, 0}, kCondGe,
                            FunArgs{100.0, 0.0, 0}, ref(1));
    });
    CHECK(oracle_execute(fx.store, fx.reg, txn) == TxnStatus::Rejected);
    CHECK(fx.blotters[0].status == TxnStatus::Rejected);
    CHECK(as_double(fx.store.table(kT).at(0).committed) == 7.0);
    CHECK(fx.store.table(kT).at(0).committed_ts == -1);  // restored pre-run stamp
    CHECK(as_double(fx.store.table(kT).at(1).committed) == 10.0);
}

TEST_CASE("a condition failing on the first operation rejects cleanly") {
    Fixture fx({{0, 1.0}});
    auto& txn = fx.make(2, [&](TxnBuilder& b) {
        b.issue_read_modify(ref(0), kFunSub, FunArgs{5.0, 0.0, 0}, kCondGe,
                            FunArgs{5.0, 0.0, 0}, ref(0));
    });
    std::uint64_t before = fx.store.table(kT).digest();
    CHECK(oracle_execute(fx.store, fx.reg, txn) == TxnStatus::Rejected);
    CHECK(fx.store.table(kT).digest() == before);
}

TEST_CASE("batch execution ascends timestamps regardless of arrival order") {
    Fixture fx({{0, 100.0}});
    auto add = [&](double a) {
        return [&, a](TxnBuilder& b) { b.issue_read_modify(ref(0), kFunAdd, FunArgs{a, 0.0, 0}); };
    };
    auto& t30 = fx.make(30, add(4.0));
    auto& t10 = fx.make(10, add(1.0));
    auto& t20 = fx.make(20, add(2.0));
    std::vector<StateTransaction*> batch{&t30, &t10, &t20};
    oracle_execute_batch(fx.store, fx.reg, batch);
    // slots hold pre-images, so they expose the execution order
    CHECK(as_double(fx.blotters[1].results[0]) == 100.0);  // ts 10 first
    CHECK(as_double(fx.blotters[2].results[0]) == 101.0);  // then ts 20
    CHECK(as_double(fx.blotters[0].results[0]) == 103.0);  // ts 30 last
    CHECK(as_double(fx.store.table(kT).at(0).committed) == 107.0);
}

TEST_CASE("transfer shaped transactions reject without partial debits") {
    // Accounts can cover the transfer, assets cannot: the second debit's
    // guard fails after the first debit already applied.
    StateStore store;
    TableId acc = store.add_table("acc", 2);
    TableId ast = store.add_table("ast", 2);
    store.table(acc).insert(0, 30.0);
    store.table(acc).insert(1, 30.0);
    store.table(ast).insert(0, 5.0);
    store.table(ast).insert(1, 50.0);
    FunctionRegistry reg;
    register_standard_functions(reg);

    EventBlotter eb;
    TxnBuilder b;
    b.begin(Timestamp{1}, &eb);
    StateRef sacc{acc, 0}, dacc{acc, 1}, sast{ast, 0}, dast{ast, 1};
    b.issue_read_modify(sacc, kFunSub, FunArgs{20.0, 0.0, 0}, kCondGe, FunArgs{20.0, 0.0, 0},
                        sacc);
    b.issue_read_modify(sast, kFunSub, FunArgs{10.0, 0.0, 0}, kCondGe, FunArgs{10.0, 0.0, 0},
                        sast);
    b.issue_read_modify(dacc, kFunAdd, FunArgs{20.0, 0.0, 0}, kCondGe, FunArgs{0.0, 0.0, 0},
                        sacc);
    b.issue_read_modify(dast, kFunAdd, FunArgs{10.0, 0.0, 0}, kCondGe, FunArgs{0.0, 0.0, 0},
                        sast);
    StateTransaction txn = b.take();

    CHECK(oracle_execute(store, reg, txn) == TxnStatus::Rejected);
    CHECK(as_double(store.table(acc).at(0).committed) == 30.0);
    CHECK(as_double(store.table(acc).at(1).committed) == 30.0);
    CHECK(as_double(store.table(ast).at(0).committed) == 5.0);
    CHECK(as_double(store.table(ast).at(1).committed) == 50.0);
}

TEST_CASE("bid quantities never go negative across a bid storm") {
    Fixture fx({{0, PriceQty{50.0, 10.0}}});
    std::vector<StateTransaction*> batch;
    for (std::uint64_t ts = 0; ts < 10; ++ts) {
        auto& t = fx.make(ts, [&](TxnBuilder& b) {
            // bid price 60 for quantity 3; ok while price <= 60 and qty >= 3
            b.issue_read_modify(ref(0), kFunQtySub, FunArgs{3.0, 0.0, 0}, kCondBidOk,
                                FunArgs{60.0, 3.0, 0}, ref(0));
        });
        batch.push_back(&t);
    }
    oracle_execute_batch(fx.store, fx.reg, batch);
    int committed = 0;
    for (const auto& eb : fx.blotters)
        if (eb.status == TxnStatus::Committed) ++committed;
    CHECK(committed == 3);  // 10 -> 7 -> 4 -> 1, then every bid fails
    const auto& pq = std::get<PriceQty>(fx.store.table(kT).at(0).committed);
    CHECK(pq.qty == 1.0);
    CHECK(pq.qty >= 0.0);
    CHECK(pq.price == 50.0);
}

TEST_CASE("rejected transactions leave every table digest untouched") {
    Fixture fx({{0, 4.0}, {1, 4.0}, {2, 4.0}});
    std::uint64_t before = fx.store.table(kT).digest();
    for (std::uint64_t ts = 0; ts < 20; ++ts) {
        auto& t = fx.make(ts, [&](TxnBuilder& b) {
            b.issue_write(ref(ts % 3), double(ts) + 50.0);
            b.issue_read_modify(ref((ts + 1) % 3), kFunSub, FunArgs{1.0, 0.0, 0}, kCondGe,
                                FunArgs{1000.0, 0.0, 0}, ref((ts + 1) % 3));
        });
        CHECK(oracle_execute(fx.store, fx.reg, t) == TxnStatus::Rejected);
    }
    CHECK(fx.store.table(kT).digest() == before);
}

TEST_CASE("copy from a foreign source reads the committed foreign value") {
    Fixture fx({{0, 11.0}, {1, 0.0}});
    auto& txn = fx.make(4, [&](TxnBuilder& b) {
        b.issue_read_modify(ref(1), ref(0), kFunCopy, FunArgs{});
    });
    CHECK(oracle_execute(fx.store, fx.reg, txn) == TxnStatus::Committed);
    CHECK(as_double(fx.blotters[0].results[0]) == 11.0);
    CHECK(as_double(fx.store.table(kT).at(1).committed) == 11.0);
    CHECK(as_double(fx.store.table(kT).at(0).committed) == 11.0);
}

TEST_CASE("set and average cells update through their modify functions") {
    StateStore store;
    TableId t = store.add_table("cells", 2);
    store.table(t).insert(0, CountSum{});
    store.table(t).insert(1, IdSet{});
    FunctionRegistry reg;
    register_standard_functions(reg);
    TxnBuilder b;
    std::deque<EventBlotter> ebs;
    std::deque<StateTransaction> ts;
    for (std::uint64_t i = 0; i < 3; ++i) {
        ebs.emplace_back();
        b.begin(Timestamp{i}, &ebs.back());
        b.issue_read_modify(StateRef{t, 0}, kFunAvgAdd, FunArgs{double(10 * (i + 1)), 0.0, 0});
        b.issue_read_modify(StateRef{t, 1}, kFunInsertVid, FunArgs{0.0, 0.0, std::int64_t(7)});
        ts.push_back(b.take());
        CHECK(oracle_execute(store, reg, ts.back()) == TxnStatus::Committed);
    }
    const auto& cs = std::get<CountSum>(store.table(t).at(0).committed);
    CHECK(cs.count == 3.0);
    CHECK(cs.sum == 60.0);
    const auto& ids = std::get<IdSet>(store.table(t).at(1).committed);
    CHECK(ids.ids == std::set<std::int64_t>{7});  // set semantics: no duplicates
    // read-class slots summarize sets by size
    CHECK(as_double(ebs[2].results[1]) == 1.0);
}
