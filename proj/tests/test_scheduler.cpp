#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <chrono>
#include <thread>
#include <vector>

#include "streamtx/scheduler.hpp"

using namespace streamtx;

namespace {

Event data_event(std::uint64_t ts) {
    Event ev;
    ev.ts = Timestamp{ts};
    ev.kind = EventKind::Data;
    return ev;
}

// Pops one block that must hold exactly one event (the shape single push()
// produces) and returns its timestamp.
std::uint64_t pop_one(EventQueue& q) {
    std::vector<Event> block = q.pop_block();
    REQUIRE(block.size() == 1);
    return block.front().ts.v;
}

}  // namespace

TEST_CASE("event queue preserves order through wraparound") {
    EventQueue q(4);
    std::uint64_t next_pop = 0;
    for (std::uint64_t ts = 0; ts < 20; ++ts) {
        q.push(data_event(ts));
        if (ts % 2 == 1) {  // drain two for every two pushed, offset by one
            CHECK(pop_one(q) == next_pop++);
            CHECK(pop_one(q) == next_pop++);
        }
    }
    CHECK(q.size() == 0);
}

TEST_CASE("block hand-off preserves order across mixed block sizes") {
    EventQueue q(3);
    std::vector<Event> a;
    for (std::uint64_t ts = 0; ts < 5; ++ts) a.push_back(data_event(ts));
    q.push_block(std::move(a));
    q.push_block({});  // ignored: consumes no capacity
    q.push(data_event(5));
    std::vector<Event> b;
    b.push_back(data_event(6));
    b.push_back(data_event(7));
    q.push_block(std::move(b));
    CHECK(q.size() == 3);  // capacity counts blocks, not events

    std::uint64_t next = 0;
    for (int i = 0; i < 3; ++i)
        for (Event& ev : q.pop_block()) CHECK(ev.ts.v == next++);
    CHECK(next == 8);
    CHECK(q.size() == 0);
}

TEST_CASE("a full queue blocks the producer until the consumer drains") {
    EventQueue q(2);
    q.push(data_event(0));
    q.push(data_event(1));
    CHECK(q.size() == 2);

    std::atomic<bool> pushed{false};
    std::thread producer([&] {
        q.push(data_event(2));  // must block: queue is full
        pushed.store(true);
    });
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    CHECK_FALSE(pushed.load());

    CHECK(pop_one(q) == 0);
    producer.join();
    CHECK(pushed.load());
    CHECK(pop_one(q) == 1);
    CHECK(pop_one(q) == 2);
}

TEST_CASE("an empty queue parks the consumer until something arrives") {
    EventQueue q(4);
    std::atomic<std::uint64_t> got{~0ull};
    std::thread consumer([&] { got.store(q.pop_block().front().ts.v); });
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    CHECK(got.load() == ~0ull);
    q.push(data_event(7));
    consumer.join();
    CHECK(got.load() == 7);
}

TEST_CASE("aborting a queue frees both ends permanently") {
    EventQueue q(1);
    q.push(data_event(0));

    std::atomic<int> state{0};
    std::thread producer([&] {
        q.push(data_event(1));  // blocked on full, then dropped by abort
        state.store(1);
    });
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    q.abort();
    producer.join();
    CHECK(state.load() == 1);

    CHECK_THROWS_AS(q.pop_block(), EngineAborted);
    q.push(data_event(2));  // silently dropped, never blocks
    CHECK_THROWS_AS(q.pop_block(), EngineAborted);
}

TEST_CASE("barrier synchronizes every generation") {
    constexpr std::uint32_t kParties = 4;
    constexpr int kGens = 200;
    Barrier barrier(kParties);
    std::atomic<int> counter{0};
    std::vector<int> seen_bad(kParties, 0);

    std::vector<std::thread> ts;
    for (std::uint32_t w = 0; w < kParties; ++w)
        ts.emplace_back([&, w] {
            for (int g = 0; g < kGens; ++g) {
                counter.fetch_add(1);
                barrier.arrive_and_wait();
                // Between two rendezvous all parties must have bumped the
                // counter for this generation.
                if (counter.load() < (g + 1) * int(kParties)) seen_bad[w] = 1;
                barrier.arrive_and_wait();
            }
        });
    for (auto& t : ts) t.join();
    for (std::uint32_t w = 0; w < kParties; ++w) CHECK(seen_bad[w] == 0);
    CHECK(counter.load() == kGens * int(kParties));
}

TEST_CASE("poisoning a barrier releases current and future waiters") {
    Barrier barrier(3);
    std::atomic<int> thrown{0};
    std::vector<std::thread> ts;
    for (int i = 0; i < 2; ++i)
        ts.emplace_back([&] {
            try {
                barrier.arrive_and_wait();  // only 2 of 3 arrive
            } catch (const EngineAborted&) {
                thrown.fetch_add(1);
            }
        });
    std::this_thread::sleep_for(std::chrono::milliseconds(30));
    CHECK_FALSE(barrier.poisoned());
    barrier.poison("test shutdown");
    for (auto& t : ts) t.join();
    CHECK(thrown.load() == 2);
    CHECK(barrier.poisoned());
    CHECK_THROWS_AS(barrier.arrive_and_wait(), EngineAborted);
}

TEST_CASE("placement resolution pins pool counts and stealing") {
    PlacementConfig sn;
    sn.kind = Placement::SharedNothing;
    sn = resolve_placement(sn, 8);
    CHECK(pool_count(sn, 8) == 8);
    CHECK_FALSE(sn.steal);

    PlacementConfig se;
    se.kind = Placement::SharedEverything;
    se = resolve_placement(se, 8);
    CHECK(pool_count(se, 8) == 1);
    CHECK(se.steal);

    PlacementConfig sg;
    sg.kind = Placement::SharedGroup;
    sg.groups = 4;
    sg = resolve_placement(sg, 8);
    CHECK(pool_count(sg, 8) == 4);
    CHECK(sg.steal);

    CHECK_THROWS_AS(resolve_placement(sn, 0), ConfigError);
    PlacementConfig bad;
    bad.kind = Placement::SharedGroup;
    bad.groups = 3;
    CHECK_THROWS_AS(resolve_placement(bad, 8), ConfigError);  // 3 does not divide 8
    bad.groups = 16;
    CHECK_THROWS_AS(resolve_placement(bad, 8), ConfigError);  // more groups than workers
    bad.groups = 0;
    CHECK_THROWS_AS(resolve_placement(bad, 8), ConfigError);
}

TEST_CASE("pool assignment stays in range and workers find their home pools") {
    const std::uint32_t workers = 8;
    PlacementConfig sn = resolve_placement(PlacementConfig{Placement::SharedNothing, 1, false}, workers);
    PlacementConfig se = resolve_placement(PlacementConfig{Placement::SharedEverything, 1, false}, workers);
    PlacementConfig sg = resolve_placement(PlacementConfig{Placement::SharedGroup, 4, false}, workers);

    for (Key k = 0; k < 200; ++k) {
        StateRef r{TableId{0}, k};
        CHECK(pool_of(sn, workers, r) < 8);
        CHECK(pool_of(se, workers, r) == 0);
        CHECK(pool_of(sg, workers, r) < 4);
        CHECK(pool_of(sn, workers, r) == pool_of(sn, workers, r));
    }
    for (std::uint32_t w = 0; w < workers; ++w) {
        CHECK(home_pool(sn, workers, w) == w);
        CHECK(home_pool(se, workers, w) == 0);
        CHECK(home_pool(sg, workers, w) == w / 2);  // 8 workers over 4 groups
    }

    // All pools are reachable under hashing with enough keys.
    std::vector<bool> hit(8, false);
    for (Key k = 0; k < 2000; ++k) hit[pool_of(sn, workers, StateRef{TableId{0}, k})] = true;
    for (bool h : hit) CHECK(h);
}
