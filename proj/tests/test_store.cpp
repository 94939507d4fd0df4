#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <vector>

#include "streamtx/store.hpp"

using namespace streamtx;

namespace {

VersionedRecord make_mv(double committed) {
    VersionedRecord rec;
    rec.committed = RecordValue{committed};
    rec.committed_ts = -1;
    rec.multiversion = true;
    return rec;
}

}  // namespace

TEST_CASE("read_visible picks the last version strictly below ts") {
    VersionedRecord rec = make_mv(100.0);
    apply_write(rec, Timestamp{10}, RecordValue{110.0});
    apply_write(rec, Timestamp{20}, RecordValue{120.0});
    apply_write(rec, Timestamp{30}, RecordValue{130.0});

    CHECK(as_double(read_visible(rec, Timestamp{5}, false)) == 100.0);   // committed fallback
    CHECK(as_double(read_visible(rec, Timestamp{10}, false)) == 100.0);  // strict <
    CHECK(as_double(read_visible(rec, Timestamp{11}, false)) == 110.0);
    CHECK(as_double(read_visible(rec, Timestamp{20}, false)) == 110.0);
    CHECK(as_double(read_visible(rec, Timestamp{25}, false)) == 120.0);
    CHECK(as_double(read_visible(rec, Timestamp{999}, false)) == 130.0);
}

TEST_CASE("read_visible includes the reader's own earlier write when asked") {
    VersionedRecord rec = make_mv(1.0);
    apply_write(rec, Timestamp{10}, RecordValue{2.0});
    // A transaction at ts 10 that wrote earlier in program order sees its own
    // version; a foreign reader at 10 does not.
    CHECK(as_double(read_visible(rec, Timestamp{10}, true)) == 2.0);
    CHECK(as_double(read_visible(rec, Timestamp{10}, false)) == 1.0);
}

TEST_CASE("multiversion writes append in order and same-ts writes supersede") {
    VersionedRecord rec = make_mv(0.0);
    apply_write(rec, Timestamp{4}, RecordValue{1.0});
    apply_write(rec, Timestamp{9}, RecordValue{2.0});
    CHECK(rec.extra_versions.size() == 2);

    apply_write(rec, Timestamp{9}, RecordValue{3.0});  // same txn writes again
    CHECK(rec.extra_versions.size() == 2);
    CHECK(as_double(rec.extra_versions.back().value) == 3.0);

    CHECK_THROWS_AS(apply_write(rec, Timestamp{8}, RecordValue{9.0}), OrderViolation);
}

TEST_CASE("in-place writes capture the pre-batch image exactly once") {
    VersionedRecord rec;
    rec.committed = RecordValue{50.0};
    rec.committed_ts = 3;

    apply_write(rec, Timestamp{10}, RecordValue{60.0});
    REQUIRE(rec.pre_batch_image.has_value());
    CHECK(rec.pre_batch_image->ts == 3);
    CHECK(as_double(rec.pre_batch_image->value) == 50.0);
    CHECK(rec.inplace_writes == 1);

    apply_write(rec, Timestamp{12}, RecordValue{70.0});
    CHECK(as_double(rec.pre_batch_image->value) == 50.0);  // still the first image
    CHECK(rec.inplace_writes == 2);
    CHECK(as_double(rec.committed) == 70.0);
    CHECK(rec.committed_ts == 12);

    CHECK_THROWS_AS(apply_write(rec, Timestamp{11}, RecordValue{0.0}), OrderViolation);
}

TEST_CASE("gc promotes the latest version and drops batch bookkeeping") {
    VersionedRecord rec = make_mv(0.0);
    apply_write(rec, Timestamp{4}, RecordValue{1.0});
    apply_write(rec, Timestamp{9}, RecordValue{2.0});
    gc_record(rec);
    CHECK(as_double(rec.committed) == 2.0);
    CHECK(rec.committed_ts == 9);
    CHECK(rec.extra_versions.empty());
    CHECK_FALSE(rec.multiversion);
    CHECK_FALSE(rec.pre_batch_image.has_value());

    // In-place path: gc keeps the current value but clears scratch.
    VersionedRecord ip;
    ip.committed = RecordValue{5.0};
    ip.committed_ts = 1;
    apply_write(ip, Timestamp{7}, RecordValue{6.0});
    gc_record(ip);
    CHECK(as_double(ip.committed) == 6.0);
    CHECK(ip.committed_ts == 7);
    CHECK(ip.inplace_writes == 0);
    CHECK_FALSE(ip.pre_batch_image.has_value());
}

TEST_CASE("reset restores the pre-batch state but keeps multiversion mode") {
    VersionedRecord rec = make_mv(10.0);
    rec.committed_ts = 2;
    apply_write(rec, Timestamp{5}, RecordValue{11.0});
    reset_record(rec);
    CHECK(as_double(rec.committed) == 10.0);
    CHECK(rec.committed_ts == 2);
    CHECK(rec.extra_versions.empty());
    CHECK(rec.multiversion);

    VersionedRecord ip;
    ip.committed = RecordValue{10.0};
    ip.committed_ts = 2;
    apply_write(ip, Timestamp{5}, RecordValue{11.0});
    apply_write(ip, Timestamp{6}, RecordValue{12.0});
    reset_record(ip);
    CHECK(as_double(ip.committed) == 10.0);
    CHECK(ip.committed_ts == 2);
    CHECK(ip.inplace_writes == 0);
}

TEST_CASE("rollback removes exactly the aborting transaction's write") {
    VersionedRecord rec = make_mv(0.0);
    apply_write(rec, Timestamp{4}, RecordValue{1.0});
    apply_write(rec, Timestamp{9}, RecordValue{2.0});
    CHECK(rollback_write(rec, Timestamp{4}));
    REQUIRE(rec.extra_versions.size() == 1);
    CHECK(rec.extra_versions[0].ts.v == 9);
    CHECK_FALSE(rollback_write(rec, Timestamp{4}));  // already gone

    // Sole in-place writer: restored from the pre-batch image.
    VersionedRecord solo;
    solo.committed = RecordValue{7.0};
    solo.committed_ts = 1;
    apply_write(solo, Timestamp{5}, RecordValue{8.0});
    CHECK(rollback_write(solo, Timestamp{5}));
    CHECK(as_double(solo.committed) == 7.0);
    CHECK(solo.committed_ts == 1);

    // Two in-place writers cannot be separated surgically.
    VersionedRecord two;
    two.committed = RecordValue{7.0};
    two.committed_ts = 1;
    apply_write(two, Timestamp{5}, RecordValue{8.0});
    apply_write(two, Timestamp{6}, RecordValue{9.0});
    CHECK_FALSE(rollback_write(two, Timestamp{6}));
}

TEST_CASE("fixed hash index finds what was inserted, including negative keys") {
    FixedHashIndex idx(100);
    std::vector<Key> keys;
    for (Key k = -50; k < 50; ++k) keys.push_back(k * 977);
    for (std::uint32_t i = 0; i < keys.size(); ++i) idx.insert(keys[i], i);
    for (std::uint32_t i = 0; i < keys.size(); ++i) CHECK(idx.find(keys[i]) == i);
    CHECK(idx.find(123456789) == UINT32_MAX);
    CHECK_THROWS_AS(idx.insert(keys[0], 7), ConfigError);
}

TEST_CASE("tables look up by key and reject unknown keys") {
    Table t(TableId{2}, "things", 16);
    t.insert(5, RecordValue{1.0});
    t.insert(-9, RecordValue{2.0});
    CHECK(t.size() == 2);
    CHECK(as_double(t.at(5).committed) == 1.0);
    CHECK(as_double(t.at(-9).committed) == 2.0);
    CHECK(t.find(5) != nullptr);
    CHECK(t.find(6) == nullptr);
    CHECK_THROWS_AS(t.at(6), KeyNotFound);
    CHECK(t.row_of(-9) != UINT32_MAX);
    CHECK(&t.row(t.row_of(-9)) == &t.at(-9));
}

TEST_CASE("table digests depend on committed values, not insertion order") {
    Table a(TableId{0}, "a", 16);
    a.insert(1, RecordValue{1.0});
    a.insert(2, RecordValue{2.0});

    Table b(TableId{0}, "b", 16);
    b.insert(2, RecordValue{2.0});  // same contents, reversed insertion
    b.insert(1, RecordValue{1.0});
    CHECK(a.digest() == b.digest());

    b.at(1).committed = RecordValue{9.0};
    CHECK(a.digest() != b.digest());
}

TEST_CASE("store digests come out in table-id order") {
    StateStore store;
    TableId t0 = store.add_table("first", 8);
    TableId t1 = store.add_table("second", 8);
    CHECK(t0.value == 0);
    CHECK(t1.value == 1);
    store.table(t0).insert(1, RecordValue{1.0});
    store.table(t1).insert(1, RecordValue{2.0});

    auto ds = store.digests();
    REQUIRE(ds.size() == 2);
    CHECK(ds[0] == store.table(t0).digest());
    CHECK(ds[1] == store.table(t1).digest());
    CHECK(ds[0] != ds[1]);

    CHECK(&store.at(StateRef{t1, 1}) == &store.table(t1).at(1));
    CHECK_THROWS_AS(store.table(TableId{9}), KeyNotFound);
}
