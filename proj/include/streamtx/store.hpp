#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "streamtx/core.hpp"

namespace streamtx {

// ---------------------------------------------------------------------------
// Versioned records
//
// Outside a batch a record is just its committed value. During a batch,
// records named as dependency sources keep every in-batch write as an extra
// version so readers at later timestamps can pick the right one; all other
// records are updated in place, saving the pre-batch image on first write so
// the batch can be undone for re-evaluation.
// ---------------------------------------------------------------------------

struct Version {
    Timestamp ts;
    RecordValue value;
};

struct PreImage {
    std::int64_t ts = -1;  // committed_ts before the batch
    RecordValue value;
};

struct VersionedRecord {
    RecordValue committed;
    std::int64_t committed_ts = -1;  // -1: initial population, never written
    std::vector<Version> extra_versions;   // batch-scoped, ascending ts
    std::optional<PreImage> pre_batch_image;
    std::uint32_t inplace_writes = 0;  // in-place writes since batch start
    bool multiversion = false;         // keep versions this batch
};

// Largest write at ts' < ts (or ts' <= ts when the reading transaction wrote
// the record itself earlier in program order); falls back to the committed
// value when no such version exists.
const RecordValue& read_visible(const VersionedRecord& rec, Timestamp ts, bool include_own);

// Installs `value` at `ts`. Appends a version when the record is in
// multiversion mode, otherwise overwrites in place (capturing the pre-batch
// image on the first in-place write). Throws OrderViolation when `ts` does
// not exceed the latest write on the record.
void apply_write(VersionedRecord& rec, Timestamp ts, const RecordValue& value);

// End-of-batch promotion: the latest version becomes the committed value and
// all batch-scoped bookkeeping is dropped.
void gc_record(VersionedRecord& rec);

// Re-evaluation support: drops every in-batch write, restoring the record to
// its pre-batch state while keeping multiversion mode for the next pass.
void reset_record(VersionedRecord& rec);

// Removes the writes of the transaction at `ts` from the record: its
// versions are deleted, and an in-place value is restored from the pre-batch
// image when that transaction's write was the only one. Returns false when
// the write could not be undone surgically (several in-place writers).
bool rollback_write(VersionedRecord& rec, Timestamp ts);

// ---------------------------------------------------------------------------
// Tables and the store
// ---------------------------------------------------------------------------

// Open-addressing hash index sized once at table creation. The benchmark
// populates every key before the run and never deletes, so the index never
// grows or tombstones.
class FixedHashIndex {
public:
    explicit FixedHashIndex(std::size_t expected);

    void insert(Key key, std::uint32_t row);
    // Returns the row offset or UINT32_MAX when absent.
    std::uint32_t find(Key key) const;

private:
    static constexpr Key kEmpty = INT64_MIN;
    struct Slot {
        Key key = kEmpty;
        std::uint32_t row = 0;
    };
    std::vector<Slot> slots_;
    std::uint64_t mask_ = 0;
};

class Table {
public:
    Table(TableId id, std::string name, std::size_t expected);

    void insert(Key key, RecordValue value);
    VersionedRecord& at(Key key);  // throws KeyNotFound
    VersionedRecord* find(Key key);

    TableId id() const { return id_; }
    const std::string& name() const { return name_; }
    std::size_t size() const { return rows_.size(); }

    // Row-offset access (latch arrays, whole-table maintenance passes).
    std::uint32_t row_of(Key key) const { return index_.find(key); }
    VersionedRecord& row(std::uint32_t i) { return rows_[i]; }
    const std::vector<Key>& keys() const { return keys_; }

    // Digest of all committed values in ascending key order.
    std::uint64_t digest() const;

private:
    TableId id_;
    std::string name_;
    std::vector<Key> keys_;
    std::vector<VersionedRecord> rows_;
    FixedHashIndex index_;
};

class StateStore {
public:
    TableId add_table(std::string name, std::size_t expected);

    Table& table(TableId id);
    const Table& table(TableId id) const;
    VersionedRecord& at(const StateRef& ref) { return table(ref.table).at(ref.key); }

    std::size_t table_count() const { return tables_.size(); }

    // One digest per table, in table-id order.
    std::vector<std::uint64_t> digests() const;

private:
    std::vector<Table> tables_;
};

}  // namespace streamtx
