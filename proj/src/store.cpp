#include "streamtx/store.hpp"

#include <algorithm>
#include <bit>

namespace streamtx {

// ---------------------------------------------------------------------------
// Record operations
// ---------------------------------------------------------------------------

const RecordValue& read_visible(const VersionedRecord& rec, Timestamp ts, bool include_own) {
    const auto& vs = rec.extra_versions;
    // Last version with ts' < ts (ts' <= ts for the writer's own reads).
    auto it = include_own
                  ? std::upper_bound(vs.begin(), vs.end(), ts,
                                     [](Timestamp t, const Version& v) { return t < v.ts; })
                  : std::lower_bound(vs.begin(), vs.end(), ts,
                                     [](const Version& v, Timestamp t) { return v.ts < t; });
    if (it == vs.begin()) return rec.committed;
    return std::prev(it)->value;
}

void apply_write(VersionedRecord& rec, Timestamp ts, const RecordValue& value) {
    if (rec.multiversion) {
        if (!rec.extra_versions.empty()) {
            Timestamp last = rec.extra_versions.back().ts;
            if (ts < last) throw OrderViolation("version write out of timestamp order");
            if (ts == last) {  // same transaction writing again: supersede
                rec.extra_versions.back().value = value;
                return;
            }
        }
        rec.extra_versions.push_back(Version{ts, value});
        return;
    }
    if (std::int64_t(ts.v) < rec.committed_ts)
        throw OrderViolation("in-place write out of timestamp order");
    if (!rec.pre_batch_image)
        rec.pre_batch_image = PreImage{rec.committed_ts, rec.committed};
    rec.committed = value;
    rec.committed_ts = std::int64_t(ts.v);
    ++rec.inplace_writes;
}

void gc_record(VersionedRecord& rec) {
    if (!rec.extra_versions.empty()) {
        rec.committed = std::move(rec.extra_versions.back().value);
        rec.committed_ts = std::int64_t(rec.extra_versions.back().ts.v);
        rec.extra_versions.clear();
    }
    rec.pre_batch_image.reset();
    rec.inplace_writes = 0;
    rec.multiversion = false;
}

void reset_record(VersionedRecord& rec) {
    rec.extra_versions.clear();
    if (rec.pre_batch_image) {
        rec.committed = rec.pre_batch_image->value;
        rec.committed_ts = rec.pre_batch_image->ts;
        rec.pre_batch_image.reset();
    }
    rec.inplace_writes = 0;
}

bool rollback_write(VersionedRecord& rec, Timestamp ts) {
    auto& vs = rec.extra_versions;
    auto it = std::lower_bound(vs.begin(), vs.end(), ts,
                               [](const Version& v, Timestamp t) { return v.ts < t; });
    if (it != vs.end() && it->ts == ts) {
        vs.erase(it);
        return true;
    }
    if (rec.committed_ts == std::int64_t(ts.v) && rec.pre_batch_image) {
        if (rec.inplace_writes != 1) return false;  // later/earlier in-place writers exist
        rec.committed = rec.pre_batch_image->value;
        rec.committed_ts = rec.pre_batch_image->ts;
        rec.pre_batch_image.reset();
        rec.inplace_writes = 0;
        return true;
    }
    return false;
}

// ---------------------------------------------------------------------------
// FixedHashIndex
// ---------------------------------------------------------------------------

FixedHashIndex::FixedHashIndex(std::size_t expected) {
    std::size_t cap = std::bit_ceil(std::max<std::size_t>(expected * 2, 16));
    slots_.assign(cap, Slot{});
    mask_ = cap - 1;
}

void FixedHashIndex::insert(Key key, std::uint32_t row) {
    std::uint64_t i = mix64(std::uint64_t(key)) & mask_;
    while (slots_[i].key != kEmpty) {
        if (slots_[i].key == key) throw ConfigError("duplicate key inserted into table");
        i = (i + 1) & mask_;
    }
    slots_[i] = Slot{key, row};
}

std::uint32_t FixedHashIndex::find(Key key) const {
    std::uint64_t i = mix64(std::uint64_t(key)) & mask_;
    while (slots_[i].key != kEmpty) {
        if (slots_[i].key == key) return slots_[i].row;
        i = (i + 1) & mask_;
    }
    return UINT32_MAX;
}

// ---------------------------------------------------------------------------
// Table / StateStore
// ---------------------------------------------------------------------------

Table::Table(TableId id, std::string name, std::size_t expected)
    : id_(id), name_(std::move(name)), index_(expected) {
    keys_.reserve(expected);
    rows_.reserve(expected);
}

void Table::insert(Key key, RecordValue value) {
    index_.insert(key, std::uint32_t(rows_.size()));
    keys_.push_back(key);
    rows_.push_back(VersionedRecord{std::move(value)});
}

VersionedRecord& Table::at(Key key) {
    std::uint32_t row = index_.find(key);
    if (row == UINT32_MAX)
        throw KeyNotFound(name_ + "[" + std::to_string(key) + "]");
    return rows_[row];
}

VersionedRecord* Table::find(Key key) {
    std::uint32_t row = index_.find(key);
    return row == UINT32_MAX ? nullptr : &rows_[row];
}

std::uint64_t Table::digest() const {
    std::vector<std::uint32_t> order(keys_.size());
    for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::uint32_t a, std::uint32_t b) { return keys_[a] < keys_[b]; });
    std::uint64_t h = mix64(0xd16357ull ^ id_.value);
    for (std::uint32_t i : order) {
        h = hash_combine(h, std::uint64_t(keys_[i]));
        h = hash_combine(h, value_digest(rows_[i].committed));
    }
    return h;
}

TableId StateStore::add_table(std::string name, std::size_t expected) {
    TableId id{std::uint16_t(tables_.size())};
    tables_.emplace_back(id, std::move(name), expected);
    return id;
}

Table& StateStore::table(TableId id) {
    if (id.value >= tables_.size()) throw KeyNotFound("no such table");
    return tables_[id.value];
}

const Table& StateStore::table(TableId id) const {
    if (id.value >= tables_.size()) throw KeyNotFound("no such table");
    return tables_[id.value];
}

std::vector<std::uint64_t> StateStore::digests() const {
    std::vector<std::uint64_t> out;
    out.reserve(tables_.size());
    for (const auto& t : tables_) out.push_back(t.digest());
    return out;
}

}  // namespace streamtx
