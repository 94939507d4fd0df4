#pragma once

#include <bit>
#include <cstdint>
#include <set>
#include <variant>

#include "streamtx/common.hpp"

namespace streamtx {

// ---------------------------------------------------------------------------
// Record values
//
// Every table stores one RecordValue per key. The engine never interprets
// the value; only the registered application functions and conditions do.
// ---------------------------------------------------------------------------

// Order book item: current ask price and remaining quantity.
struct PriceQty {
    double price = 0.0;
    double qty = 0.0;

    friend bool operator==(const PriceQty& a, const PriceQty& b) {
        return a.price == b.price && a.qty == b.qty;
    }
};

// Road-segment speed cell: running count and sum for an average.
struct CountSum {
    double count = 0.0;
    double sum = 0.0;

    friend bool operator==(const CountSum& a, const CountSum& b) {
        return a.count == b.count && a.sum == b.sum;
    }
};

// Road-segment vehicle set. std::set keeps ids ordered, which makes digests
// and set-size summaries deterministic.
struct IdSet {
    std::set<std::int64_t> ids;

    friend bool operator==(const IdSet& a, const IdSet& b) { return a.ids == b.ids; }
};

using RecordValue = std::variant<double, PriceQty, CountSum, IdSet>;

// ---------------------------------------------------------------------------
// Canonical digest of a value (stable across runs and platforms)
// ---------------------------------------------------------------------------

inline std::uint64_t value_digest(const RecordValue& v) {
    std::uint64_t h = mix64(v.index() + 1);
    switch (v.index()) {
        case 0:
            h = hash_combine(h, std::bit_cast<std::uint64_t>(std::get<double>(v)));
            break;
        case 1: {
            const auto& pq = std::get<PriceQty>(v);
            h = hash_combine(h, std::bit_cast<std::uint64_t>(pq.price));
            h = hash_combine(h, std::bit_cast<std::uint64_t>(pq.qty));
            break;
        }
        case 2: {
            const auto& cs = std::get<CountSum>(v);
            h = hash_combine(h, std::bit_cast<std::uint64_t>(cs.count));
            h = hash_combine(h, std::bit_cast<std::uint64_t>(cs.sum));
            break;
        }
        case 3: {
            const auto& s = std::get<IdSet>(v);
            h = hash_combine(h, s.ids.size());
            for (auto id : s.ids) h = hash_combine(h, std::uint64_t(id));
            break;
        }
    }
    return h;
}

// Result-slot summary of a read value. Large container values are reduced to
// a scalar so that blotter slots stay fixed-size; scalar and pair values are
// kept whole.
inline RecordValue slot_summary(const RecordValue& v) {
    if (v.index() == 3) return RecordValue{double(std::get<IdSet>(v).ids.size())};
    return v;
}

inline double as_double(const RecordValue& v) { return std::get<double>(v); }

}  // namespace streamtx
