#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace streamtx {

// ---------------------------------------------------------------------------
// Error types
// ---------------------------------------------------------------------------

// Invalid engine or workload configuration (bad flag values, non-dividing
// group sizes, zero threads, ...). Maps to process exit code 1 in the CLI.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Violation of the operator contract, e.g. issuing a state-access primitive
// outside of the state_access step.
struct ApiMisuse : std::logic_error {
    explicit ApiMisuse(const std::string& what) : std::logic_error(what) {}
};

// Lookup of a key that was never populated. All benchmark keys exist before
// the run starts, so this signals a workload-generator bug.
struct KeyNotFound : std::runtime_error {
    explicit KeyNotFound(const std::string& what) : std::runtime_error(what) {}
};

// A write applied out of timestamp order within a batch. Executor bug.
struct OrderViolation : std::logic_error {
    explicit OrderViolation(const std::string& what) : std::logic_error(what) {}
};

// Raised in all executors when one of them dies while the others wait at a
// rendezvous point; the engine shuts down with a diagnostic instead of
// hanging.
struct EngineAborted : std::runtime_error {
    explicit EngineAborted(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// Small identifiers
// ---------------------------------------------------------------------------

using Key = std::int64_t;

struct TableId {
    std::uint16_t value = 0;

    friend bool operator==(TableId a, TableId b) { return a.value == b.value; }
    friend bool operator!=(TableId a, TableId b) { return a.value != b.value; }
    friend bool operator<(TableId a, TableId b) { return a.value < b.value; }
};

// A (table, key) pair naming one state cell.
struct StateRef {
    TableId table;
    Key key = 0;

    friend bool operator==(const StateRef& a, const StateRef& b) {
        return a.table == b.table && a.key == b.key;
    }
    friend bool operator!=(const StateRef& a, const StateRef& b) { return !(a == b); }
    friend bool operator<(const StateRef& a, const StateRef& b) {
        if (a.table != b.table) return a.table < b.table;
        return a.key < b.key;
    }
};

// ---------------------------------------------------------------------------
// Hashing (splitmix64 finalizer; used for digests, chain placement and
// partition assignment so that every component agrees on the mapping)
// ---------------------------------------------------------------------------

inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
    return mix64(h ^ (v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2)));
}

inline std::uint64_t state_hash(TableId table, Key key) {
    return mix64((std::uint64_t(table.value) << 48) ^ std::uint64_t(key));
}

// Partition of a state cell under `partition_count` hash partitions.
inline std::uint32_t partition_of(TableId table, Key key, std::uint32_t partition_count) {
    return std::uint32_t(state_hash(table, key) % partition_count);
}

// ---------------------------------------------------------------------------
// Deterministic RNG (stdlib distributions are not pinned across platforms,
// so all sampling goes through this)
// ---------------------------------------------------------------------------

class Rng {
public:
    explicit Rng(std::uint64_t seed = 0x5eed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ull;
        return mix64(state_);
    }

    // Uniform in [0, n).
    std::uint64_t uniform(std::uint64_t n) { return n <= 1 ? 0 : next() % n; }

    // Uniform in [lo, hi] inclusive.
    std::int64_t uniform_in(std::int64_t lo, std::int64_t hi) {
        return lo + std::int64_t(uniform(std::uint64_t(hi - lo + 1)));
    }

    // Uniform double in [0, 1).
    double next_double() { return double(next() >> 11) * (1.0 / 9007199254740992.0); }

    bool chance(double p) { return next_double() < p; }

private:
    std::uint64_t state_;
};

}  // namespace streamtx
