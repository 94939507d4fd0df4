#pragma once

#include <memory>
#include <string_view>
#include <vector>

#include "streamtx/engine.hpp"
#include "streamtx/store.hpp"
#include "streamtx/txn_api.hpp"

namespace streamtx {

// ---------------------------------------------------------------------------
// Benchmark applications
//
// Four operators over shared state: GS (grep/sum microbenchmark), SL
// (streaming ledger), OB (online bidding), TP (toll processing). Each app is
// a seeded payload generator plus an OperatorLogic; (app, seed, event count)
// fully determines the stream, so every scheme replays the same inputs.
// ---------------------------------------------------------------------------

enum class AppKind : std::uint8_t { GS, SL, OB, TP };

const char* app_name(AppKind app);
bool parse_app(std::string_view text, AppKind& out);

struct WorkloadConfig {
    AppKind app = AppKind::GS;
    std::uint64_t events = 0;  // data events in the stream
    std::uint64_t seed = 1;
    std::int64_t table_size = 10000;
    double skew = 0.6;         // Zipf exponent over key popularity
    double read_ratio = 0.5;   // GS: fraction of read events
    double mp_ratio = 0.25;    // GS/OB: fraction of multi-partition events
    std::uint32_t mp_length = 4;   // partitions a multi-partition event spans
    std::uint32_t partitions = 1;  // resolved against the run by the harness
    double sl_init_balance = 10000.0;
};

// TP pins its own key space and skew: 100 road segments, theta 0.2.
constexpr std::int64_t kTpSegments = 100;
constexpr double kTpSkew = 0.2;
constexpr std::int64_t kTpVehicles = 10000;

// Table ids as created by populate_tables, in creation order.
inline constexpr TableId kGsTable{0};
inline constexpr TableId kSlAccounts{0};
inline constexpr TableId kSlAssets{1};
inline constexpr TableId kObTable{0};
inline constexpr TableId kTpSpeed{0};
inline constexpr TableId kTpCars{1};

// Normalizes app-pinned knobs (TP segment count and skew) so configs,
// CSV rows and generators all agree.
WorkloadConfig resolve_workload(WorkloadConfig cfg);

// ---------------------------------------------------------------------------
// Zipfian sampler: P(rank r) proportional to 1/(r+1)^theta, rank 0 hottest.
// Inverse-CDF table; deterministic given the caller's RNG.
// ---------------------------------------------------------------------------

class ZipfSampler {
public:
    ZipfSampler(std::int64_t n, double theta);

    std::int64_t sample(Rng& rng) const;

    std::int64_t n() const { return std::int64_t(cdf_.size()); }

private:
    std::vector<double> cdf_;
};

// Creates the app's tables inside `store` and fills them from `seed`
// (identical contents for identical configs).
void populate_tables(const WorkloadConfig& cfg, StateStore& store);

std::unique_ptr<PayloadSource> make_source(const WorkloadConfig& cfg);
std::unique_ptr<OperatorLogic> make_logic(const WorkloadConfig& cfg);

}  // namespace streamtx
