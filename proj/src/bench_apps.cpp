#include "streamtx/bench_apps.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace streamtx {

const char* app_name(AppKind app) {
    switch (app) {
        case AppKind::GS: return "gs";
        case AppKind::SL: return "sl";
        case AppKind::OB: return "ob";
        case AppKind::TP: return "tp";
    }
    return "?";
}

bool parse_app(std::string_view text, AppKind& out) {
    if (text == "gs") out = AppKind::GS;
    else if (text == "sl") out = AppKind::SL;
    else if (text == "ob") out = AppKind::OB;
    else if (text == "tp") out = AppKind::TP;
    else return false;
    return true;
}

WorkloadConfig resolve_workload(WorkloadConfig cfg) {
    if (cfg.app == AppKind::TP) {
        cfg.table_size = kTpSegments;
        cfg.skew = kTpSkew;
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// ZipfSampler
// ---------------------------------------------------------------------------

ZipfSampler::ZipfSampler(std::int64_t n, double theta) {
    if (n < 1) throw ConfigError("zipf key space must be >= 1");
    if (theta < 0.0) throw ConfigError("zipf exponent must be >= 0");
    cdf_.resize(std::size_t(n));
    double acc = 0.0;
    for (std::int64_t r = 0; r < n; ++r) {
        acc += 1.0 / std::pow(double(r + 1), theta);
        cdf_[std::size_t(r)] = acc;
    }
    for (auto& c : cdf_) c /= acc;
    cdf_.back() = 1.0;
}

std::int64_t ZipfSampler::sample(Rng& rng) const {
    double u = rng.next_double();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.end()) --it;
    return it - cdf_.begin();
}

// ---------------------------------------------------------------------------
// Key drawing
// ---------------------------------------------------------------------------

namespace {

// Draws `len` distinct keys. A multi-partition event spans exactly `span`
// partitions (picked with the access skew); otherwise all keys stay in the
// first key's partition.
void draw_keys(Rng& rng, const ZipfSampler& zipf, std::uint32_t partitions, bool multi,
               std::uint32_t span, Key* out, std::size_t len) {
    auto taken = [&](Key k, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i)
            if (out[i] == k) return true;
        return false;
    };
    if (!multi || partitions <= 1) {
        out[0] = zipf.sample(rng);
        std::uint32_t home = partition_of(TableId{0}, out[0], partitions);
        for (std::size_t i = 1; i < len; ++i) {
            Key k;
            do {
                k = zipf.sample(rng);
            } while (partition_of(TableId{0}, k, partitions) != home || taken(k, i));
            out[i] = k;
        }
        return;
    }
    span = std::min(span, partitions);
    std::vector<std::uint32_t> parts;
    while (parts.size() < span) {
        std::uint32_t p = partition_of(TableId{0}, zipf.sample(rng), partitions);
        if (std::find(parts.begin(), parts.end(), p) == parts.end()) parts.push_back(p);
    }
    for (std::size_t i = 0; i < len; ++i) {
        std::uint32_t want = parts[i % span];
        Key k;
        do {
            k = zipf.sample(rng);
        } while (partition_of(TableId{0}, k, partitions) != want || taken(k, i));
        out[i] = k;
    }
}

// The per-partition rejection sampling above terminates only when every
// partition holds at least `len` keys; checked once at source construction.
void require_partition_capacity(std::int64_t table_size, std::uint32_t partitions,
                                std::size_t len) {
    if (partitions <= 1) {
        if (table_size < std::int64_t(len)) throw ConfigError("table too small for event length");
        return;
    }
    std::vector<std::int64_t> counts(partitions, 0);
    for (Key k = 0; k < table_size; ++k) ++counts[partition_of(TableId{0}, k, partitions)];
    for (auto c : counts)
        if (c < std::int64_t(len))
            throw ConfigError("a partition holds fewer keys than the event length");
}

std::uint64_t fold_double(std::uint64_t h, double v) {
    return mix64(h ^ std::bit_cast<std::uint64_t>(v));
}

// ---------------------------------------------------------------------------
// GS — grep/sum microbenchmark
// ---------------------------------------------------------------------------

class GsSource final : public PayloadSource {
public:
    explicit GsSource(const WorkloadConfig& cfg)
        : cfg_(cfg), rng_(mix64(cfg.seed ^ 0x675eedull)), zipf_(cfg.table_size, cfg.skew) {
        require_partition_capacity(cfg.table_size, cfg.partitions, 10);
    }

    bool next(AppPayload& out) override {
        if (emitted_ == cfg_.events) return false;
        ++emitted_;
        GsPayload p;
        p.is_read = rng_.chance(cfg_.read_ratio);
        p.len = 10;
        bool multi = cfg_.partitions > 1 && cfg_.mp_length > 1 && rng_.chance(cfg_.mp_ratio);
        draw_keys(rng_, zipf_, cfg_.partitions, multi, cfg_.mp_length, p.keys.data(), 10);
        if (!p.is_read)
            for (auto& v : p.values) v = double(rng_.uniform(1000));
        out = p;
        return true;
    }

private:
    WorkloadConfig cfg_;
    Rng rng_;
    ZipfSampler zipf_;
    std::uint64_t emitted_ = 0;
};

class GsLogic final : public OperatorLogic {
public:
    void pre_process(const Event&, EventBlotter&) override {}

    void state_access(const Event& e, EventBlotter&, TxnBuilder& txn) override {
        const auto& p = std::get<GsPayload>(e.payload);
        for (std::uint8_t i = 0; i < p.len; ++i) {
            StateRef ref{kGsTable, p.keys[i]};
            if (p.is_read)
                txn.issue_read(ref);
            else
                txn.issue_write(ref, p.values[i]);
        }
    }

    std::uint64_t post_process(const Event& e, const EventBlotter& eb) override {
        const auto& p = std::get<GsPayload>(e.payload);
        if (!p.is_read || eb.status != TxnStatus::Committed) return 0;
        double sum = 0.0;
        for (std::uint8_t i = 0; i < p.len; ++i) sum += as_double(eb.results[i]);
        return fold_double(0x675u, sum);
    }
};

// ---------------------------------------------------------------------------
// SL — streaming ledger
// ---------------------------------------------------------------------------

class SlSource final : public PayloadSource {
public:
    explicit SlSource(const WorkloadConfig& cfg)
        : cfg_(cfg), rng_(mix64(cfg.seed ^ 0x515eedull)), zipf_(cfg.table_size, cfg.skew) {
        if (cfg.table_size < 2) throw ConfigError("ledger needs at least two accounts");
    }

    bool next(AppPayload& out) override {
        if (emitted_ == cfg_.events) return false;
        ++emitted_;
        SlPayload p;
        p.is_transfer = rng_.chance(0.5);
        p.src_acc = zipf_.sample(rng_);
        p.src_ast = zipf_.sample(rng_);
        if (p.is_transfer) {
            do {
                p.dst_acc = zipf_.sample(rng_);
            } while (p.dst_acc == p.src_acc);
            do {
                p.dst_ast = zipf_.sample(rng_);
            } while (p.dst_ast == p.src_ast);
        }
        p.amount_acc = double(rng_.uniform_in(1, 100));
        p.amount_ast = double(rng_.uniform_in(1, 100));
        out = p;
        return true;
    }

private:
    WorkloadConfig cfg_;
    Rng rng_;
    ZipfSampler zipf_;
    std::uint64_t emitted_ = 0;
};

// Transfer: conditional debits of the source account/asset, credits of the
// destination guarded on the (already debited) source staying non-negative —
// the guards on foreign keys are what couple the four operation chains.
class SlLogic final : public OperatorLogic {
public:
    void pre_process(const Event&, EventBlotter&) override {}

    void state_access(const Event& e, EventBlotter&, TxnBuilder& txn) override {
        const auto& p = std::get<SlPayload>(e.payload);
        StateRef sacc{kSlAccounts, p.src_acc};
        StateRef sast{kSlAssets, p.src_ast};
        if (!p.is_transfer) {
            txn.issue_read_modify(sacc, kFunAdd, FunArgs{p.amount_acc, 0.0, 0});
            txn.issue_read_modify(sast, kFunAdd, FunArgs{p.amount_ast, 0.0, 0});
            return;
        }
        StateRef dacc{kSlAccounts, p.dst_acc};
        StateRef dast{kSlAssets, p.dst_ast};
        txn.issue_read_modify(sacc, kFunSub, FunArgs{p.amount_acc, 0.0, 0}, kCondGe,
                              FunArgs{p.amount_acc, 0.0, 0}, sacc);
        txn.issue_read_modify(sast, kFunSub, FunArgs{p.amount_ast, 0.0, 0}, kCondGe,
                              FunArgs{p.amount_ast, 0.0, 0}, sast);
        txn.issue_read_modify(dacc, kFunAdd, FunArgs{p.amount_acc, 0.0, 0}, kCondGe,
                              FunArgs{0.0, 0.0, 0}, sacc);
        txn.issue_read_modify(dast, kFunAdd, FunArgs{p.amount_ast, 0.0, 0}, kCondGe,
                              FunArgs{0.0, 0.0, 0}, sast);
    }

    std::uint64_t post_process(const Event& e, const EventBlotter& eb) override {
        if (eb.status != TxnStatus::Committed) return 1;
        const auto& p = std::get<SlPayload>(e.payload);
        std::uint64_t h = p.is_transfer ? 0x717ull : 0xd31ull;
        int slots = p.is_transfer ? 4 : 2;
        for (int i = 0; i < slots; ++i) h = fold_double(h, as_double(eb.results[i]));
        return h;
    }
};

// ---------------------------------------------------------------------------
// OB — online bidding
// ---------------------------------------------------------------------------

class ObSource final : public PayloadSource {
public:
    explicit ObSource(const WorkloadConfig& cfg)
        : cfg_(cfg), rng_(mix64(cfg.seed ^ 0x0b5eedull)), zipf_(cfg.table_size, cfg.skew) {
        require_partition_capacity(cfg.table_size, cfg.partitions, 20);
    }

    bool next(AppPayload& out) override {
        if (emitted_ == cfg_.events) return false;
        ++emitted_;
        ObPayload p;
        std::uint64_t r = rng_.uniform(8);  // bid : alter : top = 6 : 1 : 1
        if (r < 6) {
            p.kind = ObKind::Bid;
            p.len = 1;
            p.items[0] = zipf_.sample(rng_);
            p.bid_price = double(rng_.uniform_in(1, 120));
            p.bid_qty = double(rng_.uniform_in(1, 5));
        } else {
            p.kind = r == 6 ? ObKind::Alter : ObKind::Top;
            p.len = 20;
            bool multi = cfg_.partitions > 1 && cfg_.mp_length > 1 && rng_.chance(cfg_.mp_ratio);
            draw_keys(rng_, zipf_, cfg_.partitions, multi, cfg_.mp_length, p.items.data(), 20);
            for (int i = 0; i < 20; ++i) {
                if (p.kind == ObKind::Alter) {
                    p.prices[i] = double(rng_.uniform_in(1, 100));
                    p.qtys[i] = double(rng_.uniform(100));
                } else {
                    p.qtys[i] = double(rng_.uniform_in(1, 10));
                }
            }
        }
        out = p;
        return true;
    }

private:
    WorkloadConfig cfg_;
    Rng rng_;
    ZipfSampler zipf_;
    std::uint64_t emitted_ = 0;
};

class ObLogic final : public OperatorLogic {
public:
    void pre_process(const Event&, EventBlotter&) override {}

    void state_access(const Event& e, EventBlotter&, TxnBuilder& txn) override {
        const auto& p = std::get<ObPayload>(e.payload);
        switch (p.kind) {
            case ObKind::Bid: {
                StateRef ref{kObTable, p.items[0]};
                txn.issue_read_modify(ref, kFunQtySub, FunArgs{p.bid_qty, 0.0, 0}, kCondBidOk,
                                      FunArgs{p.bid_price, p.bid_qty, 0}, ref);
                break;
            }
            case ObKind::Alter:
                for (std::uint8_t i = 0; i < p.len; ++i)
                    txn.issue_write(StateRef{kObTable, p.items[i]},
                                    PriceQty{p.prices[i], p.qtys[i]});
                break;
            case ObKind::Top:
                for (std::uint8_t i = 0; i < p.len; ++i)
                    txn.issue_read_modify(StateRef{kObTable, p.items[i]}, kFunQtyAdd,
                                          FunArgs{p.qtys[i], 0.0, 0});
                break;
        }
    }

    std::uint64_t post_process(const Event& e, const EventBlotter& eb) override {
        if (eb.status != TxnStatus::Committed) return 1;
        const auto& p = std::get<ObPayload>(e.payload);
        switch (p.kind) {
            case ObKind::Bid: {
                const auto& pre = std::get<PriceQty>(eb.results[0]);
                std::uint64_t h = fold_double(0xb1dull, pre.price);
                return fold_double(h, pre.qty - p.bid_qty);
            }
            case ObKind::Alter: return 2;
            case ObKind::Top: {
                std::uint64_t h = 0x70eull;
                for (std::uint8_t i = 0; i < p.len; ++i)
                    h = fold_double(h, std::get<PriceQty>(eb.results[i]).qty);
                return h;
            }
        }
        return 0;
    }
};

// ---------------------------------------------------------------------------
// TP — toll processing
// ---------------------------------------------------------------------------

// Each position report expands into three consecutive events: speed-average
// update, vehicle-count update, then the toll notification that reads both.
class TpSource final : public PayloadSource {
public:
    explicit TpSource(const WorkloadConfig& cfg)
        : cfg_(cfg), rng_(mix64(cfg.seed ^ 0x795eedull)), zipf_(cfg.table_size, cfg.skew) {}

    bool next(AppPayload& out) override {
        if (emitted_ == cfg_.events) return false;
        ++emitted_;
        if (phase_ == 0) {
            seg_ = std::int32_t(zipf_.sample(rng_));
            vid_ = std::int64_t(rng_.uniform(std::uint64_t(kTpVehicles)));
            speed_ = double(rng_.uniform(101));
        }
        TpPayload p;
        p.kind = phase_ == 0   ? TpKind::SpeedReport
                 : phase_ == 1 ? TpKind::VehicleCount
                               : TpKind::TollNotify;
        p.vid = vid_;
        p.segment = seg_;
        p.speed = speed_;
        phase_ = (phase_ + 1) % 3;
        out = p;
        return true;
    }

private:
    WorkloadConfig cfg_;
    Rng rng_;
    ZipfSampler zipf_;
    std::uint64_t emitted_ = 0;
    int phase_ = 0;
    std::int32_t seg_ = 0;
    std::int64_t vid_ = 0;
    double speed_ = 0.0;
};

class TpLogic final : public OperatorLogic {
public:
    void pre_process(const Event&, EventBlotter&) override {}

    void state_access(const Event& e, EventBlotter&, TxnBuilder& txn) override {
        const auto& p = std::get<TpPayload>(e.payload);
        StateRef speed{kTpSpeed, Key(p.segment)};
        StateRef cars{kTpCars, Key(p.segment)};
        switch (p.kind) {
            case TpKind::SpeedReport:
                txn.issue_read_modify(speed, kFunAvgAdd, FunArgs{p.speed, 0.0, 0});
                break;
            case TpKind::VehicleCount:
                txn.issue_read_modify(cars, kFunInsertVid, FunArgs{0.0, 0.0, p.vid});
                break;
            case TpKind::TollNotify:
                txn.issue_read(speed);
                txn.issue_read(cars);
                break;
        }
    }

    std::uint64_t post_process(const Event& e, const EventBlotter& eb) override {
        if (eb.status != TxnStatus::Committed) return 1;
        const auto& p = std::get<TpPayload>(e.payload);
        switch (p.kind) {
            case TpKind::SpeedReport: {
                const auto& cs = std::get<CountSum>(eb.results[0]);
                return fold_double(mix64(std::uint64_t(cs.count)), cs.sum);
            }
            case TpKind::VehicleCount:
                return fold_double(0xca25ull, as_double(eb.results[0]));
            case TpKind::TollNotify: {
                const auto& cs = std::get<CountSum>(eb.results[0]);
                double cars = as_double(eb.results[1]);
                double avg = cs.count > 0 ? cs.sum / double(cs.count) : 0.0;
                double toll = avg < 40.0 ? 2.0 * (cars - 150.0) * (cars - 150.0) : 0.0;
                return fold_double(mix64(std::uint64_t(p.segment) ^ 0x7011ull), toll);
            }
        }
        return 0;
    }
};

}  // namespace

// ---------------------------------------------------------------------------
// Population and factories
// ---------------------------------------------------------------------------

void populate_tables(const WorkloadConfig& raw, StateStore& store) {
    WorkloadConfig cfg = resolve_workload(raw);
    switch (cfg.app) {
        case AppKind::GS: {
            TableId t = store.add_table("gs_records", std::size_t(cfg.table_size));
            Rng rng(mix64(cfg.seed ^ 0x600d61ull));
            for (Key k = 0; k < cfg.table_size; ++k)
                store.table(t).insert(k, double(rng.uniform(1000)));
            break;
        }
        case AppKind::SL: {
            TableId acc = store.add_table("accounts", std::size_t(cfg.table_size));
            TableId ast = store.add_table("assets", std::size_t(cfg.table_size));
            Rng ra(mix64(cfg.seed ^ 0x600dacull));
            Rng rb(mix64(cfg.seed ^ 0x600da5ull));
            for (Key k = 0; k < cfg.table_size; ++k)
                store.table(acc).insert(k, cfg.sl_init_balance + double(ra.uniform(101)));
            for (Key k = 0; k < cfg.table_size; ++k)
                store.table(ast).insert(k, cfg.sl_init_balance + double(rb.uniform(101)));
            break;
        }
        case AppKind::OB: {
            TableId t = store.add_table("items", std::size_t(cfg.table_size));
            Rng rng(mix64(cfg.seed ^ 0x600d0bull));
            for (Key k = 0; k < cfg.table_size; ++k) {
                double price = double(rng.uniform_in(1, 100));
                double qty = double(rng.uniform(100));
                store.table(t).insert(k, PriceQty{price, qty});
            }
            break;
        }
        case AppKind::TP: {
            TableId speed = store.add_table("seg_speed", std::size_t(cfg.table_size));
            TableId cars = store.add_table("seg_cars", std::size_t(cfg.table_size));
            for (Key k = 0; k < cfg.table_size; ++k) {
                store.table(speed).insert(k, CountSum{});
                store.table(cars).insert(k, IdSet{});
            }
            break;
        }
    }
}

std::unique_ptr<PayloadSource> make_source(const WorkloadConfig& raw) {
    WorkloadConfig cfg = resolve_workload(raw);
    switch (cfg.app) {
        case AppKind::GS: return std::make_unique<GsSource>(cfg);
        case AppKind::SL: return std::make_unique<SlSource>(cfg);
        case AppKind::OB: return std::make_unique<ObSource>(cfg);
        case AppKind::TP: return std::make_unique<TpSource>(cfg);
    }
    throw ConfigError("unknown app");
}

std::unique_ptr<OperatorLogic> make_logic(const WorkloadConfig& raw) {
    switch (raw.app) {
        case AppKind::GS: return std::make_unique<GsLogic>();
        case AppKind::SL: return std::make_unique<SlLogic>();
        case AppKind::OB: return std::make_unique<ObLogic>();
        case AppKind::TP: return std::make_unique<TpLogic>();
    }
    throw ConfigError("unknown app");
}

}  // namespace streamtx
