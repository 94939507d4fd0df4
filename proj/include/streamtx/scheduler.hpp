#pragma once

#include <condition_variable>
#include <cstdint>
#include <mutex>
#include <vector>

#include "streamtx/common.hpp"
#include "streamtx/core.hpp"

namespace streamtx {

// ---------------------------------------------------------------------------
// Bounded event queue (one ingress producer, one executor consumer)
//
// Hand-off is block-at-a-time: ingress packs up to kIngressBlock data events
// into a vector and each exchange moves a whole block per lock round-trip,
// keeping queue overhead flat as the event rate grows. Punctuations and
// end-of-stream travel as their own single-element block so stream order is
// preserved. Capacity counts blocks. Blocking on both ends: a full queue
// applies back-pressure to ingress, an empty one parks the executor.
// Condition variables rather than spinning keep oversubscribed runs (more
// threads than cores) from burning cycles.
// ---------------------------------------------------------------------------

inline constexpr std::size_t kIngressBlock = 32;

class EventQueue {
public:
    explicit EventQueue(std::size_t capacity) : capacity_(capacity) { ring_.resize(capacity); }

    // Single-event convenience: ships the event as its own block.
    void push(Event&& ev) {
        std::vector<Event> block;
        block.reserve(1);
        block.push_back(std::move(ev));
        push_block(std::move(block));
    }

    // Drops the block silently once the queue is aborted so a dying engine
    // never wedges the producer. Empty blocks are ignored.
    void push_block(std::vector<Event>&& block) {
        if (block.empty()) return;
        std::unique_lock<std::mutex> lk(mu_);
        not_full_.wait(lk, [&] { return size_ < capacity_ || aborted_; });
        if (aborted_) return;
        ring_[(head_ + size_) % capacity_] = std::move(block);
        ++size_;
        if (size_ == 1) not_empty_.notify_one();
    }

    // Never returns an empty block.
    std::vector<Event> pop_block() {
        std::unique_lock<std::mutex> lk(mu_);
        not_empty_.wait(lk, [&] { return size_ > 0 || aborted_; });
        if (aborted_) throw EngineAborted("event queue aborted");
        std::vector<Event> block = std::move(ring_[head_]);
        head_ = (head_ + 1) % capacity_;
        --size_;
        if (size_ == capacity_ - 1) not_full_.notify_one();
        return block;
    }

    // Wakes both ends permanently; used on engine shutdown after a failure.
    void abort() {
        std::lock_guard<std::mutex> g(mu_);
        aborted_ = true;
        not_empty_.notify_all();
        not_full_.notify_all();
    }

    // Blocks currently queued.
    std::size_t size() const {
        std::lock_guard<std::mutex> g(mu_);
        return size_;
    }

private:
    mutable std::mutex mu_;
    std::condition_variable not_empty_, not_full_;
    std::vector<std::vector<Event>> ring_;
    std::size_t capacity_, head_ = 0, size_ = 0;
    bool aborted_ = false;
};

// ---------------------------------------------------------------------------
// Reusable rendezvous barrier
//
// Generation-counted so the same barrier object serves every phase of every
// batch. poison() releases all current and future waiters with
// EngineAborted, so one dying executor cannot strand the rest at a
// rendezvous point.
// ---------------------------------------------------------------------------

class Barrier {
public:
    explicit Barrier(std::uint32_t parties) : parties_(parties) {}

    void arrive_and_wait() {
        std::unique_lock<std::mutex> lk(mu_);
        if (poisoned_) throw EngineAborted(reason_);
        std::uint64_t gen = generation_;
        if (++arrived_ == parties_) {
            arrived_ = 0;
            ++generation_;
            cv_.notify_all();
            return;
        }
        cv_.wait(lk, [&] { return generation_ != gen || poisoned_; });
        if (poisoned_) throw EngineAborted(reason_);
    }

    void poison(const std::string& reason) {
        std::lock_guard<std::mutex> g(mu_);
        if (!poisoned_) {
            poisoned_ = true;
            reason_ = "engine aborted: " + reason;
        }
        cv_.notify_all();
    }

    bool poisoned() const {
        std::lock_guard<std::mutex> g(mu_);
        return poisoned_;
    }

private:
    std::mutex mutable mu_;
    std::condition_variable cv_;
    std::uint32_t parties_, arrived_ = 0;
    std::uint64_t generation_ = 0;
    bool poisoned_ = false;
    std::string reason_;
};

// ---------------------------------------------------------------------------
// Chain placement policies
// ---------------------------------------------------------------------------

enum class Placement : std::uint8_t {
    SharedNothing,     // chains hash-partitioned across workers, private pools
    SharedEverything,  // one global pool, every worker pulls from it
    SharedGroup,       // chains hash-partitioned across worker groups
};

struct PlacementConfig {
    Placement kind = Placement::SharedNothing;
    std::uint32_t groups = 1;  // SharedGroup only
    bool steal = false;        // forced on for SharedEverything / SharedGroup
};

// Number of distinct chain pools under a policy.
std::uint32_t pool_count(const PlacementConfig& pc, std::uint32_t workers);

// Pool that owns a given state cell.
std::uint32_t pool_of(const PlacementConfig& pc, std::uint32_t workers, const StateRef& ref);

// Pool a worker drains first.
std::uint32_t home_pool(const PlacementConfig& pc, std::uint32_t workers, std::uint32_t worker);

// Validates and normalizes (forces steal for shared pools, checks divisibility).
PlacementConfig resolve_placement(PlacementConfig pc, std::uint32_t workers);

}  // namespace streamtx
