#pragma once

#include <array>

#include "streamtx/core.hpp"

namespace streamtx {

// ---------------------------------------------------------------------------
// Function registry
//
// Modify functions and conditions are registered once at setup and looked up
// by id during execution. Both must be pure: the same inputs always produce
// the same output, which is what makes re-evaluation after an abort and the
// serial reference execution agree. Modify functions take their source by
// value so callers can move large container values through them instead of
// copying.
// ---------------------------------------------------------------------------

using ModifyFun = RecordValue (*)(RecordValue src, const FunArgs& args);
using CondFun = bool (*)(const RecordValue& value, const FunArgs& args);

class FunctionRegistry {
public:
    static constexpr std::size_t kCapacity = 32;

    void register_fun(FunId id, ModifyFun fn) {
        if (id >= kCapacity || fn == nullptr || funs_[id] != nullptr)
            throw ApiMisuse("bad modify-function registration");
        funs_[id] = fn;
    }

    void register_cond(CondId id, CondFun fn) {
        if (id >= kCapacity || fn == nullptr || conds_[id] != nullptr)
            throw ApiMisuse("bad condition registration");
        conds_[id] = fn;
    }

    ModifyFun fun(FunId id) const {
        if (id >= kCapacity || funs_[id] == nullptr) throw ApiMisuse("unregistered modify function");
        return funs_[id];
    }

    CondFun cond(CondId id) const {
        if (id >= kCapacity || conds_[id] == nullptr) throw ApiMisuse("unregistered condition");
        return conds_[id];
    }

private:
    std::array<ModifyFun, kCapacity> funs_{};
    std::array<CondFun, kCapacity> conds_{};
};

// --- well-known ids shared by the benchmark applications and tests ---

// modify functions
inline constexpr FunId kFunAdd = 1;        // double:  v + a
inline constexpr FunId kFunSub = 2;        // double:  v - a
inline constexpr FunId kFunAssign = 3;     // double:  a
inline constexpr FunId kFunCopy = 4;       // identity of the source value
inline constexpr FunId kFunQtySub = 5;     // PriceQty: qty -= a
inline constexpr FunId kFunQtyAdd = 6;     // PriceQty: qty += a
inline constexpr FunId kFunAvgAdd = 7;     // CountSum: (count+1, sum+a)
inline constexpr FunId kFunInsertVid = 8;  // IdSet:   ids ∪ {i}

// conditions
inline constexpr CondId kCondGe = 1;     // double:  v >= a
inline constexpr CondId kCondBidOk = 2;  // PriceQty: price <= a && qty >= b

// Registers everything above. Safe to call once per registry.
void register_standard_functions(FunctionRegistry& reg);

}  // namespace streamtx
