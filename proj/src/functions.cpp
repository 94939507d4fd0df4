#include "streamtx/functions.hpp"

namespace streamtx {

namespace {

RecordValue f_add(RecordValue v, const FunArgs& a) { return as_double(v) + a.a; }
RecordValue f_sub(RecordValue v, const FunArgs& a) { return as_double(v) - a.a; }
RecordValue f_assign(RecordValue, const FunArgs& a) { return a.a; }
RecordValue f_copy(RecordValue v, const FunArgs&) { return v; }

RecordValue f_qty_sub(RecordValue v, const FunArgs& a) {
    std::get<PriceQty>(v).qty -= a.a;
    return v;
}

RecordValue f_qty_add(RecordValue v, const FunArgs& a) {
    std::get<PriceQty>(v).qty += a.a;
    return v;
}

RecordValue f_avg_add(RecordValue v, const FunArgs& a) {
    auto& cs = std::get<CountSum>(v);
    cs.count += 1.0;
    cs.sum += a.a;
    return v;
}

RecordValue f_insert_vid(RecordValue v, const FunArgs& a) {
    std::get<IdSet>(v).ids.insert(a.i);
    return v;
}

bool c_ge(const RecordValue& v, const FunArgs& a) { return as_double(v) >= a.a; }

bool c_bid_ok(const RecordValue& v, const FunArgs& a) {
    const auto& pq = std::get<PriceQty>(v);
    return pq.price <= a.a && pq.qty >= a.b;
}

}  // namespace

void register_standard_functions(FunctionRegistry& reg) {
    reg.register_fun(kFunAdd, f_add);
    reg.register_fun(kFunSub, f_sub);
    reg.register_fun(kFunAssign, f_assign);
    reg.register_fun(kFunCopy, f_copy);
    reg.register_fun(kFunQtySub, f_qty_sub);
    reg.register_fun(kFunQtyAdd, f_qty_add);
    reg.register_fun(kFunAvgAdd, f_avg_add);
    reg.register_fun(kFunInsertVid, f_insert_vid);
    reg.register_cond(kCondGe, c_ge);
    reg.register_cond(kCondBidOk, c_bid_ok);
}

}  // namespace streamtx
