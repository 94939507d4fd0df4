#include "streamtx/scheduler.hpp"

namespace streamtx {

std::uint32_t pool_count(const PlacementConfig& pc, std::uint32_t workers) {
    switch (pc.kind) {
        case Placement::SharedNothing: return workers;
        case Placement::SharedEverything: return 1;
        case Placement::SharedGroup: return pc.groups;
    }
    return 1;
}

std::uint32_t pool_of(const PlacementConfig& pc, std::uint32_t workers, const StateRef& ref) {
    std::uint32_t pools = pool_count(pc, workers);
    if (pools == 1) return 0;
    return std::uint32_t(state_hash(ref.table, ref.key) % pools);
}

std::uint32_t home_pool(const PlacementConfig& pc, std::uint32_t workers, std::uint32_t worker) {
    switch (pc.kind) {
        case Placement::SharedNothing: return worker;
        case Placement::SharedEverything: return 0;
        case Placement::SharedGroup: return worker / (workers / pc.groups);
    }
    return 0;
}

PlacementConfig resolve_placement(PlacementConfig pc, std::uint32_t workers) {
    if (workers == 0) throw ConfigError("worker count must be >= 1");
    switch (pc.kind) {
        case Placement::SharedNothing:
            pc.groups = workers;
            break;
        case Placement::SharedEverything:
            pc.groups = 1;
            pc.steal = true;  // a shared pool is meaningless without pulling from it
            break;
        case Placement::SharedGroup:
            if (pc.groups == 0 || pc.groups > workers || workers % pc.groups != 0)
                throw ConfigError("group count must divide the worker count");
            pc.steal = true;
            break;
    }
    return pc;
}

}  // namespace streamtx
