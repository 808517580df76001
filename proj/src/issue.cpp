#include "gpusim/issue.hpp"

#include <algorithm>

namespace gpusim {

bool ReadinessReport::eligible() const {
    return valid_instruction && stall_counter_zero && yield_clear && deps_clear && unit_latch_free &&
           constant_cache_ok && lsu_slot_free && control_flow_clear;
}

std::string ReadinessReport::reason() const {
    if (!control_flow_clear) return "control_flow";
    if (!valid_instruction) return "icache";
    if (!stall_counter_zero) return "stall_counter";
    if (!yield_clear) return "yield";
    if (!deps_clear) return "deps";
    if (!constant_cache_ok) return "const_cache";
    if (!lsu_slot_free) return "lsu";
    if (!unit_latch_free) return "unit_latch";
    return "ready";
}

std::optional<int> cggty_select(const std::vector<ReadinessReport>& reports, int last_issued) {
    if (last_issued >= 0 && last_issued < int(reports.size()) && reports[last_issued].eligible()) return last_issued;
    for (int s = int(reports.size()) - 1; s >= 0; --s)
        if (reports[s].eligible()) return s;
    return std::nullopt;
}

Cycle next_eligible(Cycle t, const ControlBits& cb) { return t + 1 + std::max(cb.stall, cb.yield ? 1 : 0); }

}  // namespace gpusim
