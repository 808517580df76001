#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gpusim/isa.hpp"

namespace gpusim {

struct Calibration {
    int issue_to_control = 1;
    int control_to_allocate = 1;
    int read_window = 3;
    int lsu_visibility = 2;
    int lsu_entry_offset = 3;
    std::string version = "ampere-1";
};

struct ReadinessReport {
    bool valid_instruction = false;
    bool stall_counter_zero = true;
    bool yield_clear = true;
    bool deps_clear = true;
    bool unit_latch_free = true;
    bool constant_cache_ok = true;
    bool lsu_slot_free = true;
    bool control_flow_clear = true;

    bool eligible() const;
    // first failing condition, or "ready"
    std::string reason() const;
};

// last issued warp if still eligible, otherwise the eligible warp in the highest slot
std::optional<int> cggty_select(const std::vector<ReadinessReport>& reports, int last_issued);

// cycle at which a warp that issued at t may issue again
Cycle next_eligible(Cycle t, const ControlBits& cb);

}  // namespace gpusim
