#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "gpusim/isa.hpp"
#include "gpusim/regfile.hpp"

namespace gpusim {

struct ExecConfig {
    int fp32_width = 16;
    int int32_width = 16;
    bool dual_fp32 = true;
};

enum class UnitId : uint8_t { Fp32, Int32, None };

class UnitLatches {
public:
    explicit UnitLatches(const ExecConfig& cfg = {});

    // unit that would accept the instruction issued at c, or nullopt if its latch is busy
    std::optional<UnitId> pick(Opcode op, Cycle c) const;
    void accept(UnitId u, Cycle c);
    Cycle busy_until(UnitId u) const { return busy_[int(u)]; }

private:
    int hold(UnitId u) const;
    ExecConfig cfg_;
    std::array<Cycle, 2> busy_{};
};

struct LaneInfo {
    int warp = 0;
    int subcore = 0;
};

// result of a fixed-latency instruction: register lanes, or a predicate mask for ISETP
struct ExecResult {
    LaneVec value{};
    uint32_t pred = 0;
};

// srcs holds one lane vector per source operand (special registers and immediates pre-expanded)
ExecResult execute_semantics(const Instruction& inst, const std::vector<LaneVec>& srcs, const LaneInfo& info);
LaneVec special_value(SpecialReg r, const LaneInfo& info);
uint32_t clock_read(Cycle c);

}  // namespace gpusim
