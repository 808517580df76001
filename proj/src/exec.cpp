#include "gpusim/exec.hpp"

#include <cmath>
#include <cstring>

#include "gpusim/deps.hpp"

namespace gpusim {

namespace {

float as_f(uint32_t b) {
    float f;
    std::memcpy(&f, &b, 4);
    return f;
}

uint32_t as_u(float f) {
    uint32_t b;
    std::memcpy(&b, &f, 4);
    return b;
}

bool compare(CmpOp op, int32_t a, int32_t b) {
    switch (op) {
        case CmpOp::LT: return a < b;
        case CmpOp::EQ: return a == b;
        case CmpOp::LE: return a <= b;
        case CmpOp::GT: return a > b;
        case CmpOp::NE: return a != b;
        case CmpOp::GE: return a >= b;
    }
    return false;
}

}  // namespace

UnitLatches::UnitLatches(const ExecConfig& cfg) : cfg_(cfg) {}

int UnitLatches::hold(UnitId u) const {
    int w = u == UnitId::Fp32 ? cfg_.fp32_width : cfg_.int32_width;
    return w >= kWarpSize ? 1 : (kWarpSize + w - 1) / w;
}

std::optional<UnitId> UnitLatches::pick(Opcode op, Cycle c) const {
    UnitClass cls = op_info(op).unit;
    if (cls == UnitClass::Fp32) {
        if (busy_[int(UnitId::Fp32)] <= c) return UnitId::Fp32;
        if (cfg_.dual_fp32 && busy_[int(UnitId::Int32)] <= c) return UnitId::Int32;
        return std::nullopt;
    }
    if (cls == UnitClass::Int32) {
        if (busy_[int(UnitId::Int32)] <= c) return UnitId::Int32;
        return std::nullopt;
    }
    return UnitId::None;
}

void UnitLatches::accept(UnitId u, Cycle c) {
    if (u == UnitId::None) return;
    if (busy_[int(u)] > c) throw SimFault("execution unit latch accepted while busy");
    busy_[int(u)] = c + hold(u);
}

LaneVec special_value(SpecialReg r, const LaneInfo& info) {
    LaneVec v{};
    for (int l = 0; l < kWarpSize; ++l) {
        switch (r) {
            case SpecialReg::TidX: v[l] = uint32_t(info.warp * kWarpSize + l); break;
            case SpecialReg::LaneId: v[l] = uint32_t(l); break;
            case SpecialReg::WarpId: v[l] = uint32_t(info.warp); break;
            case SpecialReg::CtaIdX: v[l] = 0; break;
        }
    }
    return v;
}

uint32_t clock_read(Cycle c) { return uint32_t(c); }

ExecResult execute_semantics(const Instruction& inst, const std::vector<LaneVec>& s, const LaneInfo& info) {
    ExecResult r;
    auto need = [&](size_t n) {
        if (s.size() < n) throw SimFault(std::string("missing operands for ") + op_info(inst.op).mnemonic);
    };
    for (int l = 0; l < kWarpSize; ++l) {
        uint32_t out = 0;
        switch (inst.op) {
            case Opcode::FFMA: need(3); out = as_u(std::fmaf(as_f(s[0][l]), as_f(s[1][l]), as_f(s[2][l]))); break;
            case Opcode::FADD: need(2); out = as_u(as_f(s[0][l]) + as_f(s[1][l])); break;
            case Opcode::FMUL: need(2); out = as_u(as_f(s[0][l]) * as_f(s[1][l])); break;
            case Opcode::IADD3: need(3); out = s[0][l] + s[1][l] + s[2][l]; break;
            case Opcode::IMAD: need(3); out = s[0][l] * s[1][l] + s[2][l]; break;
            case Opcode::MOV: need(1); out = s[0][l]; break;
            case Opcode::S2R: need(1); out = s[0][l]; break;
            case Opcode::ISETP:
                need(2);
                if (compare(inst.cmp, int32_t(s[0][l]), int32_t(s[1][l]))) r.pred |= 1u << l;
                break;
            default: break;
        }
        r.value[l] = out;
    }
    (void)info;
    return r;
}

}  // namespace gpusim
