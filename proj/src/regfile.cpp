#include "gpusim/regfile.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "gpusim/deps.hpp"

namespace gpusim {

WarpRegisters::WarpRegisters() : r_(kNumRegs, LaneVec{}) {}

LaneVec WarpRegisters::read(OperandKind kind, int index) const {
    LaneVec v{};
    switch (kind) {
        case OperandKind::Reg:
            if (index < 0 || index >= kNumRegs) throw SimFault("regular register R" + std::to_string(index) + " out of range");
            if (index != kRZ) v = r_[index];
            break;
        case OperandKind::UReg:
            if (index < 0 || index >= kNumURegs) throw SimFault("uniform register UR" + std::to_string(index) + " out of range");
            if (index != kURZ) v.fill(ur_[index]);
            break;
        default: throw SimFault("register read of a non-register operand");
    }
    return v;
}

void WarpRegisters::write(OperandKind kind, int index, const LaneVec& v, uint32_t lane_mask) {
    switch (kind) {
        case OperandKind::Reg:
            if (index < 0 || index >= kNumRegs) throw SimFault("regular register R" + std::to_string(index) + " out of range");
            if (index == kRZ) return;
            for (int l = 0; l < kWarpSize; ++l)
                if ((lane_mask >> l) & 1) r_[index][l] = v[l];
            break;
        case OperandKind::UReg:
            if (index < 0 || index >= kNumURegs) throw SimFault("uniform register UR" + std::to_string(index) + " out of range");
            if (index == kURZ || lane_mask == 0) return;
            for (int l = 0; l < kWarpSize; ++l)
                if ((lane_mask >> l) & 1) {
                    ur_[index] = v[l];
                    break;
                }
            break;
        default: throw SimFault("register write of a non-register operand");
    }
}

uint32_t WarpRegisters::pred_mask(int index, bool uniform) const {
    if (index < 0 || index >= kNumPreds) throw SimFault("predicate index out of range");
    if (index == kPT) return 0xffffffffu;
    if (uniform) return up_[index] ? 0xffffffffu : 0u;
    return p_[index];
}

void WarpRegisters::set_pred(int index, bool uniform, uint32_t mask, uint32_t lane_mask) {
    if (index < 0 || index >= kNumPreds) throw SimFault("predicate index out of range");
    if (index == kPT) return;
    if (uniform) {
        if (lane_mask) up_[index] = (mask & lane_mask) != 0;
        return;
    }
    p_[index] = (p_[index] & ~lane_mask) | (mask & lane_mask);
}

RegFileCache::RegFileCache(int banks, bool enabled) : banks_(banks), enabled_(enabled), e_(banks) {}

bool RegFileCache::hit(int warp, int position, int reg) const {
    if (!enabled_ || position < 1 || position > 3 || reg == kRZ) return false;
    const Entry& e = e_[bank_of(reg, banks_)][position - 1];
    return e.valid && e.warp == warp && e.reg == reg;
}

std::vector<bool> RegFileCache::access(int warp, const std::vector<RfcRead>& reads) {
    std::vector<bool> hits;
    for (const auto& rd : reads) {
        bool h = hit(warp, rd.position, rd.reg);
        hits.push_back(h);
        if (!enabled_ || rd.position < 1 || rd.position > 3 || rd.reg == kRZ) continue;
        Entry& e = e_[bank_of(rd.reg, banks_)][rd.position - 1];
        if (rd.reuse)
            e = {warp, rd.reg, true};
        else
            e.valid = false;
    }
    return hits;
}

int RegFileCache::valid_entries() const {
    int n = 0;
    for (const auto& b : e_)
        for (const auto& e : b) n += e.valid;
    return n;
}

ReadPorts::ReadPorts(int banks, int ports_per_bank, int window)
    : banks_(banks), ports_(ports_per_bank), window_(window) {}

int ReadPorts::used(int bank, Cycle c) const {
    auto it = use_.find({c, bank});
    return it == use_.end() ? 0 : it->second;
}

std::optional<PortPlan> ReadPorts::plan(const std::vector<PortRequest>& reqs, Cycle ws) const {
    PortPlan p;
    p.window_start = ws;
    std::map<std::pair<Cycle, int>, int> extra;
    for (const auto& r : reqs) {
        bool placed = false;
        for (Cycle c = ws + window_ - 1; c >= ws; --c) {
            int u = used(r.bank, c) + extra[{c, r.bank}];
            if (u < ports_) {
                ++extra[{c, r.bank}];
                p.slot.push_back(c);
                placed = true;
                break;
            }
        }
        if (!placed) return std::nullopt;
    }
    return p;
}

void ReadPorts::commit(const std::vector<PortRequest>& reqs, const PortPlan& p) {
    for (size_t k = 0; k < reqs.size(); ++k) {
        int& u = use_[{p.slot[k], reqs[k].bank}];
        if (++u > ports_) throw SimFault("read port over-subscribed");
    }
}

void ReadPorts::retire_before(Cycle c) { use_.erase(use_.begin(), use_.lower_bound({c, -1})); }

bool WritePorts::fixed_write(int bank, Cycle c) { return ++use_[{c, bank}] > 1; }

int WritePorts::writes(int bank, Cycle c) const {
    auto it = use_.find({c, bank});
    return it == use_.end() ? 0 : it->second;
}

Cycle WritePorts::load_write(const std::vector<int>& banks, Cycle c) {
    while (std::any_of(banks.begin(), banks.end(), [&](int b) { return writes(b, c) > 0; })) ++c;
    for (int b : banks) ++use_[{c, b}];
    return c;
}

void WritePorts::retire_before(Cycle c) { use_.erase(use_.begin(), use_.lower_bound({c, -1})); }

}  // namespace gpusim
