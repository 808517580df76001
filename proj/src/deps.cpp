#include "gpusim/deps.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace gpusim {

std::string mechanism_name(Mechanism m) {
    switch (m) {
        case Mechanism::ControlBits: return "control_bits";
        case Mechanism::Scoreboard: return "scoreboard";
        case Mechanism::Hybrid: return "hybrid";
    }
    return "?";
}

Mechanism mechanism_from(const std::string& s) {
    if (s == "control_bits") return Mechanism::ControlBits;
    if (s == "scoreboard") return Mechanism::Scoreboard;
    if (s == "hybrid") return Mechanism::Hybrid;
    throw std::invalid_argument("unknown dependence mechanism '" + s + "'");
}

void DependenceCounters::add(int sb, int delta) {
    int n = v_.at(sb) + delta;
    if (n > kMaxCounter) throw SimFault("dependence counter SB" + std::to_string(sb) + " overflow past 63");
    if (n < 0) throw SimFault("dependence counter SB" + std::to_string(sb) + " underflow");
    v_[sb] = n;
}

bool DependenceCounters::all_zero() const {
    return std::all_of(v_.begin(), v_.end(), [](int x) { return x == 0; });
}

std::vector<CounterEffect> cb_on_issue(const Instruction& inst, Cycle issue) {
    std::vector<CounterEffect> out;
    if (inst.ctrl.write_barrier >= 0) out.push_back({issue + 2, inst.ctrl.write_barrier, +1});
    if (inst.ctrl.read_barrier >= 0) out.push_back({issue + 2, inst.ctrl.read_barrier, +1});
    return out;
}

bool cb_ready(const DependenceCounters& sb, const Instruction& inst) {
    for (int k = 0; k < kNumCounters; ++k)
        if (inst.ctrl.waits_on(k) && sb.value(k) != 0) return false;
    if (inst.op == Opcode::DEPBAR && inst.depbar) {
        if (sb.value(inst.depbar->counter) > inst.depbar->threshold) return false;
        for (int e : inst.depbar->extra)
            if (sb.value(e) != 0) return false;
    }
    return true;
}

int scoreboard_index(const RegRef& r) {
    switch (r.kind) {
        case OperandKind::Reg: return r.index < kRZ ? r.index : -1;
        case OperandKind::UReg: return r.index < kURZ ? 255 + r.index : -1;
        case OperandKind::Pred: return r.index < kPT ? 318 + r.index : -1;
        case OperandKind::UPred: return r.index < kPT ? 325 + r.index : -1;
        default: return -1;
    }
}

Scoreboard::Scoreboard(std::optional<int> max_consumers) : max_(max_consumers) {}

bool Scoreboard::ready(const Instruction& inst) const {
    for (const auto& r : regs_read(inst)) {
        int i = scoreboard_index(r);
        if (i >= 0 && pending_[i]) return false;
    }
    for (const auto& r : regs_written(inst)) {
        int i = scoreboard_index(r);
        if (i >= 0 && (pending_[i] || consumers_[i] > 0)) return false;
    }
    return true;
}

void Scoreboard::on_issue(const Instruction& inst) {
    for (const auto& r : regs_read(inst)) {
        int i = scoreboard_index(r);
        if (i < 0) continue;
        if (max_ && consumers_[i] + 1 > *max_)
            throw SimFault("scoreboard consumer counter overflow on " + reg_name(r));
        ++consumers_[i];
    }
    for (const auto& r : regs_written(inst)) {
        int i = scoreboard_index(r);
        if (i >= 0) pending_[i] = true;
    }
}

void Scoreboard::clear_write(const RegRef& r) {
    int i = scoreboard_index(r);
    if (i >= 0) pending_[i] = false;
}

void Scoreboard::release_read(const RegRef& r) {
    int i = scoreboard_index(r);
    if (i < 0) return;
    if (consumers_[i] == 0) throw SimFault("scoreboard consumer underflow on " + reg_name(r));
    --consumers_[i];
}

bool Scoreboard::pending(const RegRef& r) const {
    int i = scoreboard_index(r);
    return i >= 0 && pending_[i];
}

int Scoreboard::consumers(const RegRef& r) const {
    int i = scoreboard_index(r);
    return i >= 0 ? consumers_[i] : 0;
}

bool Scoreboard::empty() const {
    return std::none_of(pending_.begin(), pending_.end(), [](bool b) { return b; }) &&
           std::all_of(consumers_.begin(), consumers_.end(), [](int c) { return c == 0; });
}

AreaReport area_report(const AreaModel& m, Mechanism mech, std::optional<int> max_consumers) {
    AreaReport r;
    int64_t per_warp = 0;
    if (mech == Mechanism::ControlBits) {
        per_warp = int64_t(m.counters) * m.counter_bits + m.stall_bits + m.yield_bits;
    } else {
        if (!max_consumers) {
            r.note = "unbounded consumer counters have no finite storage cost";
            return r;
        }
        int width = 0;
        while ((int64_t(1) << width) < int64_t(*max_consumers) + 1) ++width;
        per_warp = int64_t(m.entries) + int64_t(m.entries) * width;
    }
    r.bits_per_warp = per_warp;
    r.bits_per_sm = per_warp * m.warps;
    r.overhead_ratio = double(*r.bits_per_sm) / double(m.rf_bytes * 8);
    return r;
}

std::string percent2(double ratio) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f%%", std::round(ratio * 10000.0) / 100.0);
    return buf;
}

void HazardMonitor::on_issue(int warp, uint64_t seq, uint32_t pc, const std::vector<RegRef>& reads,
                             const std::vector<RegRef>& writes) {
    for (const auto& r : reads) reads_[{warp, r}].push_back({seq, pc});
    for (const auto& r : writes) writes_[{warp, r}].push_back({seq, pc});
    pc_of_[{warp, seq}] = pc;
}

namespace {

template <class V>
bool erase_seq(V& v, uint64_t seq) {
    auto it = std::find_if(v.begin(), v.end(), [&](const auto& p) { return p.seq == seq; });
    if (it == v.end()) return false;
    v.erase(it);
    return true;
}

}  // namespace

void HazardMonitor::on_read(int warp, uint64_t seq, const RegRef& r, Cycle c) {
    auto w = writes_.find({warp, r});
    if (w != writes_.end()) {
        for (const auto& p : w->second)
            if (p.seq < seq) {
                diags_.push_back({"error", pc_of_[{warp, seq}], "raw_violation",
                                  "warp " + std::to_string(warp) + " read " + reg_name(r) + " at cycle " +
                                      std::to_string(c) + " before the write of instruction " +
                                      std::to_string(p.pc)});
                break;
            }
    }
    auto it = reads_.find({warp, r});
    if (it != reads_.end()) {
        erase_seq(it->second, seq);
        if (it->second.empty()) reads_.erase(it);
    }
}

void HazardMonitor::on_write(int warp, uint64_t seq, const RegRef& r, Cycle c) {
    auto rd = reads_.find({warp, r});
    if (rd != reads_.end()) {
        for (const auto& p : rd->second)
            if (p.seq < seq) {
                diags_.push_back({"error", pc_of_[{warp, seq}], "war_violation",
                                  "warp " + std::to_string(warp) + " wrote " + reg_name(r) + " at cycle " +
                                      std::to_string(c) + " before an older instruction read it"});
                break;
            }
    }
    auto w = writes_.find({warp, r});
    if (w != writes_.end()) {
        for (const auto& p : w->second)
            if (p.seq < seq) {
                diags_.push_back({"error", pc_of_[{warp, seq}], "waw_violation",
                                  "warp " + std::to_string(warp) + " wrote " + reg_name(r) + " at cycle " +
                                      std::to_string(c) + " before an older write to it"});
                break;
            }
        erase_seq(w->second, seq);
        if (w->second.empty()) writes_.erase(w);
    }
}

}  // namespace gpusim
