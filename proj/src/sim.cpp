#include "gpusim/sim.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <memory>
#include <set>
#include <thread>
#include <unordered_map>

namespace gpusim {

namespace {

enum Phase { kBegin = 0, kRead = 1, kWrite = 2 };

struct Op {
    int warp = 0;
    uint64_t seq = 0;
    const Instruction* inst = nullptr;
    Cycle issue = 0;
    Latency lat;
    std::vector<LaneVec> inputs;
    uint32_t guard = 0xffffffffu;
    uint32_t clock_value = 0;
    std::vector<LaneVec> addr;
    std::vector<LaneVec> data;
    int mem_id = -1;
    bool control_done = false;
};

struct Warp {
    int id = 0;
    int sc = 0;
    int slot = 0;
    const Program* prog = nullptr;
    bool scoreboard = false;
    WarpRegisters regs;
    DependenceCounters cnt;
    Scoreboard sb;
    Cycle stall_until = 0;
    Cycle yield_until = 0;
    bool branch_pending = false;
    bool at_barrier = false;
    bool exited = false;
    std::optional<ConstCache::Key> fl_wait;
    uint64_t seq = 0;
};

struct Sub {
    int id = 0;
    std::vector<int> warps;
    std::unique_ptr<FrontEnd> fe;
    int control = -1;
    int allocate = -1;
    Cycle allocate_at = 0;
    int last_issued = -1;
    Cycle const_stall_until = -1;
    UnitLatches units;
    RegFileCache rfc;
    ReadPorts rports;
    WritePorts wports;
    ConstCache fl;
    ConstCache vl;
    bool issued = false;
    std::string bubble;
};

bool is_shared_op(Opcode op) { return op == Opcode::LDS || op == Opcode::STS; }

bool has_register_result(Opcode op) { return op == Opcode::LDG || op == Opcode::LDS || op == Opcode::LDC; }

class Engine {
public:
    Engine(const std::vector<Program>& progs, const SmConfig& cfg);
    RunResult run();

private:
    using Fn = std::function<void()>;

    void at(Phase p, Cycle c, Fn fn, bool core = true);
    void run_phase(Phase p);
    void step();
    bool finished() const;
    bool warp_finished(const Warp& w) const;

    void emit(int sc, int warp, uint32_t pc, const std::string& stage, const std::string& detail = "");
    void counter_add(Warp& w, int sb, int delta, uint32_t pc);

    ReadinessReport report(Sub& s, int slot);
    void issue_stage(Sub& s);
    void do_issue(Sub& s, int slot);
    void control_stage(Sub& s);
    void allocate_stage(Sub& s);
    void schedule_fixed(Sub& s, int id, Cycle ws, const std::vector<Cycle>& read_at);
    void fetch_stage(Sub& s);

    void on_agu_entry(int mem_id);
    void on_grant(int mem_id);
    void mem_reads(int id, Cycle c);
    void finalize_load(int id);
    void resolve_control(int id);
    void check_barrier();

    LaneVec operand_value(const Warp& w, const Operand& o) const;
    LaneVec lane_addresses(const Warp& w, const Operand& o) const;

    SmConfig cfg_;
    std::vector<Program> progs_;
    std::vector<Warp> warps_;
    std::vector<Sub> subs_;
    L1Arbiter l1_;
    LsuPipe lsu_;
    HazardMonitor monitor_;
    Memory global_, shared_;
    std::map<std::pair<int, uint32_t>, uint32_t> const_mem_;

    std::unordered_map<int, Op> ops_;
    std::unordered_map<int, int> mem2op_;
    int next_op_ = 0;

    std::map<Cycle, std::vector<std::pair<Fn, bool>>> q_[3];
    bool phase_done_[3] = {false, false, false};
    int64_t core_pending_ = 0;
    Cycle now_ = 0;
    bool bar_release_pending_ = false;

    RunResult res_;
};

Engine::Engine(const std::vector<Program>& progs, const SmConfig& cfg)
    : cfg_(cfg), progs_(progs), l1_(cfg.subcores), lsu_(cfg.subcores, cfg.mem, cfg.cal.lsu_entry_offset) {
    cfg_.check();
    if (progs_.empty()) throw std::invalid_argument("no program to run");
    res_.config = cfg_.to_map();

    for (int s = 0; s < cfg_.subcores; ++s) {
        Sub sub;
        sub.id = s;
        sub.fe = std::make_unique<FrontEnd>(s, cfg_.frontend, l1_);
        sub.units = UnitLatches(cfg_.exec);
        sub.rfc = RegFileCache(cfg_.banks, cfg_.rfc);
        sub.rports = ReadPorts(cfg_.banks, cfg_.read_ports_per_bank, cfg_.cal.read_window);
        sub.wports = WritePorts(cfg_.banks);
        sub.fl = ConstCache(cfg_.cst.fl_line_bytes);
        sub.vl = ConstCache(cfg_.cst.vl_line_bytes);
        subs_.push_back(std::move(sub));
    }

    int nwarps = cfg_.warps > 0 ? cfg_.warps : std::max(1, progs_[0].warps);
    if (nwarps > 64) throw std::invalid_argument("at most 64 warps per SM");
    for (int w = 0; w < nwarps; ++w) {
        int pi = w % int(progs_.size());
        Warp warp;
        warp.id = w;
        warp.sc = w % cfg_.subcores;
        warp.prog = &progs_[pi];
        warp.scoreboard = cfg_.mechanism == Mechanism::Scoreboard ||
                          (cfg_.mechanism == Mechanism::Hybrid && progs_[pi].scoreboard);
        warp.sb = Scoreboard(cfg_.max_consumers);
        Sub& sub = subs_[warp.sc];
        warp.slot = sub.fe->add_warp(warp.prog, pi);
        sub.warps.push_back(w);
        for (const auto& ri : warp.prog->regs) {
            LaneVec v{};
            for (int l = 0; l < kWarpSize; ++l) v[l] = ri.value + uint32_t(l) * ri.lane_stride;
            warp.regs.write(ri.kind, ri.index, v);
        }
        warps_.push_back(std::move(warp));
    }
    std::set<std::pair<int, int>> warmed;
    for (auto& w : warps_)
        if (cfg_.frontend.warm && warmed.insert({w.sc, int(w.prog - progs_.data())}).second)
            subs_[w.sc].fe->warm(w.prog, int(w.prog - progs_.data()));
    if (cfg_.frontend.launch_fill)
        for (auto& s : subs_) s.fe->launch_fill(2);

    std::set<int> validated;
    for (size_t pi = 0; pi < progs_.size(); ++pi) {
        const Program& p = progs_[pi];
        for (const auto& ci : p.consts) const_mem_[{ci.bank, ci.offset & ~3u}] = ci.value;
        for (const auto& mi : p.mems)
            for (size_t k = 0; k < mi.words.size(); ++k)
                (mi.space == MemSpace::Shared ? shared_ : global_).write(mi.addr + uint32_t(4 * k), mi.words[k]);
        for (const auto& inst : p.insts) (void)lookup_latency(cfg_.latency, inst);
        bool cb_used = std::any_of(warps_.begin(), warps_.end(), [&](const Warp& w) {
            return w.prog == &progs_[pi] && !w.scoreboard;
        });
        if (cb_used) {
            auto d = validate_program(p, cfg_.latency);
            res_.diagnostics.insert(res_.diagnostics.end(), d.begin(), d.end());
        }
    }
    res_.stats.warp_issues.assign(warps_.size(), 0);
    res_.stats.subcores.assign(subs_.size(), {});
}

void Engine::at(Phase p, Cycle c, Fn fn, bool core) {
    if (c < now_ || (c == now_ && phase_done_[p])) {
        fn();
        return;
    }
    if (core) ++core_pending_;
    q_[p][c].emplace_back(std::move(fn), core);
}

void Engine::run_phase(Phase p) {
    auto it = q_[p].find(now_);
    if (it != q_[p].end()) {
        for (size_t k = 0; k < it->second.size(); ++k) {
            auto [fn, core] = std::move(it->second[k]);
            if (core) --core_pending_;
            fn();
        }
        q_[p].erase(now_);
    }
    phase_done_[p] = true;
}

void Engine::emit(int sc, int warp, uint32_t pc, const std::string& stage, const std::string& detail) {
    if (!cfg_.events) return;
    res_.events.push_back({now_, sc, warp, pc, stage, detail});
}

void Engine::counter_add(Warp& w, int sb, int delta, uint32_t pc) {
    w.cnt.add(sb, delta);
    (delta > 0 ? res_.stats.counter_increments : res_.stats.counter_decrements) += 1;
    emit(w.sc, w.id, pc, "counter", "SB" + std::to_string(sb) + "=" + std::to_string(w.cnt.value(sb)));
}

bool Engine::warp_finished(const Warp& w) const {
    if (w.exited) return true;
    const WarpFetch& f = subs_[w.sc].fe->warp(w.slot);
    return f.done && f.ibuf.size() == 0 && !w.branch_pending && !w.at_barrier;
}

bool Engine::finished() const {
    if (core_pending_ > 0 || !lsu_.empty()) return false;
    for (const auto& s : subs_)
        if (s.control >= 0 || s.allocate >= 0) return false;
    return std::all_of(warps_.begin(), warps_.end(), [&](const Warp& w) { return warp_finished(w); });
}

LaneVec Engine::operand_value(const Warp& w, const Operand& o) const {
    LaneVec v{};
    switch (o.kind) {
        case OperandKind::Reg:
        case OperandKind::UReg: return w.regs.read(o.kind, o.index);
        case OperandKind::Imm: v.fill(o.value); return v;
        case OperandKind::Const: {
            auto it = const_mem_.find({o.cbank, o.value & ~3u});
            v.fill(it == const_mem_.end() ? 0u : it->second);
            return v;
        }
        case OperandKind::Special: return special_value(SpecialReg(o.index), {w.id, w.sc});
        case OperandKind::Pred:
        case OperandKind::UPred: {
            uint32_t m = w.regs.pred_mask(o.index, o.kind == OperandKind::UPred);
            for (int l = 0; l < kWarpSize; ++l) v[l] = (m >> l) & 1;
            return v;
        }
        default: return v;
    }
}

LaneVec Engine::lane_addresses(const Warp& w, const Operand& o) const {
    LaneVec v{};
    LaneVec base{};
    if (o.mode == AddrMode::Regular) base = w.regs.read(OperandKind::Reg, o.index);
    if (o.mode == AddrMode::Uniform) base = w.regs.read(OperandKind::UReg, o.index);
    for (int l = 0; l < kWarpSize; ++l) v[l] = base[l] + o.value;
    return v;
}

uint32_t guard_mask(const Warp& w, const Instruction& inst) {
    if (!inst.guard) return 0xffffffffu;
    uint32_t m = w.regs.pred_mask(inst.guard->pred, inst.guard->uniform);
    return inst.guard->negate ? ~m : m;
}

void monitor_reads(HazardMonitor& mon, const Warp& w, uint64_t seq, const std::vector<RegRef>& regs, Cycle c) {
    for (const auto& r : regs) mon.on_read(w.id, seq, r, c);
}

std::vector<RegRef> operand_regs(const Operand& o) {
    Instruction tmp;
    tmp.srcs.push_back(o);
    return regs_read(tmp);
}

std::vector<RegRef> guard_regs(const Instruction& inst) {
    std::vector<RegRef> out;
    if (inst.guard && inst.guard->pred != kPT)
        out.push_back({inst.guard->uniform ? OperandKind::UPred : OperandKind::Pred, inst.guard->pred});
    return out;
}

ReadinessReport Engine::report(Sub& s, int slot) {
    ReadinessReport r;
    Warp& w = warps_[s.warps[slot]];
    if (warp_finished(w)) return r;
    WarpFetch& f = s.fe->warp(slot);
    r.control_flow_clear = !w.branch_pending && !w.at_barrier;
    r.valid_instruction = f.ibuf.front_ready(now_);
    if (!r.valid_instruction) return r;
    const Instruction& inst = *f.ibuf.front().inst;
    r.stall_counter_zero = now_ >= w.stall_until;
    r.yield_clear = now_ >= w.yield_until;
    r.deps_clear = w.scoreboard ? w.sb.ready(inst) : cb_ready(w.cnt, inst);
    r.unit_latch_free = s.units.pick(inst.op, now_).has_value();
    r.constant_cache_ok = !w.fl_wait;
    if (is_memory(inst.op)) r.lsu_slot_free = lsu_.can_accept(s.id);
    return r;
}

void Engine::issue_stage(Sub& s) {
    s.issued = false;
    bool any_active = false;
    for (int w : s.warps) any_active |= !warp_finished(warps_[w]);
    if (!any_active) {
        s.bubble = "idle";
        return;
    }
    if (now_ < s.const_stall_until) {
        s.bubble = "const_cache";
        return;
    }
    if (s.control >= 0) {
        s.bubble = "allocate_hold";
        return;
    }
    std::vector<ReadinessReport> reps;
    for (int k = 0; k < int(s.warps.size()); ++k) reps.push_back(report(s, k));
    auto pick = cggty_select(reps, s.last_issued);
    if (!pick) {
        int prio = -1;
        if (s.last_issued >= 0 && !warp_finished(warps_[s.warps[s.last_issued]])) prio = s.last_issued;
        for (int k = int(s.warps.size()) - 1; k >= 0 && prio < 0; --k)
            if (!warp_finished(warps_[s.warps[k]])) prio = k;
        s.bubble = reps[prio].reason();
        return;
    }
    Warp& w = warps_[s.warps[*pick]];
    const Instruction& inst = *s.fe->warp(*pick).ibuf.front().inst;
    if (!is_memory(inst.op)) {
        for (const auto& o : inst.srcs) {
            if (o.kind != OperandKind::Const || o.mode != AddrMode::Immediate) continue;
            auto key = s.fl.key(o.cbank, o.value);
            if (s.fl.contains(key)) continue;
            w.fl_wait = key;
            s.bubble = "const_cache";
            if (!s.fl.pending(key)) {
                Cycle ready = now_ + cfg_.cst.fl_miss_delay;
                s.fl.start_fill(key, ready);
                s.const_stall_until = now_ + 5;
                ++res_.stats.fl_misses;
                emit(s.id, w.id, inst.pc, "const_miss", "fill at " + std::to_string(ready));
                int sc = s.id;
                at(kBegin, ready, [this, sc, key] {
                    Sub& sub = subs_[sc];
                    sub.fl.insert(key);
                    for (int wi : sub.warps)
                        if (warps_[wi].fl_wait == key) warps_[wi].fl_wait.reset();
                });
            }
            return;
        }
    }
    do_issue(s, *pick);
}

void Engine::do_issue(Sub& s, int slot) {
    Warp& w = warps_[s.warps[slot]];
    IBufEntry e = s.fe->warp(slot).ibuf.pop();
    const Instruction& inst = *e.inst;
    s.issued = true;
    s.last_issued = slot;
    ++res_.stats.instructions;
    ++res_.stats.warp_issues[w.id];

    int id = next_op_++;
    Op& op = ops_[id];
    op.warp = w.id;
    op.seq = w.seq++;
    op.inst = &inst;
    op.issue = now_;
    op.lat = lookup_latency(cfg_.latency, inst);
    emit(s.id, w.id, inst.pc, "issue", op_info(inst.op).mnemonic);

    if (w.scoreboard) {
        w.stall_until = now_ + 1;
        w.yield_until = now_ + 1;
        w.sb.on_issue(inst);
    } else {
        w.stall_until = next_eligible(now_, inst.ctrl);
        w.yield_until = inst.ctrl.yield ? now_ + 2 : now_ + 1;
    }
    monitor_.on_issue(w.id, op.seq, inst.pc, regs_read(inst), regs_written(inst));
    auto unit = s.units.pick(inst.op, now_);
    s.units.accept(*unit, now_);
    if (is_memory(inst.op)) {
        lsu_.on_issue(s.id);
        res_.stats.max_lsu_occupancy = std::max(res_.stats.max_lsu_occupancy, lsu_.occupancy(s.id));
    }
    if (inst.op == Opcode::BRA || inst.op == Opcode::EXIT) w.branch_pending = true;
    if (inst.op == Opcode::BAR) {
        w.at_barrier = true;
        check_barrier();
    }
    s.control = id;
}

void Engine::check_barrier() {
    if (bar_release_pending_) return;
    int live = 0, arrived = 0;
    for (const auto& w : warps_) {
        if (w.exited) continue;
        if (w.at_barrier) {
            ++live;
            ++arrived;
        } else if (!warp_finished(w)) {
            ++live;
        }
    }
    if (arrived == 0 || arrived < live) return;
    bar_release_pending_ = true;
    at(kBegin, now_ + 1, [this] {
        bar_release_pending_ = false;
        for (auto& w : warps_)
            if (w.at_barrier) {
                w.at_barrier = false;
                emit(w.sc, w.id, 0, "barrier_release");
            }
    });
}

void Engine::control_stage(Sub& s) {
    if (s.control < 0) return;
    int id = s.control;
    Op& op = ops_.at(id);
    Warp& w = warps_[op.warp];
    const Instruction& inst = *op.inst;
    if (!op.control_done) {
        op.control_done = true;
        emit(s.id, w.id, inst.pc, "control");
        if (!w.scoreboard) {
            for (const auto& eff : cb_on_issue(inst, op.issue)) {
                int wi = w.id;
                uint32_t pc = inst.pc;
                at(kBegin, eff.when, [this, wi, eff, pc] { counter_add(warps_[wi], eff.counter, eff.delta, pc); });
            }
        }
        if (inst.op == Opcode::CLOCK) {
            op.clock_value = clock_read(now_);
            res_.clocks.push_back({w.id, inst.pc, op.clock_value});
        }
    }
    if (is_memory(inst.op)) {
        MemOp m;
        m.subcore = s.id;
        m.warp = w.id;
        m.inst = &inst;
        m.seq = op.seq;
        m.issue = op.issue;
        int mid = lsu_.enqueue(m);
        op.mem_id = mid;
        mem2op_[mid] = id;
        s.control = -1;
        emit(s.id, w.id, inst.pc, "lsu_queue");
        return;
    }
    if (s.allocate < 0) {
        s.allocate = id;
        s.allocate_at = now_ + 1;
        s.control = -1;
    }
}

void Engine::allocate_stage(Sub& s) {
    if (s.allocate < 0 || s.allocate_at > now_) return;
    int id = s.allocate;
    Op& op = ops_.at(id);
    const Instruction& inst = *op.inst;
    Warp& w = warps_[op.warp];
    std::vector<RfcRead> rfc_reads;
    std::vector<int> rfc_operand;
    std::vector<PortRequest> reqs;
    std::vector<Cycle> read_at(inst.srcs.size(), now_ + 1);
    for (size_t k = 0; k < inst.srcs.size(); ++k) {
        const Operand& o = inst.srcs[k];
        if (o.kind != OperandKind::Reg || o.index == kRZ) continue;
        int pos = int(k) + 1;
        if (o.count == 1 && pos <= 3 && s.rfc.enabled()) {
            rfc_reads.push_back({pos, o.index, k < 4 && inst.ctrl.reuse[k]});
            rfc_operand.push_back(int(k));
            if (s.rfc.hit(w.id, pos, o.index)) continue;
        }
        for (int r = 0; r < o.count; ++r) reqs.push_back({bank_of(o.index + r, cfg_.banks), int(k)});
    }
    auto plan = s.rports.plan(reqs, now_ + 1);
    if (!plan) {
        ++res_.stats.allocate_hold_cycles;
        emit(s.id, w.id, inst.pc, "allocate_hold", "read port conflict");
        return;
    }
    s.rports.commit(reqs, *plan);
    auto hits = s.rfc.access(w.id, rfc_reads);
    for (size_t k = 0; k < hits.size(); ++k) {
        (hits[k] ? res_.stats.rfc_hits : res_.stats.rfc_misses) += 1;
        emit(s.id, w.id, inst.pc, "rfc",
             "R" + std::to_string(rfc_reads[k].reg) + "@" + std::to_string(rfc_reads[k].position) +
                 (hits[k] ? " hit" : " miss"));
    }
    for (size_t k = 0; k < reqs.size(); ++k)
        read_at[reqs[k].operand] = std::max(k == 0 || reqs[k - 1].operand != reqs[k].operand ? plan->slot[k]
                                                                                               : read_at[reqs[k].operand],
                                            plan->slot[k]);
    std::string detail;
    for (size_t k = 0; k < reqs.size(); ++k)
        detail += (k ? " " : "") + std::string("b") + std::to_string(reqs[k].bank) + "@" + std::to_string(plan->slot[k]);
    emit(s.id, w.id, inst.pc, "allocate", detail);
    s.allocate = -1;
    s.rports.retire_before(now_ - 4);
    s.wports.retire_before(now_ - 4);
    schedule_fixed(s, id, now_ + 1, read_at);
}

void Engine::schedule_fixed(Sub& s, int id, Cycle ws, const std::vector<Cycle>& read_at) {
    Op& op = ops_.at(id);
    const Instruction& inst = *op.inst;
    Warp& w = warps_[op.warp];
    int wi = w.id;
    int L = op.lat.fixed_latency;
    Cycle W = ws + L - 1;
    op.inputs.assign(inst.srcs.size(), LaneVec{});

    at(kRead, ws, [this, id, wi] {
        Op& o = ops_.at(id);
        o.guard = guard_mask(warps_[wi], *o.inst);
        monitor_reads(monitor_, warps_[wi], o.seq, guard_regs(*o.inst), now_);
    });
    std::map<RegRef, Cycle> last_read;
    for (const auto& g : guard_regs(inst)) last_read[g] = ws;
    for (size_t k = 0; k < inst.srcs.size(); ++k) {
        Cycle rc = read_at[k];
        for (const auto& r : operand_regs(inst.srcs[k])) last_read[r] = std::max(last_read[r], rc);
        at(kRead, rc, [this, id, wi, k] {
            Op& o = ops_.at(id);
            const Operand& src = o.inst->srcs[k];
            o.inputs[k] = operand_value(warps_[wi], src);
            monitor_reads(monitor_, warps_[wi], o.seq, operand_regs(src), now_);
        });
    }
    Cycle floor = op.issue + 2;
    if (w.scoreboard)
        for (const auto& [r, c] : last_read) {
            RegRef rr = r;
            at(kBegin, c + 1, [this, wi, rr] { warps_[wi].sb.release_read(rr); });
        }
    if (!w.scoreboard && inst.ctrl.read_barrier >= 0) {
        int rb = inst.ctrl.read_barrier;
        uint32_t pc = inst.pc;
        at(kBegin, std::max(ws + cfg_.cal.read_window, floor), [this, wi, rb, pc] { counter_add(warps_[wi], rb, -1, pc); });
    }
    if (inst.op == Opcode::BRA || inst.op == Opcode::EXIT) {
        at(kRead, ws, [this, id] { resolve_control(id); });
        return;
    }
    auto written = regs_written(inst);
    if (!w.scoreboard && inst.ctrl.write_barrier >= 0) {
        int wb = inst.ctrl.write_barrier;
        uint32_t pc = inst.pc;
        at(kBegin, std::max(W - 2, floor), [this, wi, wb, pc] { counter_add(warps_[wi], wb, -1, pc); });
    }
    if (w.scoreboard && !written.empty())
        at(kBegin, std::max(W - 2, floor), [this, wi, written] {
            for (const auto& r : written) warps_[wi].sb.clear_write(r);
        });
    if (!inst.dest) {
        at(kWrite, W, [this, id] { ops_.erase(id); });
        return;
    }
    if (inst.dest->kind == OperandKind::Reg && inst.dest->index != kRZ)
        if (s.wports.fixed_write(bank_of(inst.dest->index, cfg_.banks), W)) ++res_.stats.port_conflicts;
    int sc = s.id;
    at(kWrite, W, [this, id, wi, sc, written] {
        Op& o = ops_.at(id);
        Warp& wp = warps_[wi];
        const Instruction& in = *o.inst;
        if (in.op == Opcode::CLOCK) {
            LaneVec v;
            v.fill(o.clock_value);
            wp.regs.write(in.dest->kind, in.dest->index, v, o.guard);
        } else {
            ExecResult r = execute_semantics(in, o.inputs, {wi, sc});
            if (in.op == Opcode::ISETP)
                wp.regs.set_pred(in.dest->index, in.dest->kind == OperandKind::UPred, r.pred, o.guard);
            else
                wp.regs.write(in.dest->kind, in.dest->index, r.value, o.guard);
        }
        for (const auto& reg : written) monitor_.on_write(wi, o.seq, reg, now_);
        emit(sc, wi, in.pc, "write", written.empty() ? "" : reg_name(written.front()));
        ops_.erase(id);
    });
}

void Engine::resolve_control(int id) {
    Op& op = ops_.at(id);
    Warp& w = warps_[op.warp];
    Sub& s = subs_[w.sc];
    const Instruction& inst = *op.inst;
    uint32_t m = op.guard;
    if (m != 0 && m != 0xffffffffu)
        throw SimFault("divergent " + std::string(op_info(inst.op).mnemonic) + " at pc " + std::to_string(inst.pc) +
                       " in warp " + std::to_string(w.id));
    bool taken = m != 0;
    w.branch_pending = false;
    if (inst.op == Opcode::BRA) {
        emit(s.id, w.id, inst.pc, "branch", taken ? "taken" : "not_taken");
        if (taken) s.fe->redirect(w.slot, inst.target);
    } else if (taken) {
        w.exited = true;
        s.fe->stop(w.slot);
        emit(s.id, w.id, inst.pc, "exit");
        check_barrier();
    } else {
        s.fe->redirect(w.slot, inst.pc + kInstBytes);
    }
    ops_.erase(id);
}

void Engine::fetch_stage(Sub& s) {
    auto out = s.fe->fetch_cycle(now_, s.last_issued);
    if (out) emit(s.id, warps_[s.warps[out->slot]].id, out->pc, "fetch", out->kind);
}

void Engine::mem_reads(int id, Cycle c) {
    Op& op = ops_.at(id);
    Warp& w = warps_[op.warp];
    const Instruction& inst = *op.inst;
    op.guard = guard_mask(w, inst);
    auto reads = regs_read(inst);
    monitor_reads(monitor_, w, op.seq, reads, c);
    if (w.scoreboard) {
        int wi = w.id;
        at(kBegin, c + 1, [this, wi, reads] {
            for (const auto& r : reads) warps_[wi].sb.release_read(r);
        });
    }
    op.addr.clear();
    op.data.clear();
    switch (inst.op) {
        case Opcode::LDG:
        case Opcode::LDS:
        case Opcode::STG:
        case Opcode::STS: op.addr.push_back(lane_addresses(w, inst.srcs[0])); break;
        case Opcode::LDC: {
            const Operand& o = inst.srcs[0];
            LaneVec base{};
            if (o.mode == AddrMode::Regular) base = w.regs.read(OperandKind::Reg, o.index);
            LaneVec a{};
            for (int l = 0; l < kWarpSize; ++l) a[l] = base[l] + o.value;
            op.addr.push_back(a);
            break;
        }
        case Opcode::LDGSTS:
            op.addr.push_back(lane_addresses(w, inst.srcs[0]));
            op.addr.push_back(lane_addresses(w, inst.srcs[1]));
            break;
        default: break;
    }
    if (inst.op == Opcode::STG || inst.op == Opcode::STS) {
        const Operand& d = inst.srcs[1];
        for (int r = 0; r < d.count; ++r)
            op.data.push_back(w.regs.read(OperandKind::Reg, d.index == kRZ ? kRZ : d.index + r));
    }
}

void Engine::on_agu_entry(int mid) {
    int id = mem2op_.at(mid);
    Op& op = ops_.at(id);
    Warp& w = warps_[op.warp];
    const Instruction& inst = *op.inst;
    emit(w.sc, w.id, inst.pc, "agu");
    if (is_shared_op(inst.op)) return;
    mem_reads(id, now_);
    if (!w.scoreboard && inst.ctrl.read_barrier >= 0) {
        int rb = inst.ctrl.read_barrier, wi = w.id;
        uint32_t pc = inst.pc;
        at(kBegin, std::max({now_, now_ + op.lat.war - 3, op.issue + 2}),
           [this, wi, rb, pc] { counter_add(warps_[wi], rb, -1, pc); });
    }
}

void Engine::on_grant(int mid) {
    int id = mem2op_.at(mid);
    Op& op = ops_.at(id);
    Warp& w = warps_[op.warp];
    Sub& s = subs_[w.sc];
    const Instruction& inst = *op.inst;
    int wi = w.id, sc = w.sc;
    emit(sc, wi, inst.pc, "grant");
    at(kBegin, now_ + cfg_.cal.lsu_visibility, [this, sc] { lsu_.release_slot(sc); });
    if (is_shared_op(inst.op)) {
        mem_reads(id, now_);
        if (!w.scoreboard && inst.ctrl.read_barrier >= 0) {
            int rb = inst.ctrl.read_barrier;
            uint32_t pc = inst.pc;
            at(kBegin, std::max({now_, now_ + op.lat.war - 9, op.issue + 2}),
               [this, wi, rb, pc] { counter_add(warps_[wi], rb, -1, pc); });
        }
    }
    int words = inst.width / 32;
    uint32_t active = op.guard;
    switch (inst.op) {
        case Opcode::LDG:
        case Opcode::LDS: {
            const Memory& m = inst.op == Opcode::LDG ? global_ : shared_;
            op.data.assign(words, LaneVec{});
            for (int k = 0; k < words; ++k)
                for (int l = 0; l < kWarpSize; ++l)
                    if ((active >> l) & 1) op.data[k][l] = m.read(op.addr[0][l] + uint32_t(4 * k));
            break;
        }
        case Opcode::LDC: {
            op.data.assign(words, LaneVec{});
            int bank = inst.srcs[0].cbank;
            bool miss = false;
            for (int l = 0; l < kWarpSize; ++l) {
                auto key = s.vl.key(bank, op.addr[0][l]);
                if (!s.vl.contains(key)) {
                    miss = true;
                    s.vl.insert(key);
                }
                for (int k = 0; k < words; ++k) {
                    auto it = const_mem_.find({bank, (op.addr[0][l] + uint32_t(4 * k)) & ~3u});
                    if ((active >> l) & 1) op.data[k][l] = it == const_mem_.end() ? 0u : it->second;
                }
            }
            if (miss) ++res_.stats.vl_misses;
            if (miss && cfg_.cst.vl_miss_penalty > 0) op.lat.raw = *op.lat.raw + cfg_.cst.vl_miss_penalty;
            break;
        }
        case Opcode::LDGSTS: {
            op.data.assign(words, LaneVec{});
            for (int k = 0; k < words; ++k)
                for (int l = 0; l < kWarpSize; ++l)
                    if ((active >> l) & 1) op.data[k][l] = global_.read(op.addr[1][l] + uint32_t(4 * k));
            break;
        }
        case Opcode::STG:
        case Opcode::STS: {
            Memory& m = inst.op == Opcode::STG ? global_ : shared_;
            for (int k = 0; k < words; ++k)
                for (int l = 0; l < kWarpSize; ++l)
                    if ((active >> l) & 1) m.write(op.addr[0][l] + uint32_t(4 * k), op.data[k][l]);
            break;
        }
        default: break;
    }
    ++res_.stats.lsu_grants;
    if (!op.lat.raw) {
        lsu_.finish(mid);
        at(kWrite, now_, [this, id] { ops_.erase(id); });
        return;
    }
    Cycle r0 = now_ + *op.lat.raw - 9;
    if (inst.op == Opcode::LDG) r0 += cfg_.mem.dcache_miss_penalty;
    at(kBegin, std::max(r0, now_), [this, id] { finalize_load(id); });
}

void Engine::finalize_load(int id) {
    Op& op = ops_.at(id);
    Warp& w = warps_[op.warp];
    Sub& s = subs_[w.sc];
    const Instruction& inst = *op.inst;
    int wi = w.id, sc = w.sc;
    Cycle x = now_ + 2;
    auto written = regs_written(inst);
    if (has_register_result(inst.op)) {
        x = lsu_.return_path(sc, x, inst.width);
        std::vector<int> banks;
        for (const auto& r : written)
            if (r.kind == OperandKind::Reg) banks.push_back(bank_of(r.index, cfg_.banks));
        std::sort(banks.begin(), banks.end());
        banks.erase(std::unique(banks.begin(), banks.end()), banks.end());
        Cycle x2 = s.wports.load_write(banks, x);
        if (x2 > x) ++res_.stats.load_write_delays;
        x = x2;
    }
    uint32_t pc = inst.pc;
    if (!w.scoreboard && inst.ctrl.write_barrier >= 0) {
        int wb = inst.ctrl.write_barrier;
        at(kBegin, x - 2, [this, wi, wb, pc] { counter_add(warps_[wi], wb, -1, pc); });
    }
    if (w.scoreboard && !written.empty())
        at(kBegin, x - 2, [this, wi, written] {
            for (const auto& r : written) warps_[wi].sb.clear_write(r);
        });
    int mid = op.mem_id;
    at(kWrite, x, [this, id, wi, sc, written, mid] {
        Op& o = ops_.at(id);
        Warp& wp = warps_[wi];
        const Instruction& in = *o.inst;
        if (in.op == Opcode::LDGSTS) {
            for (size_t k = 0; k < o.data.size(); ++k)
                for (int l = 0; l < kWarpSize; ++l)
                    if ((o.guard >> l) & 1) shared_.write(o.addr[0][l] + uint32_t(4 * k), o.data[k][l]);
        } else {
            for (size_t k = 0; k < o.data.size(); ++k)
                if (in.dest->index != kRZ) wp.regs.write(OperandKind::Reg, in.dest->index + int(k), o.data[k], o.guard);
        }
        for (const auto& reg : written) monitor_.on_write(wi, o.seq, reg, now_);
        emit(sc, wi, in.pc, "write", written.empty() ? "shared" : reg_name(written.front()));
        lsu_.finish(mid);
        ops_.erase(id);
    });
}

void Engine::step() {
    for (bool& d : phase_done_) d = false;
    run_phase(kBegin);
    if (auto g = lsu_.arbiter_phase(now_)) on_grant(*g);
    for (int mid : lsu_.agu_phase(now_)) on_agu_entry(mid);
    for (auto& s : subs_) allocate_stage(s);
    for (auto& s : subs_) control_stage(s);
    for (auto& s : subs_) fetch_stage(s);
    for (auto& s : subs_) issue_stage(s);
    if (auto r = l1_.grant()) {
        L1Request req = *r;
        emit(req.subcore, -1, 0, "l1_grant", req.gen < 0 ? "demand" : "prefetch");
        at(kBegin, now_ + cfg_.frontend.miss_latency, [this, req] { subs_[req.subcore].fe->arrive(req); }, false);
    }
    run_phase(kRead);
    run_phase(kWrite);
    for (auto& s : subs_) {
        SubcoreStats& st = res_.stats.subcores[s.id];
        if (s.issued) {
            ++st.issued;
        } else {
            ++st.bubbles[s.bubble];
            ++res_.stats.bubbles[s.bubble];
        }
    }
}

RunResult Engine::run() {
    try {
        while (!finished()) {
            if (now_ >= cfg_.cycle_cap)
                throw SimFault("cycle cap of " + std::to_string(cfg_.cycle_cap) + " cycles exceeded");
            step();
            ++now_;
        }
    } catch (const SimFault& f) {
        res_.fault = f.what();
    } catch (const std::logic_error& f) {
        res_.fault = f.what();
    }
    res_.stats.total_cycles = now_;
    for (const auto& s : subs_) {
        const FetchStats& f = s.fe->stats();
        FetchStats& t = res_.stats.fetch;
        t.fetched += f.fetched;
        t.l0_hits += f.l0_hits;
        t.l0_misses += f.l0_misses;
        t.sb_hits += f.sb_hits;
        t.prefetch_requests += f.prefetch_requests;
        t.stale_prefetches += f.stale_prefetches;
        t.demand_requests += f.demand_requests;
        t.fetch_stall_cycles += f.fetch_stall_cycles;
    }
    for (const auto& w : warps_) {
        WarpFinal f;
        f.warp = w.id;
        f.subcore = w.sc;
        f.regs = w.regs;
        for (int k = 0; k < kNumCounters; ++k) f.counters[k] = w.cnt.value(k);
        res_.warps.push_back(std::move(f));
    }
    res_.runtime_diagnostics = monitor_.diagnostics();
    res_.global_mem = global_.words();
    res_.shared_mem = shared_.words();
    return std::move(res_);
}

}  // namespace

RunResult run(const std::vector<Program>& progs, const SmConfig& cfg) {
    Engine e(progs, cfg);
    return e.run();
}

RunResult run(const Program& prog, const SmConfig& cfg) { return run(std::vector<Program>{prog}, cfg); }

int64_t measure_clock_delta(const RunResult& r, int warp, std::optional<uint32_t> pc_a, std::optional<uint32_t> pc_b) {
    std::vector<ClockSample> s;
    for (const auto& c : r.clocks)
        if (c.warp == warp) s.push_back(c);
    if (s.size() < 2 && !(pc_a && pc_b && pc_a == pc_b && !s.empty())) throw std::runtime_error("fewer than two CLOCK samples");
    auto find = [&](uint32_t pc) -> const ClockSample& {
        for (const auto& c : s)
            if (c.pc == pc) return c;
        throw std::runtime_error("no CLOCK sample at pc " + std::to_string(pc));
    };
    const ClockSample& a = pc_a ? find(*pc_a) : s.front();
    const ClockSample& b = pc_b ? find(*pc_b) : s.back();
    return int64_t(b.value) - int64_t(a.value);
}

std::vector<Cycle> issue_cycles(const RunResult& r, int warp) {
    std::vector<Cycle> out;
    for (const auto& e : r.events)
        if (e.stage == "issue" && e.warp == warp) out.push_back(e.cycle);
    return out;
}

std::vector<SweepRow> sweep(const std::string& axis, const std::vector<std::string>& values,
                            const std::vector<Program>& progs, const SmConfig& base, int jobs) {
    if (values.empty()) throw std::invalid_argument("sweep needs at least one value");
    std::vector<SmConfig> cfgs;
    for (const auto& v : values) {
        SmConfig c = base;
        c.set(axis, v);
        c.events = false;
        c.check();
        cfgs.push_back(c);
    }
    std::vector<SweepRow> rows(values.size());
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (size_t i = next++; i < values.size(); i = next++) {
            try {
                RunResult r = run(progs, cfgs[i]);
                rows[i] = {values[i], r.stats, r.fault};
            } catch (const std::exception& e) {
                rows[i] = {values[i], {}, std::string(e.what())};
            }
        }
    };
    int n = std::max(1, std::min<int>(jobs, int(values.size())));
    std::vector<std::thread> pool;
    for (int k = 1; k < n; ++k) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return rows;
}

nlohmann::json to_json(const Diagnostic& d) {
    return {{"severity", d.severity}, {"pc", d.pc}, {"kind", d.kind}, {"message", d.message}};
}

nlohmann::json to_json(const RunStats& s) {
    nlohmann::json j;
    j["total_cycles"] = s.total_cycles;
    j["instructions"] = s.instructions;
    j["warp_issues"] = s.warp_issues;
    j["bubbles"] = s.bubbles;
    nlohmann::json subs = nlohmann::json::array();
    for (size_t k = 0; k < s.subcores.size(); ++k) {
        const auto& sc = s.subcores[k];
        double ipc = s.total_cycles ? double(sc.issued) / double(s.total_cycles) : 0.0;
        subs.push_back({{"subcore", k}, {"issued", sc.issued}, {"bubbles", sc.bubbles}, {"ipc", ipc}});
    }
    j["subcores"] = subs;
    j["rfc_hits"] = s.rfc_hits;
    j["rfc_misses"] = s.rfc_misses;
    j["allocate_hold_cycles"] = s.allocate_hold_cycles;
    j["port_conflicts"] = s.port_conflicts;
    j["load_write_delays"] = s.load_write_delays;
    j["fl_misses"] = s.fl_misses;
    j["vl_misses"] = s.vl_misses;
    j["lsu_grants"] = s.lsu_grants;
    j["max_lsu_occupancy"] = s.max_lsu_occupancy;
    j["counter_increments"] = s.counter_increments;
    j["counter_decrements"] = s.counter_decrements;
    j["fetch"] = {{"fetched", s.fetch.fetched},
                  {"l0_hits", s.fetch.l0_hits},
                  {"l0_misses", s.fetch.l0_misses},
                  {"stream_hits", s.fetch.sb_hits},
                  {"prefetch_requests", s.fetch.prefetch_requests},
                  {"stale_prefetches", s.fetch.stale_prefetches},
                  {"demand_requests", s.fetch.demand_requests},
                  {"fetch_stall_cycles", s.fetch.fetch_stall_cycles}};
    return j;
}

namespace {

std::string hex32(uint32_t v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08x", v);
    return buf;
}

}  // namespace

nlohmann::json registers_json(const RunResult& r) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& w : r.warps) {
        nlohmann::json regs = nlohmann::json::object();
        const auto& rr = w.regs.regular();
        for (int i = 0; i < kRZ; ++i) {
            bool nz = std::any_of(rr[i].begin(), rr[i].end(), [](uint32_t v) { return v != 0; });
            if (!nz) continue;
            nlohmann::json lanes = nlohmann::json::array();
            for (uint32_t v : rr[i]) lanes.push_back(hex32(v));
            regs["R" + std::to_string(i)] = lanes;
        }
        for (int i = 0; i < kURZ; ++i)
            if (w.regs.uniform()[i]) regs["UR" + std::to_string(i)] = hex32(w.regs.uniform()[i]);
        for (int i = 0; i < kPT; ++i) {
            if (w.regs.preds()[i]) regs["P" + std::to_string(i)] = hex32(w.regs.preds()[i]);
            if (w.regs.upreds()[i]) regs["UP" + std::to_string(i)] = true;
        }
        out.push_back({{"warp", w.warp}, {"subcore", w.subcore}, {"counters", w.counters}, {"registers", regs}});
    }
    return out;
}

nlohmann::json to_json(const RunResult& r, bool with_events) {
    nlohmann::json j;
    j["config"] = r.config;
    j["stats"] = to_json(r.stats);
    nlohmann::json ev = nlohmann::json::array();
    if (with_events)
        for (const auto& e : r.events)
            ev.push_back({{"cycle", e.cycle},
                          {"subcore", e.subcore},
                          {"warp", e.warp},
                          {"pc", e.pc},
                          {"stage", e.stage},
                          {"detail", e.detail}});
    j["events"] = ev;
    j["registers"] = registers_json(r);
    nlohmann::json d = nlohmann::json::array();
    for (const auto& x : r.diagnostics) d.push_back(to_json(x));
    for (const auto& x : r.runtime_diagnostics) d.push_back(to_json(x));
    j["diagnostics"] = d;
    nlohmann::json clocks = nlohmann::json::array();
    for (const auto& c : r.clocks) clocks.push_back({{"warp", c.warp}, {"pc", c.pc}, {"value", c.value}});
    j["clocks"] = clocks;
    auto mem = [](const std::map<uint32_t, uint32_t>& m) {
        nlohmann::json o = nlohmann::json::object();
        for (const auto& [a, v] : m)
            if (v) o[hex32(a)] = hex32(v);
        return o;
    };
    j["memory"] = {{"global", mem(r.global_mem)}, {"shared", mem(r.shared_mem)}};
    if (r.fault) j["fault"] = *r.fault;
    return j;
}

}  // namespace gpusim
