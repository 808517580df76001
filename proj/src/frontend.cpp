#include "gpusim/frontend.hpp"

#include <algorithm>

#include "gpusim/deps.hpp"

namespace gpusim {

L0ICache::L0ICache(int lines, int assoc) {
    assoc_ = std::max(1, std::min(assoc, std::max(1, lines)));
    sets_ = std::max(1, lines / assoc_);
    set_.resize(sets_);
}

bool L0ICache::lookup(LineKey k) {
    auto& s = set_[k % uint64_t(sets_)];
    auto it = std::find(s.begin(), s.end(), k);
    if (it == s.end()) return false;
    s.splice(s.begin(), s, it);
    return true;
}

bool L0ICache::contains(LineKey k) const {
    const auto& s = set_[k % uint64_t(sets_)];
    return std::find(s.begin(), s.end(), k) != s.end();
}

void L0ICache::insert(LineKey k) {
    auto& s = set_[k % uint64_t(sets_)];
    auto it = std::find(s.begin(), s.end(), k);
    if (it != s.end()) {
        s.splice(s.begin(), s, it);
        return;
    }
    s.push_front(k);
    if (int(s.size()) > assoc_) s.pop_back();
}

int L0ICache::resident() const {
    int n = 0;
    for (const auto& s : set_) n += int(s.size());
    return n;
}

std::vector<LineKey> StreamBuffer::restart(LineKey miss) {
    ++gen_;
    q_.clear();
    std::vector<LineKey> out;
    for (int k = 1; k <= depth_; ++k) {
        q_.push_back({miss + uint64_t(k), false});
        out.push_back(miss + uint64_t(k));
    }
    return out;
}

StreamBuffer::Head StreamBuffer::head(LineKey k) const {
    if (q_.empty() || q_.front().key != k) return Head::Absent;
    return q_.front().ready ? Head::Ready : Head::Pending;
}

void StreamBuffer::pop() {
    if (!q_.empty()) q_.pop_front();
}

bool StreamBuffer::arrive(LineKey k, int gen) {
    if (gen != gen_) return false;
    for (auto& e : q_)
        if (e.key == k) {
            e.ready = true;
            return true;
        }
    return false;
}

std::optional<L1Request> L1Arbiter::grant() {
    int n = int(q_.size());
    for (int k = 0; k < n; ++k) {
        int s = (next_ + k) % n;
        if (!q_[s].empty()) {
            L1Request r = q_[s].front();
            q_[s].pop_front();
            next_ = (s + 1) % n;
            return r;
        }
    }
    return std::nullopt;
}

bool L1Arbiter::empty() const {
    return std::all_of(q_.begin(), q_.end(), [](const auto& d) { return d.empty(); });
}

size_t L1Arbiter::pending() const {
    size_t n = 0;
    for (const auto& d : q_) n += d.size();
    return n;
}

void InstructionBuffer::push(const Instruction* i, Cycle ready) {
    if (!has_room()) throw SimFault("instruction buffer overflow");
    q_.push_back({i, ready});
}

IBufEntry InstructionBuffer::pop() {
    if (q_.empty()) throw SimFault("instruction buffer pop on empty buffer");
    IBufEntry e = q_.front();
    q_.pop_front();
    return e;
}

FrontEnd::FrontEnd(int subcore, const FrontendConfig& cfg, L1Arbiter& l1)
    : subcore_(subcore),
      cfg_(cfg),
      l1_(l1),
      l0_(cfg.l0_lines, cfg.assoc),
      sb_(cfg.prefetch == PrefetchKind::Stream ? cfg.depth : 0) {}

int FrontEnd::add_warp(const Program* prog, int prog_id) {
    WarpFetch w;
    w.prog = prog;
    w.prog_id = prog_id;
    w.pc = prog->base;
    w.done = prog->insts.empty();
    w.ibuf = InstructionBuffer(cfg_.ibuffer);
    w_.push_back(std::move(w));
    return int(w_.size()) - 1;
}

void FrontEnd::warm(const Program* prog, int prog_id) {
    uint32_t lb = uint32_t(cfg_.line_bytes);
    int n = 0;
    for (uint32_t pc = prog->base - prog->base % lb; pc < prog->end_pc() && n < cfg_.l0_lines; pc += lb, ++n)
        l0_.insert(line_key(prog_id, pc, cfg_.line_bytes));
}

void FrontEnd::push_fetch(int slot, Cycle ready) {
    WarpFetch& w = w_[slot];
    const Instruction* inst = w.prog->at(w.pc);
    w.ibuf.push(inst, ready);
    ++stats_.fetched;
    w.pc += kInstBytes;
    if (inst->op == Opcode::EXIT || w.pc >= w.prog->end_pc()) w.done = true;
}

void FrontEnd::launch_fill(Cycle arrival) {
    for (int s = 0; s < warps(); ++s) {
        WarpFetch& w = w_[s];
        while (!w.done && w.ibuf.has_room()) {
            LineKey k = line_key(w.prog_id, w.pc, cfg_.line_bytes);
            if (!cfg_.perfect && !l0_.contains(k)) break;
            push_fetch(s, arrival);
        }
    }
}

bool FrontEnd::fetchable(int slot) const {
    const WarpFetch& w = w_[slot];
    return !w.done && !w.exited && !w.waiting && w.ibuf.has_room();
}

bool FrontEnd::line_in_flight(int slot) const {
    const WarpFetch& w = w_[slot];
    LineKey k = line_key(w.prog_id, w.pc, cfg_.line_bytes);
    if (cfg_.perfect || l0_.contains(k)) return false;
    return inflight_.count(k) || sb_.head(k) == StreamBuffer::Head::Pending;
}

std::optional<FetchOutcome> FrontEnd::fetch_cycle(Cycle c, int last_issued) {
    int target = -1;
    int primary = last_issued >= 0 ? last_issued : last_target_;
    if (primary >= 0 && primary < warps() && fetchable(primary)) {
        target = primary;
    } else {
        for (int s = warps() - 1; s >= 0; --s)
            if (fetchable(s) && !line_in_flight(s)) {
                target = s;
                break;
            }
    }
    if (target < 0) {
        bool starving = std::any_of(w_.begin(), w_.end(), [](const WarpFetch& w) {
            return !w.done && !w.exited && w.waiting && w.ibuf.has_room();
        });
        if (starving) ++stats_.fetch_stall_cycles;
        return std::nullopt;
    }
    last_target_ = target;
    WarpFetch& w = w_[target];
    FetchOutcome out{target, w.pc, "hit"};
    LineKey k = line_key(w.prog_id, w.pc, cfg_.line_bytes);
    if (cfg_.perfect || l0_.lookup(k)) {
        ++stats_.l0_hits;
        push_fetch(target, c + 2);
        return out;
    }
    switch (sb_.head(k)) {
        case StreamBuffer::Head::Ready:
            sb_.pop();
            l0_.insert(k);
            ++stats_.sb_hits;
            ++stats_.l0_hits;
            out.kind = "sb_hit";
            push_fetch(target, c + 2);
            return out;
        case StreamBuffer::Head::Pending:
            w.waiting = k;
            out.kind = "wait";
            ++stats_.fetch_stall_cycles;
            return out;
        case StreamBuffer::Head::Absent: break;
    }
    ++stats_.l0_misses;
    ++stats_.fetch_stall_cycles;
    w.waiting = k;
    if (inflight_.count(k)) {
        out.kind = "wait";
        return out;
    }
    out.kind = "miss";
    inflight_.insert(k);
    l1_.request({subcore_, k, -1});
    ++stats_.demand_requests;
    if (sb_.depth() > 0) {
        int gen = sb_.generation() + 1;
        for (LineKey p : sb_.restart(k)) {
            l1_.request({subcore_, p, gen});
            ++stats_.prefetch_requests;
        }
    }
    return out;
}

void FrontEnd::arrive(const L1Request& r) {
    if (r.gen < 0) {
        inflight_.erase(r.key);
        l0_.insert(r.key);
    } else if (!sb_.arrive(r.key, r.gen)) {
        ++stats_.stale_prefetches;
        return;
    }
    for (auto& w : w_)
        if (w.waiting && *w.waiting == r.key) w.waiting.reset();
}

void FrontEnd::redirect(int slot, uint32_t pc) {
    WarpFetch& w = w_.at(slot);
    w.ibuf.flush();
    w.waiting.reset();
    w.pc = pc;
    w.done = w.exited || w.prog->at(pc) == nullptr;
}

void FrontEnd::stop(int slot) {
    WarpFetch& w = w_.at(slot);
    w.exited = true;
    w.done = true;
    w.waiting.reset();
    w.ibuf.flush();
}

}  // namespace gpusim
