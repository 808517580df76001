#include "gpusim/mem.hpp"

#include <algorithm>

#include "gpusim/deps.hpp"

namespace gpusim {

LsuPipe::LsuPipe(int subcores, const MemConfig& cfg, int entry_offset)
    : subcores_(subcores),
      cfg_(cfg),
      entry_offset_(entry_offset),
      occ_(subcores, 0),
      queue_(subcores),
      agu_free_(subcores, 0),
      to_arb_(subcores),
      return_free_(subcores, 0) {}

void LsuPipe::on_issue(int sc) {
    if (!can_accept(sc)) throw SimFault("LSU queue over-subscribed");
    ++occ_[sc];
}

void LsuPipe::release_slot(int sc) {
    if (occ_[sc] == 0) throw SimFault("LSU slot release on empty queue");
    --occ_[sc];
}

int LsuPipe::enqueue(MemOp op) {
    op.id = next_id_++;
    op.eligible = op.issue + entry_offset_;
    queue_.at(op.subcore).push_back(op.id);
    ops_[op.id] = op;
    return op.id;
}

std::vector<int> LsuPipe::agu_phase(Cycle c) {
    std::vector<int> out;
    for (int s = 0; s < subcores_; ++s) {
        if (queue_[s].empty() || agu_free_[s] > c) continue;
        MemOp& op = ops_.at(queue_[s].front());
        if (op.eligible > c) continue;
        queue_[s].pop_front();
        op.entry = c;
        op.arrive = c + cfg_.agu_throughput + cfg_.agu_to_arbiter;
        agu_free_[s] = c + cfg_.agu_throughput;
        to_arb_[s].push_back(op.id);
        out.push_back(op.id);
    }
    return out;
}

std::optional<int> LsuPipe::arbiter_phase(Cycle c) {
    if (c < next_grant_) return std::nullopt;
    for (int k = 0; k < subcores_; ++k) {
        int s = (rr_ + k) % subcores_;
        if (to_arb_[s].empty()) continue;
        MemOp& op = ops_.at(to_arb_[s].front());
        if (op.arrive > c) continue;
        to_arb_[s].pop_front();
        op.grant = c;
        next_grant_ = c + cfg_.shared_accept_period;
        rr_ = (s + 1) % subcores_;
        ++grants_;
        return op.id;
    }
    return std::nullopt;
}

Cycle LsuPipe::return_path(int sc, Cycle x, int bits) {
    int beats = std::max(1, (bits * kWarpSize + cfg_.return_bits_per_cycle - 1) / cfg_.return_bits_per_cycle);
    Cycle start = std::max(x - beats + 1, return_free_.at(sc));
    Cycle end = start + beats - 1;
    return_free_[sc] = end + 1;
    return end;
}

std::optional<Cycle> ConstCache::pending(const Key& k) const {
    auto it = pending_.find(k);
    if (it == pending_.end()) return std::nullopt;
    return it->second;
}

uint32_t Memory::read(uint32_t addr) const {
    auto it = w_.find(addr & ~3u);
    return it == w_.end() ? 0u : it->second;
}

}  // namespace gpusim
