#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "gpusim/isa.hpp"

namespace gpusim {

struct MemConfig {
    int lsu_queue = 4;
    int agu_throughput = 4;
    int shared_accept_period = 2;
    int agu_to_arbiter = 2;
    int return_bits_per_cycle = 512;
    int dcache_miss_penalty = 0;
};

struct ConstConfig {
    int fl_miss_delay = 79;
    int vl_miss_penalty = 0;
    int fl_line_bytes = 64;
    int vl_line_bytes = 64;
};

struct MemOp {
    int id = 0;
    int subcore = 0;
    int warp = 0;
    const Instruction* inst = nullptr;
    uint64_t seq = 0;
    Cycle issue = 0;
    Cycle eligible = 0;
    Cycle entry = -1;
    Cycle arrive = -1;
    Cycle grant = -1;
};

// per-sub-core LSU queue and AGU, plus the SM-wide shared-structure arbiter
class LsuPipe {
public:
    LsuPipe(int subcores, const MemConfig& cfg, int entry_offset = 3);

    bool can_accept(int sc) const { return occ_.at(sc) < cfg_.lsu_queue + 1; }
    int occupancy(int sc) const { return occ_.at(sc); }
    void on_issue(int sc);
    void release_slot(int sc);

    int enqueue(MemOp op);
    std::vector<int> agu_phase(Cycle c);
    std::optional<int> arbiter_phase(Cycle c);
    void finish(int id) { ops_.erase(id); }

    // register-write cycle after serializing a response of `bits` through the return path
    Cycle return_path(int sc, Cycle x, int bits);

    MemOp& op(int id) { return ops_.at(id); }
    bool empty() const { return ops_.empty(); }
    int64_t grants() const { return grants_; }

private:
    int subcores_;
    MemConfig cfg_;
    int entry_offset_;
    std::vector<int> occ_;
    std::vector<std::deque<int>> queue_;
    std::vector<Cycle> agu_free_;
    std::vector<std::deque<int>> to_arb_;
    std::vector<Cycle> return_free_;
    Cycle next_grant_ = 0;
    int rr_ = 0;
    int next_id_ = 0;
    int64_t grants_ = 0;
    std::map<int, MemOp> ops_;
};

class ConstCache {
public:
    explicit ConstCache(int line_bytes = 64) : line_bytes_(line_bytes) {}
    using Key = std::pair<int, uint32_t>;
    Key key(int bank, uint32_t addr) const { return {bank, addr / uint32_t(line_bytes_)}; }
    bool contains(const Key& k) const { return lines_.count(k) != 0; }
    void insert(const Key& k) {
        lines_.insert(k);
        pending_.erase(k);
    }
    std::optional<Cycle> pending(const Key& k) const;
    void start_fill(const Key& k, Cycle ready) { pending_[k] = ready; }

private:
    int line_bytes_;
    std::set<Key> lines_;
    std::map<Key, Cycle> pending_;
};

// sparse word-addressed backing store
class Memory {
public:
    uint32_t read(uint32_t addr) const;
    void write(uint32_t addr, uint32_t v) { w_[addr & ~3u] = v; }
    const std::map<uint32_t, uint32_t>& words() const { return w_; }

private:
    std::map<uint32_t, uint32_t> w_;
};

}  // namespace gpusim
