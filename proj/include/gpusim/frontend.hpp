#pragma once

#include <cstdint>
#include <deque>
#include <list>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gpusim/isa.hpp"

namespace gpusim {

enum class PrefetchKind : uint8_t { None, Stream };

struct FrontendConfig {
    int l0_lines = 16;
    int line_bytes = 128;
    int assoc = 4;
    int miss_latency = 20;
    bool perfect = false;
    bool warm = false;
    PrefetchKind prefetch = PrefetchKind::Stream;
    int depth = 16;
    int ibuffer = 3;
    bool launch_fill = true;
};

// line identity: program id in the upper half, line index in the lower half
using LineKey = uint64_t;
inline LineKey line_key(int prog, uint32_t pc, int line_bytes) {
    return (uint64_t(uint32_t(prog)) << 32) | (pc / uint32_t(line_bytes));
}

class L0ICache {
public:
    L0ICache(int lines, int assoc);
    bool lookup(LineKey k);  // updates recency on hit
    bool contains(LineKey k) const;
    void insert(LineKey k);
    int resident() const;

private:
    int sets_, assoc_;
    std::vector<std::list<LineKey>> set_;  // front = most recent
};

class StreamBuffer {
public:
    explicit StreamBuffer(int depth) : depth_(depth) {}

    enum class Head { Absent, Pending, Ready };
    // restarts with the lines after the missing one; returns the lines to request
    std::vector<LineKey> restart(LineKey miss);
    Head head(LineKey k) const;
    void pop();
    bool arrive(LineKey k, int gen);
    int generation() const { return gen_; }
    int depth() const { return depth_; }
    size_t size() const { return q_.size(); }

private:
    struct Entry {
        LineKey key;
        bool ready;
    };
    int depth_;
    int gen_ = 0;
    std::deque<Entry> q_;
};

struct L1Request {
    int subcore = 0;
    LineKey key = 0;
    int gen = -1;  // -1 = demand fill
    bool operator==(const L1Request&) const = default;
};

class L1Arbiter {
public:
    explicit L1Arbiter(int subcores) : q_(subcores) {}
    void request(const L1Request& r) { q_.at(r.subcore).push_back(r); }
    std::optional<L1Request> grant();
    bool empty() const;
    size_t pending() const;

private:
    std::vector<std::deque<L1Request>> q_;
    int next_ = 0;
};

struct IBufEntry {
    const Instruction* inst = nullptr;
    Cycle ready = 0;
};

class InstructionBuffer {
public:
    explicit InstructionBuffer(int cap = 3) : cap_(cap) {}
    int size() const { return int(q_.size()); }
    bool has_room() const { return size() < cap_; }
    void push(const Instruction* i, Cycle ready);
    bool front_ready(Cycle c) const { return !q_.empty() && q_.front().ready <= c; }
    const IBufEntry& front() const { return q_.front(); }
    IBufEntry pop();
    void flush() { q_.clear(); }
    int capacity() const { return cap_; }

private:
    int cap_;
    std::deque<IBufEntry> q_;
};

struct FetchStats {
    int64_t fetched = 0;
    int64_t l0_hits = 0;
    int64_t l0_misses = 0;
    int64_t sb_hits = 0;
    int64_t prefetch_requests = 0;
    int64_t stale_prefetches = 0;
    int64_t demand_requests = 0;
    int64_t fetch_stall_cycles = 0;
};

struct WarpFetch {
    const Program* prog = nullptr;
    int prog_id = 0;
    uint32_t pc = 0;
    bool done = false;
    bool exited = false;
    std::optional<LineKey> waiting;
    InstructionBuffer ibuf;
};

struct FetchOutcome {
    int slot = -1;
    uint32_t pc = 0;
    std::string kind;  // hit, sb_hit, miss, wait
};

class FrontEnd {
public:
    FrontEnd(int subcore, const FrontendConfig& cfg, L1Arbiter& l1);

    int add_warp(const Program* prog, int prog_id);
    WarpFetch& warp(int slot) { return w_.at(slot); }
    const WarpFetch& warp(int slot) const { return w_.at(slot); }
    int warps() const { return int(w_.size()); }

    void warm(const Program* prog, int prog_id);
    void launch_fill(Cycle arrival);
    std::optional<FetchOutcome> fetch_cycle(Cycle c, int last_issued);
    void arrive(const L1Request& r);
    void redirect(int slot, uint32_t pc);
    void stop(int slot);

    const FetchStats& stats() const { return stats_; }
    const L0ICache& l0() const { return l0_; }
    const StreamBuffer& stream() const { return sb_; }
    bool idle() const { return inflight_.empty(); }

private:
    bool fetchable(int slot) const;
    bool line_in_flight(int slot) const;
    void push_fetch(int slot, Cycle c);

    int subcore_;
    FrontendConfig cfg_;
    L1Arbiter& l1_;
    L0ICache l0_;
    StreamBuffer sb_;
    std::vector<WarpFetch> w_;
    std::set<LineKey> inflight_;
    int last_target_ = -1;
    FetchStats stats_;
};

}  // namespace gpusim
