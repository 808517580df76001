#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "gpusim/isa.hpp"

namespace gpusim {

using LaneVec = std::array<uint32_t, kWarpSize>;

// ---- architectural register state of one warp ----

class WarpRegisters {
public:
    WarpRegisters();

    LaneVec read(OperandKind kind, int index) const;
    void write(OperandKind kind, int index, const LaneVec& v, uint32_t lane_mask = 0xffffffffu);

    uint32_t pred_mask(int index, bool uniform) const;
    void set_pred(int index, bool uniform, uint32_t mask, uint32_t lane_mask = 0xffffffffu);

    const std::vector<LaneVec>& regular() const { return r_; }
    const std::array<uint32_t, kNumURegs>& uniform() const { return ur_; }
    const std::array<uint32_t, kNumPreds>& preds() const { return p_; }
    const std::array<bool, kNumPreds>& upreds() const { return up_; }

private:
    std::vector<LaneVec> r_;
    std::array<uint32_t, kNumURegs> ur_{};
    std::array<uint32_t, kNumPreds> p_{};
    std::array<bool, kNumPreds> up_{};
};

// ---- register file cache ----

struct RfcRead {
    int position = 1;
    int reg = 0;
    bool reuse = false;
};

class RegFileCache {
public:
    explicit RegFileCache(int banks = 2, bool enabled = true);

    // pure query, no state change
    bool hit(int warp, int position, int reg) const;
    // applies the invalidate/allocate rules for an instruction's operand reads; returns per-read hit flags
    std::vector<bool> access(int warp, const std::vector<RfcRead>& reads);

    int valid_entries() const;
    bool enabled() const { return enabled_; }

    struct Entry {
        int warp = -1;
        int reg = -1;
        bool valid = false;
    };
    const Entry& entry(int bank, int position) const { return e_.at(bank).at(position - 1); }

private:
    int banks_;
    bool enabled_;
    std::vector<std::array<Entry, 3>> e_;
};

// ---- read-port calendar ----

struct PortRequest {
    int bank = 0;
    int operand = 0;
};

struct PortPlan {
    Cycle window_start = 0;
    std::vector<Cycle> slot;  // per request
};

class ReadPorts {
public:
    explicit ReadPorts(int banks = 2, int ports_per_bank = 1, int window = 3);

    // latest-free-slot placement per bank in request order; nullopt when the window cannot hold all requests
    std::optional<PortPlan> plan(const std::vector<PortRequest>& reqs, Cycle window_start) const;
    void commit(const std::vector<PortRequest>& reqs, const PortPlan& p);
    int used(int bank, Cycle c) const;
    void retire_before(Cycle c);
    int banks() const { return banks_; }
    int window() const { return window_; }

private:
    int banks_, ports_, window_;
    std::map<std::pair<Cycle, int>, int> use_;
};

// ---- write ports and result queue ----

class WritePorts {
public:
    explicit WritePorts(int banks = 2) : banks_(banks) {}

    // fixed-latency result; returns true when it shares the bank and cycle with another fixed result
    bool fixed_write(int bank, Cycle c);
    // earliest cycle >= c at which all listed banks are free of other writes; reserves them
    Cycle load_write(const std::vector<int>& banks, Cycle c);
    int writes(int bank, Cycle c) const;
    void retire_before(Cycle c);

private:
    int banks_;
    std::map<std::pair<Cycle, int>, int> use_;
};

}  // namespace gpusim
