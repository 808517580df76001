#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gpusim/isa.hpp"

namespace gpusim {

class SimFault : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Mechanism : uint8_t { ControlBits, Scoreboard, Hybrid };

std::string mechanism_name(Mechanism m);
Mechanism mechanism_from(const std::string& s);

// ---- compiler control bits ----

class DependenceCounters {
public:
    int value(int sb) const { return v_.at(sb); }
    void add(int sb, int delta);
    bool all_zero() const;

private:
    std::array<int, kNumCounters> v_{};
};

struct CounterEffect {
    Cycle when = 0;
    int counter = 0;
    int delta = 0;
    bool operator==(const CounterEffect&) const = default;
};

// increments applied in the Control stage; the same warp's issue logic observes them from issue + 2
std::vector<CounterEffect> cb_on_issue(const Instruction& inst, Cycle issue);
bool cb_ready(const DependenceCounters& sb, const Instruction& inst);

// ---- dual scoreboard ----

constexpr int kScoreboardEntries = 332;

// R0-R254, UR0-UR62, P0-P6, UP0-UP6; -1 for zero registers
int scoreboard_index(const RegRef& r);

class Scoreboard {
public:
    explicit Scoreboard(std::optional<int> max_consumers = 63);

    bool ready(const Instruction& inst) const;
    void on_issue(const Instruction& inst);
    void clear_write(const RegRef& r);
    void release_read(const RegRef& r);

    bool pending(const RegRef& r) const;
    int consumers(const RegRef& r) const;
    bool empty() const;

private:
    std::optional<int> max_;
    std::array<bool, kScoreboardEntries> pending_{};
    std::array<int, kScoreboardEntries> consumers_{};
};

// ---- area model ----

struct AreaModel {
    int warps = 48;
    int64_t rf_bytes = 262144;
    int counters = kNumCounters;
    int counter_bits = 6;
    int stall_bits = 4;
    int yield_bits = 1;
    int entries = kScoreboardEntries;
};

struct AreaReport {
    std::optional<int64_t> bits_per_warp;
    std::optional<int64_t> bits_per_sm;
    std::optional<double> overhead_ratio;
    std::string note;
};

AreaReport area_report(const AreaModel& model, Mechanism mech, std::optional<int> max_consumers = 63);
std::string percent2(double ratio);

// ---- runtime hazard monitor ----

class HazardMonitor {
public:
    void on_issue(int warp, uint64_t seq, uint32_t pc, const std::vector<RegRef>& reads,
                  const std::vector<RegRef>& writes);
    void on_read(int warp, uint64_t seq, const RegRef& r, Cycle c);
    void on_write(int warp, uint64_t seq, const RegRef& r, Cycle c);
    const std::vector<Diagnostic>& diagnostics() const { return diags_; }

private:
    struct Pending {
        uint64_t seq;
        uint32_t pc;
    };
    using Key = std::pair<int, RegRef>;
    std::map<Key, std::vector<Pending>> reads_;
    std::map<Key, std::vector<Pending>> writes_;
    std::map<std::pair<int, uint64_t>, uint32_t> pc_of_;
    std::vector<Diagnostic> diags_;
};

}  // namespace gpusim
