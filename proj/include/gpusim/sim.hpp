#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "gpusim/deps.hpp"
#include "gpusim/exec.hpp"
#include "gpusim/frontend.hpp"
#include "gpusim/isa.hpp"
#include "gpusim/issue.hpp"
#include "gpusim/mem.hpp"
#include "gpusim/regfile.hpp"

namespace gpusim {

struct SmConfig {
    int subcores = 4;
    int warps = 0;  // 0: take the program's .warps directive, else 1
    Cycle cycle_cap = 10'000'000;
    bool events = true;

    Mechanism mechanism = Mechanism::ControlBits;
    std::optional<int> max_consumers = 63;

    FrontendConfig frontend;

    int read_ports_per_bank = 1;
    bool rfc = true;
    int banks = 2;

    ExecConfig exec;
    MemConfig mem;
    ConstConfig cst;
    Calibration cal;

    std::string latency_file;
    LatencyTable latency = LatencyTable::defaults();

    // dotted key such as "prefetch.depth"; throws std::invalid_argument on unknown keys or bad values
    void set(const std::string& key, const std::string& value);
    std::map<std::string, std::string> to_map() const;
    void check() const;

    static SmConfig from_ini(const std::string& text, const std::string& base_dir = ".");
    static SmConfig from_file(const std::string& path);
    static std::vector<std::string> keys();
};

struct TimelineEvent {
    Cycle cycle = 0;
    int subcore = 0;
    int warp = -1;
    uint32_t pc = 0;
    std::string stage;
    std::string detail;
};

struct SubcoreStats {
    int64_t issued = 0;
    std::map<std::string, int64_t> bubbles;
};

struct RunStats {
    Cycle total_cycles = 0;
    int64_t instructions = 0;
    std::vector<int64_t> warp_issues;
    std::vector<SubcoreStats> subcores;
    std::map<std::string, int64_t> bubbles;
    int64_t rfc_hits = 0;
    int64_t rfc_misses = 0;
    int64_t allocate_hold_cycles = 0;
    int64_t port_conflicts = 0;
    int64_t load_write_delays = 0;
    int64_t fl_misses = 0;
    int64_t vl_misses = 0;
    int64_t lsu_grants = 0;
    int64_t counter_increments = 0;
    int64_t counter_decrements = 0;
    int max_lsu_occupancy = 0;
    FetchStats fetch;
};

struct ClockSample {
    int warp = 0;
    uint32_t pc = 0;
    uint32_t value = 0;
};

struct WarpFinal {
    int warp = 0;
    int subcore = 0;
    WarpRegisters regs;
    std::array<int, kNumCounters> counters{};
};

struct RunResult {
    std::map<std::string, std::string> config;
    RunStats stats;
    std::vector<TimelineEvent> events;
    std::vector<WarpFinal> warps;
    std::vector<Diagnostic> diagnostics;          // static validation
    std::vector<Diagnostic> runtime_diagnostics;  // hazard monitor
    std::vector<ClockSample> clocks;
    std::map<uint32_t, uint32_t> global_mem;
    std::map<uint32_t, uint32_t> shared_mem;
    std::optional<std::string> fault;

    bool ok() const { return !fault; }
};

RunResult run(const Program& prog, const SmConfig& cfg);
RunResult run(const std::vector<Program>& progs, const SmConfig& cfg);

// later minus earlier captured CLOCK values of one warp (first and last CLOCK when pcs are omitted)
int64_t measure_clock_delta(const RunResult& r, int warp = 0, std::optional<uint32_t> pc_a = std::nullopt,
                            std::optional<uint32_t> pc_b = std::nullopt);

// issue cycles of one warp in program order
std::vector<Cycle> issue_cycles(const RunResult& r, int warp);

struct SweepRow {
    std::string value;
    RunStats stats;
    std::optional<std::string> fault;
};

std::vector<SweepRow> sweep(const std::string& axis, const std::vector<std::string>& values,
                            const std::vector<Program>& progs, const SmConfig& base, int jobs = 1);

nlohmann::json to_json(const Diagnostic& d);
nlohmann::json to_json(const RunStats& s);
nlohmann::json to_json(const RunResult& r, bool with_events = true);
nlohmann::json registers_json(const RunResult& r);

}  // namespace gpusim
