#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "gpusim/sim.hpp"

namespace gpusim::bench {

// ---- program builders ----

// CLOCK / NOP / FFMA R11,R10,R12,R14 / FFMA R13,R16,x,y / [NOP] / CLOCK / EXIT
std::string rf_conflict_source(const std::string& x, const std::string& y, bool trailing_nop);

// n independent 32-bit global loads with distinct destinations
std::string mem_issue_source(int n);

struct LatencyProbe {
    Opcode op;
    int width;
    AddrMode mode;
    std::string label;
    std::string raw_source;  // empty for stores
    std::string war_source;
};
std::vector<LatencyProbe> latency_probes();
// issue-cycle difference between the first and second instruction of warp 0
int64_t probe_delta(const RunResult& r);

// variant 'a' (no control bits), 'b' (stall 4 on the 2nd instruction), 'c' (yield on the 2nd)
std::string fig2_source(char variant, int length = 32);

// the four register-file-cache examples, followed by EXIT
std::vector<std::string> rfc_listing_sources();
// two back-to-back copies of one instruction
std::string pair_source(const std::string& inst);

std::string dependence_example_source();
std::string distance1_source(int producer_stall, bool producer_yield);

// LDC of c[0x0][0x40], then one or two FFMAs reading that address (or a register instead)
std::string const_cache_source(bool constant_operand, bool second_use);

std::string straightline_source(int length);

// hazard-correct random program under the default latency table
std::string random_program(uint64_t seed, int length = 40);

// ---- analysis helpers ----

// warps in issue order for one sub-core
std::vector<int> issue_order(const RunResult& r, int subcore = 0);
// run-length encoding of an issue order
std::vector<std::pair<int, int>> runs(const std::vector<int>& order);
std::string runs_text(const std::vector<std::pair<int, int>>& rs);

struct RfcOutcome {
    uint32_t pc;
    std::string reg;
    int position;
    bool hit;
};
std::vector<RfcOutcome> rfc_outcomes(const RunResult& r);

// ---- named benches ----

struct Check {
    std::string name;
    bool pass = false;
    std::string expected;
    std::string actual;
};

struct Result {
    std::string name;
    std::string reference;
    std::vector<Check> checks;
    bool pass() const;
};

std::vector<std::string> names();
std::string default_data_dir();
nlohmann::json load_expectations(const std::string& path);
Result run(const std::string& name, const nlohmann::json& expectations, const SmConfig& base = {});
nlohmann::json to_json(const Result& r);

}  // namespace gpusim::bench
