#include <map>
#include <set>

#include "doctest.h"

#include "gpusim/bench.hpp"
#include "gpusim/issue.hpp"
#include "gpusim/sim.hpp"

using namespace gpusim;

namespace {

ReadinessReport from_bits(unsigned m) {
    ReadinessReport r;
    r.valid_instruction = m & 1;
    r.stall_counter_zero = m & 2;
    r.yield_clear = m & 4;
    r.deps_clear = m & 8;
    r.unit_latch_free = m & 16;
    r.constant_cache_ok = m & 32;
    r.lsu_slot_free = m & 64;
    r.control_flow_clear = m & 128;
    return r;
}

ReadinessReport ready() { return from_bits(0xff); }
ReadinessReport blocked() { return from_bits(0xfe); }

SmConfig warm() {
    SmConfig c;
    c.frontend.warm = true;
    return c;
}

}  // namespace

TEST_CASE("eligible only when every condition holds") {
    for (unsigned m = 0; m < 256; ++m) {
        ReadinessReport r = from_bits(m);
        CHECK(r.eligible() == (m == 0xff));
        CHECK((r.reason() == "ready") == (m == 0xff));
    }
}

TEST_CASE("reason names the first failing condition") {
    CHECK(from_bits(0xff & ~128u).reason() == "control_flow");
    CHECK(from_bits(0xff & ~1u).reason() == "icache");
    CHECK(from_bits(0xff & ~2u).reason() == "stall_counter");
    CHECK(from_bits(0xff & ~4u).reason() == "yield");
    CHECK(from_bits(0xff & ~8u).reason() == "deps");
    CHECK(from_bits(0xff & ~32u).reason() == "const_cache");
    CHECK(from_bits(0xff & ~64u).reason() == "lsu");
    CHECK(from_bits(0xff & ~16u).reason() == "unit_latch");
    CHECK(from_bits(0).reason() == "control_flow");
    CHECK(from_bits(0x80 | 0x02).reason() == "icache");
}

TEST_CASE("greedy then youngest selection") {
    CHECK_FALSE(cggty_select({}, -1));
    CHECK_FALSE(cggty_select({blocked(), blocked()}, 0));
    CHECK(cggty_select({ready(), ready(), ready()}, -1) == 2);
    CHECK(cggty_select({ready(), ready(), ready()}, 0) == 0);
    CHECK(cggty_select({ready(), ready(), blocked()}, 2) == 1);
    CHECK(cggty_select({ready(), blocked(), blocked()}, 7) == 0);
}

TEST_CASE("property: selection matches a reference policy") {
    uint64_t s = 12345;
    auto next = [&] {
        s = s * 6364136223846793005ull + 1442695040888963407ull;
        return unsigned(s >> 33);
    };
    for (int trial = 0; trial < 2000; ++trial) {
        int n = 1 + int(next() % 8);
        std::vector<ReadinessReport> rs;
        for (int k = 0; k < n; ++k) rs.push_back(next() % 2 ? ready() : blocked());
        int last = int(next() % (n + 1)) - 1;
        std::optional<int> want;
        if (last >= 0 && rs[last].eligible()) want = last;
        else
            for (int k = 0; k < n; ++k)
                if (rs[k].eligible()) want = k;
        CHECK(cggty_select(rs, last) == want);
    }
}

TEST_CASE("next eligible cycle from stall and yield") {
    auto cb = [](int stall, bool yield) {
        ControlBits c;
        c.stall = stall;
        c.yield = yield;
        return c;
    };
    CHECK(next_eligible(10, cb(0, false)) == 11);
    CHECK(next_eligible(10, cb(0, true)) == 12);
    CHECK(next_eligible(10, cb(1, false)) == 12);
    CHECK(next_eligible(10, cb(4, false)) == 15);
    CHECK(next_eligible(10, cb(4, true)) == 15);
    CHECK(next_eligible(10, cb(15, false)) == 26);
}

TEST_CASE("property: one issue per sub-core per cycle and program order through control") {
    SmConfig c;
    c.warps = 8;
    for (uint64_t seed = 0; seed < 20; ++seed) {
        RunResult r = run(parse_program(bench::random_program(seed)), c);
        REQUIRE(r.ok());
        std::set<std::pair<int, Cycle>> seen;
        std::map<int, std::vector<uint32_t>> issued, controlled;
        for (const auto& e : r.events) {
            if (e.stage == "issue") {
                CHECK(seen.insert({e.subcore, e.cycle}).second);
                issued[e.warp].push_back(e.pc);
            }
            if (e.stage == "control") controlled[e.warp].push_back(e.pc);
        }
        CHECK(issued == controlled);
    }
}

TEST_CASE("property: issued plus bubbles equals total cycles on every sub-core") {
    SmConfig c;
    c.warps = 6;
    for (uint64_t seed = 0; seed < 20; ++seed) {
        RunResult r = run(parse_program(bench::random_program(seed)), c);
        REQUIRE(r.ok());
        int64_t total_issued = 0;
        for (const auto& sc : r.stats.subcores) {
            int64_t b = 0;
            for (const auto& [k, v] : sc.bubbles) b += v;
            CHECK(sc.issued + b == r.stats.total_cycles);
            total_issued += sc.issued;
        }
        CHECK(total_issued == r.stats.instructions);
    }
}

TEST_CASE("CLOCK captures the cycle after issue") {
    RunResult r = run(parse_program(bench::rf_conflict_source("R19", "R21", true)), warm());
    REQUIRE(r.ok());
    auto ic = issue_cycles(r, 0);
    REQUIRE(r.clocks.size() == 2);
    CHECK(r.clocks[0].value == uint32_t(ic.front() + 1));
    CHECK(measure_clock_delta(r) == 5);
}

TEST_CASE("a load issues while a fixed-latency instruction is held in allocate") {
    std::string src = "[B------:R-:W-:Y0:S01] FFMA R1, R3, R5, R7 ;\n"
                      "[B------:R-:W-:Y0:S01] FFMA R9, R11, R13, R15 ;\n"
                      "[B------:R-:W1:Y0:S01] LDG.E R20, [R2] ;\n"
                      "[B------:R-:W-:Y0:S01] NOP ;\n"
                      "[B-1----:R-:W-:Y0:S01] EXIT ;";
    RunResult r = run(parse_program(src), warm());
    REQUIRE(r.ok());
    Cycle hold = -1, ldg = -1;
    for (const auto& e : r.events) {
        if (e.stage == "allocate_hold" && hold < 0) hold = e.cycle;
        if (e.stage == "issue" && e.detail == "LDG") ldg = e.cycle;
    }
    REQUIRE(hold >= 0);
    CHECK(ldg == hold);
    CHECK(r.stats.allocate_hold_cycles == 1);
}

TEST_CASE("yield with no other warp costs one bubble") {
    SmConfig c = warm();
    c.subcores = 1;
    c.warps = 1;
    RunResult r = run(parse_program(bench::fig2_source('c')), c);
    REQUIRE(r.ok());
    auto ic = issue_cycles(r, 0);
    CHECK(ic.at(2) - ic.at(1) == 2);
    CHECK(r.stats.bubbles.at("stall_counter") == 1);
}
