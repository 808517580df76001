#include "doctest.h"

#include "gpusim/bench.hpp"
#include "gpusim/sim.hpp"

using namespace gpusim;

namespace {

SmConfig warm() {
    SmConfig c;
    c.frontend.warm = true;
    return c;
}

}  // namespace

TEST_CASE("an empty program finishes without issuing") {
    RunResult r = run(parse_program(""), SmConfig{});
    REQUIRE(r.ok());
    CHECK(r.stats.instructions == 0);
    CHECK(r.events.empty());
    CHECK_THROWS_AS(run(std::vector<Program>{}, SmConfig{}), std::invalid_argument);
}

TEST_CASE("clock delta edge cases") {
    RunResult none = run(parse_program("EXIT ;"), warm());
    CHECK_THROWS(measure_clock_delta(none));
    RunResult one = run(parse_program("[B------:R-:W-:Y0:S02] CLOCK R4 ;\nEXIT ;"), warm());
    REQUIRE(one.clocks.size() == 1);
    CHECK_THROWS(measure_clock_delta(one));
    CHECK(measure_clock_delta(one, 0, 0, 0) == 0);
    RunResult two = run(parse_program(bench::rf_conflict_source("R18", "R21", true)), warm());
    uint32_t last = two.clocks.back().pc;
    CHECK(measure_clock_delta(two, 0, 0, last) == 6);
    CHECK(measure_clock_delta(two, 0, last, 0) == -6);
    CHECK_THROWS(measure_clock_delta(two, 0, 0, 0x7770));
    CHECK_THROWS(measure_clock_delta(two, 3));
}

TEST_CASE("warps are placed round robin on sub-cores") {
    SmConfig c = warm();
    c.warps = 10;
    RunResult r = run(parse_program("NOP ;\nEXIT ;"), c);
    REQUIRE(r.ok());
    REQUIRE(r.warps.size() == 10);
    for (const auto& w : r.warps) CHECK(w.subcore == w.warp % 4);
    for (const auto& e : r.events)
        if (e.warp >= 0) CHECK(e.subcore == e.warp % 4);
    CHECK(r.stats.warp_issues == std::vector<int64_t>(10, 2));
}

TEST_CASE("the warps directive sets the warp count") {
    RunResult r = run(parse_program(".warps 3\nNOP ;\nEXIT ;"), warm());
    CHECK(r.warps.size() == 3);
    SmConfig c = warm();
    c.warps = 5;
    CHECK(run(parse_program(".warps 3\nEXIT ;"), c).warps.size() == 5);
}

TEST_CASE("property: event cycles never decrease and stay within the run") {
    SmConfig c;
    c.warps = 8;
    for (uint64_t seed = 0; seed < 10; ++seed) {
        RunResult r = run(parse_program(bench::random_program(seed)), c);
        REQUIRE(r.ok());
        for (size_t k = 1; k < r.events.size(); ++k) CHECK(r.events[k].cycle >= r.events[k - 1].cycle);
        CHECK(r.events.back().cycle < r.stats.total_cycles);
    }
}

TEST_CASE("property: runs are deterministic") {
    SmConfig c;
    c.warps = 6;
    for (uint64_t seed = 0; seed < 5; ++seed) {
        Program p = parse_program(bench::random_program(seed));
        CHECK(to_json(run(p, c)).dump() == to_json(run(p, c)).dump());
    }
}

TEST_CASE("the cycle cap turns a runaway program into a fault") {
    SmConfig c = warm();
    c.cycle_cap = 200;
    RunResult r = run(parse_program("[B------:R-:W-:Y0:S05] BRA 0x0 ;"), c);
    REQUIRE_FALSE(r.ok());
    CHECK(r.fault->find("cycle cap") != std::string::npos);
    CHECK(r.stats.total_cycles == 200);
    CHECK(to_json(r).contains("fault"));
}

TEST_CASE("sweeps reject bad axes and values") {
    std::vector<Program> p{parse_program("EXIT ;")};
    CHECK_THROWS_AS(sweep("prefetch.depth", {}, p, SmConfig{}), std::invalid_argument);
    CHECK_THROWS_AS(sweep("sim.nothing", {"1"}, p, SmConfig{}), std::invalid_argument);
    CHECK_THROWS_AS(sweep("sim.subcores", {"0"}, p, SmConfig{}), std::invalid_argument);
}

TEST_CASE("sweep results do not depend on the job count") {
    std::vector<Program> p{parse_program(bench::straightline_source(128))};
    SmConfig c;
    c.warps = 4;
    std::vector<std::string> v = {"none", "1", "2", "4", "8", "16", "perfect"};
    auto a = sweep("prefetch.depth", v, p, c, 1);
    auto b = sweep("prefetch.depth", v, p, c, 4);
    REQUIRE(a.size() == v.size());
    for (size_t k = 0; k < v.size(); ++k) {
        CHECK(a[k].value == v[k]);
        CHECK(to_json(a[k].stats).dump() == to_json(b[k].stats).dump());
    }
}

TEST_CASE("mechanism sweep: the same architectural result under every mechanism") {
    Program p = parse_program(bench::dependence_example_source());
    SmConfig c = warm();
    std::string reference;
    for (const char* m : {"control_bits", "scoreboard", "hybrid"}) {
        SmConfig k = c;
        k.set("deps.mechanism", m);
        RunResult r = run(p, k);
        REQUIRE(r.ok());
        CHECK(r.runtime_diagnostics.empty());
        std::string regs = registers_json(r).dump();
        if (reference.empty()) reference = regs;
        CHECK(regs == reference);
    }
    auto rows = sweep("deps.mechanism", {"control_bits", "scoreboard", "hybrid"}, {p}, c);
    for (const auto& row : rows) CHECK_FALSE(row.fault);
}

TEST_CASE("result JSON carries the documented keys") {
    RunResult r = run(parse_program(bench::rf_conflict_source("R19", "R21", true)), warm());
    auto j = to_json(r);
    for (const char* k : {"config", "stats", "events", "registers", "diagnostics", "clocks", "memory"}) CHECK(j.contains(k));
    CHECK_FALSE(j.contains("fault"));
    CHECK(to_json(r, false)["events"].empty());
    for (const char* k : {"total_cycles", "instructions", "warp_issues", "bubbles", "subcores", "fetch"}) CHECK(j["stats"].contains(k));
    CHECK(j["clocks"].size() == 2);
    CHECK(j["events"][0].contains("stage"));
}
