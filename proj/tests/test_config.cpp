#include "doctest.h"

#include <cstdio>
#include <fstream>

#include "gpusim/sim.hpp"

using namespace gpusim;

TEST_CASE("defaults round-trip through set") {
    SmConfig d;
    SmConfig c;
    for (const auto& [k, v] : d.to_map()) CHECK_NOTHROW(c.set(k, v));
    CHECK(c.to_map() == d.to_map());
    CHECK(SmConfig::keys().size() == d.to_map().size());
}

TEST_CASE("INI sections map to dotted keys") {
    SmConfig c = SmConfig::from_ini("[sim]\nsubcores = 2\n[prefetch]\ndepth = 4\n[deps]\nmechanism = scoreboard\nmax_consumers = unlimited\n");
    CHECK(c.subcores == 2);
    CHECK(c.frontend.depth == 4);
    CHECK(c.frontend.prefetch == PrefetchKind::Stream);
    CHECK(c.mechanism == Mechanism::Scoreboard);
    CHECK_FALSE(c.max_consumers.has_value());
}

TEST_CASE("prefetch depth aliases") {
    SmConfig c;
    c.set("prefetch.depth", "none");
    CHECK(c.frontend.prefetch == PrefetchKind::None);
    c.set("prefetch.depth", "perfect");
    CHECK(c.frontend.perfect);
    c.set("prefetch.depth", "0");
    CHECK(c.frontend.prefetch == PrefetchKind::None);
    CHECK_FALSE(c.frontend.perfect);
}

TEST_CASE("bad keys and values are rejected") {
    SmConfig c;
    CHECK_THROWS_AS(c.set("sim.nothing", "1"), std::invalid_argument);
    CHECK_THROWS_AS(c.set("sim.subcores", "four"), std::invalid_argument);
    CHECK_THROWS_AS(c.set("sim.subcores", "4x"), std::invalid_argument);
    CHECK_THROWS_AS(c.set("regfile.rfc", "maybe"), std::invalid_argument);
    CHECK_THROWS_AS(c.set("prefetch.kind", "magic"), std::invalid_argument);
    CHECK_THROWS_AS(SmConfig::from_ini("[sim]\nsubcores = 0\n"), std::invalid_argument);
    CHECK_THROWS_AS(SmConfig::from_ini("[icache]\nline_bytes = 24\n"), std::invalid_argument);
    CHECK_THROWS_AS(SmConfig::from_ini("[calibration]\nissue_to_control = 2\n"), std::invalid_argument);
    CHECK_THROWS_AS(SmConfig::from_ini("[sim\nsubcores = 1\n"), std::invalid_argument);
    CHECK_THROWS(SmConfig::from_file("/nonexistent/config.ini"));
}

TEST_CASE("latency file paths resolve relative to the config") {
    std::string dir = "/tmp";
    std::string lat = dir + "/gpusim_test_latency.ini";
    std::string cfg = dir + "/gpusim_test_config.ini";
    std::ofstream(lat) << "[fixed]\nFFMA = 6\n";
    std::ofstream(cfg) << "[latency]\nfile = gpusim_test_latency.ini\n";
    SmConfig c = SmConfig::from_file(cfg);
    CHECK(c.latency.fixed.at(Opcode::FFMA) == 6);
    CHECK(c.latency.fixed.at(Opcode::FADD) == LatencyTable::defaults().fixed.at(Opcode::FADD));
    std::remove(lat.c_str());
    std::remove(cfg.c_str());
}

TEST_CASE("the run result records the effective configuration") {
    SmConfig c;
    c.set("regfile.rfc", "off");
    RunResult r = run(parse_program("EXIT ;"), c);
    REQUIRE(r.ok());
    CHECK(r.config.at("regfile.rfc") == "false");
}
