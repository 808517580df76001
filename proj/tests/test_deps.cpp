#include <set>

#include "doctest.h"

#include "gpusim/bench.hpp"
#include "gpusim/deps.hpp"
#include "gpusim/sim.hpp"

using namespace gpusim;

namespace {

Instruction inst(const std::string& src) { return parse_program(src).insts.at(0); }

SmConfig warm() {
    SmConfig c;
    c.frontend.warm = true;
    return c;
}

}  // namespace

TEST_CASE("counters start at zero and fault on overflow") {
    DependenceCounters sb;
    CHECK(sb.all_zero());
    for (int k = 0; k < kMaxCounter; ++k) sb.add(2, 1);
    CHECK(sb.value(2) == 63);
    CHECK_THROWS_AS(sb.add(2, 1), SimFault);
    CHECK_THROWS_AS(sb.add(0, -1), SimFault);
    sb.add(2, -63);
    CHECK(sb.all_zero());
}

TEST_CASE("cb_on_issue schedules increments only for set barriers") {
    CHECK(cb_on_issue(inst("[B------:R-:W-:Y0:S01] FFMA R1, R2, R3, R4 ;"), 10).empty());
    auto e = cb_on_issue(inst("[B------:R0:W3:Y0:S01] LDG.E R10, [R4] ;"), 10);
    REQUIRE(e.size() == 2);
    CHECK(e[0] == CounterEffect{12, 3, +1});
    CHECK(e[1] == CounterEffect{12, 0, +1});
}

TEST_CASE("cb_ready checks the wait mask and DEPBAR thresholds") {
    DependenceCounters sb;
    sb.add(3, 1);
    CHECK_FALSE(cb_ready(sb, inst("[B0--3--:R-:W-:Y0:S01] IADD3 R2, R10, R12, RZ ;")));
    CHECK(cb_ready(sb, inst("[B0-----:R-:W-:Y0:S01] IADD3 R2, R10, R12, RZ ;")));
    CHECK(cb_ready(sb, inst("NOP ;")));

    DependenceCounters d;
    for (int k = 0; k < 3; ++k) d.add(1, 1);
    Instruction le3 = inst("DEPBAR.LE SB1, 0x3 ;");
    CHECK(cb_ready(d, le3));
    d.add(1, 1);
    CHECK_FALSE(cb_ready(d, le3));
    d.add(1, -4);
    d.add(2, 1);
    CHECK_FALSE(cb_ready(d, inst("DEPBAR.LE SB1, 0x3, {2} ;")));
    CHECK(cb_ready(d, le3));
}

TEST_CASE("scoreboard RAW, WAW and WAR") {
    Scoreboard s;
    CHECK(s.empty());
    Instruction load = inst("LDG.E R6, [R2] ;");
    Instruction use = inst("IADD3 R8, R6, RZ, RZ ;");
    Instruction clobber = inst("IADD3 R2, R9, RZ, RZ ;");
    Instruction rewrite = inst("MOV R6, 0x1 ;");
    CHECK(s.ready(use));
    s.on_issue(load);
    CHECK(s.pending({OperandKind::Reg, 6}));
    CHECK(s.consumers({OperandKind::Reg, 2}) == 1);
    CHECK_FALSE(s.ready(use));
    CHECK_FALSE(s.ready(rewrite));
    CHECK_FALSE(s.ready(clobber));
    s.release_read({OperandKind::Reg, 2});
    CHECK(s.ready(clobber));
    CHECK_FALSE(s.ready(use));
    s.clear_write({OperandKind::Reg, 6});
    CHECK(s.ready(use));
    CHECK(s.empty());
}

TEST_CASE("scoreboard consumer limit") {
    Scoreboard bounded(63), unbounded(std::nullopt);
    Instruction reader = inst("IADD3 R8, R6, RZ, RZ ;");
    for (int k = 0; k < 63; ++k) {
        bounded.on_issue(reader);
        unbounded.on_issue(reader);
    }
    CHECK_THROWS_AS(bounded.on_issue(reader), SimFault);
    CHECK_NOTHROW(unbounded.on_issue(reader));
    CHECK(unbounded.consumers({OperandKind::Reg, 6}) == 64);
}

TEST_CASE("scoreboard entries cover 332 registers") {
    CHECK(scoreboard_index({OperandKind::Reg, 0}) == 0);
    CHECK(scoreboard_index({OperandKind::Reg, kRZ}) == -1);
    CHECK(scoreboard_index({OperandKind::UReg, kURZ}) == -1);
    CHECK(scoreboard_index({OperandKind::Pred, kPT}) == -1);
    CHECK(scoreboard_index({OperandKind::UPred, 6}) == kScoreboardEntries - 1);
    std::set<int> seen;
    for (int r = 0; r < kRZ; ++r) seen.insert(scoreboard_index({OperandKind::Reg, r}));
    for (int r = 0; r < kURZ; ++r) seen.insert(scoreboard_index({OperandKind::UReg, r}));
    for (int r = 0; r < kPT; ++r) {
        seen.insert(scoreboard_index({OperandKind::Pred, r}));
        seen.insert(scoreboard_index({OperandKind::UPred, r}));
    }
    CHECK(seen.size() == size_t(kScoreboardEntries));
    CHECK(*seen.rbegin() == kScoreboardEntries - 1);
}

TEST_CASE("area report arithmetic") {
    AreaModel m;
    auto cb = area_report(m, Mechanism::ControlBits);
    CHECK(cb.bits_per_warp == 41);
    CHECK(cb.bits_per_sm == 1968);
    CHECK(percent2(*cb.overhead_ratio) == "0.09%");
    auto sb = area_report(m, Mechanism::Scoreboard, 63);
    CHECK(sb.bits_per_warp == 332 + 332 * 6);
    CHECK(sb.bits_per_sm == 111552);
    CHECK(percent2(*sb.overhead_ratio) == "5.32%");
    m.warps = 64;
    auto big = area_report(m, Mechanism::Scoreboard, 63);
    CHECK(big.bits_per_sm == 148736);
    CHECK(percent2(*big.overhead_ratio) == "7.09%");
    auto open = area_report(m, Mechanism::Scoreboard, std::nullopt);
    CHECK_FALSE(open.bits_per_warp.has_value());
    CHECK_FALSE(open.note.empty());
}

TEST_CASE("mechanism names") {
    for (auto m : {Mechanism::ControlBits, Mechanism::Scoreboard, Mechanism::Hybrid}) CHECK(mechanism_from(mechanism_name(m)) == m);
    CHECK_THROWS_AS(mechanism_from("magic"), std::invalid_argument);
}

TEST_CASE("hazard monitor reports RAW, WAR and WAW") {
    HazardMonitor m;
    RegRef r6{OperandKind::Reg, 6};
    m.on_issue(0, 0, 0x00, {}, {r6});
    m.on_issue(0, 1, 0x10, {r6}, {});
    m.on_read(0, 1, r6, 3);
    m.on_write(0, 0, r6, 5);
    REQUIRE(m.diagnostics().size() == 1);
    CHECK(m.diagnostics()[0].kind == "raw_violation");
    CHECK(m.diagnostics()[0].pc == 0x10);

    HazardMonitor w;
    w.on_issue(1, 0, 0x00, {r6}, {});
    w.on_issue(1, 1, 0x10, {}, {r6});
    w.on_write(1, 1, r6, 3);
    REQUIRE(w.diagnostics().size() == 1);
    CHECK(w.diagnostics()[0].kind == "war_violation");

    HazardMonitor o;
    o.on_issue(2, 0, 0x00, {}, {r6});
    o.on_issue(2, 1, 0x10, {}, {r6});
    o.on_write(2, 1, r6, 3);
    o.on_write(2, 0, r6, 5);
    REQUIRE(o.diagnostics().size() == 1);
    CHECK(o.diagnostics()[0].kind == "waw_violation");

    HazardMonitor clean;
    clean.on_issue(0, 0, 0, {}, {r6});
    clean.on_issue(0, 1, 0x10, {r6}, {});
    clean.on_write(0, 0, r6, 5);
    clean.on_read(0, 1, r6, 6);
    CHECK(clean.diagnostics().empty());
}

TEST_CASE("uncovered FFMA pair: one RAW diagnostic and a stale value") {
    std::string src = ".reg R2 = 0x3f800000\n.reg R3 = 0x40000000\n.reg R4 = 0x40400000\n.reg R8 = 0x3f800000\n"
                      "[B------:R-:W-:Y0:S00] FFMA R5, R2, R3, R4 ;\n"
                      "[B------:R-:W-:Y0:S04] FADD R6, R5, R8 ;\n"
                      "[B------:R-:W-:Y0:S04] EXIT ;";
    Program p = parse_program(src);
    CHECK(has_errors(validate_program(p, LatencyTable::defaults())));
    RunResult cb = run(p, warm());
    REQUIRE(cb.ok());
    REQUIRE(cb.runtime_diagnostics.size() == 1);
    CHECK(cb.runtime_diagnostics[0].kind == "raw_violation");
    SmConfig s = warm();
    s.mechanism = Mechanism::Scoreboard;
    RunResult sb = run(p, s);
    REQUIRE(sb.ok());
    CHECK(sb.runtime_diagnostics.empty());
    CHECK(registers_json(cb) != registers_json(sb));
    // scoreboard result: R6 = (1*2+3) + 1 = 6.0
    CHECK(sb.warps[0].regs.read(OperandKind::Reg, 6)[0] == 0x40c00000u);
    CHECK(cb.warps[0].regs.read(OperandKind::Reg, 6)[0] == 0x3f800000u);
}

TEST_CASE("distance-1 consumer with stall 0 reads early") {
    std::string s1 = ".mem global 0x0 = 0x7\n" + bench::distance1_source(0, false);
    std::string s2 = ".mem global 0x0 = 0x7\n" + bench::distance1_source(2, false);
    RunResult early = run(parse_program(s1), warm());
    RunResult late = run(parse_program(s2), warm());
    REQUIRE(early.ok());
    REQUIRE(late.ok());
    CHECK_FALSE(early.runtime_diagnostics.empty());
    CHECK(late.runtime_diagnostics.empty());
    auto ce = issue_cycles(early, 0), cl = issue_cycles(late, 0);
    CHECK(ce.at(1) == ce.at(0) + 1);
    CHECK(cl.at(1) - cl.at(0) >= 32);
}

TEST_CASE("dependence example: two loads share SB3") {
    RunResult r = run(parse_program(bench::dependence_example_source()), warm());
    REQUIRE(r.ok());
    int peak = 0;
    for (const auto& e : r.events)
        if (e.stage == "counter" && e.detail.rfind("SB3=", 0) == 0) peak = std::max(peak, std::stoi(e.detail.substr(4)));
    CHECK(peak == 2);
    CHECK(r.runtime_diagnostics.empty());
}

TEST_CASE("property: counter conservation on generated programs") {
    SmConfig c;
    c.events = false;
    for (uint64_t seed = 0; seed < 60; ++seed) {
        RunResult r = run(parse_program(bench::random_program(seed)), c);
        REQUIRE(r.ok());
        CHECK(r.stats.counter_increments == r.stats.counter_decrements);
        for (const auto& w : r.warps)
            for (int v : w.counters) CHECK(v == 0);
    }
}

TEST_CASE("property: the validator catches every hazard the monitor observes") {
    SmConfig c;
    c.events = false;
    int observed = 0;
    for (uint64_t seed = 0; seed < 25; ++seed) {
        Program base = parse_program(bench::random_program(seed, 24));
        for (size_t k = 0; k < base.insts.size(); ++k) {
            std::vector<Program> variants;
            for (int sb = 0; sb < kNumCounters; ++sb)
                if (base.insts[k].ctrl.waits_on(sb)) {
                    Program m = base;
                    m.insts[k].ctrl.wait_mask &= uint8_t(~(1u << sb));
                    variants.push_back(m);
                }
            if (base.insts[k].ctrl.stall > 0) {
                Program m = base;
                m.insts[k].ctrl.stall = 0;
                variants.push_back(m);
            }
            for (const auto& m : variants) {
                RunResult r = run(m, c);
                if (r.runtime_diagnostics.empty()) continue;
                ++observed;
                CHECK(has_errors(validate_program(m, LatencyTable::defaults())));
            }
        }
    }
    CHECK(observed > 0);
}
