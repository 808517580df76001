#include "doctest.h"

#include "gpusim/bench.hpp"
#include "gpusim/isa.hpp"

using namespace gpusim;

namespace {

std::vector<std::string> error_kinds(const std::string& src) {
    std::vector<std::string> out;
    for (const auto& d : validate_program(parse_program(src), LatencyTable::defaults()))
        if (d.severity == "error") out.push_back(d.kind);
    return out;
}

}  // namespace

TEST_CASE("parse: NOP with empty control bits") {
    Program p = parse_program("[B------:R-:W-:Y0:S00] NOP ;");
    REQUIRE(p.insts.size() == 1);
    const Instruction& i = p.insts[0];
    CHECK(i.op == Opcode::NOP);
    CHECK(i.pc == 0);
    CHECK(i.ctrl == ControlBits{});
}

TEST_CASE("parse: wait mask and read barrier") {
    Program p = parse_program(".base 0x80\n[B---3--:R0:W-:Y0:S01] IADD3 R10, R2, R12, R13 ;");
    const Instruction& i = p.insts.at(0);
    CHECK(i.pc == 0x80);
    CHECK(i.op == Opcode::IADD3);
    CHECK(i.ctrl.wait_mask == (1 << 3));
    CHECK(i.ctrl.read_barrier == 0);
    CHECK(i.ctrl.write_barrier == -1);
    CHECK(i.ctrl.stall == 1);
    REQUIRE(i.dest);
    CHECK(i.dest->index == 10);
    REQUIRE(i.srcs.size() == 3);
    CHECK(i.srcs[2].index == 13);
}

TEST_CASE("parse: 64-bit global load with both barriers") {
    Program p = parse_program("[B------:R4:W3:Y0:S02] LDG.E.64 R6, [R2] ;");
    const Instruction& i = p.insts.at(0);
    CHECK(i.op == Opcode::LDG);
    CHECK(i.width == 64);
    CHECK(i.ctrl.write_barrier == 3);
    CHECK(i.ctrl.read_barrier == 4);
    CHECK(i.ctrl.stall == 2);
    REQUIRE(i.dest);
    CHECK(i.dest->count == 2);
    CHECK(address_mode(i) == AddrMode::Regular);
}

TEST_CASE("parse: pcs advance by 16 bytes") {
    Program p = parse_program(".base 0x50\nNOP ;\nNOP ;\nEXIT ;");
    REQUIRE(p.insts.size() == 3);
    CHECK(p.insts[1].pc == 0x60);
    CHECK(p.insts[2].pc == 0x70);
    CHECK(p.end_pc() == 0x80);
    CHECK(p.at(0x60) == &p.insts[1]);
    CHECK(p.at(0x64) == nullptr);
}

TEST_CASE("parse errors carry a position") {
    auto fails = [](const std::string& src) {
        try {
            parse_program(src);
        } catch (const ParseError& e) {
            return e.line;
        }
        return -1;
    };
    CHECK(fails("NOP ;\nFROB R1, R2 ;") == 2);
    CHECK(fails("MOV R256, 0x1 ;") == 1);
    CHECK(fails("MOV UR64, 0x1 ;") == 1);
    CHECK(fails("ISETP.LT P8, R1, R2 ;") == 1);
    CHECK(fails("[B-----6:R-:W-:Y0:S00] NOP ;") == 1);
    CHECK(fails("[B------:R6:W-:Y0:S00] NOP ;") == 1);
    CHECK(fails("[B------:R-:W-:Y0:S16] NOP ;") == 1);
    CHECK(fails("LDG.E.64 R7, [R2] ;") == 1);
    CHECK(fails("LDG.E.48 R6, [R2] ;") == 1);
    CHECK(fails("NOP ;\n\nIADD3 R1, R2 ;") == 3);
    ParseError e(4, 7, "x");
    CHECK(e.col == 7);
}

TEST_CASE("DEPBAR threshold form parses") {
    Program p = parse_program("[B------:R-:W-:Y0:S01] DEPBAR.LE SB1, 0x3 ;\nEXIT ;");
    const Instruction& i = p.insts.at(0);
    CHECK(i.op == Opcode::DEPBAR);
    REQUIRE(i.depbar);
    CHECK(i.depbar->counter == 1);
    CHECK(i.depbar->threshold == 3);
    CHECK_THROWS_AS(parse_program("DEPBAR.LE SB1, 0x40 ;"), ParseError);
}

TEST_CASE("encode round-trips canonical programs") {
    std::vector<std::string> srcs = {bench::dependence_example_source(),
                                     bench::rf_conflict_source("R17", "R19", true),
                                     bench::fig2_source('b'),
                                     bench::const_cache_source(true, true),
                                     bench::mem_issue_source(12),
                                     "[B------:R-:W-:Y0:S01] DEPBAR.LE SB1, 0x3, {2,4} ;\nEXIT ;"};
    for (const auto& s : bench::rfc_listing_sources()) srcs.push_back(s);
    for (const auto& p : bench::latency_probes()) {
        srcs.push_back(p.war_source);
        if (!p.raw_source.empty()) srcs.push_back(p.raw_source);
    }
    for (const auto& s : srcs) {
        Program a = parse_program(s);
        std::string text = encode_program(a);
        Program b = parse_program(text);
        CHECK(a == b);
        CHECK(encode_program(b) == text);
    }
}

TEST_CASE("encode round-trip property over generated programs") {
    for (uint64_t seed = 0; seed < 100; ++seed) {
        Program a = parse_program(bench::random_program(seed));
        Program b = parse_program(encode_program(a));
        REQUIRE(a == b);
    }
}

TEST_CASE("empty program encodes and parses back") {
    Program empty;
    Program back = parse_program(encode_program(empty));
    CHECK(back.insts.empty());
    CHECK(back == empty);
}

TEST_CASE("bank mapping is parity") {
    CHECK(bank_of(18) == 0);
    CHECK(bank_of(19) == 1);
    CHECK(bank_of(0) == 0);
    for (int r = 0; r < kNumRegs; r += 2) {
        CHECK(bank_of(r) != bank_of(r + 1));
        CHECK(bank_of(r) >= 0);
        CHECK(bank_of(r + 1) <= 1);
    }
}

TEST_CASE("latency lookups") {
    LatencyTable t = LatencyTable::defaults();
    auto lat = [&](const std::string& src) { return lookup_latency(t, parse_program(src).insts.at(0)); };
    Latency ldg = lat("LDG.E R8, [R2] ;");
    CHECK_FALSE(ldg.fixed);
    CHECK(ldg.war == 11);
    CHECK(ldg.raw == 32);
    Latency sts = lat("STS.128 [UR4], R8 ;");
    CHECK(sts.war == 16);
    CHECK_FALSE(sts.raw.has_value());
    Latency cp = lat("LDGSTS.E.128 [R3], [R2] ;");
    CHECK(cp.war == 13);
    CHECK(cp.raw == 39);
    Latency ldc = lat("LDC R8, c[0x0][0x10] ;");
    CHECK(ldc.war == 10);
    CHECK(ldc.raw == 26);
    Latency ffma = lat("FFMA R1, R2, R3, R4 ;");
    CHECK(ffma.fixed);
    CHECK(ffma.fixed_latency == 4);
    CHECK(lat("NOP ;").fixed_latency == 1);
}

TEST_CASE("default latency table structure") {
    LatencyTable t = LatencyTable::defaults();
    CHECK_NOTHROW(t.check_complete());
    CHECK(t.memory.size() == 30);
    for (const auto& [k, v] : t.memory) {
        bool load = op_info(k.op).is_load;
        if (load) {
            REQUIRE(v.raw.has_value());
            CHECK(v.war <= *v.raw);
            for (const auto& [k2, v2] : t.memory)
                if (k2.op == k.op && k2.addr == k.addr) CHECK(v2.war == v.war);
        } else {
            CHECK_FALSE(v.raw.has_value());
        }
    }
    LatencyTable back = LatencyTable::from_ini(t.to_ini());
    CHECK(back.fixed == t.fixed);
    CHECK(back.to_ini() == t.to_ini());
}

TEST_CASE("latency table file overlays the defaults") {
    std::string ini = "[fixed]\nFFMA = 5\n[memory]\n";
    ini += "LDG.32.regular = 12 33\n";
    LatencyTable t = LatencyTable::from_ini(ini);
    CHECK(t.fixed.at(Opcode::FFMA) == 5);
    CHECK(t.fixed.at(Opcode::FADD) == 4);
    auto& row = t.memory.at(MemKey{Opcode::LDG, 32, AddrMode::Regular});
    CHECK(row.war == 12);
    CHECK(row.raw == 33);
    CHECK(t.memory.at(MemKey{Opcode::LDG, 64, AddrMode::Regular}).raw == 34);
    CHECK_THROWS(LatencyTable::from_ini("[memory]\nLDX.32.regular = 1 2\n"));
    CHECK_THROWS(LatencyTable::from_ini("[fixed]\nLDG = 4\n"));
}

TEST_CASE("validate: fixed-latency producer covered by stall 4") {
    std::string covered = "[B------:R-:W-:Y0:S04] FFMA R5, R1, R2, R3 ;\n[B------:R-:W-:Y0:S01] FADD R6, R5, R1 ;\nEXIT ;";
    CHECK(error_kinds(covered).empty());
    std::string bare = "[B------:R-:W-:Y0:S00] FFMA R5, R1, R2, R3 ;\n[B------:R-:W-:Y0:S01] FADD R6, R5, R1 ;\nEXIT ;";
    CHECK(error_kinds(bare) == std::vector<std::string>{"raw_uncovered"});
    std::string spread = "[B------:R-:W-:Y0:S02] FFMA R5, R1, R2, R3 ;\n[B------:R-:W-:Y0:S02] NOP ;\n"
                         "[B------:R-:W-:Y0:S01] FADD R6, R5, R1 ;\nEXIT ;";
    CHECK(error_kinds(spread).empty());
}

TEST_CASE("validate: variable-latency producer needs a wait bit") {
    std::string ok = "[B------:R-:W3:Y0:S02] LDG.E R6, [R2] ;\n[B---3--:R-:W-:Y0:S01] IADD3 R8, R6, RZ, RZ ;\nEXIT ;";
    CHECK(error_kinds(ok).empty());
    std::string unguarded = "[B------:R-:W3:Y0:S02] LDG.E R6, [R2] ;\n[B------:R-:W-:Y0:S01] IADD3 R8, R6, RZ, RZ ;\nEXIT ;";
    CHECK(error_kinds(unguarded) == std::vector<std::string>{"raw_uncovered"});
    CHECK(error_kinds(bench::distance1_source(1, false)) == std::vector<std::string>{"distance1_visibility"});
    CHECK(error_kinds(bench::distance1_source(2, false)).empty());
    CHECK(error_kinds(bench::distance1_source(1, true)).empty());
}

TEST_CASE("validate: back-to-back CLOCK is rejected") {
    CHECK(error_kinds("CLOCK R2 ;\nCLOCK R4 ;\nEXIT ;") == std::vector<std::string>{"clock_back_to_back"});
}

TEST_CASE("validate: built-in programs are clean") {
    std::vector<std::string> srcs = {bench::dependence_example_source(), bench::fig2_source('a'), bench::fig2_source('b'),
                                     bench::fig2_source('c'), bench::mem_issue_source(10),
                                     "[B------:R-:W-:Y0:S01] DEPBAR.LE SB1, 0x3 ;\nEXIT ;"};
    for (const char* x : {"R17", "R18"})
        for (const char* y : {"R19", "R20"}) srcs.push_back(bench::rf_conflict_source(x, y, true));
    for (const auto& s : bench::rfc_listing_sources()) srcs.push_back(s);
    for (const auto& p : bench::latency_probes()) {
        srcs.push_back(p.war_source);
        if (!p.raw_source.empty()) srcs.push_back(p.raw_source);
    }
    for (const auto& s : srcs) CHECK(error_kinds(s).empty());
}

TEST_CASE("validate: removing a single protection from the dependence example is rejected") {
    Program base = parse_program(bench::dependence_example_source());
    REQUIRE(error_kinds(bench::dependence_example_source()).empty());
    for (size_t k = 0; k < base.insts.size(); ++k) {
        for (int sb = 0; sb < kNumCounters; ++sb) {
            if (!base.insts[k].ctrl.waits_on(sb)) continue;
            Program m = base;
            m.insts[k].ctrl.wait_mask &= uint8_t(~(1u << sb));
            CHECK(has_errors(validate_program(m, LatencyTable::defaults())));
        }
    }
    Program m = base;
    m.insts[2].ctrl.stall = 0;
    auto d = validate_program(m, LatencyTable::defaults());
    int errors = 0;
    for (const auto& x : d) errors += x.severity == "error";
    CHECK(errors == 1);
}

TEST_CASE("validate: shared counters are flagged but allowed") {
    auto d = validate_program(parse_program("[B------:R2:W2:Y0:S02] LDG.E R6, [R2] ;\n[B--2---:R-:W-:Y0:S01] EXIT ;"),
                              LatencyTable::defaults());
    bool warned = false;
    for (const auto& x : d) warned |= x.kind == "shared_counter" && x.severity == "warning";
    CHECK(warned);
    CHECK_FALSE(has_errors(d));
}

TEST_CASE("read and write register sets") {
    Instruction i = parse_program("LDG.E.64 R6, [R2+0x10] ;").insts.at(0);
    auto w = regs_written(i);
    REQUIRE(w.size() == 2);
    CHECK(w[0] == RegRef{OperandKind::Reg, 6});
    CHECK(w[1] == RegRef{OperandKind::Reg, 7});
    auto r = regs_read(i);
    REQUIRE(r.size() == 1);
    CHECK(reg_name(r[0]) == "R2");
    Instruction z = parse_program("IADD3 RZ, RZ, R1, RZ ;").insts.at(0);
    CHECK(regs_written(z).empty());
    CHECK(regs_read(z).size() == 1);
}
