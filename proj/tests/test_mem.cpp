#include <map>

#include "doctest.h"

#include "gpusim/bench.hpp"
#include "gpusim/mem.hpp"
#include "gpusim/sim.hpp"

using namespace gpusim;

namespace {

SmConfig warm() {
    SmConfig c;
    c.frontend.warm = true;
    return c;
}

MemOp op_at(int sc, Cycle issue) {
    MemOp m;
    m.subcore = sc;
    m.issue = issue;
    return m;
}

std::vector<Cycle> grant_cycles(const RunResult& r) {
    std::vector<Cycle> g;
    for (const auto& e : r.events)
        if (e.stage == "grant") g.push_back(e.cycle);
    return g;
}

}  // namespace

TEST_CASE("LSU queue admits five in-flight instructions per sub-core") {
    LsuPipe p(2, MemConfig{});
    for (int k = 0; k < 5; ++k) {
        REQUIRE(p.can_accept(0));
        p.on_issue(0);
    }
    CHECK_FALSE(p.can_accept(0));
    CHECK(p.can_accept(1));
    CHECK_THROWS_AS(p.on_issue(0), SimFault);
    p.release_slot(0);
    CHECK(p.occupancy(0) == 4);
    CHECK_THROWS_AS(p.release_slot(1), SimFault);
}

TEST_CASE("AGU entry, throughput and arbiter spacing") {
    LsuPipe p(1, MemConfig{});
    int a = p.enqueue(op_at(0, 10));
    int b = p.enqueue(op_at(0, 10));
    CHECK(p.agu_phase(12).empty());
    CHECK(p.agu_phase(13) == std::vector<int>{a});
    CHECK(p.agu_phase(14).empty());
    CHECK(p.agu_phase(17) == std::vector<int>{b});
    CHECK(p.op(a).arrive == 19);
    CHECK_FALSE(p.arbiter_phase(18));
    CHECK(p.arbiter_phase(19) == a);
    CHECK(p.op(b).arrive == 23);
    CHECK_FALSE(p.arbiter_phase(22));
    CHECK(p.arbiter_phase(23) == b);
    CHECK(p.grants() == 2);
}

TEST_CASE("arbiter alternates between sub-cores") {
    LsuPipe p(2, MemConfig{});
    std::vector<int> ids;
    for (int k = 0; k < 2; ++k)
        for (int s = 0; s < 2; ++s) ids.push_back(p.enqueue(op_at(s, 0)));
    for (Cycle c = 0; c < 10; ++c) p.agu_phase(c);
    std::vector<int> order;
    for (Cycle c = 0; c < 40; ++c)
        if (auto g = p.arbiter_phase(c)) {
            order.push_back(p.op(*g).subcore);
            if (order.size() > 1) CHECK(c - p.op(ids[0]).grant >= 2);
        }
    CHECK(order == std::vector<int>{0, 1, 0, 1});
}

TEST_CASE("return path serializes wide responses") {
    LsuPipe p(1, MemConfig{});
    CHECK(p.return_path(0, 20, 32) == 20);
    CHECK(p.return_path(0, 20, 32) == 22);
    CHECK(p.return_path(0, 30, 128) == 30);
    CHECK(p.return_path(0, 30, 128) == 38);
}

TEST_CASE("constant cache lines and pending fills") {
    ConstCache c(64);
    auto k = c.key(0, 0x44);
    CHECK(k == c.key(0, 0x40));
    CHECK(k != c.key(1, 0x40));
    CHECK_FALSE(c.contains(k));
    c.start_fill(k, 90);
    CHECK(c.pending(k) == 90);
    c.insert(k);
    CHECK(c.contains(k));
    CHECK_FALSE(c.pending(k));
}

TEST_CASE("backing memory is word addressed and zero filled") {
    Memory m;
    CHECK(m.read(0x40) == 0);
    m.write(0x43, 9);
    CHECK(m.read(0x40) == 9);
    CHECK(m.words().size() == 1);
}

TEST_CASE("store then load returns the stored value") {
    std::string src = ".reg R2 = 0x100\n.reg R6 = 0x2a\n.mem global 0x100 = 0x7\n"
                      "[B------:R0:W-:Y0:S01] STG.E [R2], R6 ;\n"
                      "[B------:R-:W1:Y0:S02] LDG.E R8, [R2] ;\n"
                      "[B-1----:R-:W-:Y0:S04] IADD3 R9, R8, 0x1, RZ ;\n"
                      "[B0-----:R-:W-:Y0:S01] EXIT ;";
    Program p = parse_program(src);
    REQUIRE_FALSE(has_errors(validate_program(p, LatencyTable::defaults())));
    RunResult r = run(p, warm());
    REQUIRE(r.ok());
    CHECK(r.runtime_diagnostics.empty());
    CHECK(r.global_mem.at(0x100) == 0x2a);
    CHECK(r.warps[0].regs.read(OperandKind::Reg, 9)[0] == 0x2b);
}

TEST_CASE("property: occupancy and grant spacing under load") {
    for (int n : {1, 4, 8, 16}) {
        SmConfig c = warm();
        c.warps = 4;
        RunResult r = run(parse_program(bench::mem_issue_source(n)), c);
        REQUIRE(r.ok());
        CHECK(r.stats.max_lsu_occupancy <= 5);
        auto g = grant_cycles(r);
        CHECK(int64_t(g.size()) == r.stats.lsu_grants);
        CHECK(int(g.size()) == 4 * n);
        for (size_t k = 1; k < g.size(); ++k) CHECK(g[k] - g[k - 1] >= 2);
    }
}

TEST_CASE("the memory issue bench saturates the queue") {
    RunResult r = run(parse_program(bench::mem_issue_source(10)), warm());
    REQUIRE(r.ok());
    auto ic = issue_cycles(r, 0);
    std::vector<Cycle> rel;
    for (size_t k = 0; k < 10; ++k) rel.push_back(ic[k] - ic[0] + 2);
    CHECK(rel == std::vector<Cycle>{2, 3, 4, 5, 6, 13, 17, 21, 25, 29});
    CHECK(r.stats.max_lsu_occupancy == 5);
}

TEST_CASE("latency rows for common memory instructions") {
    const auto& t = LatencyTable::defaults();
    for (const auto& probe : bench::latency_probes()) {
        auto want = t.memory.at({probe.op, probe.width, probe.mode});
        if (!probe.raw_source.empty() && want.raw) {
            RunResult r = run(parse_program(probe.raw_source), warm());
            REQUIRE(r.ok());
            CHECK_MESSAGE(bench::probe_delta(r) == *want.raw, probe.label);
        }
        RunResult w = run(parse_program(probe.war_source), warm());
        REQUIRE(w.ok());
        CHECK_MESSAGE(bench::probe_delta(w) == want.war, probe.label);
    }
}
