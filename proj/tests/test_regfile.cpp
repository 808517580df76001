#include <map>
#include <sstream>
#include <tuple>

#include "doctest.h"

#include "gpusim/bench.hpp"
#include "gpusim/regfile.hpp"
#include "gpusim/sim.hpp"

using namespace gpusim;

namespace {

// reference cache: one entry per (bank, position)
struct RfcOracle {
    std::map<std::pair<int, int>, std::pair<int, int>> e;
    bool access(int warp, const RfcRead& r) {
        auto k = std::make_pair(r.reg % 2, r.position);
        auto it = e.find(k);
        bool h = it != e.end() && it->second == std::make_pair(warp, r.reg);
        if (r.reuse) e[k] = {warp, r.reg};
        else e.erase(k);
        return h;
    }
};

// per (subcore, cycle, bank) read-port uses from allocate events
std::map<std::tuple<int, Cycle, int>, int> port_uses(const RunResult& r) {
    std::map<std::tuple<int, Cycle, int>, int> m;
    for (const auto& e : r.events) {
        if (e.stage != "allocate") continue;
        std::istringstream in(e.detail);
        std::string tok;
        while (in >> tok) {
            int bank = std::stoi(tok.substr(1, tok.find('@') - 1));
            Cycle c = std::stoll(tok.substr(tok.find('@') + 1));
            ++m[{e.subcore, c, bank}];
        }
    }
    return m;
}

}  // namespace

TEST_CASE("register file cache reuse, hit and invalidate") {
    RegFileCache c;
    CHECK(c.access(0, {{1, 2, true}}) == std::vector<bool>{false});
    CHECK(c.hit(0, 1, 2));
    CHECK_FALSE(c.hit(1, 1, 2));
    CHECK_FALSE(c.hit(0, 2, 2));
    CHECK(c.access(0, {{1, 2, false}}) == std::vector<bool>{true});
    CHECK_FALSE(c.hit(0, 1, 2));
    c.access(0, {{1, 2, true}});
    c.access(0, {{1, 4, false}});
    CHECK_FALSE(c.hit(0, 1, 2));
    c.access(0, {{1, 3, true}});
    CHECK(c.hit(0, 1, 3));
    CHECK(c.entry(1, 1).reg == 3);
    c.access(0, {{1, kRZ, true}});
    CHECK(c.valid_entries() == 1);
}

TEST_CASE("a disabled cache never hits") {
    RegFileCache c(2, false);
    c.access(0, {{1, 2, true}});
    CHECK(c.access(0, {{1, 2, true}}) == std::vector<bool>{false});
    CHECK(c.valid_entries() == 0);
}

TEST_CASE("property: cache agrees with a reference model and holds at most six entries") {
    uint64_t s = 99;
    auto next = [&] {
        s = s * 6364136223846793005ull + 1442695040888963407ull;
        return int(s >> 33);
    };
    RegFileCache c;
    RfcOracle o;
    for (int k = 0; k < 5000; ++k) {
        int warp = next() % 3;
        RfcRead r{1 + next() % 3, next() % 8, next() % 2 == 0};
        bool h = c.access(warp, {r})[0];
        CHECK(h == o.access(warp, r));
        CHECK(c.valid_entries() <= 6);
        CHECK(c.valid_entries() == int(o.e.size()));
    }
}

TEST_CASE("read ports place requests in the latest free slot") {
    ReadPorts p;
    auto plan = p.plan({{1, 0}, {1, 1}, {1, 2}}, 10);
    REQUIRE(plan);
    CHECK(plan->slot == std::vector<Cycle>{12, 11, 10});
    CHECK_FALSE(p.plan({{1, 0}, {1, 1}, {1, 2}, {1, 3}}, 10));
    p.commit({{1, 0}, {1, 1}}, *p.plan({{1, 0}, {1, 1}}, 10));
    CHECK(p.used(1, 12) == 1);
    CHECK(p.used(1, 11) == 1);
    auto other = p.plan({{0, 0}, {1, 1}}, 10);
    REQUIRE(other);
    CHECK(other->slot == std::vector<Cycle>{12, 10});
    CHECK_FALSE(p.plan({{1, 0}, {1, 1}}, 10));
    CHECK(p.plan({{1, 0}, {1, 1}}, 12));
    p.retire_before(12);
    CHECK(p.used(1, 11) == 0);
    CHECK(p.used(1, 12) == 1);
}

TEST_CASE("two ports per bank double the per-cycle budget") {
    ReadPorts p(2, 2, 3);
    auto plan = p.plan({{0, 0}, {0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}}, 0);
    REQUIRE(plan);
    CHECK(plan->slot == std::vector<Cycle>{2, 2, 1, 1, 0, 0});
}

TEST_CASE("write ports flag fixed conflicts and shift loads") {
    WritePorts w;
    CHECK_FALSE(w.fixed_write(0, 5));
    CHECK(w.fixed_write(0, 5));
    CHECK_FALSE(w.fixed_write(1, 5));
    CHECK(w.load_write({0}, 5) == 6);
    CHECK(w.load_write({0, 1}, 5) == 7);
    CHECK(w.load_write({1}, 8) == 8);
    CHECK(w.writes(0, 5) == 2);
    w.retire_before(7);
    CHECK(w.writes(0, 5) == 0);
    CHECK(w.writes(1, 7) == 1);
}

TEST_CASE("warp registers: zero registers, ranges, masks, uniform replication") {
    WarpRegisters r;
    LaneVec v;
    for (int l = 0; l < kWarpSize; ++l) v[l] = uint32_t(l + 1);
    r.write(OperandKind::Reg, 4, v, 0x0000ffffu);
    auto back = r.read(OperandKind::Reg, 4);
    CHECK(back[0] == 1);
    CHECK(back[15] == 16);
    CHECK(back[16] == 0);
    r.write(OperandKind::Reg, kRZ, v);
    CHECK(r.read(OperandKind::Reg, kRZ)[3] == 0);
    CHECK_THROWS_AS(r.read(OperandKind::Reg, kNumRegs), SimFault);
    CHECK_THROWS_AS(r.write(OperandKind::UReg, -1, v), SimFault);
    r.write(OperandKind::UReg, 5, v, 0xfffffff0u);
    auto u = r.read(OperandKind::UReg, 5);
    for (auto x : u) CHECK(x == 5);
    r.set_pred(2, false, 0xf0f0f0f0u, 0x000000ffu);
    CHECK(r.pred_mask(2, false) == 0x000000f0u);
    CHECK(r.pred_mask(kPT, false) == 0xffffffffu);
    r.set_pred(1, true, 0x1u);
    CHECK(r.pred_mask(1, true) == 0xffffffffu);
    CHECK_THROWS_AS(r.pred_mask(8, false), SimFault);
}

TEST_CASE("bank conflicts from the read-port probe") {
    SmConfig c;
    c.frontend.warm = true;
    auto delta = [&](const char* x, const char* y, const SmConfig& k) {
        RunResult r = run(parse_program(bench::rf_conflict_source(x, y, true)), k);
        REQUIRE(r.ok());
        return measure_clock_delta(r);
    };
    CHECK(delta("R19", "R21", c) == 5);
    CHECK(delta("R18", "R21", c) == 6);
    CHECK(delta("R18", "R20", c) == 7);
    SmConfig wide = c;
    wide.read_ports_per_bank = 2;
    CHECK(delta("R18", "R20", wide) == 5);
}

TEST_CASE("property: the cache and extra ports never add holds") {
    SmConfig base;
    base.events = true;
    base.warps = 4;
    for (uint64_t seed = 0; seed < 15; ++seed) {
        Program p = parse_program(bench::random_program(seed));
        SmConfig off = base, on = base, one = base, two = base;
        off.rfc = false;
        one.rfc = false;
        two.rfc = false;
        two.read_ports_per_bank = 2;
        RunResult a = run(p, off), b = run(p, on), x = run(p, one), y = run(p, two);
        REQUIRE(a.ok());
        REQUIRE(b.ok());
        REQUIRE(y.ok());
        CHECK(b.stats.allocate_hold_cycles <= a.stats.allocate_hold_cycles);
        CHECK(y.stats.allocate_hold_cycles <= x.stats.allocate_hold_cycles);
        CHECK(registers_json(a) == registers_json(b));
        CHECK(registers_json(x) == registers_json(y));
        for (const auto& [k, n] : port_uses(b)) CHECK(n <= 1);
        for (const auto& [k, n] : port_uses(y)) CHECK(n <= 2);
    }
}
