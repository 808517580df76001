#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "gpusim/bench.hpp"
#include "gpusim/sim.hpp"

using nlohmann::json;
using namespace gpusim;

namespace {

struct Outcome {
    bool pass = true;
    std::vector<std::string> failures;
    json record = json::object();

    void expect(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            failures.push_back(what);
        }
    }
    template <class A, class B>
    void equal(const A& want, const B& got, const std::string& what) {
        if (!(want == got)) {
            pass = false;
            std::ostringstream os;
            os << what << ": want " << want << " got " << got;
            failures.push_back(os.str());
        }
    }
};

SmConfig warm_config() {
    SmConfig c;
    c.frontend.warm = true;
    return c;
}

RunResult simulate(Outcome& o, const std::string& label, const std::string& src, const SmConfig& cfg) {
    RunResult r = run(parse_program(src), cfg);
    o.record[label] = to_json(r);
    o.expect(!r.fault, label + " faulted: " + r.fault.value_or(""));
    return r;
}

std::string runs_of(const RunResult& r) { return bench::runs_text(bench::runs(bench::issue_order(r, 0))); }

// 1: register-file read conflicts
Outcome rf_trio() {
    Outcome o;
    struct Case {
        const char* x;
        const char* y;
        int64_t with_nop;
        int64_t without_nop;
    };
    const Case cases[] = {{"R17", "R19", 5, 4}, {"R18", "R19", 6, 4}, {"R18", "R20", 7, 4}};
    for (const auto& c : cases) {
        for (bool nop : {true, false}) {
            std::string id = std::string(c.x) + "," + c.y + (nop ? "" : " no-nop");
            auto r = simulate(o, id, bench::rf_conflict_source(c.x, c.y, nop), warm_config());
            o.equal(nop ? c.with_nop : c.without_nop, measure_clock_delta(r), id + " clock delta");
        }
    }
    return o;
}

// 2: issue cycles of consecutive memory instructions
Outcome mem_table() {
    Outcome o;
    const std::map<int, std::vector<std::vector<Cycle>>> cells = {
        {1, {{2}, {3}, {4}, {5}, {6}, {13}, {17}, {21}}},
        {2, {{2, 2}, {3, 3}, {4, 4}, {5, 5}, {6, 6}, {13, 15}, {17, 19}, {21, 23}}},
        {3, {{2, 2, 2}, {3, 3, 3}, {4, 4, 4}, {5, 5, 5}, {6, 6, 6}, {13, 15, 17}, {19, 21, 23}, {25, 27, 29}}},
        {4, {{2, 2, 2, 2}, {3, 3, 3, 3}, {4, 4, 4, 4}, {5, 5, 5, 5}, {6, 6, 6, 6}, {13, 15, 17, 19}, {21, 23, 25, 27}, {29, 31, 33, 35}}},
    };
    const std::map<int, Cycle> step = {{1, 4}, {2, 4}, {3, 6}, {4, 8}};
    const int through = 16;
    for (const auto& [n, col] : cells) {
        SmConfig cfg = warm_config();
        cfg.warps = n;
        auto r = simulate(o, std::to_string(n) + " sub-cores", bench::mem_issue_source(through), cfg);
        std::vector<std::vector<Cycle>> rows(through);
        for (int w = 0; w < n; ++w) {
            auto c = issue_cycles(r, w);
            o.equal(size_t(through + 1), c.size(), "instructions issued by warp " + std::to_string(w));
            for (int i = 0; i < through && i < int(c.size()); ++i) rows[i].push_back(c[i]);
        }
        for (auto& row : rows) std::sort(row.begin(), row.end());
        for (int i = 0; i < through; ++i) {
            std::vector<Cycle> want = i < int(col.size()) ? col[i] : rows[i - 1];
            if (i >= int(col.size()))
                for (auto& v : want) v += step.at(n);
            o.expect(rows[i] == want, std::to_string(n) + " sub-cores instr " + std::to_string(i + 1));
        }
    }
    // single sub-core, ten loads
    const std::vector<Cycle> ten = {2, 3, 4, 5, 6, 13, 17, 21, 25, 29};
    auto r = simulate(o, "ten loads", bench::mem_issue_source(10), warm_config());
    auto c10 = issue_cycles(r, 0);
    c10.resize(std::min(c10.size(), ten.size()));
    o.expect(c10 == ten, "ten loads issue cycles");
    return o;
}

// 3: memory latency contract (WAR and RAW per row)
Outcome latency_contract() {
    Outcome o;
    struct Row {
        const char* label;
        int war;
        int raw;  // -1 for stores
    };
    const Row rows[] = {
        {"LDG.32.uniform", 9, 29},    {"LDG.64.uniform", 9, 31},    {"LDG.128.uniform", 9, 35},
        {"LDG.32.regular", 11, 32},   {"LDG.64.regular", 11, 34},   {"LDG.128.regular", 11, 38},
        {"STG.32.uniform", 10, -1},   {"STG.64.uniform", 12, -1},   {"STG.128.uniform", 16, -1},
        {"STG.32.regular", 14, -1},   {"STG.64.regular", 16, -1},   {"STG.128.regular", 20, -1},
        {"LDS.32.uniform", 9, 23},    {"LDS.64.uniform", 9, 23},    {"LDS.128.uniform", 9, 25},
        {"LDS.32.regular", 9, 24},    {"LDS.64.regular", 9, 24},    {"LDS.128.regular", 9, 26},
        {"STS.32.uniform", 10, -1},   {"STS.64.uniform", 12, -1},   {"STS.128.uniform", 16, -1},
        {"STS.32.regular", 12, -1},   {"STS.64.regular", 14, -1},   {"STS.128.regular", 18, -1},
        {"LDC.32.immediate", 10, 26}, {"LDC.32.regular", 29, 29},   {"LDC.64.regular", 29, 29},
        {"LDGSTS.32.regular", 13, 39}, {"LDGSTS.64.regular", 13, 39}, {"LDGSTS.128.regular", 13, 39},
    };
    auto probes = bench::latency_probes();
    for (const auto& row : rows) {
        auto it = std::find_if(probes.begin(), probes.end(), [&](const auto& p) { return p.label == row.label; });
        if (it == probes.end()) {
            o.expect(false, std::string(row.label) + " has no probe");
            continue;
        }
        auto rw = simulate(o, std::string(row.label) + " WAR", it->war_source, warm_config());
        o.equal(int64_t(row.war), bench::probe_delta(rw), std::string(row.label) + " WAR");
        if (row.raw >= 0) {
            auto rr = simulate(o, std::string(row.label) + " RAW", it->raw_source, warm_config());
            o.equal(int64_t(row.raw), bench::probe_delta(rr), std::string(row.label) + " RAW");
        }
    }
    return o;
}

// 4: greedy-then-youngest issue timelines
Outcome cggty() {
    Outcome o;
    SmConfig four = warm_config();
    four.subcores = 1;
    four.warps = 4;
    const std::map<char, std::string> warm_runs = {
        {'a', "W3x33 W2x33 W1x33 W0x33"},
        {'b', "W3x2 W2x2 W1x2 W3x31 W2x31 W1x31 W0x33"},
        {'c', "W3x2 W2x2 W3x31 W2x31 W1x2 W0x2 W1x31 W0x31"},
    };
    for (const auto& [v, want] : warm_runs) {
        auto r = simulate(o, std::string(1, v) + " warm", bench::fig2_source(v), four);
        o.equal(want, runs_of(r), std::string(1, v) + " warm order");
    }

    SmConfig cold = four;
    cold.frontend.warm = false;
    cold.frontend.depth = 2;
    auto rc = simulate(o, "a cold", bench::fig2_source('a'), cold);
    auto rs = bench::runs(bench::issue_order(rc, 0));
    bool pattern = rs.size() == 5 && rs[0].first == 3 && rs[0].second > 0 && rs[0].second < 33 &&
                   rs[1] == std::pair<int, int>{2, 33} && rs[2].first == 3 && rs[0].second + rs[2].second == 33 &&
                   rs[3] == std::pair<int, int>{1, 33} && rs[4] == std::pair<int, int>{0, 33};
    o.expect(pattern, "a cold order W3xk W2x33 W3x(33-k) W1x33 W0x33, got " + bench::runs_text(rs));

    SmConfig alone = warm_config();
    alone.subcores = 1;
    alone.warps = 1;
    const std::map<char, int> bubbles = {{'b', 4}, {'c', 1}};
    for (const auto& [v, want] : bubbles) {
        auto r = simulate(o, std::string(1, v) + " alone", bench::fig2_source(v), alone);
        auto c = issue_cycles(r, 0);
        o.equal(int64_t(want), int64_t(c.at(2) - c.at(1) - 1), std::string(1, v) + " bubbles alone");
    }
    return o;
}

// 5: register file cache reuse and allocate holds
Outcome rfc() {
    Outcome o;
    struct Step {
        int inst;
        const char* reg;
        int pos;
        const char* outcome;
    };
    const std::vector<std::vector<Step>> examples = {
        {{0, "R2", 1, "miss"}, {1, "R2", 1, "hit"}, {2, "R2", 1, "miss"}},
        {{0, "R2", 1, "miss"}, {1, "R2", 1, "hit"}, {2, "R2", 1, "hit"}},
        {{0, "R2", 1, "miss"}, {1, "R2", 2, "miss"}, {2, "R2", 1, "hit"}},
        {{0, "R2", 1, "miss"}, {1, "R4", 1, "miss"}, {2, "R2", 1, "miss"}},
    };
    auto srcs = bench::rfc_listing_sources();
    o.equal(examples.size(), srcs.size(), "example count");
    for (size_t k = 0; k < examples.size() && k < srcs.size(); ++k) {
        auto r = simulate(o, "example " + std::to_string(k + 1), srcs[k], warm_config());
        auto outs = bench::rfc_outcomes(r);
        for (const auto& s : examples[k]) {
            std::string got = "absent";
            for (const auto& x : outs)
                if (x.pc == uint32_t(s.inst) * kInstBytes && x.reg == s.reg && x.position == s.pos) got = x.hit ? "hit" : "miss";
            o.equal(std::string(s.outcome), got,
                    "example " + std::to_string(k + 1) + " inst " + std::to_string(s.inst) + " " + s.reg);
        }
    }
    const std::pair<const char*, int64_t> holds[] = {{"FMUL R1, R2, R4", 1}, {"FMUL R1, R2, R5", 0}, {"FFMA R1, R2, R4, R6", 2}};
    for (const auto& [inst, want] : holds) {
        auto r = simulate(o, inst, bench::pair_source(inst), warm_config());
        o.equal(want, r.stats.allocate_hold_cycles, std::string(inst) + " holds");
    }
    return o;
}

// 6: dependence counters
Outcome dep_counters() {
    Outcome o;
    auto r = simulate(o, "example", bench::dependence_example_source(), warm_config());
    Cycle iadd = -1, write70 = -1, sb3_second_dec = -1, war70 = -1;
    int sb3_decs = 0;
    long iadd_pos = -1, dec_pos = -1, pos = -1;
    std::map<int, int> last;
    for (const auto& e : r.events) {
        ++pos;
        if (e.stage == "issue" && e.pc == 0x80) iadd = e.cycle, iadd_pos = pos;
        if (e.stage == "write" && e.pc == 0x70 && write70 < 0) write70 = e.cycle;
        if (e.stage != "counter") continue;
        auto eq = e.detail.find('=');
        int sb = std::stoi(e.detail.substr(2, eq - 2)), v = std::stoi(e.detail.substr(eq + 1));
        bool dec = v < last[sb];
        last[sb] = v;
        if (sb == 3 && dec && ++sb3_decs == 2) sb3_second_dec = e.cycle, dec_pos = pos;
        if (sb == 0 && dec && e.pc == 0x70 && war70 < 0) war70 = e.cycle;
    }
    o.equal(2, sb3_decs, "SB3 decrements");
    o.expect(iadd_pos >= 0 && dec_pos >= 0 && iadd_pos > dec_pos && iadd >= sb3_second_dec,
             "IADD3 issues after both SB3 decrements");
    o.expect(war70 >= 0 && write70 >= 0 && war70 < write70, "0x70 WAR release precedes its write-back");
    o.equal(size_t(0), r.diagnostics.size() + r.runtime_diagnostics.size(), "example diagnostics");
    o.record["iadd3_issue"] = iadd;
    o.record["sb3_second_decrement"] = sb3_second_dec;
    o.record["war_release_0x70"] = war70;
    o.record["write_0x70"] = write70;

    auto kinds = [](const std::string& src) {
        std::vector<std::string> k;
        for (const auto& d : validate_program(parse_program(src), LatencyTable::defaults()))
            if (d.severity == "error") k.push_back(d.kind);
        return k;
    };
    auto d1 = kinds(bench::distance1_source(1, false));
    auto d0 = kinds(bench::distance1_source(0, false));
    o.expect(d1 == std::vector<std::string>{"distance1_visibility"}, "stall 1 distance-1 diagnostic");
    o.expect(d0 == std::vector<std::string>{"distance1_visibility"}, "stall 0 distance-1 diagnostic");
    o.expect(kinds(bench::distance1_source(2, false)).empty(), "stall 2 distance-1 clean");
    o.expect(kinds(bench::distance1_source(1, true)).empty(), "yield distance-1 clean");
    o.record["distance1_stall1"] = d1;
    return o;
}

// 7: storage cost
Outcome area() {
    Outcome o;
    const int64_t rf_bits = 262144 * 8;
    struct Case {
        Mechanism m;
        int warps;
        int64_t per_warp;
        int64_t per_sm;
        const char* pct;
    };
    const Case cases[] = {{Mechanism::ControlBits, 48, 41, 1968, "0.09%"},
                          {Mechanism::Scoreboard, 48, 2324, 111552, "5.32%"},
                          {Mechanism::Scoreboard, 64, 2324, 148736, "7.09%"}};
    for (const auto& c : cases) {
        AreaModel m;
        m.warps = c.warps;
        m.rf_bytes = 262144;
        auto a = area_report(m, c.m, 63);
        std::string id = mechanism_name(c.m) + "@" + std::to_string(c.warps);
        o.equal(c.per_warp, a.bits_per_warp.value_or(-1), id + " bits/warp");
        o.equal(c.per_sm, a.bits_per_sm.value_or(-1), id + " bits/SM");
        o.equal(std::string(c.pct), a.overhead_ratio ? percent2(*a.overhead_ratio) : "n/a", id + " overhead");
        o.equal(c.per_warp * c.warps, c.per_sm, id + " product");
        char buf[16];
        std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * double(c.per_sm) / double(rf_bits));
        o.equal(std::string(c.pct), std::string(buf), id + " ratio arithmetic");
        o.record[id] = {{"bits_per_warp", a.bits_per_warp.value_or(-1)}, {"bits_per_sm", a.bits_per_sm.value_or(-1)}};
    }
    return o;
}

// 8: control bits and scoreboard agree on hazard-correct programs
Outcome equivalence() {
    Outcome o;
    SmConfig cb;
    cb.events = false;
    SmConfig sb = cb;
    sb.mechanism = Mechanism::Scoreboard;
    int mismatches = 0, diagnostics = 0, faults = 0, invalid = 0;
    json per = json::array();
    for (uint64_t seed = 0; seed < 200; ++seed) {
        Program p = parse_program(bench::random_program(seed));
        invalid += has_errors(validate_program(p, LatencyTable::defaults()));
        RunResult a = run(p, cb), b = run(p, sb);
        faults += a.fault.has_value() + b.fault.has_value();
        diagnostics += int(a.runtime_diagnostics.size() + b.runtime_diagnostics.size());
        bool same = registers_json(a) == registers_json(b) && a.global_mem == b.global_mem && a.shared_mem == b.shared_mem;
        mismatches += !same;
        if (!same) o.failures.push_back("seed " + std::to_string(seed) + " final state differs");
        per.push_back({{"seed", seed}, {"control_bits", to_json(a, false)}, {"scoreboard", to_json(b, false)}});
    }
    o.record["runs"] = per;
    o.equal(0, mismatches, "state mismatches");
    o.equal(0, diagnostics, "hazard-monitor diagnostics");
    o.equal(0, faults, "faults");
    o.equal(0, invalid, "programs failing validation");
    return o;
}

// 9: instruction prefetch depth ordering
Outcome prefetch() {
    Outcome o;
    SmConfig cfg;
    cfg.warps = 4;
    cfg.frontend.warm = false;
    const std::vector<std::string> depths = {"none", "1", "2", "4", "8", "16", "perfect"};
    auto rows = sweep("prefetch.depth", depths, {parse_program(bench::straightline_source(512))}, cfg, 1);
    json rec = json::object();
    for (const auto& r : rows) {
        rec[r.value] = r.stats.total_cycles;
        o.expect(!r.fault, r.value + " faulted");
    }
    o.record["cycles"] = rec;
    for (size_t k = 0; k + 2 < rows.size(); ++k)
        o.expect(rows[k + 1].stats.total_cycles <= rows[k].stats.total_cycles, "depth " + rows[k].value + " -> " + rows[k + 1].value);
    o.expect(rows.back().stats.total_cycles <= rows[rows.size() - 2].stats.total_cycles, "perfect <= depth 16");
    o.expect(rows.front().stats.total_cycles > rows.back().stats.total_cycles, "prefetching matters on this program");
    return o;
}

struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> fn;
    double budget_s;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "register-file conflict trio", rf_trio, 1.0},
        {2, "memory issue table", mem_table, 1.0},
        {3, "memory latency contract", latency_contract, 10.0},
        {4, "greedy-then-youngest timelines", cggty, 1.0},
        {5, "register file cache semantics", rfc, 0},
        {6, "dependence counter semantics", dep_counters, 0},
        {7, "area arithmetic", area, 0},
        {8, "mechanism equivalence on 200 random programs", equivalence, 60.0},
        {9, "prefetcher ordering", prefetch, 0},
    };
    int failed = 0;
    std::vector<std::string> first_dump;
    for (const auto& c : criteria) {
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.fn();
        } catch (const std::exception& e) {
            o.expect(false, std::string("exception: ") + e.what());
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.budget_s > 0 && secs >= c.budget_s) o.expect(false, "runtime budget exceeded");
        first_dump.push_back(o.record.dump());
        char t[32];
        std::snprintf(t, sizeof t, "%.3fs", secs);
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << ": " << c.name << " (" << t << ")\n";
        for (const auto& f : o.failures) std::cout << "    " << f << "\n";
        failed += !o.pass;
    }

    std::vector<std::string> drift;
    for (size_t k = 0; k < criteria.size(); ++k)
        for (int rep = 0; rep < 2; ++rep) {
            std::string again;
            try {
                again = criteria[k].fn().record.dump();
            } catch (const std::exception& e) {
                again = e.what();
            }
            if (again != first_dump[k]) drift.push_back("criterion " + std::to_string(criteria[k].id) + " repetition " + std::to_string(rep + 2));
        }
    std::cout << (drift.empty() ? "PASS" : "FAIL") << " criterion 10: byte-identical JSON across 3 repetitions\n";
    for (const auto& d : drift) std::cout << "    " << d << " differs\n";
    failed += !drift.empty();

    std::cout << (failed ? "FAILED " : "ALL PASSED ") << (10 - failed) << "/10\n";
    return failed ? 1 : 0;
}
