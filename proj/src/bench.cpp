#include "gpusim/bench.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#ifndef GPUSIM_DATA_DIR
#define GPUSIM_DATA_DIR "data"
#endif

namespace gpusim::bench {

namespace {

std::string ctrl(const std::string& mask, const std::string& rb, const std::string& wb, bool yield, int stall) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "[B%s:R%s:W%s:Y%d:S%02d] ", mask.c_str(), rb.c_str(), wb.c_str(), yield ? 1 : 0,
                  stall);
    return buf;
}

std::string plain(int stall = 0, bool yield = false) { return ctrl("------", "-", "-", yield, stall); }

std::string line(const std::string& prefix, const std::string& body) { return prefix + body + " ;\n"; }

std::string exit_line() { return line(plain(), "EXIT"); }

std::string width_suffix(int w) { return w == 32 ? "" : "." + std::to_string(w); }

std::string mask_of(int sb) {
    std::string m = "------";
    m[sb] = char('0' + sb);
    return m;
}

std::string hexs(uint32_t v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%x", v);
    return buf;
}

const char* mode_text(AddrMode m) {
    switch (m) {
        case AddrMode::Uniform: return "uniform";
        case AddrMode::Regular: return "regular";
        default: return "immediate";
    }
}

}  // namespace

// ---- program builders ----

std::string rf_conflict_source(const std::string& x, const std::string& y, bool trailing_nop) {
    std::string s;
    s += line(plain(), "CLOCK R2");
    s += line(plain(), "NOP");
    s += line(plain(), "FFMA R11, R10, R12, R14");
    s += line(plain(), "FFMA R13, R16, " + x + ", " + y);
    if (trailing_nop) s += line(plain(), "NOP");
    s += line(plain(), "CLOCK R4");
    s += exit_line();
    return s;
}

std::string mem_issue_source(int n) {
    if (n < 1 || n > 200) throw std::invalid_argument("mem_issue_source: 1..200 loads");
    std::string s;
    for (int i = 0; i < n; ++i) s += line(plain(), "LDG.E R" + std::to_string(4 + i) + ", [R2]");
    s += exit_line();
    return s;
}

std::vector<LatencyProbe> latency_probes() {
    std::vector<LatencyProbe> out;
    for (const auto& [key, lat] : LatencyTable::defaults().memory) {
        LatencyProbe p{key.op, key.width, key.addr, "", "", ""};
        std::string w = width_suffix(key.width);
        std::string addr = key.addr == AddrMode::Uniform ? "[UR4]" : "[R2]";
        std::string overwrite = key.addr == AddrMode::Uniform ? "MOV UR4, 0x0" : "MOV R2, 0x0";
        std::string producer;
        bool store = false;
        switch (key.op) {
            case Opcode::LDG: producer = "LDG.E" + w + " R8, " + addr; break;
            case Opcode::LDS: producer = "LDS" + w + " R8, " + addr; break;
            case Opcode::STG: producer = "STG.E" + w + " " + addr + ", R8"; store = true; break;
            case Opcode::STS: producer = "STS" + w + " " + addr + ", R8"; store = true; break;
            case Opcode::LDC:
                producer = "LDC" + w + " R8, " + std::string(key.addr == AddrMode::Immediate ? "c[0x0][0x10]" : "c[0x0][R2+0x10]");
                if (key.addr == AddrMode::Immediate) overwrite = "MOV R20, 0x0";
                break;
            case Opcode::LDGSTS: producer = "LDGSTS.E" + w + " [R3], [R2]"; break;
            default: continue;
        }
        std::string consumer = key.op == Opcode::LDGSTS ? "LDS R20, [R3]" : "IADD3 R20, R8, RZ, RZ";
        std::string head = line(ctrl("------", "0", store ? "-" : "1", false, 2), producer);
        if (!store) p.raw_source = head + line(ctrl(mask_of(1), "-", "-", false, 0), consumer) + exit_line();
        p.war_source = head + line(ctrl(mask_of(0), "-", "-", false, 0), overwrite) + exit_line();
        p.label = std::string(op_info(key.op).mnemonic) + "." + std::to_string(key.width) + "." + mode_text(key.addr);
        (void)lat;
        out.push_back(p);
    }
    return out;
}

int64_t probe_delta(const RunResult& r) {
    auto c = issue_cycles(r, 0);
    if (c.size() < 2) throw std::runtime_error("probe issued fewer than two instructions");
    return c[1] - c[0];
}

std::string fig2_source(char variant, int length) {
    std::string s;
    for (int k = 0; k < length; ++k) {
        int stall = variant == 'b' && k == 1 ? 4 : 0;
        bool yield = variant == 'c' && k == 1;
        s += line(plain(stall, yield), "FADD R" + std::to_string(8 + k % 64) + ", R1, R2");
    }
    s += exit_line();
    return s;
}

std::vector<std::string> rfc_listing_sources() {
    const char* ex[4][3] = {
        {"IADD3 R1, R2.reuse, R3, R4", "FFMA R5, R2, R7, R8", "IADD3 R10, R2, R12, R13"},
        {"IADD3 R1, R2.reuse, R3, R4", "FFMA R5, R2.reuse, R7, R8", "IADD3 R10, R2, R12, R13"},
        {"IADD3 R1, R2.reuse, R3, R4", "FFMA R5, R7, R2, R8", "IADD3 R10, R2, R12, R13"},
        {"IADD3 R1, R2.reuse, R3, R4", "FFMA R5, R4, R7, R8", "IADD3 R10, R2, R12, R13"},
    };
    std::vector<std::string> out;
    for (auto& e : ex) {
        std::string s;
        for (auto* i : e) s += line(plain(), i);
        s += exit_line();
        out.push_back(s);
    }
    return out;
}

std::string pair_source(const std::string& inst) { return line(plain(), inst) + line(plain(), inst) + exit_line(); }

std::string dependence_example_source() {
    return ".base 0x50\n" + line(ctrl("------", "-", "3", false, 1), "LDG.E R10, [R4]") +
           line(ctrl("------", "0", "3", false, 1), "LDG.E R12, [R2]") +
           line(ctrl("------", "0", "4", false, 2), "LDG.E.64 R6, [R2]") +
           line(ctrl("0--3--", "-", "-", false, 1), "IADD3 R2, R10, R12, RZ") + exit_line();
}

std::string distance1_source(int producer_stall, bool producer_yield) {
    return line(ctrl("------", "-", "3", producer_yield, producer_stall), "LDG.E R6, [R2]") +
           line(ctrl(mask_of(3), "-", "-", false, 0), "IADD3 R8, R6, RZ, RZ") + exit_line();
}

std::string const_cache_source(bool constant_operand, bool second_use) {
    std::string src = constant_operand ? "c[0x0][0x40]" : "R6";
    std::string s = ".const c[0x0][0x40] = 0x40000000\n";
    s += line(ctrl("------", "-", "1", false, 1), "LDC R8, c[0x0][0x40]");
    s += line(plain(), "NOP");
    s += line(plain(), "NOP");
    s += line(plain(4), "FFMA R10, R2, " + src + ", R4");
    if (second_use) s += line(plain(4), "FFMA R12, R2, " + src + ", R4");
    s += line(ctrl(mask_of(1), "-", "-", false, 0), "EXIT");
    return s;
}

std::string straightline_source(int length) {
    std::string s;
    for (int k = 0; k < length; ++k) s += line(plain(), "FADD R" + std::to_string(8 + k % 64) + ", R1, R2");
    s += exit_line();
    return s;
}

namespace {

struct GenInst {
    std::string body;
    std::string guard;
    std::set<int> reads;   // regular registers; predicates encoded as 1000 + index
    std::set<int> writes;
    bool memory = false;
    bool load = false;
    int latency = 4;
    int stall = 0;
    std::string mask = "------";
    std::string rb = "-";
    std::string wb = "-";
};

std::string rname(int r) { return "R" + std::to_string(r); }

}  // namespace

std::string random_program(uint64_t seed, int length) {
    std::mt19937_64 rng(seed);
    auto pick = [&](int lo, int hi) { return int(std::uniform_int_distribution<int>(lo, hi)(rng)); };
    const int margin = 4;
    int warps = pick(1, 4);

    std::ostringstream head;
    head << ".warps " << warps << "\n";
    for (int r = 4; r < 32; ++r) head << ".reg R" << r << " = " << hexs(uint32_t(rng())) << " lane " << hexs(uint32_t(rng() % 4096)) << "\n";
    head << ".mem global 0x10000 = " << hexs(uint32_t(rng())) << ", " << hexs(uint32_t(rng())) << "\n";

    std::vector<GenInst> v;
    v.push_back({"S2R R0, SR_TID.X", "", {}, {0}});
    v.push_back({"IMAD R1, R0, 0x40, RZ", "", {0}, {1}});
    v.push_back({"IADD3 R2, R1, 0x10000, RZ", "", {1}, {2}});

    auto reg_group = [&](int count) {
        int r = pick(4, 31);
        r -= r % count;
        if (r < 4) r = 4;
        return r;
    };
    auto value_src = [&](GenInst& g) -> std::string {
        if (pick(0, 4) == 0) return hexs(uint32_t(rng() % 1000));
        int r = pick(4, 31);
        g.reads.insert(r);
        return rname(r);
    };

    for (int n = 0; n < length; ++n) {
        GenInst g;
        int kind = pick(0, 11);
        if (kind <= 6) {
            static const char* ops[] = {"FFMA", "FADD", "FMUL", "IADD3", "IMAD", "MOV", "ISETP"};
            std::string op = ops[kind];
            if (op == "ISETP") {
                static const char* cmps[] = {"LT", "EQ", "GE", "NE"};
                int p = pick(0, 3);
                g.writes.insert(1000 + p);
                std::string a = value_src(g);
                int r = pick(4, 31);
                g.reads.insert(r);
                g.body = "ISETP." + std::string(cmps[pick(0, 3)]) + " P" + std::to_string(p) + ", " + rname(r) + ", " + a;
            } else {
                int d = pick(4, 31);
                g.writes.insert(d);
                int nsrc = op == "MOV" ? 1 : (op == "FADD" || op == "FMUL") ? 2 : 3;
                std::vector<std::string> srcs;
                int r0 = pick(4, 31);
                g.reads.insert(r0);
                srcs.push_back(rname(r0));
                for (int k = 1; k < nsrc; ++k) srcs.push_back(value_src(g));
                if (op == "MOV") srcs[0] = pick(0, 1) ? srcs[0] : hexs(uint32_t(rng()));
                if (op == "MOV" && srcs[0][0] == '0') g.reads.erase(r0);
                g.body = op + " " + rname(d);
                for (auto& s : srcs) g.body += ", " + s;
                if (pick(0, 5) == 0) {
                    int p = pick(0, 3);
                    g.guard = std::string("@") + (pick(0, 1) ? "!" : "") + "P" + std::to_string(p) + " ";
                    g.reads.insert(1000 + p);
                }
            }
        } else {
            static const int widths[] = {32, 64, 128};
            int w = widths[pick(0, 2)];
            int count = w / 32;
            bool shared = pick(0, 1);
            bool load = pick(0, 1);
            int base = shared ? 1 : 2;
            uint32_t off = uint32_t(pick(0, (64 - w / 8) / (w / 8))) * uint32_t(w / 8);
            std::string addr = "[" + rname(base) + (off ? "+" + hexs(off) : "") + "]";
            int r = reg_group(count);
            g.memory = true;
            g.load = load;
            g.reads.insert(base);
            g.rb = "0";
            std::string suffix = width_suffix(w);
            if (load) {
                for (int k = 0; k < count; ++k) g.writes.insert(r + k);
                g.wb = "1";
                g.body = (shared ? "LDS" : "LDG.E") + suffix + " " + rname(r) + ", " + addr;
            } else {
                for (int k = 0; k < count; ++k) g.reads.insert(r + k);
                g.body = (shared ? "STS" : "STG.E") + suffix + " " + addr + ", " + rname(r);
            }
        }
        v.push_back(g);
    }
    v.push_back({"EXIT", "", {}, {}});

    std::set<int> pending_load_dests, pending_mem_srcs;
    auto touches = [](const std::set<int>& a, const std::set<int>& b) {
        return std::any_of(a.begin(), a.end(), [&](int x) { return b.count(x) != 0; });
    };
    auto gap = [&](size_t p, size_t j) {
        int g = 0;
        for (size_t k = p; k < j; ++k) g += 1 + v[k].stall;
        return g;
    };
    for (size_t j = 0; j < v.size(); ++j) {
        GenInst& g = v[j];
        std::set<int> used = g.reads;
        used.insert(g.writes.begin(), g.writes.end());
        if (j > 0 && g.body == "EXIT") {
            g.mask = "01----";
        } else {
            if (touches(used, pending_load_dests)) g.mask[1] = '1';
            if (touches(g.writes, pending_mem_srcs)) g.mask[0] = '0';
        }
        if (g.mask[1] == '1') pending_load_dests.clear();
        if (g.mask[0] == '0') pending_mem_srcs.clear();
        if (j > 0 && v[j - 1].memory) {
            bool waits_prev = (g.mask[0] == '0' && v[j - 1].rb == "0") || (g.mask[1] == '1' && v[j - 1].wb == "1");
            if (waits_prev) v[j - 1].stall = std::max(v[j - 1].stall, 2);
        }
        for (size_t p = j; p-- > 0;) {
            const GenInst& q = v[p];
            if (q.memory || q.writes.empty()) continue;
            if (!touches(used, q.writes)) continue;
            int need = q.latency + margin;
            int have = gap(p, j);
            if (have < need) v[j - 1].stall = std::min(kMaxStall, v[j - 1].stall + need - have);
        }
        if (g.memory) {
            pending_mem_srcs.insert(g.reads.begin(), g.reads.end());
            if (g.load) pending_load_dests.insert(g.writes.begin(), g.writes.end());
        }
    }

    std::string s = head.str();
    for (const auto& g : v) s += line(ctrl(g.mask, g.rb, g.wb, false, g.stall), g.guard + g.body);
    return s;
}

// ---- analysis helpers ----

std::vector<int> issue_order(const RunResult& r, int subcore) {
    std::vector<int> out;
    for (const auto& e : r.events)
        if (e.stage == "issue" && e.subcore == subcore) out.push_back(e.warp);
    return out;
}

std::vector<std::pair<int, int>> runs(const std::vector<int>& order) {
    std::vector<std::pair<int, int>> out;
    for (int w : order) {
        if (!out.empty() && out.back().first == w)
            ++out.back().second;
        else
            out.push_back({w, 1});
    }
    return out;
}

std::string runs_text(const std::vector<std::pair<int, int>>& rs) {
    std::string s;
    for (const auto& [w, n] : rs) s += (s.empty() ? "" : " ") + ("W" + std::to_string(w)) + "x" + std::to_string(n);
    return s;
}

std::vector<RfcOutcome> rfc_outcomes(const RunResult& r) {
    std::vector<RfcOutcome> out;
    for (const auto& e : r.events) {
        if (e.stage != "rfc") continue;
        RfcOutcome o;
        o.pc = e.pc;
        auto at = e.detail.find('@');
        auto sp = e.detail.find(' ');
        o.reg = e.detail.substr(0, at);
        o.position = std::stoi(e.detail.substr(at + 1, sp - at - 1));
        o.hit = e.detail.substr(sp + 1) == "hit";
        out.push_back(o);
    }
    return out;
}

// ---- named benches ----

bool Result::pass() const {
    return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

std::vector<std::string> names() {
    return {"rf_conflicts", "mem_issue_table", "latency_table", "cggty_fig2", "rfc_listing",
            "dep_counters", "const_cache",     "area",          "prefetch_sweep"};
}

std::string default_data_dir() { return GPUSIM_DATA_DIR; }

nlohmann::json load_expectations(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return nlohmann::json::parse(in);
}

namespace {

template <class A, class B>
Check check(const std::string& name, const A& expected, const B& actual) {
    std::ostringstream e, a;
    e << expected;
    a << actual;
    return {name, e.str() == a.str(), e.str(), a.str()};
}

RunResult must_run(const std::string& src, const SmConfig& cfg) {
    RunResult r = run(parse_program(src), cfg);
    if (r.fault) throw std::runtime_error("simulation fault: " + *r.fault);
    return r;
}

SmConfig warm(SmConfig c) {
    c.frontend.warm = true;
    c.events = true;
    return c;
}

void bench_rf(Result& res, const nlohmann::json& x, const SmConfig& base) {
    for (const auto& c : x.at("cases")) {
        std::string id = c.at("x").get<std::string>() + "," + c.at("y").get<std::string>();
        for (bool nop : {true, false}) {
            auto r = must_run(rf_conflict_source(c.at("x"), c.at("y"), nop), warm(base));
            int expected = c.at(nop ? "delta" : "delta_without_nop");
            res.checks.push_back(check(id + (nop ? "" : " no-nop"), expected, measure_clock_delta(r)));
        }
    }
}

void bench_mem_issue(Result& res, const nlohmann::json& x, const SmConfig& base) {
    int through = x.at("checked_through");
    for (const auto& [col, cells] : x.at("columns").items()) {
        int n = std::stoi(col);
        SmConfig cfg = warm(base);
        cfg.warps = n;
        auto r = must_run(mem_issue_source(through), cfg);
        std::vector<std::vector<Cycle>> per(n);
        for (int w = 0; w < n; ++w) per[w] = issue_cycles(r, w);
        int step = x.at("steady_step").at(col);
        for (int i = 0; i < through; ++i) {
            std::vector<Cycle> got;
            for (int w = 0; w < n; ++w) got.push_back(per[w].at(i));
            std::sort(got.begin(), got.end());
            std::vector<Cycle> want;
            if (i < int(cells.size())) {
                for (const auto& v : cells[i]) want.push_back(v.get<Cycle>());
            } else {
                for (int w = 0; w < n; ++w) {
                    std::vector<Cycle> prev;
                    for (int u = 0; u < n; ++u) prev.push_back(per[u].at(i - 1));
                    std::sort(prev.begin(), prev.end());
                    want.push_back(prev[w] + step);
                }
            }
            auto text = [](const std::vector<Cycle>& v) {
                std::string s;
                for (auto c : v) s += (s.empty() ? "" : "/") + std::to_string(c);
                return s;
            };
            res.checks.push_back(check(col + " sub-cores, instr " + std::to_string(i + 1), text(want), text(got)));
        }
    }
}

void bench_latency(Result& res, const nlohmann::json& x, const SmConfig& base) {
    std::map<std::string, std::pair<int, std::optional<int>>> want;
    for (const auto& row : x.at("rows")) {
        std::optional<int> raw;
        if (!row.at("raw").is_null()) raw = row.at("raw").get<int>();
        want[row.at("op").get<std::string>() + "." + std::to_string(row.at("width").get<int>()) + "." +
             row.at("addr").get<std::string>()] = {row.at("war"), raw};
    }
    for (const auto& p : latency_probes()) {
        auto it = want.find(p.label);
        if (it == want.end()) {
            res.checks.push_back({p.label, false, "expectation row", "missing"});
            continue;
        }
        auto rw = must_run(p.war_source, warm(base));
        res.checks.push_back(check(p.label + " WAR", it->second.first, probe_delta(rw)));
        if (it->second.second) {
            auto rr = must_run(p.raw_source, warm(base));
            res.checks.push_back(check(p.label + " RAW", *it->second.second, probe_delta(rr)));
        }
    }
}

std::string expected_runs(const nlohmann::json& seq) {
    std::vector<std::pair<int, int>> rs;
    for (const auto& e : seq) rs.push_back({e.at(0).get<int>(), e.at(1).get<int>()});
    return runs_text(rs);
}

void bench_fig2(Result& res, const nlohmann::json& x, const SmConfig& base) {
    int length = x.at("length");
    SmConfig one = warm(base);
    one.subcores = 1;
    one.warps = 4;
    for (char v : {'a', 'b', 'c'}) {
        auto key = std::string(1, v);
        auto r = must_run(fig2_source(v, length), one);
        res.checks.push_back(check(key + " warm order", expected_runs(x.at(key).at("runs")), runs_text(runs(issue_order(r)))));
    }
    SmConfig cold = base;
    cold.events = true;
    cold.subcores = 1;
    cold.warps = 4;
    cold.frontend.warm = false;
    cold.frontend.depth = x.at("cold_depth");
    auto r = must_run(fig2_source('a', length), cold);
    auto rs = runs(issue_order(r));
    int total = length + 1;
    bool pattern = rs.size() == 5 && rs[0].first == 3 && rs[0].second > 0 && rs[0].second < total && rs[1].first == 2 &&
                   rs[1].second == total && rs[2].first == 3 && rs[0].second + rs[2].second == total &&
                   rs[3] == std::pair<int, int>{1, total} && rs[4] == std::pair<int, int>{0, total};
    res.checks.push_back({"a cold order", pattern, "W3xk W2x" + std::to_string(total) + " W3x(" + std::to_string(total) +
                                                       "-k) W1x" + std::to_string(total) + " W0x" + std::to_string(total),
                          runs_text(rs)});

    SmConfig alone = warm(base);
    alone.subcores = 1;
    alone.warps = 1;
    for (char v : {'b', 'c'}) {
        auto key = std::string(1, v);
        auto ra = must_run(fig2_source(v, length), alone);
        auto c = issue_cycles(ra, 0);
        int bubbles = int(c.at(2) - c.at(1)) - 1;
        res.checks.push_back(check(key + " bubbles alone", x.at(key).at("bubbles_alone").get<int>(), bubbles));
    }
}

void bench_rfc(Result& res, const nlohmann::json& x, const SmConfig& base) {
    auto srcs = rfc_listing_sources();
    const auto& exs = x.at("examples");
    for (size_t k = 0; k < srcs.size() && k < exs.size(); ++k) {
        auto r = must_run(srcs[k], warm(base));
        auto outs = rfc_outcomes(r);
        const auto& ex = exs[k];
        for (const auto& step : ex.at("steps")) {
            uint32_t pc = uint32_t(step.at("inst").get<int>()) * kInstBytes;
            std::string reg = step.at("reg");
            int pos = step.at("pos");
            std::string got = "absent";
            for (const auto& o : outs)
                if (o.pc == pc && o.reg == reg && o.position == pos) got = o.hit ? "hit" : "miss";
            res.checks.push_back(check(ex.at("name").get<std::string>() + " inst " + std::to_string(step.at("inst").get<int>()) +
                                           " " + reg + "@" + std::to_string(pos),
                                       step.at("outcome").get<std::string>(), got));
        }
    }
    for (const auto& h : x.at("holds")) {
        auto r = must_run(pair_source(h.at("inst")), warm(base));
        res.checks.push_back(check(h.at("name").get<std::string>() + " hold cycles", h.at("holds").get<int>(), r.stats.allocate_hold_cycles));
    }
}

struct CounterEvent {
    Cycle cycle;
    uint32_t pc;
    int sb;
    int value;
};

std::vector<CounterEvent> counter_events(const RunResult& r) {
    std::vector<CounterEvent> out;
    for (const auto& e : r.events) {
        if (e.stage != "counter") continue;
        auto eq = e.detail.find('=');
        out.push_back({e.cycle, e.pc, std::stoi(e.detail.substr(2, eq - 2)), std::stoi(e.detail.substr(eq + 1))});
    }
    return out;
}

void bench_dep(Result& res, const nlohmann::json& x, const SmConfig& base) {
    auto r = must_run(dependence_example_source(), warm(base));
    auto ce = counter_events(r);
    Cycle iadd_issue = -1, sb3_zero = -1, war_release = -1, write_70 = -1;
    int sb3_peak = 0;
    for (const auto& e : r.events) {
        if (e.stage == "issue" && e.pc == 0x80) iadd_issue = e.cycle;
        if (e.stage == "write" && e.pc == 0x70 && write_70 < 0) write_70 = e.cycle;
    }
    std::map<int, int> last;
    for (const auto& e : ce) {
        bool dec = e.value < last[e.sb];
        last[e.sb] = e.value;
        if (e.sb == 3) sb3_peak = std::max(sb3_peak, e.value);
        if (e.sb == 3 && dec && e.value == 0 && sb3_peak == 2 && sb3_zero < 0) sb3_zero = e.cycle;
        if (e.sb == 0 && dec && e.pc == 0x70 && war_release < 0) war_release = e.cycle;
    }
    res.checks.push_back(check("SB3 peak", x.at("sb3_peak").get<int>(), sb3_peak));
    res.checks.push_back({"IADD3 issues after both SB3 decrements", sb3_zero >= 0 && iadd_issue >= sb3_zero,
                          ">= " + std::to_string(sb3_zero), std::to_string(iadd_issue)});
    res.checks.push_back({"0x70 WAR release precedes its write-back", war_release >= 0 && war_release < write_70,
                          "< " + std::to_string(write_70), std::to_string(war_release)});
    bool conserved = r.stats.counter_increments == r.stats.counter_decrements;
    for (const auto& w : r.warps)
        for (int c : w.counters) conserved &= c == 0;
    res.checks.push_back({"counters conserved", conserved, "all zero",
                          std::to_string(r.stats.counter_increments) + " inc / " + std::to_string(r.stats.counter_decrements) + " dec"});
    res.checks.push_back(check("example diagnostics", 0, r.diagnostics.size() + r.runtime_diagnostics.size()));

    auto kinds = [](const std::vector<Diagnostic>& d) {
        std::string s;
        for (const auto& x : d)
            if (x.severity == "error") s += (s.empty() ? "" : ",") + x.kind;
        return s.empty() ? std::string("none") : s;
    };
    const auto& table = base.latency;
    res.checks.push_back(check("distance-1 stall 1", x.at("distance1_kind").get<std::string>(),
                               kinds(validate_program(parse_program(distance1_source(1, false)), table))));
    res.checks.push_back(check("distance-1 stall 2", "none", kinds(validate_program(parse_program(distance1_source(2, false)), table))));
    res.checks.push_back(check("distance-1 yield", "none", kinds(validate_program(parse_program(distance1_source(1, true)), table))));
}

void bench_const(Result& res, const nlohmann::json& x, const SmConfig& base) {
    auto ffma_issue = [&](bool konst, bool second, int idx) {
        auto r = must_run(const_cache_source(konst, second), warm(base));
        return issue_cycles(r, 0).at(idx);
    };
    Cycle with = ffma_issue(true, false, 3), without = ffma_issue(false, false, 3);
    res.checks.push_back(check("FL miss delay after VL warm-up", x.at("fl_delay").get<int>(), with - without));
    Cycle gap_const = ffma_issue(true, true, 4) - with;
    Cycle gap_reg = ffma_issue(false, true, 4) - without;
    res.checks.push_back(check("FL hit adds no delay", gap_reg, gap_const));

    std::string idle, src = line(plain(), "NOP") + line(plain(), "NOP") + line(plain(), "FFMA R10, R2, c[0x0][0x40], R4");
    for (int k = 0; k < 8; ++k) idle += line(plain(), "NOP");
    idle += exit_line();
    src += exit_line();
    SmConfig two = warm(base);
    two.subcores = 1;
    two.warps = 2;
    RunResult r = run(std::vector<Program>{parse_program(idle), parse_program(src)}, two);
    if (r.fault) throw std::runtime_error("simulation fault: " + *r.fault);
    Cycle miss = -1;
    for (const auto& e : r.events)
        if (e.stage == "const_miss" && miss < 0) miss = e.cycle;
    int stalled = x.at("subcore_stall");
    bool quiet = true;
    Cycle first_switch = -1;
    for (const auto& e : r.events) {
        if (e.stage != "issue") continue;
        if (e.cycle >= miss && e.cycle < miss + stalled) quiet = false;
        if (e.cycle >= miss && e.warp == 0 && first_switch < 0) first_switch = e.cycle;
    }
    res.checks.push_back({"sub-core silent during the miss stall", miss >= 0 && quiet,
                          "no issue in [m, m+" + std::to_string(stalled - 1) + "]", quiet ? "quiet" : "issued"});
    res.checks.push_back(check("switch to the other warp", miss + stalled, first_switch));
    auto w1 = issue_cycles(r, 1);
    res.checks.push_back(check("missing FFMA issues after the fill", miss + x.at("fl_delay").get<int>(), w1.at(2)));
}

void bench_area(Result& res, const nlohmann::json& x, const SmConfig&) {
    for (const auto& c : x.at("cases")) {
        AreaModel m;
        m.warps = c.at("warps");
        m.rf_bytes = c.at("rf_bytes");
        Mechanism mech = mechanism_from(c.at("mechanism"));
        std::optional<int> mc = 63;
        if (c.contains("max_consumers")) mc = c.at("max_consumers").get<int>();
        auto a = area_report(m, mech, mc);
        std::string id = c.at("mechanism").get<std::string>() + "@" + std::to_string(m.warps);
        if (c.contains("bits_per_warp")) res.checks.push_back(check(id + " bits/warp", c.at("bits_per_warp").get<int64_t>(), a.bits_per_warp.value_or(-1)));
        if (c.contains("bits_per_sm")) res.checks.push_back(check(id + " bits/SM", c.at("bits_per_sm").get<int64_t>(), a.bits_per_sm.value_or(-1)));
        res.checks.push_back(check(id + " overhead", c.at("overhead").get<std::string>(), a.overhead_ratio ? percent2(*a.overhead_ratio) : "n/a"));
    }
}

void bench_prefetch(Result& res, const nlohmann::json& x, const SmConfig& base) {
    std::vector<std::string> values;
    for (const auto& v : x.at("depths")) values.push_back(v);
    values.push_back("perfect");
    SmConfig cfg = base;
    cfg.warps = x.at("warps");
    cfg.frontend.warm = false;
    auto rows = sweep("prefetch.depth", values, {parse_program(straightline_source(x.at("length")))}, cfg, 1);
    for (size_t k = 0; k + 2 < rows.size(); ++k) {
        res.checks.push_back({"depth " + rows[k].value + " -> " + rows[k + 1].value,
                              rows[k + 1].stats.total_cycles <= rows[k].stats.total_cycles,
                              "<= " + std::to_string(rows[k].stats.total_cycles), std::to_string(rows[k + 1].stats.total_cycles)});
    }
    const auto& perfect = rows.back();
    const auto& s16 = rows[rows.size() - 2];
    res.checks.push_back({"perfect vs depth " + s16.value, perfect.stats.total_cycles <= s16.stats.total_cycles,
                          "<= " + std::to_string(s16.stats.total_cycles), std::to_string(perfect.stats.total_cycles)});
}

}  // namespace

Result run(const std::string& name, const nlohmann::json& expectations, const SmConfig& base) {
    if (!expectations.contains(name)) throw std::invalid_argument("unknown bench '" + name + "'");
    const auto& x = expectations.at(name);
    Result res;
    res.name = name;
    res.reference = x.value("reference", "");
    if (name == "rf_conflicts") bench_rf(res, x, base);
    else if (name == "mem_issue_table") bench_mem_issue(res, x, base);
    else if (name == "latency_table") bench_latency(res, x, base);
    else if (name == "cggty_fig2") bench_fig2(res, x, base);
    else if (name == "rfc_listing") bench_rfc(res, x, base);
    else if (name == "dep_counters") bench_dep(res, x, base);
    else if (name == "const_cache") bench_const(res, x, base);
    else if (name == "area") bench_area(res, x, base);
    else if (name == "prefetch_sweep") bench_prefetch(res, x, base);
    else throw std::invalid_argument("unknown bench '" + name + "'");
    return res;
}

nlohmann::json to_json(const Result& r) {
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : r.checks)
        checks.push_back({{"name", c.name}, {"pass", c.pass}, {"expected", c.expected}, {"actual", c.actual}});
    return {{"bench", r.name}, {"reference", r.reference}, {"pass", r.pass()}, {"checks", checks}};
}

}  // namespace gpusim::bench
