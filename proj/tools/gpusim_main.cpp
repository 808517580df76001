#include <algorithm>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "gpusim/bench.hpp"
#include "gpusim/sim.hpp"

using nlohmann::json;
using namespace gpusim;

namespace {

struct CliError {
    int code;
    std::string kind;
    std::string message;
};

std::string read_file(const std::string& path) {
    if (!std::filesystem::is_regular_file(path)) throw CliError{2, "io", "cannot open " + path};
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw CliError{2, "io", "cannot write " + path};
    out << text;
}

Program load_program(const std::string& path) {
    std::string text = read_file(path);
    try {
        return parse_program(text);
    } catch (const ParseError& e) {
        throw CliError{3, "parse", e.what()};
    }
}

std::string timestamp() {
    std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

struct Common {
    std::string config;
    std::string deps;
    std::string out;
    int jobs = 1;
    bool no_timestamp = false;
    int64_t cycle_cap = 0;
    int warps = 0;
    std::vector<std::string> sets;
};

SmConfig make_config(const Common& c) {
    SmConfig cfg;
    try {
        if (!c.config.empty()) {
            read_file(c.config);
            cfg = SmConfig::from_file(c.config);
        }
        if (!c.deps.empty()) cfg.set("deps.mechanism", c.deps);
        if (c.cycle_cap > 0) cfg.cycle_cap = c.cycle_cap;
        if (c.warps > 0) cfg.warps = c.warps;
        for (const auto& kv : c.sets) {
            auto eq = kv.find('=');
            if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
            cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
        }
        cfg.check();
    } catch (const std::invalid_argument& e) {
        throw CliError{3, "config", e.what()};
    } catch (const std::runtime_error& e) {
        throw CliError{3, "config", e.what()};
    }
    return cfg;
}

void print_diagnostics(const std::vector<Diagnostic>& ds) {
    for (const auto& d : ds) {
        char pc[16];
        std::snprintf(pc, sizeof pc, "0x%04x", d.pc);
        std::cout << d.severity << " " << pc << " " << d.kind << ": " << d.message << "\n";
    }
}

void print_summary(const RunResult& r) {
    const RunStats& s = r.stats;
    std::cout << "cycles        " << s.total_cycles << "\n";
    std::cout << "instructions  " << s.instructions << "\n";
    for (size_t i = 0; i < s.subcores.size(); ++i) {
        double ipc = s.total_cycles ? double(s.subcores[i].issued) / double(s.total_cycles) : 0.0;
        char buf[64];
        std::snprintf(buf, sizeof buf, "ipc[%zu]        %.4f\n", i, ipc);
        std::cout << buf;
    }
    for (const auto& [reason, n] : s.bubbles) std::cout << "bubble " << reason << " " << n << "\n";
    int clocks0 = 0;
    for (const auto& c : r.clocks) clocks0 += c.warp == 0;
    if (clocks0 >= 2) std::cout << "clock_delta   " << measure_clock_delta(r) << "\n";
    if (!r.runtime_diagnostics.empty()) std::cout << "hazards       " << r.runtime_diagnostics.size() << "\n";
    if (r.fault) std::cout << "fault         " << *r.fault << "\n";
}

int cmd_run(const std::string& path, const Common& c, bool allow_hazards, bool events, bool json_stdout) {
    Program prog = load_program(path);
    SmConfig cfg = make_config(c);
    cfg.events = events;
    if (cfg.mechanism == Mechanism::ControlBits && !allow_hazards) {
        auto ds = validate_program(prog, cfg.latency);
        if (has_errors(ds)) {
            print_diagnostics(ds);
            throw CliError{4, "validation", "program has control-bit errors; pass --allow-hazards to run it anyway"};
        }
    }
    RunResult r = run(prog, cfg);
    json j = to_json(r, events);
    if (!c.no_timestamp) j["timestamp"] = timestamp();
    if (!c.out.empty()) write_output(c.out, j.dump(2) + "\n");
    if (json_stdout && c.out.empty()) std::cout << j.dump(2) << "\n";
    else print_summary(r);
    return r.fault ? 1 : 0;
}

int cmd_validate(const std::string& path, const Common& c) {
    Program prog = load_program(path);
    SmConfig cfg = make_config(c);
    auto ds = validate_program(prog, cfg.latency);
    print_diagnostics(ds);
    if (ds.empty()) std::cout << "clean\n";
    return has_errors(ds) ? 1 : 0;
}

int cmd_asm(const std::string& path, const Common& c) {
    Program prog = load_program(path);
    write_output(c.out, encode_program(prog));
    return 0;
}

int cmd_bench(const std::string& name, const std::string& data, const Common& c, bool as_json) {
    std::vector<std::string> list;
    if (name == "all") list = bench::names();
    else {
        auto all = bench::names();
        if (std::find(all.begin(), all.end(), name) == all.end()) throw CliError{3, "bench", "unknown bench " + name};
        list = {name};
    }
    std::string path = data.empty() ? bench::default_data_dir() + "/bench_expectations.json" : data;
    json exp;
    try {
        read_file(path);
        exp = bench::load_expectations(path);
    } catch (const json::exception& e) {
        throw CliError{3, "parse", e.what()};
    }
    SmConfig base = make_config(c);
    json out = json::array();
    bool all_pass = true;
    for (const auto& n : list) {
        bench::Result r = bench::run(n, exp, base);
        all_pass = all_pass && r.pass();
        out.push_back(bench::to_json(r));
        if (!as_json) {
            for (const auto& ch : r.checks)
                std::cout << (ch.pass ? "  pass " : "  FAIL ") << ch.name << " (want " << ch.expected << ", got "
                          << ch.actual << ")\n";
            std::cout << (r.pass() ? "PASS " : "FAIL ") << n << "  [" << r.reference << "]\n";
        }
    }
    json doc = {{"benches", out}, {"pass", all_pass}};
    if (!c.no_timestamp) doc["timestamp"] = timestamp();
    if (as_json) write_output(c.out, doc.dump(2) + "\n");
    else if (!c.out.empty()) write_output(c.out, doc.dump(2) + "\n");
    return all_pass ? 0 : 1;
}

int cmd_area(int warps, int64_t rf_bytes, const std::string& mech, const std::string& consumers, bool as_json) {
    if (warps <= 0 || rf_bytes <= 0) throw CliError{3, "args", "warps and rf-bytes must be positive"};
    AreaModel m;
    m.warps = warps;
    m.rf_bytes = rf_bytes;
    Mechanism mc;
    std::optional<int> mx;
    try {
        mc = mechanism_from(mech);
        if (consumers != "unlimited") mx = std::stoi(consumers);
    } catch (const std::exception& e) {
        throw CliError{3, "args", e.what()};
    }
    AreaReport a = area_report(m, mc, mx);
    json j = {{"warps", warps}, {"rf_bytes", rf_bytes}, {"mechanism", mechanism_name(mc)}};
    j["bits_per_warp"] = a.bits_per_warp ? json(*a.bits_per_warp) : json(nullptr);
    j["bits_per_sm"] = a.bits_per_sm ? json(*a.bits_per_sm) : json(nullptr);
    j["overhead"] = a.overhead_ratio ? json(percent2(*a.overhead_ratio)) : json(nullptr);
    if (!a.note.empty()) j["note"] = a.note;
    if (as_json) {
        std::cout << j.dump(2) << "\n";
        return 0;
    }
    std::cout << "mechanism      " << mechanism_name(mc) << "\n";
    std::cout << "bits_per_warp  " << (a.bits_per_warp ? std::to_string(*a.bits_per_warp) : "n/a") << "\n";
    std::cout << "bits_per_sm    " << (a.bits_per_sm ? std::to_string(*a.bits_per_sm) : "n/a") << "\n";
    std::cout << "overhead       " << (a.overhead_ratio ? percent2(*a.overhead_ratio) : "n/a") << "\n";
    if (!a.note.empty()) std::cout << "note           " << a.note << "\n";
    return 0;
}

std::vector<std::string> split_values(const std::string& s) {
    std::vector<std::string> v;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) v.push_back(item);
    return v;
}

int cmd_sweep(const std::string& axis, const std::string& values, const std::vector<std::string>& paths,
              const Common& c, const std::string& format) {
    auto vals = split_values(values);
    if (vals.empty()) throw CliError{3, "args", "empty value list"};
    std::vector<Program> progs;
    for (const auto& p : paths) progs.push_back(load_program(p));
    SmConfig base = make_config(c);
    std::vector<SweepRow> rows;
    try {
        rows = sweep(axis, vals, progs, base, c.jobs);
    } catch (const std::invalid_argument& e) {
        throw CliError{3, "args", e.what()};
    }
    std::set<std::string> reasons;
    for (const auto& r : rows)
        for (const auto& [k, n] : r.stats.bubbles) reasons.insert(k);
    std::ostringstream os;
    if (format == "json") {
        json arr = json::array();
        for (const auto& r : rows) {
            json j = {{"value", r.value}, {"stats", to_json(r.stats)}};
            if (r.fault) j["fault"] = *r.fault;
            arr.push_back(j);
        }
        json doc = {{"axis", axis}, {"rows", arr}};
        if (!c.no_timestamp) doc["timestamp"] = timestamp();
        os << doc.dump(2) << "\n";
    } else {
        os << axis << ",cycles,instructions";
        for (const auto& k : reasons) os << ",bubble_" << k;
        os << ",fault\n";
        for (const auto& r : rows) {
            os << r.value << "," << r.stats.total_cycles << "," << r.stats.instructions;
            for (const auto& k : reasons) {
                auto it = r.stats.bubbles.find(k);
                os << "," << (it == r.stats.bubbles.end() ? 0 : it->second);
            }
            os << "," << (r.fault ? *r.fault : "") << "\n";
        }
    }
    write_output(c.out, os.str());
    bool faulted = false;
    for (const auto& r : rows) faulted = faulted || r.fault.has_value();
    return faulted ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gpusim: cycle-level model of one GPU streaming multiprocessor"};
    app.require_subcommand(1);
    Common c;
    auto common = [&c](CLI::App* s, bool with_out = true) {
        s->add_option("--config", c.config, "INI configuration file");
        s->add_option("--deps", c.deps, "dependence mechanism: control_bits or scoreboard");
        s->add_option("--cycle-cap", c.cycle_cap, "abort after this many cycles");
        s->add_option("--set", c.sets, "override one config key, key=value")->take_all();
        s->add_flag("--no-timestamp", c.no_timestamp, "omit the timestamp field from JSON output");
        if (with_out) s->add_option("--out", c.out, "output file");
    };

    std::string program;
    bool allow_hazards = false, no_events = false, json_stdout = false;
    auto* run_cmd = app.add_subcommand("run", "simulate a program and write the JSON result");
    run_cmd->add_option("program", program, "mini-SASS file")->required();
    common(run_cmd);
    run_cmd->add_option("--warps", c.warps, "override the warp count");
    run_cmd->add_flag("--allow-hazards", allow_hazards, "run even when the validator reports errors");
    run_cmd->add_flag("--no-events", no_events, "omit the event timeline");
    run_cmd->add_flag("--json", json_stdout, "print JSON instead of the summary when --out is absent");

    auto* val_cmd = app.add_subcommand("validate", "check control bits against the latency table");
    val_cmd->add_option("program", program, "mini-SASS file")->required();
    common(val_cmd, false);

    auto* asm_cmd = app.add_subcommand("asm", "parse a program and re-emit it in canonical form");
    asm_cmd->add_option("program", program, "mini-SASS file")->required();
    common(asm_cmd);

    std::string bench_name = "all", data;
    bool bench_json = false;
    auto* bench_cmd = app.add_subcommand("bench", "run built-in microbenchmarks against recorded expectations");
    bench_cmd->add_option("name", bench_name, "bench name or all");
    bench_cmd->add_option("--data", data, "expectations file");
    bench_cmd->add_flag("--json", bench_json, "print JSON instead of text");
    bench_cmd->add_flag("--list", [&](int64_t) {
        for (const auto& n : bench::names()) std::cout << n << "\n";
        std::exit(0);
    }, "list bench names");
    common(bench_cmd);

    int area_warps = 48;
    int64_t rf_bytes = 262144;
    std::string mech = "control_bits", consumers = "63";
    bool area_json = false;
    auto* area_cmd = app.add_subcommand("area", "storage cost of the dependence mechanism");
    area_cmd->add_option("--warps", area_warps, "warps per SM");
    area_cmd->add_option("--rf-bytes", rf_bytes, "register file bytes per SM");
    area_cmd->add_option("--mechanism", mech, "control_bits or scoreboard");
    area_cmd->add_option("--max-consumers", consumers, "scoreboard consumer limit or unlimited");
    area_cmd->add_flag("--json", area_json, "print JSON");

    std::string axis, values, format = "csv";
    std::vector<std::string> programs;
    auto* sweep_cmd = app.add_subcommand("sweep", "run one program across values of a config key");
    sweep_cmd->add_option("--axis", axis, "config key such as prefetch.depth")->required();
    sweep_cmd->add_option("--values", values, "comma-separated values")->required();
    sweep_cmd->add_option("--jobs", c.jobs, "parallel simulations")->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sweep_cmd->add_option("programs", programs, "mini-SASS files, one per warp program")->required();
    common(sweep_cmd);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) return cmd_run(program, c, allow_hazards, !no_events, json_stdout);
        if (*val_cmd) return cmd_validate(program, c);
        if (*asm_cmd) return cmd_asm(program, c);
        if (*bench_cmd) return cmd_bench(bench_name, data, c, bench_json);
        if (*area_cmd) return cmd_area(area_warps, rf_bytes, mech, consumers, area_json);
        if (*sweep_cmd) return cmd_sweep(axis, values, programs, c, format);
    } catch (const CliError& e) {
        std::cout << json{{"error", {{"kind", e.kind}, {"message", e.message}}}}.dump() << "\n";
        return e.code;
    } catch (const std::exception& e) {
        std::cout << json{{"error", {{"kind", "internal"}, {"message", e.what()}}}}.dump() << "\n";
        return 1;
    }
    return 0;
}
