#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "gpusim/sim.hpp"

namespace gpusim {

namespace {

int to_int(const std::string& key, const std::string& v) {
    size_t pos = 0;
    long long x;
    try {
        x = std::stoll(v, &pos, 0);
    } catch (const std::exception&) {
        throw std::invalid_argument(key + ": expected an integer, got '" + v + "'");
    }
    if (pos != v.size()) throw std::invalid_argument(key + ": expected an integer, got '" + v + "'");
    return int(x);
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "on" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "off" || v == "0" || v == "no") return false;
    throw std::invalid_argument(key + ": expected a boolean, got '" + v + "'");
}

std::string b(bool x) { return x ? "true" : "false"; }

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

std::vector<std::string> SmConfig::keys() {
    std::vector<std::string> k;
    for (const auto& [key, v] : SmConfig{}.to_map()) k.push_back(key);
    return k;
}

void SmConfig::set(const std::string& key, const std::string& v) {
    if (key == "sim.subcores") subcores = to_int(key, v);
    else if (key == "sim.warps") warps = to_int(key, v);
    else if (key == "sim.cycle_cap") cycle_cap = std::stoll(v);
    else if (key == "sim.events") events = to_bool(key, v);
    else if (key == "deps.mechanism") mechanism = mechanism_from(v);
    else if (key == "deps.max_consumers") max_consumers = v == "unlimited" ? std::nullopt : std::optional<int>(to_int(key, v));
    else if (key == "icache.l0_lines") frontend.l0_lines = to_int(key, v);
    else if (key == "icache.line_bytes") frontend.line_bytes = to_int(key, v);
    else if (key == "icache.assoc") frontend.assoc = to_int(key, v);
    else if (key == "icache.miss_latency") frontend.miss_latency = to_int(key, v);
    else if (key == "icache.perfect") frontend.perfect = to_bool(key, v);
    else if (key == "icache.warm") frontend.warm = to_bool(key, v);
    else if (key == "prefetch.kind") {
        if (v == "none") frontend.prefetch = PrefetchKind::None;
        else if (v == "stream") frontend.prefetch = PrefetchKind::Stream;
        else throw std::invalid_argument(key + ": expected none or stream");
    } else if (key == "prefetch.depth") {
        if (v == "none") {
            frontend.prefetch = PrefetchKind::None;
            frontend.perfect = false;
        } else if (v == "perfect") {
            frontend.perfect = true;
        } else {
            frontend.depth = to_int(key, v);
            frontend.prefetch = frontend.depth > 0 ? PrefetchKind::Stream : PrefetchKind::None;
            frontend.perfect = false;
        }
    } else if (key == "frontend.ibuffer") frontend.ibuffer = to_int(key, v);
    else if (key == "frontend.launch_fill") frontend.launch_fill = to_bool(key, v);
    else if (key == "regfile.read_ports_per_bank") read_ports_per_bank = to_int(key, v);
    else if (key == "regfile.rfc") rfc = to_bool(key, v);
    else if (key == "regfile.banks") banks = to_int(key, v);
    else if (key == "exec.fp32_width") exec.fp32_width = to_int(key, v);
    else if (key == "exec.int32_width") exec.int32_width = to_int(key, v);
    else if (key == "exec.dual_fp32") exec.dual_fp32 = to_bool(key, v);
    else if (key == "mem.lsu_queue") mem.lsu_queue = to_int(key, v);
    else if (key == "mem.agu_throughput") mem.agu_throughput = to_int(key, v);
    else if (key == "mem.shared_accept_period") mem.shared_accept_period = to_int(key, v);
    else if (key == "mem.agu_to_arbiter") mem.agu_to_arbiter = to_int(key, v);
    else if (key == "mem.return_bits_per_cycle") mem.return_bits_per_cycle = to_int(key, v);
    else if (key == "mem.dcache_miss_penalty") mem.dcache_miss_penalty = to_int(key, v);
    else if (key == "const.fl_miss_delay") cst.fl_miss_delay = to_int(key, v);
    else if (key == "const.vl_miss_penalty") cst.vl_miss_penalty = to_int(key, v);
    else if (key == "const.fl_line_bytes") cst.fl_line_bytes = to_int(key, v);
    else if (key == "const.vl_line_bytes") cst.vl_line_bytes = to_int(key, v);
    else if (key == "latency.file") {
        latency_file = v;
        latency = v.empty() ? LatencyTable::defaults() : LatencyTable::from_ini(read_file(v));
    } else if (key == "calibration.issue_to_control") cal.issue_to_control = to_int(key, v);
    else if (key == "calibration.control_to_allocate") cal.control_to_allocate = to_int(key, v);
    else if (key == "calibration.read_window") cal.read_window = to_int(key, v);
    else if (key == "calibration.lsu_visibility") cal.lsu_visibility = to_int(key, v);
    else if (key == "calibration.lsu_entry_offset") cal.lsu_entry_offset = to_int(key, v);
    else if (key == "calibration.version") cal.version = v;
    else throw std::invalid_argument("unknown config key '" + key + "'");
}

std::map<std::string, std::string> SmConfig::to_map() const {
    std::map<std::string, std::string> m;
    auto s = [](auto x) { return std::to_string(x); };
    m["sim.subcores"] = s(subcores);
    m["sim.warps"] = s(warps);
    m["sim.cycle_cap"] = s(cycle_cap);
    m["sim.events"] = b(events);
    m["deps.mechanism"] = mechanism_name(mechanism);
    m["deps.max_consumers"] = max_consumers ? s(*max_consumers) : "unlimited";
    m["icache.l0_lines"] = s(frontend.l0_lines);
    m["icache.line_bytes"] = s(frontend.line_bytes);
    m["icache.assoc"] = s(frontend.assoc);
    m["icache.miss_latency"] = s(frontend.miss_latency);
    m["icache.perfect"] = b(frontend.perfect);
    m["icache.warm"] = b(frontend.warm);
    m["prefetch.kind"] = frontend.prefetch == PrefetchKind::Stream ? "stream" : "none";
    m["prefetch.depth"] = s(frontend.depth);
    m["frontend.ibuffer"] = s(frontend.ibuffer);
    m["frontend.launch_fill"] = b(frontend.launch_fill);
    m["regfile.read_ports_per_bank"] = s(read_ports_per_bank);
    m["regfile.rfc"] = b(rfc);
    m["regfile.banks"] = s(banks);
    m["exec.fp32_width"] = s(exec.fp32_width);
    m["exec.int32_width"] = s(exec.int32_width);
    m["exec.dual_fp32"] = b(exec.dual_fp32);
    m["mem.lsu_queue"] = s(mem.lsu_queue);
    m["mem.agu_throughput"] = s(mem.agu_throughput);
    m["mem.shared_accept_period"] = s(mem.shared_accept_period);
    m["mem.agu_to_arbiter"] = s(mem.agu_to_arbiter);
    m["mem.return_bits_per_cycle"] = s(mem.return_bits_per_cycle);
    m["mem.dcache_miss_penalty"] = s(mem.dcache_miss_penalty);
    m["const.fl_miss_delay"] = s(cst.fl_miss_delay);
    m["const.vl_miss_penalty"] = s(cst.vl_miss_penalty);
    m["const.fl_line_bytes"] = s(cst.fl_line_bytes);
    m["const.vl_line_bytes"] = s(cst.vl_line_bytes);
    m["latency.file"] = latency_file;
    m["calibration.issue_to_control"] = s(cal.issue_to_control);
    m["calibration.control_to_allocate"] = s(cal.control_to_allocate);
    m["calibration.read_window"] = s(cal.read_window);
    m["calibration.lsu_visibility"] = s(cal.lsu_visibility);
    m["calibration.lsu_entry_offset"] = s(cal.lsu_entry_offset);
    m["calibration.version"] = cal.version;
    return m;
}

void SmConfig::check() const {
    auto pos = [](const char* k, long long v) {
        if (v <= 0) throw std::invalid_argument(std::string(k) + " must be positive");
    };
    pos("sim.subcores", subcores);
    pos("sim.cycle_cap", cycle_cap);
    pos("icache.l0_lines", frontend.l0_lines);
    pos("icache.line_bytes", frontend.line_bytes);
    pos("icache.assoc", frontend.assoc);
    pos("icache.miss_latency", frontend.miss_latency);
    pos("frontend.ibuffer", frontend.ibuffer);
    pos("regfile.read_ports_per_bank", read_ports_per_bank);
    pos("regfile.banks", banks);
    pos("exec.fp32_width", exec.fp32_width);
    pos("exec.int32_width", exec.int32_width);
    pos("mem.lsu_queue", mem.lsu_queue);
    pos("mem.agu_throughput", mem.agu_throughput);
    pos("mem.shared_accept_period", mem.shared_accept_period);
    pos("mem.return_bits_per_cycle", mem.return_bits_per_cycle);
    pos("const.fl_miss_delay", cst.fl_miss_delay);
    pos("const.fl_line_bytes", cst.fl_line_bytes);
    pos("const.vl_line_bytes", cst.vl_line_bytes);
    pos("calibration.read_window", cal.read_window);
    pos("calibration.lsu_visibility", cal.lsu_visibility);
    pos("calibration.lsu_entry_offset", cal.lsu_entry_offset);
    if (warps < 0) throw std::invalid_argument("sim.warps must be >= 0");
    if (frontend.line_bytes % int(kInstBytes)) throw std::invalid_argument("icache.line_bytes must be a multiple of 16");
    if (frontend.prefetch == PrefetchKind::Stream && frontend.depth < 0) throw std::invalid_argument("prefetch.depth must be >= 0");
    if (max_consumers && *max_consumers <= 0) throw std::invalid_argument("deps.max_consumers must be positive");
    if (cal.issue_to_control != 1 || cal.control_to_allocate != 1)
        throw std::invalid_argument("calibration: the latch pipeline supports one cycle per stage only");
    if (mem.dcache_miss_penalty < 0 || cst.vl_miss_penalty < 0 || mem.agu_to_arbiter < 0)
        throw std::invalid_argument("penalties and delays must be >= 0");
}

SmConfig SmConfig::from_ini(const std::string& text, const std::string& base_dir) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw std::invalid_argument("config: " + std::string(e.what()));
    }
    SmConfig cfg;
    for (const auto& sec : tree) {
        for (const auto& kv : sec.second) {
            std::string key = sec.first + "." + kv.first;
            std::string v = kv.second.data();
            if (key == "latency.file" && !v.empty() && std::filesystem::path(v).is_relative())
                v = (std::filesystem::path(base_dir) / v).string();
            cfg.set(key, v);
        }
    }
    cfg.check();
    return cfg;
}

SmConfig SmConfig::from_file(const std::string& path) {
    return from_ini(read_file(path), std::filesystem::path(path).parent_path().string());
}

}  // namespace gpusim
