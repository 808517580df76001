#include "gpusim/isa.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace gpusim {

namespace {

const OpInfo kOps[] = {
    {"FFMA", UnitClass::Fp32, MemSpace::None, false, false},
    {"FADD", UnitClass::Fp32, MemSpace::None, false, false},
    {"FMUL", UnitClass::Fp32, MemSpace::None, false, false},
    {"IADD3", UnitClass::Int32, MemSpace::None, false, false},
    {"IMAD", UnitClass::Int32, MemSpace::None, false, false},
    {"MOV", UnitClass::Int32, MemSpace::None, false, false},
    {"ISETP", UnitClass::Int32, MemSpace::None, false, false},
    {"S2R", UnitClass::FixedMisc, MemSpace::None, false, false},
    {"NOP", UnitClass::FixedMisc, MemSpace::None, false, false},
    {"CLOCK", UnitClass::FixedMisc, MemSpace::None, false, false},
    {"BRA", UnitClass::Control, MemSpace::None, false, false},
    {"EXIT", UnitClass::Control, MemSpace::None, false, false},
    {"BAR", UnitClass::Control, MemSpace::None, false, false},
    {"DEPBAR", UnitClass::FixedMisc, MemSpace::None, false, false},
    {"LDG", UnitClass::Memory, MemSpace::Global, true, false},
    {"STG", UnitClass::Memory, MemSpace::Global, false, true},
    {"LDS", UnitClass::Memory, MemSpace::Shared, true, false},
    {"STS", UnitClass::Memory, MemSpace::Shared, false, true},
    {"LDC", UnitClass::Memory, MemSpace::Constant, true, false},
    {"LDGSTS", UnitClass::Memory, MemSpace::Global, true, true},
};

constexpr Opcode kAllOps[] = {
    Opcode::FFMA, Opcode::FADD, Opcode::FMUL, Opcode::IADD3, Opcode::IMAD, Opcode::MOV,
    Opcode::ISETP, Opcode::S2R, Opcode::NOP, Opcode::CLOCK, Opcode::BRA, Opcode::EXIT,
    Opcode::BAR, Opcode::DEPBAR, Opcode::LDG, Opcode::STG, Opcode::LDS, Opcode::STS,
    Opcode::LDC, Opcode::LDGSTS};

const char* kCmpNames[] = {"LT", "EQ", "LE", "GT", "NE", "GE"};

std::string hex(uint32_t v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%x", v);
    return buf;
}

}  // namespace

Operand Operand::reg(int idx, int count) {
    Operand o;
    o.kind = OperandKind::Reg;
    o.index = idx;
    o.count = count;
    return o;
}

Operand Operand::ureg(int idx) {
    Operand o;
    o.kind = OperandKind::UReg;
    o.index = idx;
    return o;
}

Operand Operand::pred(int idx) {
    Operand o;
    o.kind = OperandKind::Pred;
    o.index = idx;
    return o;
}

Operand Operand::imm(uint32_t v) {
    Operand o;
    o.kind = OperandKind::Imm;
    o.value = v;
    return o;
}

Operand Operand::constant(int bank, uint32_t offset, AddrMode mode, int base) {
    Operand o;
    o.kind = OperandKind::Const;
    o.cbank = bank;
    o.value = offset;
    o.mode = mode;
    o.index = mode == AddrMode::Immediate ? 0 : base;
    return o;
}

Operand Operand::mem(AddrMode mode, int base, uint32_t offset) {
    Operand o;
    o.kind = OperandKind::Mem;
    o.mode = mode;
    o.index = mode == AddrMode::Immediate ? 0 : base;
    o.value = offset;
    return o;
}

Operand Operand::special(SpecialReg r) {
    Operand o;
    o.kind = OperandKind::Special;
    o.index = int(r);
    return o;
}

const OpInfo& op_info(Opcode op) { return kOps[int(op)]; }

bool is_memory(Opcode op) { return op_info(op).unit == UnitClass::Memory; }

std::optional<Opcode> opcode_from_mnemonic(const std::string& m) {
    for (Opcode op : kAllOps)
        if (m == op_info(op).mnemonic) return op;
    return std::nullopt;
}

const Instruction* Program::at(uint32_t pc) const {
    if (pc < base || (pc - base) % kInstBytes != 0) return nullptr;
    size_t i = (pc - base) / kInstBytes;
    return i < insts.size() ? &insts[i] : nullptr;
}

ParseError::ParseError(int line_, int col_, const std::string& msg)
    : std::runtime_error("line " + std::to_string(line_) + ", column " + std::to_string(col_) + ": " + msg),
      line(line_),
      col(col_) {}

int bank_of(int reg, int banks) { return reg % banks; }

// ---------------------------------------------------------------- parser

namespace {

struct Cursor {
    const std::string& s;
    size_t i = 0;
    int line = 0;

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(line, int(i) + 1, msg); }
    [[noreturn]] void fail_at(size_t pos, const std::string& msg) const { throw ParseError(line, int(pos) + 1, msg); }

    void ws() {
        while (i < s.size() && std::isspace((unsigned char)s[i])) ++i;
    }
    bool eof() {
        ws();
        return i >= s.size();
    }
    char peek() {
        ws();
        return i < s.size() ? s[i] : '\0';
    }
    bool accept(char c) {
        if (peek() == c) {
            ++i;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }
    std::string word() {
        ws();
        size_t b = i;
        while (i < s.size() && (std::isalnum((unsigned char)s[i]) || s[i] == '_' || s[i] == '.')) ++i;
        if (b == i) fail("expected identifier");
        return s.substr(b, i - b);
    }
    std::string ident() {
        ws();
        size_t b = i;
        while (i < s.size() && (std::isalnum((unsigned char)s[i]) || s[i] == '_')) ++i;
        if (b == i) fail("expected identifier");
        return s.substr(b, i - b);
    }
};

bool parse_uint_text(const std::string& t, uint64_t& out) {
    if (t.empty()) return false;
    char* end = nullptr;
    if (t.size() > 2 && t[0] == '0' && (t[1] == 'x' || t[1] == 'X'))
        out = std::strtoull(t.c_str() + 2, &end, 16);
    else if (std::all_of(t.begin(), t.end(), [](char c) { return std::isdigit((unsigned char)c); }))
        out = std::strtoull(t.c_str(), &end, 10);
    else
        return false;
    return end && *end == '\0';
}

// integer (hex/decimal, optional sign) or float literal; floats become IEEE-754 bits
uint32_t number(Cursor& c) {
    c.ws();
    size_t b = c.i;
    bool neg = false;
    if (c.i < c.s.size() && (c.s[c.i] == '-' || c.s[c.i] == '+')) {
        neg = c.s[c.i] == '-';
        ++c.i;
    }
    size_t nb = c.i;
    while (c.i < c.s.size() && (std::isalnum((unsigned char)c.s[c.i]) || c.s[c.i] == '.')) ++c.i;
    std::string t = c.s.substr(nb, c.i - nb);
    uint64_t v = 0;
    if (parse_uint_text(t, v)) {
        if (v > 0xffffffffull) c.fail_at(b, "immediate out of range");
        uint32_t u = uint32_t(v);
        return neg ? uint32_t(0u - u) : u;
    }
    char* end = nullptr;
    float f = std::strtof(t.c_str(), &end);
    if (t.empty() || !end || *end != '\0') c.fail_at(b, "bad number '" + c.s.substr(b, c.i - b) + "'");
    if (neg) f = -f;
    uint32_t bits;
    std::memcpy(&bits, &f, 4);
    return bits;
}

struct RegTok {
    OperandKind kind;
    int index;
};

// R12, RZ, UR4, URZ, P0, PT, UP1, UPT, B3
std::optional<RegTok> reg_token(const std::string& w, Cursor& c, size_t at) {
    auto idx = [&](const std::string& digits, int limit, const char* cls) -> int {
        uint64_t v;
        if (!parse_uint_text(digits, v) || digits.find('x') != std::string::npos) return -1;
        if (v >= uint64_t(limit)) c.fail_at(at, std::string(cls) + " register index out of range: " + w);
        return int(v);
    };
    if (w == "RZ") return RegTok{OperandKind::Reg, kRZ};
    if (w == "URZ") return RegTok{OperandKind::UReg, kURZ};
    if (w == "PT") return RegTok{OperandKind::Pred, kPT};
    if (w == "UPT") return RegTok{OperandKind::UPred, kPT};
    struct Pfx {
        const char* p;
        OperandKind k;
        int limit;
        const char* cls;
    };
    static const Pfx pfx[] = {{"UR", OperandKind::UReg, kNumURegs, "uniform"},
                              {"UP", OperandKind::UPred, kNumPreds, "uniform predicate"},
                              {"R", OperandKind::Reg, kNumRegs, "regular"},
                              {"P", OperandKind::Pred, kNumPreds, "predicate"},
                              {"B", OperandKind::BReg, kNumBRegs, "barrier"}};
    for (const auto& p : pfx) {
        size_t n = std::strlen(p.p);
        if (w.size() > n && w.compare(0, n, p.p) == 0 && std::isdigit((unsigned char)w[n])) {
            int v = idx(w.substr(n), p.limit, p.cls);
            if (v >= 0) return RegTok{p.k, v};
        }
    }
    return std::nullopt;
}

std::optional<SpecialReg> special_from(const std::string& w) {
    if (w == "SR_TID.X") return SpecialReg::TidX;
    if (w == "SR_LANEID") return SpecialReg::LaneId;
    if (w == "SR_WARPID") return SpecialReg::WarpId;
    if (w == "SR_CTAID.X") return SpecialReg::CtaIdX;
    return std::nullopt;
}

const char* special_name(int s) {
    switch (SpecialReg(s)) {
        case SpecialReg::TidX: return "SR_TID.X";
        case SpecialReg::LaneId: return "SR_LANEID";
        case SpecialReg::WarpId: return "SR_WARPID";
        case SpecialReg::CtaIdX: return "SR_CTAID.X";
    }
    return "SR_?";
}

// address inside brackets: R2, R2+0x10, UR4-0x4, 0x100
void address_body(Cursor& c, AddrMode& mode, int& base, uint32_t& off) {
    mode = AddrMode::Immediate;
    base = 0;
    off = 0;
    c.ws();
    size_t at = c.i;
    if (std::isalpha((unsigned char)c.peek())) {
        std::string w = c.ident();
        auto r = reg_token(w, c, at);
        if (!r || (r->kind != OperandKind::Reg && r->kind != OperandKind::UReg))
            c.fail_at(at, "expected address register, got '" + w + "'");
        mode = r->kind == OperandKind::Reg ? AddrMode::Regular : AddrMode::Uniform;
        base = r->index;
        char p = c.peek();
        if (p == '+' || p == '-') {
            ++c.i;
            uint32_t v = number(c);
            off = p == '-' ? uint32_t(0u - v) : v;
        }
    } else {
        off = number(c);
    }
}

struct RawOperand {
    Operand op;
    bool reuse = false;
    std::string label;
    size_t col = 0;
};

RawOperand operand(Cursor& c) {
    RawOperand r;
    c.ws();
    r.col = c.i;
    char p = c.peek();
    if (p == '[') {
        ++c.i;
        AddrMode m;
        int base;
        uint32_t off;
        address_body(c, m, base, off);
        c.expect(']');
        r.op = Operand::mem(m, base, off);
        return r;
    }
    if (p == 'c' && c.i + 1 < c.s.size() && c.s[c.i + 1] == '[') {
        c.i += 2;
        uint32_t bank = number(c);
        c.expect(']');
        c.expect('[');
        AddrMode m;
        int base;
        uint32_t off;
        address_body(c, m, base, off);
        c.expect(']');
        if (bank > 17) c.fail_at(r.col, "constant bank out of range");
        r.op = Operand::constant(int(bank), off, m, base);
        return r;
    }
    if (std::isalpha((unsigned char)p) || p == '_') {
        std::string w = c.word();
        bool reuse = false;
        if (w.size() > 6 && w.compare(w.size() - 6, 6, ".reuse") == 0) {
            reuse = true;
            w = w.substr(0, w.size() - 6);
        }
        if (auto sr = special_from(w)) {
            r.op = Operand::special(*sr);
            return r;
        }
        if (w == "SR_CLOCKLO") {
            r.label = w;
            return r;
        }
        if (auto t = reg_token(w, c, r.col)) {
            r.op.kind = t->kind;
            r.op.index = t->index;
            r.reuse = reuse;
            if (reuse && t->kind != OperandKind::Reg) c.fail_at(r.col, "reuse flag only applies to regular registers");
            return r;
        }
        if (reuse) c.fail_at(r.col, "reuse flag on non-register");
        r.label = w;
        return r;
    }
    r.op = Operand::imm(number(c));
    return r;
}

struct LineCtx {
    Cursor& c;
    size_t mnemonic_col;
};

ControlBits control_prefix(Cursor& c) {
    ControlBits cb;
    c.expect('[');
    c.ws();
    if (c.i >= c.s.size() || c.s[c.i] != 'B') c.fail("expected 'B' wait mask in control bits");
    ++c.i;
    for (int k = 0; k < 6; ++k) {
        if (c.i >= c.s.size()) c.fail("truncated wait mask");
        char ch = c.s[c.i];
        if (ch == '-') {
        } else if (std::isdigit((unsigned char)ch)) {
            int b = ch - '0';
            if (b > 5) c.fail("wait-mask bit " + std::to_string(b) + " > 5");
            if (b != k) c.fail("wait-mask digit " + std::to_string(b) + " in position " + std::to_string(k));
            cb.wait_mask |= uint8_t(1u << b);
        } else {
            c.fail("bad wait-mask character");
        }
        ++c.i;
    }
    auto barrier = [&](char tag) -> int {
        c.expect(':');
        if (c.i >= c.s.size() || c.s[c.i] != tag) c.fail(std::string("expected '") + tag + "' field");
        ++c.i;
        if (c.i >= c.s.size()) c.fail("truncated control bits");
        char ch = c.s[c.i++];
        if (ch == '-') return -1;
        if (!std::isdigit((unsigned char)ch)) c.fail("bad barrier index");
        int b = ch - '0';
        if (b > 5) c.fail_at(c.i - 1, "barrier index " + std::to_string(b) + " > 5");
        return b;
    };
    cb.read_barrier = barrier('R');
    cb.write_barrier = barrier('W');
    c.expect(':');
    if (c.i >= c.s.size() || c.s[c.i] != 'Y') c.fail("expected 'Y' field");
    ++c.i;
    if (c.i >= c.s.size() || (c.s[c.i] != '0' && c.s[c.i] != '1')) c.fail("yield must be 0 or 1");
    cb.yield = c.s[c.i++] == '1';
    c.expect(':');
    if (c.i + 2 >= c.s.size() || c.s[c.i] != 'S' || !std::isdigit((unsigned char)c.s[c.i + 1]) ||
        !std::isdigit((unsigned char)c.s[c.i + 2]))
        c.fail("expected two-digit stall field");
    cb.stall = (c.s[c.i + 1] - '0') * 10 + (c.s[c.i + 2] - '0');
    if (cb.stall > kMaxStall) c.fail("stall " + std::to_string(cb.stall) + " exceeds 15");
    c.i += 3;
    c.expect(']');
    return cb;
}

bool is_value_operand(const Operand& o) {
    return o.kind == OperandKind::Reg || o.kind == OperandKind::UReg || o.kind == OperandKind::Imm ||
           (o.kind == OperandKind::Const && o.mode == AddrMode::Immediate);
}

struct Pending {
    Instruction inst;
    std::string label;
    int line;
    size_t col;
};

void check_reg_group(Cursor& c, size_t col, const Operand& o, const char* what) {
    if (o.kind != OperandKind::Reg) c.fail_at(col, std::string(what) + " must be a regular register");
    if (o.index == kRZ) return;
    if (o.count > 1 && o.index % o.count != 0)
        c.fail_at(col, std::string(what) + " R" + std::to_string(o.index) + " must be aligned to " +
                           std::to_string(o.count) + " registers");
    if (o.index + o.count > kRZ) c.fail_at(col, std::string(what) + " register range out of bounds");
}

Instruction instruction_line(Cursor& c, std::string& label_out) {
    Instruction inst;
    if (c.peek() == '[') inst.ctrl = control_prefix(c);
    if (c.accept('@')) {
        Guard g;
        if (c.accept('!')) g.negate = true;
        size_t at = c.i;
        std::string w = c.ident();
        auto t = reg_token(w, c, at);
        if (!t || (t->kind != OperandKind::Pred && t->kind != OperandKind::UPred))
            c.fail_at(at, "guard must be a predicate register");
        g.pred = t->index;
        g.uniform = t->kind == OperandKind::UPred;
        inst.guard = g;
    }
    c.ws();
    size_t mcol = c.i;
    std::string full = c.word();
    std::vector<std::string> parts;
    {
        std::stringstream ss(full);
        std::string p;
        while (std::getline(ss, p, '.')) parts.push_back(p);
    }
    std::string mn = parts.empty() ? "" : parts[0];
    bool cs2r = false;
    if (mn == "CS2R") {
        mn = "CLOCK";
        cs2r = true;
    }
    auto op = opcode_from_mnemonic(mn);
    if (!op) c.fail_at(mcol, "unknown mnemonic '" + mn + "'");
    inst.op = *op;
    const OpInfo& info = op_info(inst.op);

    bool has_e = false, has_le = false, has_sync = false;
    bool have_cmp = false;
    for (size_t k = 1; k < parts.size(); ++k) {
        const std::string& m = parts[k];
        if (info.unit == UnitClass::Memory && (m == "32" || m == "64" || m == "128")) {
            if (inst.width) c.fail_at(mcol, "duplicate width modifier");
            inst.width = std::stoi(m);
        } else if (m == "E" && (inst.op == Opcode::LDG || inst.op == Opcode::STG || inst.op == Opcode::LDGSTS)) {
            has_e = true;
        } else if (m == "LE" && inst.op == Opcode::DEPBAR) {
            has_le = true;
        } else if (m == "SYNC" && inst.op == Opcode::BAR) {
            has_sync = true;
        } else if (inst.op == Opcode::ISETP && !have_cmp) {
            bool found = false;
            for (int k2 = 0; k2 < 6; ++k2)
                if (m == kCmpNames[k2]) {
                    inst.cmp = CmpOp(k2);
                    found = true;
                }
            if (!found) c.fail_at(mcol, "unknown comparison '" + m + "'");
            have_cmp = true;
        } else {
            c.fail_at(mcol, "unknown modifier '." + m + "' for " + mn);
        }
    }
    (void)has_e;
    (void)has_sync;
    if (info.unit == UnitClass::Memory && !inst.width) inst.width = 32;
    if (inst.op == Opcode::ISETP && !have_cmp) c.fail_at(mcol, "ISETP requires a comparison modifier");
    if (inst.op == Opcode::DEPBAR && !has_le) c.fail_at(mcol, "DEPBAR requires .LE");
    if (inst.op == Opcode::LDC && inst.width == 128) c.fail_at(mcol, "LDC supports 32 or 64 bit widths");

    std::vector<RawOperand> ops;
    if (c.peek() != ';') {
        if (inst.op == Opcode::DEPBAR) {
            c.ws();
            size_t at = c.i;
            std::string w = c.ident();
            if (w.size() != 3 || w[0] != 'S' || w[1] != 'B' || !std::isdigit((unsigned char)w[2]) || w[2] > '5')
                c.fail_at(at, "expected SB0..SB5");
            DepbarArgs d;
            d.counter = w[2] - '0';
            c.expect(',');
            c.ws();
            size_t tat = c.i;
            uint32_t thr = number(c);
            if (thr > uint32_t(kMaxCounter)) c.fail_at(tat, "DEPBAR threshold exceeds 63");
            d.threshold = int(thr);
            if (c.accept(',')) {
                c.expect('{');
                while (true) {
                    c.ws();
                    size_t eat = c.i;
                    uint32_t v = number(c);
                    if (v > 5) c.fail_at(eat, "counter id " + std::to_string(v) + " > 5");
                    d.extra.push_back(int(v));
                    if (c.accept('}')) break;
                    c.expect(',');
                }
            }
            inst.depbar = d;
        } else {
            do {
                ops.push_back(operand(c));
            } while (c.accept(','));
        }
    }
    c.expect(';');
    if (!c.eof()) c.fail("unexpected text after ';'");

    for (auto& r : ops)
        if (!r.label.empty() && !(inst.op == Opcode::BRA) && !(cs2r && r.label == "SR_CLOCKLO"))
            c.fail_at(r.col, "unexpected identifier '" + r.label + "'");

    auto want = [&](size_t n) {
        if (ops.size() != n)
            c.fail_at(mcol, std::string(info.mnemonic) + " expects " + std::to_string(n) + " operands, got " +
                                std::to_string(ops.size()));
    };
    auto set_srcs = [&](size_t from) {
        for (size_t k = from; k < ops.size(); ++k) {
            size_t pos = k - from;
            inst.srcs.push_back(ops[k].op);
            if (ops[k].reuse) {
                if (pos >= 4) c.fail_at(ops[k].col, "reuse flag beyond operand position 4");
                inst.ctrl.reuse[pos] = true;
            }
        }
    };
    auto no_reuse = [&]() {
        for (auto& r : ops)
            if (r.reuse) c.fail_at(r.col, "reuse flags are only valid on fixed-latency arithmetic sources");
    };
    int cnt = inst.width ? inst.width / 32 : 1;

    switch (inst.op) {
        case Opcode::FFMA:
        case Opcode::IADD3:
        case Opcode::IMAD:
        case Opcode::FADD:
        case Opcode::FMUL:
        case Opcode::MOV:
        case Opcode::ISETP: {
            size_t nsrc = (inst.op == Opcode::FADD || inst.op == Opcode::FMUL || inst.op == Opcode::ISETP) ? 2
                          : inst.op == Opcode::MOV                                                        ? 1
                                                                                                          : 3;
            want(nsrc + 1);
            const Operand& d = ops[0].op;
            if (ops[0].reuse) c.fail_at(ops[0].col, "reuse flag on destination");
            if (inst.op == Opcode::ISETP) {
                if (d.kind != OperandKind::Pred) c.fail_at(ops[0].col, "ISETP destination must be a predicate");
            } else if (inst.op == Opcode::MOV) {
                if (d.kind != OperandKind::Reg && d.kind != OperandKind::UReg)
                    c.fail_at(ops[0].col, "MOV destination must be R or UR");
            } else if (d.kind != OperandKind::Reg) {
                c.fail_at(ops[0].col, "destination must be a regular register");
            }
            inst.dest = d;
            for (size_t k = 1; k < ops.size(); ++k)
                if (!is_value_operand(ops[k].op))
                    c.fail_at(ops[k].col, "source must be a register, immediate or c[bank][imm]");
            if (inst.op == Opcode::MOV && d.kind == OperandKind::UReg &&
                ops[1].op.kind == OperandKind::Reg)
                c.fail_at(ops[1].col, "uniform MOV cannot read a regular register");
            set_srcs(1);
            break;
        }
        case Opcode::S2R: {
            want(2);
            no_reuse();
            if (ops[0].op.kind != OperandKind::Reg) c.fail_at(ops[0].col, "S2R destination must be R");
            if (ops[1].op.kind != OperandKind::Special) c.fail_at(ops[1].col, "S2R source must be SR_*");
            inst.dest = ops[0].op;
            inst.srcs.push_back(ops[1].op);
            break;
        }
        case Opcode::CLOCK: {
            want(cs2r ? 2 : 1);
            no_reuse();
            if (ops[0].op.kind != OperandKind::Reg) c.fail_at(ops[0].col, "CLOCK destination must be R");
            if (cs2r && ops[1].label != "SR_CLOCKLO") c.fail_at(ops[1].col, "CS2R supports SR_CLOCKLO only");
            inst.dest = ops[0].op;
            break;
        }
        case Opcode::NOP:
        case Opcode::EXIT:
            want(0);
            break;
        case Opcode::BAR:
            if (ops.size() == 1 && ops[0].op.kind == OperandKind::Imm && ops[0].op.value == 0) ops.clear();
            want(0);
            break;
        case Opcode::DEPBAR:
            break;
        case Opcode::BRA: {
            want(1);
            if (!ops[0].label.empty())
                label_out = ops[0].label;
            else if (ops[0].op.kind == OperandKind::Imm)
                inst.target = ops[0].op.value;
            else
                c.fail_at(ops[0].col, "BRA target must be a label or address");
            break;
        }
        case Opcode::LDG:
        case Opcode::LDS: {
            want(2);
            no_reuse();
            Operand d = ops[0].op;
            d.count = cnt;
            check_reg_group(c, ops[0].col, d, "load destination");
            if (ops[1].op.kind != OperandKind::Mem) c.fail_at(ops[1].col, "load source must be [address]");
            inst.dest = d;
            inst.srcs.push_back(ops[1].op);
            break;
        }
        case Opcode::LDC: {
            want(2);
            no_reuse();
            Operand d = ops[0].op;
            d.count = cnt;
            check_reg_group(c, ops[0].col, d, "LDC destination");
            const Operand& s = ops[1].op;
            if (s.kind != OperandKind::Const) c.fail_at(ops[1].col, "LDC source must be c[bank][address]");
            if (s.mode == AddrMode::Uniform) c.fail_at(ops[1].col, "LDC supports immediate or regular addressing");
            if (s.mode == AddrMode::Immediate && cnt != 1)
                c.fail_at(ops[1].col, "64-bit LDC requires a regular-register address");
            inst.dest = d;
            inst.srcs.push_back(s);
            break;
        }
        case Opcode::STG:
        case Opcode::STS: {
            want(2);
            no_reuse();
            if (ops[0].op.kind != OperandKind::Mem) c.fail_at(ops[0].col, "store destination must be [address]");
            Operand d = ops[1].op;
            d.count = cnt;
            check_reg_group(c, ops[1].col, d, "store data");
            inst.srcs.push_back(ops[0].op);
            inst.srcs.push_back(d);
            break;
        }
        case Opcode::LDGSTS: {
            want(2);
            no_reuse();
            if (ops[0].op.kind != OperandKind::Mem || ops[1].op.kind != OperandKind::Mem)
                c.fail_at(ops[0].col, "LDGSTS expects [shared], [global]");
            if (ops[1].op.mode != AddrMode::Regular)
                c.fail_at(ops[1].col, "LDGSTS requires a regular-register global address");
            inst.srcs.push_back(ops[0].op);
            inst.srcs.push_back(ops[1].op);
            break;
        }
    }
    return inst;
}

void directive_line(Cursor& c, Program& prog, bool& seen_inst) {
    ++c.i;
    size_t at = c.i;
    std::string d = c.ident();
    if (d == "base") {
        if (seen_inst) c.fail_at(at, ".base must precede instructions");
        prog.base = number(c);
        if (prog.base % kInstBytes) c.fail_at(at, ".base must be 16-byte aligned");
    } else if (d == "deps") {
        std::string m = c.ident();
        if (m == "scoreboard")
            prog.scoreboard = true;
        else if (m == "control_bits")
            prog.scoreboard = false;
        else
            c.fail_at(at, "unknown .deps mode '" + m + "'");
    } else if (d == "warps") {
        uint32_t n = number(c);
        if (n == 0 || n > 64) c.fail_at(at, ".warps must be 1..64");
        prog.warps = int(n);
    } else if (d == "reg" || d == "ureg") {
        c.ws();
        size_t rat = c.i;
        std::string w = c.ident();
        auto t = reg_token(w, c, rat);
        if (!t || (t->kind != OperandKind::Reg && t->kind != OperandKind::UReg))
            c.fail_at(rat, "expected R or UR register");
        c.expect('=');
        RegInit ri;
        ri.kind = t->kind;
        ri.index = t->index;
        ri.value = number(c);
        if (!c.eof()) {
            std::string kw = c.ident();
            if (kw != "lane") c.fail("expected 'lane <stride>'");
            ri.lane_stride = number(c);
            if (ri.kind == OperandKind::UReg) c.fail("uniform registers have no per-lane stride");
        }
        prog.regs.push_back(ri);
    } else if (d == "const") {
        c.ws();
        if (c.peek() != 'c') c.fail("expected c[bank][offset]");
        RawOperand r = operand(c);
        if (r.op.kind != OperandKind::Const || r.op.mode != AddrMode::Immediate) c.fail_at(r.col, "expected c[bank][imm]");
        c.expect('=');
        prog.consts.push_back({r.op.cbank, r.op.value, number(c)});
    } else if (d == "mem") {
        std::string sp = c.ident();
        MemInit mi;
        if (sp == "global")
            mi.space = MemSpace::Global;
        else if (sp == "shared")
            mi.space = MemSpace::Shared;
        else
            c.fail("memory space must be global or shared");
        mi.addr = number(c);
        if (mi.addr % 4) c.fail("memory initializer address must be 4-byte aligned");
        c.expect('=');
        do {
            mi.words.push_back(number(c));
        } while (c.accept(','));
        prog.mems.push_back(mi);
    } else {
        c.fail_at(at, "unknown directive '." + d + "'");
    }
    if (!c.eof()) c.fail("unexpected text after directive");
}

}  // namespace

Program parse_program(const std::string& text) {
    Program prog;
    std::map<std::string, uint32_t> labels;
    std::vector<Pending> pend;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    bool seen_inst = false;
    std::vector<std::pair<std::string, int>> pending_labels;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string s = raw;
        size_t h = s.find('#');
        size_t sl = s.find("//");
        size_t cut = std::min(h, sl);
        if (cut != std::string::npos) s = s.substr(0, cut);
        Cursor c{s, 0, lineno};
        if (c.eof()) continue;
        if (c.peek() == '.') {
            directive_line(c, prog, seen_inst);
            continue;
        }
        // label definitions: "name:" optionally followed by an instruction
        {
            size_t save = c.i;
            c.ws();
            size_t b = c.i;
            while (c.i < s.size() && (std::isalnum((unsigned char)s[c.i]) || s[c.i] == '_')) ++c.i;
            if (c.i > b && c.i < s.size() && s[c.i] == ':' && !std::isdigit((unsigned char)s[b])) {
                std::string name = s.substr(b, c.i - b);
                ++c.i;
                if (labels.count(name) || std::any_of(pending_labels.begin(), pending_labels.end(),
                                                      [&](auto& p) { return p.first == name; }))
                    c.fail_at(b, "duplicate label '" + name + "'");
                pending_labels.push_back({name, lineno});
                if (c.eof()) continue;
            } else {
                c.i = save;
            }
        }
        std::string label;
        Instruction inst = instruction_line(c, label);
        seen_inst = true;
        pend.push_back({inst, label, lineno, 0});
        uint32_t pc = prog.base + uint32_t(pend.size() - 1) * kInstBytes;
        for (auto& pl : pending_labels) labels[pl.first] = pc;
        pending_labels.clear();
    }
    for (auto& pl : pending_labels) labels[pl.first] = prog.base + uint32_t(pend.size()) * kInstBytes;
    for (size_t k = 0; k < pend.size(); ++k) {
        Instruction inst = pend[k].inst;
        inst.pc = prog.base + uint32_t(k) * kInstBytes;
        if (!pend[k].label.empty()) {
            auto it = labels.find(pend[k].label);
            if (it == labels.end()) throw ParseError(pend[k].line, 1, "undefined label '" + pend[k].label + "'");
            inst.target = it->second;
        }
        if (inst.op == Opcode::BRA && (inst.target < prog.base || (inst.target - prog.base) % kInstBytes))
            throw ParseError(pend[k].line, 1, "branch target " + hex(inst.target) + " is not an instruction address");
        prog.insts.push_back(inst);
    }
    return prog;
}

// ---------------------------------------------------------------- encoder

namespace {

std::string operand_text(const Operand& o, bool reuse) {
    std::string s;
    auto addr = [&](AddrMode m, int base, uint32_t off) {
        std::string a;
        if (m == AddrMode::Immediate) return hex(off);
        a = (m == AddrMode::Regular ? (base == kRZ ? std::string("RZ") : "R" + std::to_string(base))
                                    : (base == kURZ ? std::string("URZ") : "UR" + std::to_string(base)));
        if (off) a += "+" + hex(off);
        return a;
    };
    switch (o.kind) {
        case OperandKind::Reg: s = o.index == kRZ ? "RZ" : "R" + std::to_string(o.index); break;
        case OperandKind::UReg: s = o.index == kURZ ? "URZ" : "UR" + std::to_string(o.index); break;
        case OperandKind::Pred: s = o.index == kPT ? "PT" : "P" + std::to_string(o.index); break;
        case OperandKind::UPred: s = o.index == kPT ? "UPT" : "UP" + std::to_string(o.index); break;
        case OperandKind::BReg: s = "B" + std::to_string(o.index); break;
        case OperandKind::Special: s = special_name(o.index); break;
        case OperandKind::Imm: s = hex(o.value); break;
        case OperandKind::Const: s = "c[" + hex(uint32_t(o.cbank)) + "][" + addr(o.mode, o.index, o.value) + "]"; break;
        case OperandKind::Mem: s = "[" + addr(o.mode, o.index, o.value) + "]"; break;
        case OperandKind::None: break;
    }
    if (reuse) s += ".reuse";
    return s;
}

}  // namespace

std::string encode_instruction(const Instruction& inst) {
    std::string s = "[B";
    for (int k = 0; k < 6; ++k) s += inst.ctrl.waits_on(k) ? char('0' + k) : '-';
    s += ":R";
    s += inst.ctrl.read_barrier < 0 ? '-' : char('0' + inst.ctrl.read_barrier);
    s += ":W";
    s += inst.ctrl.write_barrier < 0 ? '-' : char('0' + inst.ctrl.write_barrier);
    s += ":Y";
    s += inst.ctrl.yield ? '1' : '0';
    char st[8];
    std::snprintf(st, sizeof st, ":S%02d] ", inst.ctrl.stall);
    s += st;
    if (inst.guard) {
        s += "@";
        if (inst.guard->negate) s += "!";
        s += inst.guard->uniform ? (inst.guard->pred == kPT ? "UPT" : "UP" + std::to_string(inst.guard->pred))
                                 : (inst.guard->pred == kPT ? "PT" : "P" + std::to_string(inst.guard->pred));
        s += " ";
    }
    s += op_info(inst.op).mnemonic;
    switch (inst.op) {
        case Opcode::LDG:
        case Opcode::STG:
        case Opcode::LDGSTS: s += ".E"; break;
        case Opcode::ISETP: s += std::string(".") + kCmpNames[int(inst.cmp)]; break;
        case Opcode::DEPBAR: s += ".LE"; break;
        default: break;
    }
    if (is_memory(inst.op) && inst.width != 32) s += "." + std::to_string(inst.width);
    std::vector<std::string> ops;
    if (inst.dest) ops.push_back(operand_text(*inst.dest, false));
    if (inst.op == Opcode::BRA) ops.push_back(hex(inst.target));
    if (inst.op == Opcode::DEPBAR && inst.depbar) {
        ops.push_back("SB" + std::to_string(inst.depbar->counter));
        ops.push_back(hex(uint32_t(inst.depbar->threshold)));
        if (!inst.depbar->extra.empty()) {
            std::string l = "{";
            for (size_t k = 0; k < inst.depbar->extra.size(); ++k) {
                if (k) l += ",";
                l += std::to_string(inst.depbar->extra[k]);
            }
            ops.push_back(l + "}");
        }
    }
    for (size_t k = 0; k < inst.srcs.size(); ++k) ops.push_back(operand_text(inst.srcs[k], k < 4 && inst.ctrl.reuse[k]));
    for (size_t k = 0; k < ops.size(); ++k) s += (k ? ", " : " ") + ops[k];
    s += " ;";
    return s;
}

std::string encode_program(const Program& prog) {
    std::ostringstream o;
    o << ".base " << hex(prog.base) << "\n";
    if (prog.scoreboard) o << ".deps scoreboard\n";
    if (prog.warps) o << ".warps " << prog.warps << "\n";
    for (const auto& r : prog.regs) {
        o << ".reg " << operand_text(r.kind == OperandKind::Reg ? Operand::reg(r.index) : Operand::ureg(r.index), false)
          << " = " << hex(r.value);
        if (r.lane_stride) o << " lane " << hex(r.lane_stride);
        o << "\n";
    }
    for (const auto& c : prog.consts)
        o << ".const c[" << hex(uint32_t(c.bank)) << "][" << hex(c.offset) << "] = " << hex(c.value) << "\n";
    for (const auto& m : prog.mems) {
        o << ".mem " << (m.space == MemSpace::Shared ? "shared " : "global ") << hex(m.addr) << " =";
        for (size_t k = 0; k < m.words.size(); ++k) o << (k ? ", " : " ") << hex(m.words[k]);
        o << "\n";
    }
    for (const auto& i : prog.insts) o << encode_instruction(i) << "\n";
    return o.str();
}

// ---------------------------------------------------------------- register sets

std::vector<RegRef> regs_read(const Instruction& inst) {
    std::vector<RegRef> out;
    if (inst.guard && inst.guard->pred != kPT)
        out.push_back({inst.guard->uniform ? OperandKind::UPred : OperandKind::Pred, inst.guard->pred});
    for (const auto& o : inst.srcs) {
        switch (o.kind) {
            case OperandKind::Reg:
                if (o.index != kRZ)
                    for (int k = 0; k < o.count; ++k) out.push_back({OperandKind::Reg, o.index + k});
                break;
            case OperandKind::UReg:
                if (o.index != kURZ) out.push_back({OperandKind::UReg, o.index});
                break;
            case OperandKind::Pred:
                if (o.index != kPT) out.push_back({OperandKind::Pred, o.index});
                break;
            case OperandKind::UPred:
                if (o.index != kPT) out.push_back({OperandKind::UPred, o.index});
                break;
            case OperandKind::Const:
            case OperandKind::Mem:
                if (o.mode == AddrMode::Regular && o.index != kRZ) out.push_back({OperandKind::Reg, o.index});
                if (o.mode == AddrMode::Uniform && o.index != kURZ) out.push_back({OperandKind::UReg, o.index});
                break;
            default: break;
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<RegRef> regs_written(const Instruction& inst) {
    std::vector<RegRef> out;
    if (!inst.dest) return out;
    const Operand& d = *inst.dest;
    if (d.kind == OperandKind::Reg && d.index != kRZ)
        for (int k = 0; k < d.count; ++k) out.push_back({OperandKind::Reg, d.index + k});
    if (d.kind == OperandKind::UReg && d.index != kURZ) out.push_back({OperandKind::UReg, d.index});
    if (d.kind == OperandKind::Pred && d.index != kPT) out.push_back({OperandKind::Pred, d.index});
    if (d.kind == OperandKind::UPred && d.index != kPT) out.push_back({OperandKind::UPred, d.index});
    return out;
}

std::string reg_name(const RegRef& r) {
    switch (r.kind) {
        case OperandKind::Reg: return "R" + std::to_string(r.index);
        case OperandKind::UReg: return "UR" + std::to_string(r.index);
        case OperandKind::Pred: return "P" + std::to_string(r.index);
        case OperandKind::UPred: return "UP" + std::to_string(r.index);
        default: return "?";
    }
}

// ---------------------------------------------------------------- latency table

namespace {

const char* mode_name(AddrMode m) {
    switch (m) {
        case AddrMode::Immediate: return "immediate";
        case AddrMode::Regular: return "regular";
        case AddrMode::Uniform: return "uniform";
    }
    return "?";
}

std::optional<AddrMode> mode_from(const std::string& s) {
    if (s == "immediate") return AddrMode::Immediate;
    if (s == "regular") return AddrMode::Regular;
    if (s == "uniform") return AddrMode::Uniform;
    return std::nullopt;
}

}  // namespace

LatencyTable LatencyTable::defaults() {
    LatencyTable t;
    for (Opcode op : {Opcode::FFMA, Opcode::FADD, Opcode::FMUL, Opcode::IADD3, Opcode::IMAD, Opcode::MOV,
                      Opcode::ISETP, Opcode::S2R})
        t.fixed[op] = 4;
    for (Opcode op : {Opcode::NOP, Opcode::CLOCK, Opcode::BRA, Opcode::EXIT, Opcode::BAR, Opcode::DEPBAR})
        t.fixed[op] = 1;
    auto row = [&](Opcode op, int w, AddrMode m, int war, std::optional<int> raw) {
        t.memory[{op, w, m}] = {war, raw};
    };
    const AddrMode U = AddrMode::Uniform, R = AddrMode::Regular;
    row(Opcode::LDG, 32, U, 9, 29);
    row(Opcode::LDG, 64, U, 9, 31);
    row(Opcode::LDG, 128, U, 9, 35);
    row(Opcode::LDG, 32, R, 11, 32);
    row(Opcode::LDG, 64, R, 11, 34);
    row(Opcode::LDG, 128, R, 11, 38);
    row(Opcode::STG, 32, U, 10, std::nullopt);
    row(Opcode::STG, 64, U, 12, std::nullopt);
    row(Opcode::STG, 128, U, 16, std::nullopt);
    row(Opcode::STG, 32, R, 14, std::nullopt);
    row(Opcode::STG, 64, R, 16, std::nullopt);
    row(Opcode::STG, 128, R, 20, std::nullopt);
    row(Opcode::LDS, 32, U, 9, 23);
    row(Opcode::LDS, 64, U, 9, 23);
    row(Opcode::LDS, 128, U, 9, 25);
    row(Opcode::LDS, 32, R, 9, 24);
    row(Opcode::LDS, 64, R, 9, 24);
    row(Opcode::LDS, 128, R, 9, 26);
    row(Opcode::STS, 32, U, 10, std::nullopt);
    row(Opcode::STS, 64, U, 12, std::nullopt);
    row(Opcode::STS, 128, U, 16, std::nullopt);
    row(Opcode::STS, 32, R, 12, std::nullopt);
    row(Opcode::STS, 64, R, 14, std::nullopt);
    row(Opcode::STS, 128, R, 18, std::nullopt);
    row(Opcode::LDC, 32, AddrMode::Immediate, 10, 26);
    row(Opcode::LDC, 32, R, 29, 29);
    row(Opcode::LDC, 64, R, 29, 29);
    row(Opcode::LDGSTS, 32, R, 13, 39);
    row(Opcode::LDGSTS, 64, R, 13, 39);
    row(Opcode::LDGSTS, 128, R, 13, 39);
    return t;
}

LatencyTable LatencyTable::from_ini(const std::string& text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw std::runtime_error("latency table: " + std::string(e.what()));
    }
    LatencyTable t = defaults();
    for (const auto& sec : tree) {
        if (sec.first == "fixed") {
            for (const auto& kv : sec.second) {
                auto op = opcode_from_mnemonic(kv.first);
                if (!op || is_memory(*op)) throw std::runtime_error("latency table: unknown fixed opcode '" + kv.first + "'");
                int v = std::stoi(kv.second.data());
                if (v < 1) throw std::runtime_error("latency table: latency must be positive for " + kv.first);
                t.fixed[*op] = v;
            }
        } else if (sec.first == "memory") {
            for (const auto& kv : sec.second) {
                std::stringstream ks(kv.first);
                std::string a, b, c;
                std::getline(ks, a, '.');
                std::getline(ks, b, '.');
                std::getline(ks, c, '.');
                auto op = opcode_from_mnemonic(a);
                auto m = mode_from(c);
                if (!op || !is_memory(*op) || !m || (b != "32" && b != "64" && b != "128"))
                    throw std::runtime_error("latency table: bad memory key '" + kv.first + "'");
                std::istringstream vs(kv.second.data());
                MemLatency ml;
                if (!(vs >> ml.war)) throw std::runtime_error("latency table: missing WAR for " + kv.first);
                int raw;
                if (vs >> raw) ml.raw = raw;
                if (ml.raw && *ml.raw < ml.war && op_info(*op).is_load)
                    throw std::runtime_error("latency table: RAW < WAR for " + kv.first);
                t.memory[{*op, std::stoi(b), *m}] = ml;
            }
        } else {
            throw std::runtime_error("latency table: unknown section [" + sec.first + "]");
        }
    }
    t.check_complete();
    return t;
}

std::string LatencyTable::to_ini() const {
    std::ostringstream o;
    o << "[fixed]\n";
    for (const auto& [op, v] : fixed) o << op_info(op).mnemonic << " = " << v << "\n";
    o << "\n[memory]\n";
    for (const auto& [k, v] : memory) {
        o << op_info(k.op).mnemonic << "." << k.width << "." << mode_name(k.addr) << " = " << v.war;
        if (v.raw) o << " " << *v.raw;
        o << "\n";
    }
    return o.str();
}

void LatencyTable::check_complete() const {
    for (Opcode op : kAllOps) {
        if (is_memory(op)) continue;
        if (!fixed.count(op)) throw std::runtime_error(std::string("latency table: missing entry for ") + op_info(op).mnemonic);
    }
    auto need = [&](Opcode op, int w, AddrMode m) {
        auto it = memory.find({op, w, m});
        if (it == memory.end())
            throw std::runtime_error(std::string("latency table: missing entry for ") + op_info(op).mnemonic + "." +
                                     std::to_string(w) + "." + mode_name(m));
        if (op_info(op).is_load && !it->second.raw)
            throw std::runtime_error(std::string("latency table: load without RAW for ") + op_info(op).mnemonic);
    };
    for (Opcode op : {Opcode::LDG, Opcode::STG, Opcode::LDS, Opcode::STS})
        for (int w : {32, 64, 128})
            for (AddrMode m : {AddrMode::Uniform, AddrMode::Regular}) need(op, w, m);
    need(Opcode::LDC, 32, AddrMode::Immediate);
    need(Opcode::LDC, 32, AddrMode::Regular);
    need(Opcode::LDC, 64, AddrMode::Regular);
    for (int w : {32, 64, 128}) need(Opcode::LDGSTS, w, AddrMode::Regular);
}

AddrMode address_mode(const Instruction& inst) {
    switch (inst.op) {
        case Opcode::LDC: return inst.srcs[0].mode;
        case Opcode::LDGSTS: return inst.srcs[1].mode;
        case Opcode::LDG:
        case Opcode::LDS:
        case Opcode::STG:
        case Opcode::STS:
            // absolute addresses take the uniform datapath
            return inst.srcs[0].mode == AddrMode::Regular ? AddrMode::Regular : AddrMode::Uniform;
        default: return AddrMode::Immediate;
    }
}

Latency lookup_latency(const LatencyTable& table, const Instruction& inst) {
    Latency l;
    if (!is_memory(inst.op)) {
        auto it = table.fixed.find(inst.op);
        if (it == table.fixed.end()) throw std::logic_error(std::string("no latency for ") + op_info(inst.op).mnemonic);
        l.fixed = true;
        l.fixed_latency = it->second;
        return l;
    }
    auto it = table.memory.find({inst.op, inst.width, address_mode(inst)});
    if (it == table.memory.end()) throw std::logic_error("no latency row for " + encode_instruction(inst));
    l.fixed = false;
    l.war = it->second.war;
    l.raw = it->second.raw;
    return l;
}

// ---------------------------------------------------------------- validator

namespace {

int issue_gap(const Instruction& i) { return 1 + std::max(i.ctrl.stall, i.ctrl.yield ? 1 : 0); }

bool intersects(const std::vector<RegRef>& a, const std::vector<RegRef>& b) {
    for (const auto& x : a)
        if (std::find(b.begin(), b.end(), x) != b.end()) return true;
    return false;
}

bool ends_block(const Instruction& i) {
    return i.op == Opcode::EXIT || (i.op == Opcode::BRA && (!i.guard || i.guard->pred == kPT) && !(i.guard && i.guard->negate));
}

// does instruction j (p < j) wait for counter sb incremented by p
bool waits_for(const std::vector<Instruction>& v, size_t p, size_t j, int sb) {
    const Instruction& w = v[j];
    if (w.ctrl.waits_on(sb)) return true;
    if (w.op == Opcode::DEPBAR && w.depbar) {
        for (int e : w.depbar->extra)
            if (e == sb) return true;
        if (w.depbar->counter == sb) {
            int later = 0;
            for (size_t k = p + 1; k < j; ++k)
                if (v[k].ctrl.write_barrier == sb || v[k].ctrl.read_barrier == sb) ++later;
            return later >= w.depbar->threshold;
        }
    }
    return false;
}

std::string hexs(uint32_t v) { return hex(v); }

}  // namespace

bool has_errors(const std::vector<Diagnostic>& diags) {
    return std::any_of(diags.begin(), diags.end(), [](const Diagnostic& d) { return d.severity == "error"; });
}

std::vector<Diagnostic> validate_program(const Program& prog, const LatencyTable& table) {
    std::vector<Diagnostic> out;
    const auto& v = prog.insts;
    auto emit = [&](const char* sev, const Instruction& at, const char* kind, const std::string& msg) {
        out.push_back({sev, at.pc, kind, msg});
    };
    bool any_exit = false;
    for (size_t p = 0; p < v.size(); ++p) {
        const Instruction& ip = v[p];
        if (ip.op == Opcode::EXIT) any_exit = true;
        if (ip.ctrl.write_barrier >= 0 && ip.ctrl.write_barrier == ip.ctrl.read_barrier)
            emit("warning", ip, "shared_counter",
                 "read and write barrier both use SB" + std::to_string(ip.ctrl.write_barrier));
        if (ip.op == Opcode::CLOCK && p + 1 < v.size() && v[p + 1].op == Opcode::CLOCK)
            emit("error", v[p + 1], "clock_back_to_back", "two consecutive CLOCK instructions cannot issue back to back");
        if (prog.scoreboard) continue;

        Latency lat = lookup_latency(table, ip);
        auto written = regs_written(ip);
        auto read = regs_read(ip);
        if (lat.fixed) {
            if (written.empty() || ends_block(ip)) continue;
            int gap = 0;
            for (size_t k = p + 1; k < v.size(); ++k) {
                gap += issue_gap(v[k - 1]);
                if (k - 1 > p && ends_block(v[k - 1])) break;
                const Instruction& ik = v[k];
                if (intersects(regs_read(ik), written)) {
                    if (gap < lat.fixed_latency)
                        emit("error", ik, "raw_uncovered",
                             std::string(op_info(ip.op).mnemonic) + " at " + hexs(ip.pc) + " has latency " +
                                 std::to_string(lat.fixed_latency) + " but the consumer issues after " + std::to_string(gap) +
                                 " cycles");
                    break;
                }
                if (intersects(regs_written(ik), written)) {
                    int lk = is_memory(ik.op) ? lat.fixed_latency : lookup_latency(table, ik).fixed_latency;
                    if (!is_memory(ik.op) && gap + lk <= lat.fixed_latency)
                        emit("error", ik, "waw_uncovered",
                             "overwrites the result of " + hexs(ip.pc) + " before it is written");
                    break;
                }
            }
            continue;
        }

        // variable-latency producer
        auto check = [&](const std::vector<RegRef>& regs, bool war) {
            if (regs.empty()) return;
            std::vector<int> sbs;
            if (war) {
                if (ip.ctrl.read_barrier >= 0) sbs.push_back(ip.ctrl.read_barrier);
                if (ip.ctrl.write_barrier >= 0) sbs.push_back(ip.ctrl.write_barrier);
            } else if (ip.ctrl.write_barrier >= 0) {
                sbs.push_back(ip.ctrl.write_barrier);
            }
            for (size_t k = p + 1; k < v.size(); ++k) {
                if (k - 1 > p && ends_block(v[k - 1])) break;
                const Instruction& ik = v[k];
                bool hit = war ? intersects(regs_written(ik), regs)
                               : (intersects(regs_read(ik), regs) || intersects(regs_written(ik), regs));
                if (!hit) continue;
                bool covered = false, near_only = false;
                for (size_t j = p + 1; j <= k && !covered; ++j)
                    for (int sb : sbs)
                        if (waits_for(v, p, j, sb)) {
                            if (j == p + 1 && !(ip.ctrl.stall >= 2 || ip.ctrl.yield))
                                near_only = true;
                            else
                                covered = true;
                        }
                if (!covered && near_only)
                    emit("error", v[p + 1], "distance1_visibility",
                         "waits on a counter incremented by the previous instruction, which needs stall >= 2 or yield");
                else if (!covered)
                    emit("error", ik, war ? "war_uncovered" : "raw_uncovered",
                         std::string(war ? "overwrites a source of " : "depends on ") + op_info(ip.op).mnemonic + " at " +
                             hexs(ip.pc) + " without waiting on its " + (war ? "read" : "write") + " barrier");
                return;
            }
        };
        check(written, false);
        check(read, true);
    }
    if (!v.empty() && !any_exit)
        out.push_back({"warning", v.back().pc, "no_exit", "program has no EXIT; warps retire when they run off the end"});
    return out;
}

}  // namespace gpusim
