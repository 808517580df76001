#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gpusim {

using Cycle = int64_t;

constexpr int kNumRegs = 256;
constexpr int kRZ = 255;
constexpr int kNumURegs = 64;
constexpr int kURZ = 63;
constexpr int kNumPreds = 8;
constexpr int kPT = 7;
constexpr int kNumBRegs = 16;
constexpr int kNumCounters = 6;
constexpr int kMaxCounter = 63;
constexpr int kMaxStall = 15;
constexpr int kWarpSize = 32;
constexpr uint32_t kInstBytes = 16;

enum class OperandKind : uint8_t { None, Reg, UReg, Pred, UPred, BReg, Special, Imm, Const, Mem };

// base register of a constant or memory address operand
enum class AddrMode : uint8_t { Immediate, Regular, Uniform };

enum class SpecialReg : uint8_t { TidX, LaneId, WarpId, CtaIdX };

struct Operand {
    OperandKind kind = OperandKind::None;
    int index = 0;
    int count = 1;
    uint32_t value = 0;
    int cbank = 0;
    AddrMode mode = AddrMode::Immediate;
    bool operator==(const Operand&) const = default;

    static Operand reg(int idx, int count = 1);
    static Operand ureg(int idx);
    static Operand pred(int idx);
    static Operand imm(uint32_t v);
    static Operand constant(int bank, uint32_t offset, AddrMode mode = AddrMode::Immediate, int base = 0);
    static Operand mem(AddrMode mode, int base, uint32_t offset);
    static Operand special(SpecialReg r);
};

enum class Opcode : uint8_t {
    FFMA, FADD, FMUL, IADD3, IMAD, MOV, ISETP, S2R,
    NOP, CLOCK, BRA, EXIT, BAR, DEPBAR,
    LDG, STG, LDS, STS, LDC, LDGSTS
};

enum class UnitClass : uint8_t { Fp32, Int32, FixedMisc, Memory, Control };
enum class MemSpace : uint8_t { None, Global, Shared, Constant };
enum class CmpOp : uint8_t { LT, EQ, LE, GT, NE, GE };

struct OpInfo {
    const char* mnemonic;
    UnitClass unit;
    MemSpace space;
    bool is_load;
    bool is_store;
};

const OpInfo& op_info(Opcode op);
bool is_memory(Opcode op);
std::optional<Opcode> opcode_from_mnemonic(const std::string& m);

struct ControlBits {
    int stall = 0;
    bool yield = false;
    int write_barrier = -1;
    int read_barrier = -1;
    uint8_t wait_mask = 0;
    std::array<bool, 4> reuse{};
    bool operator==(const ControlBits&) const = default;

    bool waits_on(int sb) const { return (wait_mask >> sb) & 1; }
};

struct Guard {
    int pred = 0;
    bool negate = false;
    bool uniform = false;
    bool operator==(const Guard&) const = default;
};

struct DepbarArgs {
    int counter = 0;
    int threshold = 0;
    std::vector<int> extra;
    bool operator==(const DepbarArgs&) const = default;
};

struct Instruction {
    uint32_t pc = 0;
    Opcode op = Opcode::NOP;
    int width = 0;
    CmpOp cmp = CmpOp::LT;
    std::optional<Operand> dest;
    std::vector<Operand> srcs;
    ControlBits ctrl;
    std::optional<Guard> guard;
    std::optional<DepbarArgs> depbar;
    uint32_t target = 0;
    bool operator==(const Instruction&) const = default;
};

struct RegInit {
    OperandKind kind = OperandKind::Reg;
    int index = 0;
    uint32_t value = 0;
    uint32_t lane_stride = 0;
    bool operator==(const RegInit&) const = default;
};

struct ConstInit {
    int bank = 0;
    uint32_t offset = 0;
    uint32_t value = 0;
    bool operator==(const ConstInit&) const = default;
};

struct MemInit {
    MemSpace space = MemSpace::Global;
    uint32_t addr = 0;
    std::vector<uint32_t> words;
    bool operator==(const MemInit&) const = default;
};

struct Program {
    uint32_t base = 0;
    bool scoreboard = false;
    int warps = 0;
    std::vector<RegInit> regs;
    std::vector<ConstInit> consts;
    std::vector<MemInit> mems;
    std::vector<Instruction> insts;
    bool operator==(const Program&) const = default;

    const Instruction* at(uint32_t pc) const;
    uint32_t end_pc() const { return base + uint32_t(insts.size()) * kInstBytes; }
};

class ParseError : public std::runtime_error {
public:
    ParseError(int line, int col, const std::string& msg);
    int line;
    int col;
};

Program parse_program(const std::string& text);
std::string encode_program(const Program& prog);
std::string encode_instruction(const Instruction& inst);

int bank_of(int reg, int banks = 2);

// registers touched by an operand, as (kind, index) pairs
struct RegRef {
    OperandKind kind;
    int index;
    auto operator<=>(const RegRef&) const = default;
};
std::vector<RegRef> regs_read(const Instruction& inst);
std::vector<RegRef> regs_written(const Instruction& inst);
std::string reg_name(const RegRef& r);

// ---- latency table ----

struct MemKey {
    Opcode op;
    int width;
    AddrMode addr;
    auto operator<=>(const MemKey&) const = default;
};

struct MemLatency {
    int war = 0;
    std::optional<int> raw;
};

struct Latency {
    bool fixed = true;
    int fixed_latency = 0;
    int war = 0;
    std::optional<int> raw;
};

struct LatencyTable {
    std::map<Opcode, int> fixed;
    std::map<MemKey, MemLatency> memory;

    static LatencyTable defaults();
    static LatencyTable from_ini(const std::string& text);
    std::string to_ini() const;
    void check_complete() const;
};

AddrMode address_mode(const Instruction& inst);
Latency lookup_latency(const LatencyTable& table, const Instruction& inst);

// ---- static validation ----

struct Diagnostic {
    std::string severity;
    uint32_t pc = 0;
    std::string kind;
    std::string message;
    bool operator==(const Diagnostic&) const = default;
};

std::vector<Diagnostic> validate_program(const Program& prog, const LatencyTable& table);
bool has_errors(const std::vector<Diagnostic>& diags);

}  // namespace gpusim
