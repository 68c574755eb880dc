#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace m3 {

// Eight-register word machine. R0 carries return values, R1 and R2 are
// scratch, R3 to R5 are preserved across calls. FP and SP frame the stack,
// which grows toward lower addresses.
enum Reg : uint8_t { R0 = 0, R1, R2, R3, R4, R5, FP, SP };

inline constexpr int kWord = 8;
inline constexpr int kNumRegs = 8;

const char* reg_name(Reg r);

enum class Op : uint8_t {
    Push = 0x01,  // reg, immediate, or frame slot
    Pop = 0x02,   // into a register
    Mov = 0x03,
    Add = 0x04,
    Sub = 0x05,
    Mul = 0x06,
    Call = 0x07,  // relative to the end of the offset field
    Calli = 0x08, // through an indirection slot
    Ret = 0x09,
    Leave = 0x0A, // SP <- FP, pop FP
    AddSp = 0x0B,
    Ldg = 0x0C,   // reg <- word at address held in a data slot
    Stg = 0x0D,   // word at address held in a data slot <- reg
};

// Second byte of every instruction. Push uses Reg/Imm/Mem; Mov uses all
// four; Add/Sub/Mul use RR/RI/RM. Everything else fixes the mode to 0.
enum class Mode : uint8_t {
    RR = 0,
    RI = 1,
    RM = 2, // [fp+disp] source
    MR = 3, // [fp+disp] destination
};

struct Instr {
    Op op;
    Mode mode = Mode::RR;
    Reg reg1 = R0;     // destination (or single operand)
    Reg reg2 = R0;     // source
    int64_t imm = 0;
    int32_t disp = 0;  // frame-relative displacement
    int32_t rel = 0;   // Call
    uint32_t slot = 0; // Calli, Ldg, Stg
    uint32_t size = 0; // encoded length in bytes
};

// Appends encoded instructions to a byte buffer. The call and slot forms
// return the offset of their 32-bit field so relocations can point at it.
class CodeBuffer {
public:
    void push_reg(Reg r);
    void push_imm(int64_t v);
    void push_mem(int32_t disp);
    void pop(Reg r);
    void mov_rr(Reg dst, Reg src);
    void mov_ri(Reg dst, int64_t v);
    void mov_rm(Reg dst, int32_t disp);
    void mov_mr(int32_t disp, Reg src);
    void alu_rr(Op op, Reg dst, Reg src);
    void alu_ri(Op op, Reg dst, int64_t v);
    void alu_rm(Op op, Reg dst, int32_t disp);
    size_t call_rel();  // field written as 0, patched later
    size_t calli_slot();
    void ret();
    void leave();
    void addsp(int32_t delta);
    size_t ldg(Reg dst);
    size_t stg(Reg src);

    size_t size() const { return bytes_.size(); }
    const std::vector<uint8_t>& bytes() const { return bytes_; }
    std::vector<uint8_t> take() { return std::move(bytes_); }
    void patch_u32(size_t at, uint32_t v);

private:
    void op_mode(Op op, Mode m);
    void le32(uint32_t v);
    void le64(uint64_t v);

    std::vector<uint8_t> bytes_;
};

// Decodes one instruction at `at`. Raises TrapBadOpcode on junk or when the
// instruction runs past the end of the code.
Instr decode_instr(std::span<const uint8_t> code, size_t at);

std::string format_instr(const Instr& ins, size_t at);

// Formats a whole code section, one instruction per line:
//   0010: 03 02 01 10 00 00 00              mov r1, [fp+16]
std::string disassemble(std::span<const uint8_t> code);

} // namespace m3
