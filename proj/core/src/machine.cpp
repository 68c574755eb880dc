#include "m3/machine.hpp"

#include <cstdio>
#include <sstream>

#include "m3/error.hpp"

namespace m3 {

const char* reg_name(Reg r) {
    switch (r) {
        case R0: return "r0";
        case R1: return "r1";
        case R2: return "r2";
        case R3: return "r3";
        case R4: return "r4";
        case R5: return "r5";
        case FP: return "fp";
        case SP: return "sp";
    }
    return "r?";
}

void CodeBuffer::op_mode(Op op, Mode m) {
    bytes_.push_back(static_cast<uint8_t>(op));
    bytes_.push_back(static_cast<uint8_t>(m));
}

void CodeBuffer::le32(uint32_t v) {
    for (int i = 0; i < 4; i++) bytes_.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void CodeBuffer::le64(uint64_t v) {
    for (int i = 0; i < 8; i++) bytes_.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void CodeBuffer::push_reg(Reg r) {
    op_mode(Op::Push, Mode::RR);
    bytes_.push_back(r);
}

void CodeBuffer::push_imm(int64_t v) {
    op_mode(Op::Push, Mode::RI);
    le64(static_cast<uint64_t>(v));
}

void CodeBuffer::push_mem(int32_t disp) {
    op_mode(Op::Push, Mode::RM);
    le32(static_cast<uint32_t>(disp));
}

void CodeBuffer::pop(Reg r) {
    op_mode(Op::Pop, Mode::RR);
    bytes_.push_back(r);
}

void CodeBuffer::mov_rr(Reg dst, Reg src) {
    op_mode(Op::Mov, Mode::RR);
    bytes_.push_back(dst);
    bytes_.push_back(src);
}

void CodeBuffer::mov_ri(Reg dst, int64_t v) {
    op_mode(Op::Mov, Mode::RI);
    bytes_.push_back(dst);
    le64(static_cast<uint64_t>(v));
}

void CodeBuffer::mov_rm(Reg dst, int32_t disp) {
    op_mode(Op::Mov, Mode::RM);
    bytes_.push_back(dst);
    le32(static_cast<uint32_t>(disp));
}

void CodeBuffer::mov_mr(int32_t disp, Reg src) {
    op_mode(Op::Mov, Mode::MR);
    le32(static_cast<uint32_t>(disp));
    bytes_.push_back(src);
}

void CodeBuffer::alu_rr(Op op, Reg dst, Reg src) {
    op_mode(op, Mode::RR);
    bytes_.push_back(dst);
    bytes_.push_back(src);
}

void CodeBuffer::alu_ri(Op op, Reg dst, int64_t v) {
    op_mode(op, Mode::RI);
    bytes_.push_back(dst);
    le64(static_cast<uint64_t>(v));
}

void CodeBuffer::alu_rm(Op op, Reg dst, int32_t disp) {
    op_mode(op, Mode::RM);
    bytes_.push_back(dst);
    le32(static_cast<uint32_t>(disp));
}

size_t CodeBuffer::call_rel() {
    op_mode(Op::Call, Mode::RR);
    size_t at = bytes_.size();
    le32(0);
    return at;
}

size_t CodeBuffer::calli_slot() {
    op_mode(Op::Calli, Mode::RR);
    size_t at = bytes_.size();
    le32(0);
    return at;
}

void CodeBuffer::ret() { op_mode(Op::Ret, Mode::RR); }

void CodeBuffer::leave() { op_mode(Op::Leave, Mode::RR); }

void CodeBuffer::addsp(int32_t delta) {
    op_mode(Op::AddSp, Mode::RR);
    le32(static_cast<uint32_t>(delta));
}

size_t CodeBuffer::ldg(Reg dst) {
    op_mode(Op::Ldg, Mode::RR);
    bytes_.push_back(dst);
    size_t at = bytes_.size();
    le32(0);
    return at;
}

size_t CodeBuffer::stg(Reg src) {
    op_mode(Op::Stg, Mode::RR);
    size_t at = bytes_.size();
    le32(0);
    bytes_.push_back(src);
    return at;
}

void CodeBuffer::patch_u32(size_t at, uint32_t v) {
    for (int i = 0; i < 4; i++) bytes_[at + i] = static_cast<uint8_t>(v >> (8 * i));
}

namespace {

[[noreturn]] void bad(size_t at, const std::string& what) {
    throw Error(Err::TrapBadOpcode, what + " at offset " + std::to_string(at));
}

struct Cursor {
    std::span<const uint8_t> code;
    size_t start;
    size_t pos;

    uint8_t u8() {
        if (pos >= code.size()) bad(start, "truncated instruction");
        return code[pos++];
    }
    uint32_t u32() {
        uint32_t v = 0;
        for (int i = 0; i < 4; i++) v |= static_cast<uint32_t>(u8()) << (8 * i);
        return v;
    }
    uint64_t u64() {
        uint64_t v = 0;
        for (int i = 0; i < 8; i++) v |= static_cast<uint64_t>(u8()) << (8 * i);
        return v;
    }
    Reg reg() {
        uint8_t r = u8();
        if (r >= kNumRegs) bad(start, "bad register " + std::to_string(r));
        return static_cast<Reg>(r);
    }
};

} // namespace

Instr decode_instr(std::span<const uint8_t> code, size_t at) {
    Cursor c{code, at, at};
    uint8_t opb = c.u8();
    if (opb < 0x01 || opb > 0x0D) bad(at, "bad opcode " + std::to_string(opb));
    uint8_t modeb = c.u8();
    if (modeb > 3) bad(at, "bad mode " + std::to_string(modeb));

    Instr ins;
    ins.op = static_cast<Op>(opb);
    ins.mode = static_cast<Mode>(modeb);

    auto only_mode0 = [&]() {
        if (modeb != 0) bad(at, "bad mode " + std::to_string(modeb));
    };

    switch (ins.op) {
        case Op::Push:
            switch (ins.mode) {
                case Mode::RR: ins.reg1 = c.reg(); break;
                case Mode::RI: ins.imm = static_cast<int64_t>(c.u64()); break;
                case Mode::RM: ins.disp = static_cast<int32_t>(c.u32()); break;
                case Mode::MR: bad(at, "bad push mode");
            }
            break;
        case Op::Pop:
            only_mode0();
            ins.reg1 = c.reg();
            break;
        case Op::Mov:
            switch (ins.mode) {
                case Mode::RR:
                    ins.reg1 = c.reg();
                    ins.reg2 = c.reg();
                    break;
                case Mode::RI:
                    ins.reg1 = c.reg();
                    ins.imm = static_cast<int64_t>(c.u64());
                    break;
                case Mode::RM:
                    ins.reg1 = c.reg();
                    ins.disp = static_cast<int32_t>(c.u32());
                    break;
                case Mode::MR:
                    ins.disp = static_cast<int32_t>(c.u32());
                    ins.reg2 = c.reg();
                    break;
            }
            break;
        case Op::Add:
        case Op::Sub:
        case Op::Mul:
            switch (ins.mode) {
                case Mode::RR:
                    ins.reg1 = c.reg();
                    ins.reg2 = c.reg();
                    break;
                case Mode::RI:
                    ins.reg1 = c.reg();
                    ins.imm = static_cast<int64_t>(c.u64());
                    break;
                case Mode::RM:
                    ins.reg1 = c.reg();
                    ins.disp = static_cast<int32_t>(c.u32());
                    break;
                case Mode::MR:
                    bad(at, "bad arithmetic mode");
            }
            break;
        case Op::Call:
            only_mode0();
            ins.rel = static_cast<int32_t>(c.u32());
            break;
        case Op::Calli:
            only_mode0();
            ins.slot = c.u32();
            break;
        case Op::Ret:
        case Op::Leave:
            only_mode0();
            break;
        case Op::AddSp:
            only_mode0();
            ins.disp = static_cast<int32_t>(c.u32());
            break;
        case Op::Ldg:
            only_mode0();
            ins.reg1 = c.reg();
            ins.slot = c.u32();
            break;
        case Op::Stg:
            only_mode0();
            ins.slot = c.u32();
            ins.reg2 = c.reg();
            break;
    }
    ins.size = static_cast<uint32_t>(c.pos - at);
    return ins;
}

namespace {

std::string mem_operand(int32_t disp) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "[fp%+d]", disp);
    return buf;
}

const char* alu_name(Op op) {
    switch (op) {
        case Op::Add: return "add";
        case Op::Sub: return "sub";
        case Op::Mul: return "mul";
        default: return "?";
    }
}

} // namespace

std::string format_instr(const Instr& ins, size_t at) {
    std::ostringstream s;
    switch (ins.op) {
        case Op::Push:
            s << "push ";
            if (ins.mode == Mode::RR) s << reg_name(ins.reg1);
            else if (ins.mode == Mode::RI) s << ins.imm;
            else s << mem_operand(ins.disp);
            break;
        case Op::Pop:
            s << "pop " << reg_name(ins.reg1);
            break;
        case Op::Mov:
            s << "mov ";
            switch (ins.mode) {
                case Mode::RR: s << reg_name(ins.reg1) << ", " << reg_name(ins.reg2); break;
                case Mode::RI: s << reg_name(ins.reg1) << ", " << ins.imm; break;
                case Mode::RM: s << reg_name(ins.reg1) << ", " << mem_operand(ins.disp); break;
                case Mode::MR: s << mem_operand(ins.disp) << ", " << reg_name(ins.reg2); break;
            }
            break;
        case Op::Add:
        case Op::Sub:
        case Op::Mul:
            s << alu_name(ins.op) << ' ' << reg_name(ins.reg1) << ", ";
            if (ins.mode == Mode::RR) s << reg_name(ins.reg2);
            else if (ins.mode == Mode::RI) s << ins.imm;
            else s << mem_operand(ins.disp);
            break;
        case Op::Call: {
            // The offset field sits 2 bytes in; the target is relative to the
            // end of the instruction.
            size_t target = at + ins.size + static_cast<size_t>(static_cast<int64_t>(ins.rel));
            char buf[16];
            std::snprintf(buf, sizeof buf, "0x%04zx", target);
            s << "call " << buf;
            break;
        }
        case Op::Calli:
            s << "calli [" << ins.slot << "]";
            break;
        case Op::Ret:
            s << "ret";
            break;
        case Op::Leave:
            s << "leave";
            break;
        case Op::AddSp:
            s << "addsp " << ins.disp;
            break;
        case Op::Ldg:
            s << "ldg " << reg_name(ins.reg1) << ", [" << ins.slot << "]";
            break;
        case Op::Stg:
            s << "stg [" << ins.slot << "], " << reg_name(ins.reg2);
            break;
    }
    return s.str();
}

std::string disassemble(std::span<const uint8_t> code) {
    std::ostringstream out;
    size_t at = 0;
    while (at < code.size()) {
        Instr ins = decode_instr(code, at);
        std::string bytes;
        for (uint32_t i = 0; i < ins.size; i++) {
            if (i > 0) bytes += ' ';
            char buf[4];
            std::snprintf(buf, sizeof buf, "%02x", code[at + i]);
            bytes += buf;
        }
        char head[16];
        std::snprintf(head, sizeof head, "%04zx: ", at);
        out << head;
        out << bytes;
        for (size_t pad = bytes.size(); pad < 32; pad++) out << ' ';
        out << "  " << format_instr(ins, at) << '\n';
        at += ins.size;
    }
    return out.str();
}

} // namespace m3
