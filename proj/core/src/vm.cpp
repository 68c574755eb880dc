#include "m3/vm.hpp"

#include <cstdio>

#include "m3/error.hpp"
#include "m3/machine.hpp"

namespace m3 {
namespace {

// Return address pushed at the bottom of an activation; RET to it ends the
// activation. Never a valid text address (the load base is 8-aligned and
// well above 1).
constexpr uint64_t kRetSentinel = 1;

uint64_t align8(uint64_t v) { return (v + 7) & ~uint64_t{7}; }

std::string hex_addr(uint64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(v));
    return buf;
}

// Registers a callee must preserve, snapshotted at every call and checked at
// the matching return.
struct ShadowFrame {
    uint64_t ret;
    uint64_t r3, r4, r5, fp;
};

class Vm {
public:
    Vm(const Image& image, const VmOptions& opts) : img_(image), opts_(opts) {
        if (opts.base == 0 || opts.base % kWord != 0)
            throw Error(Err::ScenarioInvalid, "load base must be a nonzero multiple of 8");
        if (opts.stack_bytes < 64 * kWord || opts.stack_bytes % kWord != 0)
            throw Error(Err::ScenarioInvalid, "stack size must be a reasonable multiple of 8");
        text_base_ = opts.base;
        data_base_ = align8(text_base_ + img_.text.size());
        slots_base_ = align8(data_base_ + img_.data.size());
        stack_floor_ = align8(slots_base_ + kWord * img_.slots.size());
        mem_end_ = stack_floor_ + opts.stack_bytes;
        mem_.assign(mem_end_ - text_base_, 0);
        if (!img_.text.empty())
            std::copy(img_.text.begin(), img_.text.end(), mem_.begin());
        if (!img_.data.empty())
            std::copy(img_.data.begin(), img_.data.end(),
                      mem_.begin() + (data_base_ - text_base_));
        bind_slots();
    }

    VmResult run(const std::string& entry, const std::vector<int64_t>& args) {
        const SymbolDef* sym = entry_symbol(entry);
        for (const auto& mod : img_.init_order) {
            const SymbolDef* init = img_.find_symbol(mod + ".__init");
            if (init && init->section == Section::Text)
                activate(text_base_ + init->offset, {});
        }
        // Wipe initializer residue so the entry's frame contents depend only
        // on its arguments.
        std::fill(mem_.begin() + (stack_floor_ - text_base_), mem_.end(), 0);
        activate(text_base_ + sym->offset, args);

        VmResult res;
        res.value = static_cast<int64_t>(regs_[R0]);
        res.resolutions = resolutions_;
        res.steps = steps_;
        res.data_after.assign(mem_.begin() + (data_base_ - text_base_),
                              mem_.begin() + (data_base_ - text_base_) + img_.data.size());
        return res;
    }

private:
    const SymbolDef* entry_symbol(const std::string& entry) {
        const std::string& name = entry.empty() ? img_.entry : entry;
        if (name.empty())
            throw Error(Err::UndefinedSymbol,
                        "no entry procedure given and the image declares none");
        const SymbolDef* sym = img_.find_symbol(name);
        if (!sym || sym->kind != SymKind::Proc || sym->section != Section::Text)
            throw Error(Err::UndefinedSymbol, "entry '" + name + "' is not a procedure");
        if (!sym->exported)
            throw Error(Err::UndefinedSymbol, "entry '" + name + "' is not exported");
        return sym;
    }

    void bind_slots() {
        for (size_t i = 0; i < img_.slots.size(); ++i) {
            const ImageSlot& s = img_.slots[i];
            if (s.kind == SymKind::Data) {
                const SymbolDef* sym = img_.find_symbol(s.symbol);
                if (!sym || sym->kind != SymKind::Data || sym->section != Section::Data)
                    throw Error(Err::UndefinedSymbol,
                                "data slot refers to unknown global '" + s.symbol + "'");
                wr64(slot_addr(i), data_base_ + sym->offset);
            } else if (opts_.eager_bind) {
                wr64(slot_addr(i), resolve_proc(s.symbol));
            }
            // Lazy procedure slots keep the zero placed at load; the first
            // CALLI through one runs the resolver.
        }
    }

    uint64_t resolve_proc(const std::string& name) {
        const SymbolDef* sym = img_.find_symbol(name);
        if (!sym || sym->kind != SymKind::Proc || sym->section != Section::Text)
            throw Error(Err::TrapUnresolvableStub,
                        "no procedure to bind for stub '" + name + "'");
        return text_base_ + sym->offset;
    }

    uint64_t slot_addr(size_t index) const { return slots_base_ + kWord * index; }

    void check(uint64_t addr, uint64_t n) const {
        if (addr < text_base_ || n > mem_.size() || addr - text_base_ > mem_.size() - n)
            throw Error(Err::TrapStackOverflow,
                        "memory access outside the loaded image at " + hex_addr(addr));
    }

    uint64_t rd64(uint64_t addr) const {
        check(addr, kWord);
        const uint8_t* p = mem_.data() + (addr - text_base_);
        uint64_t v = 0;
        for (int i = 0; i < kWord; ++i)
            v |= static_cast<uint64_t>(p[i]) << (8 * i);
        return v;
    }

    void wr64(uint64_t addr, uint64_t v) {
        check(addr, kWord);
        uint8_t* p = mem_.data() + (addr - text_base_);
        for (int i = 0; i < kWord; ++i)
            p[i] = static_cast<uint8_t>(v >> (8 * i));
    }

    void push(uint64_t v) {
        uint64_t next = regs_[SP] - kWord;
        if (next < stack_floor_ || next >= mem_end_)
            throw Error(Err::TrapStackOverflow, "stack overflow");
        regs_[SP] = next;
        wr64(next, v);
    }

    uint64_t pop() {
        if (regs_[SP] >= mem_end_)
            throw Error(Err::TrapStackOverflow, "pop from an empty stack");
        uint64_t v = rd64(regs_[SP]);
        regs_[SP] += kWord;
        return v;
    }

    uint64_t frame_addr(int32_t disp) const {
        return regs_[FP] + static_cast<uint64_t>(static_cast<int64_t>(disp));
    }

    const ImageSlot& slot_ref(uint32_t index, SymKind want) const {
        if (index >= img_.slots.size())
            throw Error(Err::TrapBadOpcode,
                        "slot index " + std::to_string(index) + " out of range");
        const ImageSlot& s = img_.slots[index];
        if (s.kind != want)
            throw Error(Err::TrapBadOpcode,
                        "slot " + std::to_string(index) + " ('" + s.symbol +
                            "') used with the wrong kind");
        return s;
    }

    void enter(uint64_t ret) {
        push(ret);
        shadow_.push_back({ret, regs_[R3], regs_[R4], regs_[R5], regs_[FP]});
    }

    // Pops the return address and the shadow frame, verifying the stack is
    // balanced and R3/R4/R5/FP were preserved.
    uint64_t leave_frame() {
        uint64_t ret = pop();
        ShadowFrame f = shadow_.back();
        shadow_.pop_back();
        if (ret != f.ret)
            throw Error(Err::TrapCalleeSaveViolation,
                        "return address " + hex_addr(ret) + " does not match the call's " +
                            hex_addr(f.ret) + " (unbalanced stack)");
        const char* clobbered = regs_[R3] != f.r3 ? "r3"
                              : regs_[R4] != f.r4 ? "r4"
                              : regs_[R5] != f.r5 ? "r5"
                              : regs_[FP] != f.fp ? "fp"
                                                  : nullptr;
        if (clobbered)
            throw Error(Err::TrapCalleeSaveViolation,
                        std::string(clobbered) + " clobbered across call returning to " +
                            hex_addr(ret));
        return ret;
    }

    // Runs code starting at `addr` on a fresh stack until the activation's
    // own RET. Used once per module initializer and once for the entry.
    void activate(uint64_t addr, const std::vector<int64_t>& args) {
        regs_[SP] = mem_end_;
        for (size_t i = args.size(); i-- > 0;)
            push(static_cast<uint64_t>(args[i]));
        size_t base_frames = shadow_.size();
        enter(kRetSentinel);

        std::span<const uint8_t> text(mem_.data(), img_.text.size());
        uint64_t pc = addr;
        for (;;) {
            if (++steps_ > opts_.step_limit)
                throw Error(Err::StepLimit,
                            "no result after " + std::to_string(opts_.step_limit) +
                                " instructions");
            if (pc < text_base_ || pc >= text_base_ + img_.text.size())
                throw Error(Err::TrapBadOpcode,
                            "pc outside the text section at " + hex_addr(pc));
            Instr ins = decode_instr(text, pc - text_base_);
            uint64_t next = pc + ins.size;
            switch (ins.op) {
                case Op::Push:
                    if (ins.mode == Mode::RR) push(regs_[ins.reg1]);
                    else if (ins.mode == Mode::RI) push(static_cast<uint64_t>(ins.imm));
                    else push(rd64(frame_addr(ins.disp)));
                    break;
                case Op::Pop:
                    regs_[ins.reg1] = pop();
                    break;
                case Op::Mov:
                    switch (ins.mode) {
                        case Mode::RR: regs_[ins.reg1] = regs_[ins.reg2]; break;
                        case Mode::RI: regs_[ins.reg1] = static_cast<uint64_t>(ins.imm); break;
                        case Mode::RM: regs_[ins.reg1] = rd64(frame_addr(ins.disp)); break;
                        case Mode::MR: wr64(frame_addr(ins.disp), regs_[ins.reg2]); break;
                    }
                    break;
                case Op::Add:
                case Op::Sub:
                case Op::Mul: {
                    uint64_t rhs = ins.mode == Mode::RR   ? regs_[ins.reg2]
                                   : ins.mode == Mode::RI ? static_cast<uint64_t>(ins.imm)
                                                          : rd64(frame_addr(ins.disp));
                    uint64_t& dst = regs_[ins.reg1];
                    if (ins.op == Op::Add) dst += rhs;
                    else if (ins.op == Op::Sub) dst -= rhs;
                    else dst *= rhs;
                    break;
                }
                case Op::Call: {
                    uint64_t target =
                        next + static_cast<uint64_t>(static_cast<int64_t>(ins.rel));
                    enter(next);
                    next = target;
                    break;
                }
                case Op::Calli: {
                    const ImageSlot& s = slot_ref(ins.slot, SymKind::Proc);
                    uint64_t target = rd64(slot_addr(ins.slot));
                    if (target == 0) {
                        target = resolve_proc(s.symbol);
                        wr64(slot_addr(ins.slot), target);
                        resolutions_[s.symbol] += 1;
                    }
                    enter(next);
                    next = target;
                    break;
                }
                case Op::Ret: {
                    uint64_t ret = leave_frame();
                    if (shadow_.size() == base_frames) {
                        // kRetSentinel frame: the activation is complete.
                        return;
                    }
                    next = ret;
                    break;
                }
                case Op::Leave:
                    regs_[SP] = regs_[FP];
                    regs_[FP] = pop();
                    break;
                case Op::AddSp: {
                    uint64_t sp =
                        regs_[SP] + static_cast<uint64_t>(static_cast<int64_t>(ins.disp));
                    if (sp < stack_floor_ || sp > mem_end_)
                        throw Error(Err::TrapStackOverflow,
                                    "stack pointer left the stack region");
                    regs_[SP] = sp;
                    break;
                }
                case Op::Ldg: {
                    const ImageSlot& s = slot_ref(ins.slot, SymKind::Data);
                    (void)s;
                    regs_[ins.reg1] = rd64(rd64(slot_addr(ins.slot)));
                    break;
                }
                case Op::Stg: {
                    const ImageSlot& s = slot_ref(ins.slot, SymKind::Data);
                    (void)s;
                    wr64(rd64(slot_addr(ins.slot)), regs_[ins.reg2]);
                    break;
                }
            }
            pc = next;
        }
    }

    const Image& img_;
    VmOptions opts_;
    uint64_t text_base_ = 0, data_base_ = 0, slots_base_ = 0;
    uint64_t stack_floor_ = 0, mem_end_ = 0;
    std::vector<uint8_t> mem_;
    uint64_t regs_[kNumRegs] = {};
    std::vector<ShadowFrame> shadow_;
    std::map<std::string, uint64_t> resolutions_;
    uint64_t steps_ = 0;
};

} // namespace

VmResult load_and_run(const Image& image, const std::string& entry,
                      const std::vector<int64_t>& args, const VmOptions& opts) {
    Vm vm(image, opts);
    return vm.run(entry, args);
}

} // namespace m3
