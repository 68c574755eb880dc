#include "m3/codegen.hpp"

#include <array>
#include <optional>

#include "m3/error.hpp"

namespace m3 {

namespace {

int64_t wrap(uint64_t v) { return static_cast<int64_t>(v); }

// An operand the frontend has pushed but no instruction has consumed yet.
// Only Register descriptors occupy machine state; the rest are recipes.
struct Operand {
    enum Kind : uint8_t { FrameSlot, TempSlot, Register_, Immediate, Global } kind;
    int32_t disp = 0;      // FrameSlot, TempSlot
    Reg reg = R0;          // Register_
    int64_t value = 0;     // Immediate
    std::string sym;       // Global
    uint64_t age = 0;      // Register_: bind order, oldest spills first
};

class CodeGen {
public:
    explicit CodeGen(const UnitIr& ir) : ir_(ir) {}

    GeneratedUnit run() {
        out_.unit_name = ir_.unit_name;
        emit_data();
        for (const auto& e : ir_.events) event(e);
        out_.text = code_.take();
        return std::move(out_);
    }

private:
    // --- frame bookkeeping ---------------------------------------------

    // Distance from FP to the byte below the saved callee-save registers;
    // SP sits here when no temporaries are pushed.
    int32_t frame_floor() const { return -(static_cast<int32_t>(n_locals_) + 3) * kWord; }

    static int32_t slot_disp(const IrSlot& s) {
        return s.kind == IrSlot::Param ? (2 + static_cast<int32_t>(s.index)) * kWord
                                       : -(static_cast<int32_t>(s.index) + 1) * kWord;
    }

    // --- register pool -------------------------------------------------

    static constexpr std::array<Reg, 5> kPool = {R1, R2, R3, R4, R5};

    int owner_of(Reg r) const { return owner_[r]; }

    void bind(Reg r, size_t stack_index) {
        owner_[r] = static_cast<int>(stack_index);
        Operand& o = stack_[stack_index];
        o.kind = Operand::Register_;
        o.reg = r;
        o.age = next_age_++;
    }

    void unbind(Reg r) { owner_[r] = -1; }

    void spill(Reg r) {
        int idx = owner_[r];
        code_.push_reg(r);
        sp_off_ -= kWord;
        Operand& o = stack_[static_cast<size_t>(idx)];
        o.kind = Operand::TempSlot;
        o.disp = sp_off_;
        unbind(r);
        out_.stats.spills++;
    }

    Reg alloc_reg() {
        for (Reg r : kPool)
            if (owner_[r] < 0 && !pinned_[r]) return r;
        // All taken: spill the register bound longest ago.
        Reg victim = R0;
        uint64_t oldest = ~0ull;
        for (Reg r : kPool) {
            if (pinned_[r] || owner_[r] < 0) continue;
            uint64_t age = stack_[static_cast<size_t>(owner_[r])].age;
            if (age < oldest) {
                oldest = age;
                victim = r;
            }
        }
        if (victim == R0) throw Error(Err::TrapStackOverflow, "no spillable register");
        spill(victim);
        return victim;
    }

    Reg ensure_reg(size_t stack_index) {
        Operand& o = stack_[stack_index];
        if (o.kind == Operand::Register_) return o.reg;
        Reg r = alloc_reg();
        switch (o.kind) {
            case Operand::Immediate: code_.mov_ri(r, o.value); break;
            case Operand::FrameSlot:
            case Operand::TempSlot: code_.mov_rm(r, o.disp); break;
            case Operand::Global: add_reloc(code_.ldg(r), o.sym, RelocKind::IndirectSlot); break;
            case Operand::Register_: break;
        }
        bind(r, stack_index);
        return r;
    }

    // --- emission helpers ----------------------------------------------

    void add_reloc(size_t field_off, const std::string& sym, RelocKind kind) {
        out_.relocs.push_back(Reloc{Section::Text, field_off, sym, kind});
    }

    void note_line(int line) {
        if (line <= 0 || !in_proc_) return;
        uint32_t l = static_cast<uint32_t>(line);
        if (l == last_line_) return;
        last_line_ = l;
        if (!out_.lines.empty() && out_.lines.back().text_offset == code_.size())
            out_.lines.back().line = l;
        else
            out_.lines.push_back(LineRecord{code_.size(), l});
    }

    void push_operand(Operand o) {
        stack_.push_back(std::move(o));
        if (stack_.size() > out_.stats.max_operand_depth)
            out_.stats.max_operand_depth = static_cast<uint32_t>(stack_.size());
    }

    Operand pop_operand() {
        Operand o = std::move(stack_.back());
        stack_.pop_back();
        if (o.kind == Operand::Register_) unbind(o.reg);
        return o;
    }

    void need_depth(size_t n, const char* what) {
        if (stack_.size() < n)
            throw Error(Err::StackUnderflow,
                        std::string(what) + " needs " + std::to_string(n) + " operands, have " +
                            std::to_string(stack_.size()));
    }

    // --- event handlers ------------------------------------------------

    void event(const IrEvent& e) {
        note_line(e.line);
        switch (e.op) {
            case IrOp::BeginProc: begin_proc(e); break;
            case IrOp::DeclareLocal: break; // space reserved in the prologue
            case IrOp::Load:
                push_operand(Operand{Operand::FrameSlot, slot_disp(e.slot)});
                break;
            case IrOp::Literal: {
                Operand o{Operand::Immediate};
                o.value = e.value;
                push_operand(std::move(o));
                break;
            }
            case IrOp::LoadGlobal: {
                Operand o{Operand::Global};
                o.sym = e.name;
                push_operand(std::move(o));
                break;
            }
            case IrOp::Store: store_slot(e); break;
            case IrOp::StoreGlobal: store_global(e); break;
            case IrOp::Add: alu(Op::Add); break;
            case IrOp::Sub: alu(Op::Sub); break;
            case IrOp::Mul: alu(Op::Mul); break;
            case IrOp::Call: call(e); break;
            case IrOp::ExitProc: exit_proc(); break;
            case IrOp::EndProc: end_proc(); break;
            case IrOp::InitBegin: begin_init(e); break;
            case IrOp::InitEnd: end_init(); break;
        }
    }

    void reset_frame(uint32_t n_locals) {
        stack_.clear();
        owner_.fill(-1);
        pinned_.fill(false);
        n_locals_ = n_locals;
        sp_off_ = frame_floor();
        last_line_ = 0;
    }

    void open_symbol(const std::string& name, bool exported) {
        if (in_proc_) throw Error(Err::NestedProcedure, name + " begins inside an open procedure");
        in_proc_ = true;
        sym_start_ = code_.size();
        sym_name_ = name;
        sym_exported_ = exported;
    }

    void close_symbol() {
        out_.symbols.push_back(SymbolDef{sym_name_, Section::Text, sym_start_, SymKind::Proc,
                                         code_.size() - sym_start_, sym_exported_});
        in_proc_ = false;
    }

    void prologue(uint32_t n_locals) {
        code_.push_reg(FP);
        code_.mov_rr(FP, SP);
        if (n_locals > 0) code_.addsp(-static_cast<int32_t>(n_locals) * kWord);
        code_.push_reg(R3);
        code_.push_reg(R4);
        code_.push_reg(R5);
        reset_frame(n_locals);
    }

    void epilogue() {
        if (sp_off_ != frame_floor()) {
            code_.addsp(frame_floor() - sp_off_);
            sp_off_ = frame_floor();
        }
        code_.pop(R5);
        code_.pop(R4);
        code_.pop(R3);
        code_.leave();
        code_.ret();
    }

    void begin_proc(const IrEvent& e) {
        open_symbol(e.name, e.exported);
        returns_value_ = e.returns_value;
        prologue(e.n_locals);
        note_line(e.line); // prologue belongs to the procedure's first line
    }

    void begin_init(const IrEvent& e) {
        open_symbol(e.name, false);
        returns_value_ = false;
        out_.init_symbol = e.name;
        prologue(0);
    }

    void exit_proc() {
        size_t want = returns_value_ ? 1 : 0;
        if (stack_.size() != want)
            throw Error(Err::DepthMismatch, sym_name_ + " exits with operand depth " +
                                                std::to_string(stack_.size()));
        if (returns_value_) {
            Operand o = pop_operand();
            switch (o.kind) {
                case Operand::Register_:
                    if (o.reg != R0) code_.mov_rr(R0, o.reg);
                    break;
                case Operand::Immediate: code_.mov_ri(R0, o.value); break;
                case Operand::FrameSlot:
                case Operand::TempSlot: code_.mov_rm(R0, o.disp); break;
                case Operand::Global:
                    add_reloc(code_.ldg(R0), o.sym, RelocKind::IndirectSlot);
                    break;
            }
        }
    }

    void end_proc() {
        if (!stack_.empty())
            throw Error(Err::DepthMismatch,
                        sym_name_ + " ends with " + std::to_string(stack_.size()) +
                            " operands on the stack");
        epilogue();
        close_symbol();
    }

    void end_init() {
        exit_proc(); // depth must be zero; emits nothing
        end_proc();
    }

    // Entries holding the named global still describe its pre-store value;
    // pin them down before the store makes the recipe read the new one.
    void flush_global_aliases(const std::string& sym) {
        for (size_t i = 0; i < stack_.size(); i++)
            if (stack_[i].kind == Operand::Global && stack_[i].sym == sym) ensure_reg(i);
    }

    void flush_frame_aliases(int32_t disp) {
        for (size_t i = 0; i < stack_.size(); i++)
            if (stack_[i].kind == Operand::FrameSlot && stack_[i].disp == disp) ensure_reg(i);
    }

    void store_slot(const IrEvent& e) {
        need_depth(1, "store");
        int32_t disp = slot_disp(e.slot);
        flush_frame_aliases(disp);
        Reg r = ensure_reg(stack_.size() - 1);
        code_.mov_mr(disp, r);
        pop_operand();
    }

    void store_global(const IrEvent& e) {
        need_depth(1, "store");
        flush_global_aliases(e.name);
        Reg r = ensure_reg(stack_.size() - 1);
        add_reloc(code_.stg(r), e.name, RelocKind::IndirectSlot);
        pop_operand();
    }

    void alu(Op op) {
        need_depth(2, "arithmetic");
        size_t rhs = stack_.size() - 1;
        size_t lhs = stack_.size() - 2;

        if (stack_[lhs].kind == Operand::Immediate && stack_[rhs].kind == Operand::Immediate) {
            uint64_t a = static_cast<uint64_t>(stack_[lhs].value);
            uint64_t b = static_cast<uint64_t>(stack_[rhs].value);
            int64_t folded = op == Op::Add ? wrap(a + b)
                           : op == Op::Sub ? wrap(a - b)
                                           : wrap(a * b);
            pop_operand();
            pop_operand();
            Operand o{Operand::Immediate};
            o.value = folded;
            push_operand(std::move(o));
            return;
        }

        Reg dst = ensure_reg(lhs);
        pinned_[dst] = true;
        switch (stack_[rhs].kind) {
            case Operand::Register_: code_.alu_rr(op, dst, stack_[rhs].reg); break;
            case Operand::Immediate: code_.alu_ri(op, dst, stack_[rhs].value); break;
            case Operand::FrameSlot:
            case Operand::TempSlot: code_.alu_rm(op, dst, stack_[rhs].disp); break;
            case Operand::Global: code_.alu_rr(op, dst, ensure_reg(rhs)); break;
        }
        pinned_[dst] = false;
        pop_operand();
        // The destination register now holds the result; refresh its age.
        stack_[lhs].age = next_age_++;
    }

    void call(const IrEvent& e) {
        need_depth(e.n_args, "call");
        size_t arg_base = stack_.size() - e.n_args;

        // Values that do not survive the call leave their registers now:
        // R0-R2 are caller-save, and a lazy global read must happen before
        // the callee can store to it.
        for (size_t i = 0; i < arg_base; i++) {
            Operand& o = stack_[i];
            if (o.kind == Operand::Global) ensure_reg(i);
            if (o.kind == Operand::Register_ && (o.reg == R0 || o.reg == R1 || o.reg == R2))
                spill(o.reg);
        }
        // Argument recipes that need a register load (globals) take one
        // before any argument is pushed, so allocator spills cannot land
        // inside the argument block.
        for (size_t i = arg_base; i < stack_.size(); i++)
            if (stack_[i].kind == Operand::Global) ensure_reg(i);

        for (uint32_t k = 0; k < e.n_args; k++) {
            Operand o = pop_operand();
            switch (o.kind) {
                case Operand::Immediate: code_.push_imm(o.value); break;
                case Operand::Register_: code_.push_reg(o.reg); break;
                case Operand::FrameSlot:
                case Operand::TempSlot: code_.push_mem(o.disp); break;
                case Operand::Global:
                    throw Error(Err::DepthMismatch, "unmaterialized global argument");
            }
            sp_off_ -= kWord;
        }

        if (e.callee_in_unit)
            add_reloc(code_.call_rel(), e.name, RelocKind::PcRel32);
        else
            add_reloc(code_.calli_slot(), e.name, RelocKind::IndirectSlot);

        if (e.n_args > 0) {
            code_.addsp(static_cast<int32_t>(e.n_args) * kWord);
            sp_off_ += static_cast<int32_t>(e.n_args) * kWord;
        }

        if (e.returns_value) {
            push_operand(Operand{});
            bind(R0, stack_.size() - 1);
        }
    }

    void emit_data() {
        for (const auto& [name, init] : ir_.globals) {
            uint64_t off = out_.data.size();
            uint64_t v = static_cast<uint64_t>(init);
            for (int i = 0; i < kWord; i++)
                out_.data.push_back(static_cast<uint8_t>(v >> (8 * i)));
            out_.symbols.push_back(
                SymbolDef{name, Section::Data, off, SymKind::Data, kWord, false});
        }
    }

    const UnitIr& ir_;
    GeneratedUnit out_;
    CodeBuffer code_;

    std::vector<Operand> stack_;
    std::array<int, kNumRegs> owner_{};
    std::array<bool, kNumRegs> pinned_{};
    uint64_t next_age_ = 0;

    bool in_proc_ = false;
    bool returns_value_ = false;
    uint32_t n_locals_ = 0;
    int32_t sp_off_ = 0;
    size_t sym_start_ = 0;
    std::string sym_name_;
    bool sym_exported_ = false;
    uint32_t last_line_ = 0;
};

} // namespace

GeneratedUnit generate_code(const UnitIr& ir) {
    CodeGen gen(ir);
    return gen.run();
}

} // namespace m3
