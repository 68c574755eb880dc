#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace m3 {

// Code reaches the generator as a flat event stream per unit: procedures are
// bracketed by BeginProc/EndProc, the optional module body by
// InitBegin/InitEnd, and everything in between manipulates an operand stack.
enum class IrOp : uint8_t {
    BeginProc,
    DeclareLocal,
    Load,       // push param or local
    Store,      // pop into param or local
    Literal,    // push constant
    Add,        // pop two, push result
    Sub,
    Mul,
    Call,       // pop n_args, push result if the callee returns one
    LoadGlobal, // push a module variable
    StoreGlobal,
    ExitProc,   // consume the return value (if any); control leaves here
    EndProc,
    InitBegin,
    InitEnd,
};

struct IrSlot {
    enum Kind : uint8_t { Param, Local } kind = Param;
    uint32_t index = 0;

    bool operator==(const IrSlot&) const = default;
};

struct IrEvent {
    IrOp op;
    int line = 0;

    std::string name;           // BeginProc, DeclareLocal, Call (symbol), LoadGlobal, StoreGlobal
    uint32_t n_params = 0;      // BeginProc
    uint32_t n_locals = 0;      // BeginProc
    bool returns_value = false; // BeginProc, Call
    bool exported = false;      // BeginProc: named in the unit's interface
    IrSlot slot;                // Load, Store
    int64_t value = 0;          // Literal
    uint32_t n_args = 0;        // Call
    bool callee_in_unit = false; // Call: target is defined in this unit
};

struct UnitIr {
    std::string unit_name;
    std::vector<IrEvent> events;
    // Module variables in declaration order: mangled name and initial value.
    // They become the unit's data section.
    std::vector<std::pair<std::string, int64_t>> globals;
};

// Checks bracketing and statically-known operand depth: no nested
// procedures, no underflow, depth matching the return kind at ExitProc and
// zero at EndProc/InitEnd. Raises NestedProcedure, StackUnderflow or
// DepthMismatch.
void validate_ir(const UnitIr& ir);

} // namespace m3
