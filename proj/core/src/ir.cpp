#include "m3/ir.hpp"

#include "m3/error.hpp"

namespace m3 {

void validate_ir(const UnitIr& ir) {
    bool in_proc = false;
    bool in_init = false;
    bool exited = false;
    bool proc_returns = false;
    int depth = 0;

    auto need = [&](const IrEvent& e, int n) {
        if (depth < n)
            throw Error::at(Err::StackUnderflow, e.line, 0,
                            "operand stack has " + std::to_string(depth) + " entries, need " +
                                std::to_string(n));
    };
    auto in_body = [&](const IrEvent& e) {
        if (!in_proc && !in_init)
            throw Error::at(Err::DepthMismatch, e.line, 0,
                            "code event outside a procedure or module body");
        if (exited)
            throw Error::at(Err::DepthMismatch, e.line, 0, "code event after ExitProc");
    };

    for (const auto& e : ir.events) {
        switch (e.op) {
            case IrOp::BeginProc:
                if (in_proc || in_init)
                    throw Error::at(Err::NestedProcedure, e.line, 0,
                                    "procedure " + e.name + " begins inside another body");
                in_proc = true;
                exited = false;
                proc_returns = e.returns_value;
                depth = 0;
                break;
            case IrOp::DeclareLocal:
                if (!in_proc)
                    throw Error::at(Err::DepthMismatch, e.line, 0,
                                    "DeclareLocal outside a procedure");
                break;
            case IrOp::Load:
            case IrOp::Literal:
            case IrOp::LoadGlobal:
                in_body(e);
                depth++;
                break;
            case IrOp::Add:
            case IrOp::Sub:
            case IrOp::Mul:
                in_body(e);
                need(e, 2);
                depth--;
                break;
            case IrOp::Store:
            case IrOp::StoreGlobal:
                in_body(e);
                need(e, 1);
                depth--;
                break;
            case IrOp::Call:
                in_body(e);
                need(e, static_cast<int>(e.n_args));
                depth -= static_cast<int>(e.n_args);
                if (e.returns_value) depth++;
                break;
            case IrOp::ExitProc: {
                if (!in_proc)
                    throw Error::at(Err::DepthMismatch, e.line, 0, "ExitProc outside a procedure");
                if (exited)
                    throw Error::at(Err::DepthMismatch, e.line, 0, "duplicate ExitProc");
                int want = proc_returns ? 1 : 0;
                if (depth != want)
                    throw Error::at(Err::DepthMismatch, e.line, 0,
                                    "operand stack has " + std::to_string(depth) +
                                        " entries at ExitProc, expected " + std::to_string(want));
                exited = true;
                break;
            }
            case IrOp::EndProc:
                if (!in_proc)
                    throw Error::at(Err::DepthMismatch, e.line, 0, "EndProc outside a procedure");
                if (!exited)
                    throw Error::at(Err::DepthMismatch, e.line, 0,
                                    "procedure ends without ExitProc");
                in_proc = false;
                exited = false;
                break;
            case IrOp::InitBegin:
                if (in_proc || in_init)
                    throw Error::at(Err::NestedProcedure, e.line, 0,
                                    "module body begins inside another body");
                in_init = true;
                depth = 0;
                break;
            case IrOp::InitEnd:
                if (!in_init)
                    throw Error::at(Err::DepthMismatch, e.line, 0, "InitEnd outside a module body");
                if (depth != 0)
                    throw Error::at(Err::DepthMismatch, e.line, 0,
                                    "operand stack has " + std::to_string(depth) +
                                        " entries at InitEnd");
                in_init = false;
                break;
        }
    }
    if (in_proc || in_init)
        throw Error::at(Err::DepthMismatch, 0, 0, "unterminated procedure or module body");
}

} // namespace m3
