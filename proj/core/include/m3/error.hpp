#pragma once

#include <stdexcept>
#include <string>

namespace m3 {

enum class Err {
    // frontend
    SyntaxError,
    ImportOfUnknownUnit,
    UnknownImportedName,
    MissingRefFingerprint,
    TypeError,
    // depcheck
    StateCorrupt,
    PersistError,
    // cache / server
    CycleDetected,
    MissingStateFile,
    ConnectFailed,
    ProtocolVersionMismatch,
    ProtocolError,
    // codegen
    NestedProcedure,
    StackUnderflow,
    DepthMismatch,
    // object files / images
    IoError,
    BadMagic,
    TruncatedFile,
    OffsetOutOfRange,
    // linker
    InitCycle,
    MissingRevelation,
    DuplicateRevelation,
    RevelationIncompatible,
    UnknownTypeId,
    UndefinedSymbol,
    DuplicateSymbol,
    // vm traps
    TrapBadOpcode,
    TrapStackOverflow,
    TrapCalleeSaveViolation,
    TrapUnresolvableStub,
    StepLimit,
    // harness
    ManifestError,
    ScenarioInvalid,
};

const char* err_name(Err code);

class Error : public std::runtime_error {
public:
    Error(Err code, std::string message);

    // Source-located variant; line/col are 1-based, 0 means "not set".
    static Error at(Err code, int line, int col, const std::string& message);

    Err code() const { return code_; }
    int line() const { return line_; }
    int col() const { return col_; }

    // The message without the error-name/position prefix what() carries.
    const std::string& message() const { return message_; }

    // Source file attribution, attached by whoever knows the path. The first
    // attribution wins; deeper frames are closer to the fault.
    const std::string& file() const { return file_; }
    void attach_file(const std::string& path) {
        if (file_.empty()) file_ = path;
    }

private:
    Err code_;
    int line_ = 0;
    int col_ = 0;
    std::string message_;
    std::string file_;
};

// "file:line:col: error: message" with the located parts present; at minimum
// "error: message".
std::string format_diagnostic(const Error& e);

} // namespace m3
