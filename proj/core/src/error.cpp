#include "m3/error.hpp"

namespace m3 {

const char* err_name(Err code) {
    switch (code) {
    case Err::SyntaxError: return "SyntaxError";
    case Err::ImportOfUnknownUnit: return "ImportOfUnknownUnit";
    case Err::UnknownImportedName: return "UnknownImportedName";
    case Err::MissingRefFingerprint: return "MissingRefFingerprint";
    case Err::TypeError: return "TypeError";
    case Err::StateCorrupt: return "StateCorrupt";
    case Err::PersistError: return "PersistError";
    case Err::CycleDetected: return "CycleDetected";
    case Err::MissingStateFile: return "MissingStateFile";
    case Err::ConnectFailed: return "ConnectFailed";
    case Err::ProtocolVersionMismatch: return "ProtocolVersionMismatch";
    case Err::ProtocolError: return "ProtocolError";
    case Err::NestedProcedure: return "NestedProcedure";
    case Err::StackUnderflow: return "StackUnderflow";
    case Err::DepthMismatch: return "DepthMismatch";
    case Err::IoError: return "IoError";
    case Err::BadMagic: return "BadMagic";
    case Err::TruncatedFile: return "TruncatedFile";
    case Err::OffsetOutOfRange: return "OffsetOutOfRange";
    case Err::InitCycle: return "InitCycle";
    case Err::MissingRevelation: return "MissingRevelation";
    case Err::DuplicateRevelation: return "DuplicateRevelation";
    case Err::RevelationIncompatible: return "RevelationIncompatible";
    case Err::UnknownTypeId: return "UnknownTypeId";
    case Err::UndefinedSymbol: return "UndefinedSymbol";
    case Err::DuplicateSymbol: return "DuplicateSymbol";
    case Err::TrapBadOpcode: return "TrapBadOpcode";
    case Err::TrapStackOverflow: return "TrapStackOverflow";
    case Err::TrapCalleeSaveViolation: return "TrapCalleeSaveViolation";
    case Err::TrapUnresolvableStub: return "TrapUnresolvableStub";
    case Err::StepLimit: return "StepLimit";
    case Err::ManifestError: return "ManifestError";
    case Err::ScenarioInvalid: return "ScenarioInvalid";
    }
    return "UnknownError";
}

Error::Error(Err code, std::string message)
    : std::runtime_error(std::string(err_name(code)) + ": " + message),
      code_(code),
      message_(std::move(message)) {}

Error Error::at(Err code, int line, int col, const std::string& message) {
    Error e(code, std::to_string(line) + ":" + std::to_string(col) + ": " + message);
    e.line_ = line;
    e.col_ = col;
    e.message_ = message;
    return e;
}

std::string format_diagnostic(const Error& e) {
    std::string out;
    if (!e.file().empty()) out += e.file() + ":";
    if (e.line() > 0) {
        out += std::to_string(e.line()) + ":";
        out += std::to_string(e.col() > 0 ? e.col() : 1) + ":";
    }
    if (!out.empty()) out += " ";
    out += "error: ";
    out += e.message();
    return out;
}

} // namespace m3
