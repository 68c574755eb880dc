#pragma once

#include <optional>
#include <string>

namespace m3 {

enum class UnitKind : uint8_t {
    Interface,        // .i3
    Module,           // .m3
    GenericInterface, // .ig
};

inline const char* unit_ext(UnitKind k) {
    switch (k) {
        case UnitKind::Interface: return ".i3";
        case UnitKind::Module: return ".m3";
        case UnitKind::GenericInterface: return ".ig";
    }
    return "";
}

// Canonical key for build-state maps and dirty sets. A module and the
// interface it implements share a name, so the key carries the extension.
inline std::string unit_key(const std::string& name, UnitKind k) {
    return name + unit_ext(k);
}

inline std::optional<UnitKind> classify_path(const std::string& path) {
    auto ends_with = [&](const char* suffix) {
        size_t n = std::char_traits<char>::length(suffix);
        return path.size() >= n && path.compare(path.size() - n, n, suffix) == 0;
    };
    if (ends_with(".i3")) return UnitKind::Interface;
    if (ends_with(".m3")) return UnitKind::Module;
    if (ends_with(".ig")) return UnitKind::GenericInterface;
    return std::nullopt;
}

// "Lib/Arith.i3" -> "Arith"
inline std::string unit_name_from_path(const std::string& path) {
    size_t slash = path.find_last_of('/');
    size_t start = slash == std::string::npos ? 0 : slash + 1;
    size_t dot = path.find_last_of('.');
    if (dot == std::string::npos || dot < start) dot = path.size();
    return path.substr(start, dot - start);
}

} // namespace m3
