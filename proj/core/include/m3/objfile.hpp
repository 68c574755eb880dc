#pragma once

#include <string>
#include <string_view>

#include "m3/codegen.hpp"

namespace m3 {

// `.m3o` codec, magic "M3O1": a header, a six-entry section directory and the
// section bodies (meta, text, data, symbols, relocations, line records).
// Encoding is deterministic — no timestamps, no absolute paths — so identical
// compiler input yields identical bytes. decode validates every offset and
// raises BadMagic, TruncatedFile or OffsetOutOfRange; decode(encode(x)) == x.
std::string encode_object(const GeneratedUnit& obj);
GeneratedUnit decode_object(std::string_view bytes);

} // namespace m3
