#include "m3/objfile.hpp"

#include <array>
#include <cstring>

#include "m3/bytes.hpp"
#include "m3/error.hpp"

namespace m3 {
namespace {

constexpr char kMagic[4] = {'M', '3', 'O', '1'};
constexpr uint16_t kVersion = 1;

// Section tags; every object carries all six directory entries, empty or not,
// so the directory has a fixed shape.
enum Tag : uint8_t {
    kMeta = 1,
    kText = 2,
    kData = 3,
    kSymtab = 4,
    kReloc = 5,
    kLines = 6,
};
constexpr size_t kNumSections = 6;
constexpr size_t kDirEntrySize = 12; // tag + 3 pad + offset + length

std::string encode_meta(const GeneratedUnit& obj) {
    ByteWriter w;
    w.str(obj.unit_name);
    w.str(obj.init_symbol);
    w.u32(static_cast<uint32_t>(obj.imports.size()));
    for (const auto& name : obj.imports)
        w.str(name);
    return w.take();
}

std::string encode_symtab(const GeneratedUnit& obj) {
    ByteWriter w;
    w.u32(static_cast<uint32_t>(obj.symbols.size()));
    for (const auto& s : obj.symbols) {
        w.str(s.name);
        w.u8(static_cast<uint8_t>(s.section));
        w.u64(s.offset);
        w.u8(static_cast<uint8_t>(s.kind));
        w.u64(s.size);
        w.u8(s.exported ? 1 : 0);
    }
    return w.take();
}

std::string encode_relocs(const GeneratedUnit& obj) {
    ByteWriter w;
    w.u32(static_cast<uint32_t>(obj.relocs.size()));
    for (const auto& r : obj.relocs) {
        w.u8(static_cast<uint8_t>(r.section));
        w.u64(r.offset);
        w.str(r.symbol);
        w.u8(static_cast<uint8_t>(r.kind));
    }
    return w.take();
}

std::string encode_lines(const GeneratedUnit& obj) {
    ByteWriter w;
    w.u32(static_cast<uint32_t>(obj.lines.size()));
    for (const auto& l : obj.lines) {
        w.u64(l.text_offset);
        w.u32(l.line);
    }
    return w.take();
}

[[noreturn]] void bad(Err code, const std::string& msg) {
    throw Error(code, msg);
}

// Bounds-checked view of one section's bytes.
std::string_view section_view(std::string_view bytes, uint32_t off, uint32_t len) {
    if (off > bytes.size() || len > bytes.size() - off)
        bad(Err::OffsetOutOfRange, "object section extends past end of file");
    return bytes.substr(off, len);
}

ByteReader section_reader(std::string_view sec) {
    return ByteReader(std::span<const uint8_t>(
                          reinterpret_cast<const uint8_t*>(sec.data()), sec.size()),
                      Err::TruncatedFile);
}

} // namespace

std::string encode_object(const GeneratedUnit& obj) {
    const std::array<std::string, kNumSections> bodies = {
        encode_meta(obj), obj.text, obj.data,
        encode_symtab(obj), encode_relocs(obj), encode_lines(obj),
    };

    ByteWriter w;
    w.bytes(kMagic, sizeof(kMagic));
    w.u16(kVersion);
    w.u16(0); // reserved
    w.u32(kNumSections);
    // Directory first, bodies after; offsets are file-absolute.
    uint32_t off = static_cast<uint32_t>(12 + kNumSections * kDirEntrySize);
    for (size_t i = 0; i < kNumSections; ++i) {
        w.u8(static_cast<uint8_t>(i + 1));
        w.u8(0);
        w.u8(0);
        w.u8(0);
        w.u32(off);
        w.u32(static_cast<uint32_t>(bodies[i].size()));
        off += static_cast<uint32_t>(bodies[i].size());
    }
    for (const auto& body : bodies)
        w.bytes(body.data(), body.size());
    return w.take();
}

GeneratedUnit decode_object(std::string_view bytes) {
    if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
        bad(Err::BadMagic, "not an object file (bad magic)");
    ByteReader hdr(std::span<const uint8_t>(
                       reinterpret_cast<const uint8_t*>(bytes.data()), bytes.size()),
                   Err::TruncatedFile);
    hdr.seek(4);
    if (hdr.u16() != kVersion)
        bad(Err::BadMagic, "unsupported object file version");
    hdr.u16(); // reserved
    if (hdr.u32() != kNumSections)
        bad(Err::OffsetOutOfRange, "object directory must have exactly 6 entries");

    std::array<std::pair<uint32_t, uint32_t>, kNumSections + 1> dir{}; // 1-based by tag
    for (size_t i = 0; i < kNumSections; ++i) {
        uint8_t tag = hdr.u8();
        hdr.u8();
        hdr.u8();
        hdr.u8();
        uint32_t off = hdr.u32();
        uint32_t len = hdr.u32();
        if (tag != i + 1)
            bad(Err::OffsetOutOfRange, "object directory entries out of order");
        dir[tag] = {off, len};
    }

    GeneratedUnit obj;

    {
        ByteReader r = section_reader(section_view(bytes, dir[kMeta].first, dir[kMeta].second));
        obj.unit_name = r.str();
        obj.init_symbol = r.str();
        uint32_t n = r.u32();
        for (uint32_t i = 0; i < n; ++i)
            obj.imports.push_back(r.str());
        if (!r.at_end())
            bad(Err::OffsetOutOfRange, "trailing bytes in object meta section");
    }

    {
        std::string_view sec = section_view(bytes, dir[kText].first, dir[kText].second);
        obj.text.assign(sec.data(), sec.size());
        sec = section_view(bytes, dir[kData].first, dir[kData].second);
        obj.data.assign(sec.data(), sec.size());
    }

    {
        ByteReader r = section_reader(section_view(bytes, dir[kSymtab].first, dir[kSymtab].second));
        uint32_t n = r.u32();
        for (uint32_t i = 0; i < n; ++i) {
            SymbolDef s;
            s.name = r.str();
            uint8_t section = r.u8();
            if (section != 1 && section != 2)
                bad(Err::OffsetOutOfRange, "symbol '" + s.name + "' names an unknown section");
            s.section = static_cast<Section>(section);
            s.offset = r.u64();
            uint8_t kind = r.u8();
            if (kind > 1)
                bad(Err::OffsetOutOfRange, "symbol '" + s.name + "' has an unknown kind");
            s.kind = static_cast<SymKind>(kind);
            s.size = r.u64();
            s.exported = r.u8() != 0;
            uint64_t limit = s.section == Section::Text ? obj.text.size() : obj.data.size();
            if (s.offset > limit || s.size > limit || s.offset + s.size > limit)
                bad(Err::OffsetOutOfRange, "symbol '" + s.name + "' extends past its section");
            obj.symbols.push_back(std::move(s));
        }
        if (!r.at_end())
            bad(Err::OffsetOutOfRange, "trailing bytes in object symbol table");
    }

    {
        ByteReader r = section_reader(section_view(bytes, dir[kReloc].first, dir[kReloc].second));
        uint32_t n = r.u32();
        for (uint32_t i = 0; i < n; ++i) {
            Reloc rl;
            uint8_t section = r.u8();
            if (section != 1 && section != 2)
                bad(Err::OffsetOutOfRange, "relocation names an unknown section");
            rl.section = static_cast<Section>(section);
            rl.offset = r.u64();
            rl.symbol = r.str();
            uint8_t kind = r.u8();
            if (kind != 1 && kind != 2)
                bad(Err::OffsetOutOfRange, "relocation has an unknown kind");
            rl.kind = static_cast<RelocKind>(kind);
            uint64_t limit = rl.section == Section::Text ? obj.text.size() : obj.data.size();
            // Every relocation patches a 4-byte field.
            if (rl.offset > limit || limit - rl.offset < 4)
                bad(Err::OffsetOutOfRange, "relocation field extends past its section");
            obj.relocs.push_back(std::move(rl));
        }
        if (!r.at_end())
            bad(Err::OffsetOutOfRange, "trailing bytes in object relocation table");
    }

    {
        ByteReader r = section_reader(section_view(bytes, dir[kLines].first, dir[kLines].second));
        uint32_t n = r.u32();
        for (uint32_t i = 0; i < n; ++i) {
            LineRecord l;
            l.text_offset = r.u64();
            l.line = r.u32();
            if (l.text_offset > obj.text.size())
                bad(Err::OffsetOutOfRange, "line record points past end of text");
            obj.lines.push_back(l);
        }
        if (!r.at_end())
            bad(Err::OffsetOutOfRange, "trailing bytes in object line table");
    }

    return obj;
}

} // namespace m3
