#include "m3/linker.hpp"

#include <algorithm>
#include <set>

#include "m3/bytes.hpp"
#include "m3/error.hpp"

namespace m3 {

namespace {

constexpr char kMagic[4] = {'M', '3', 'X', '1'};
constexpr uint16_t kVersion = 1;

uint64_t align8(uint64_t n) { return (n + 7) & ~uint64_t{7}; }

std::vector<std::string> init_order_of(const std::vector<GeneratedUnit>& objects) {
    std::set<std::string> modules;
    for (const auto& o : objects) modules.insert(o.unit_name);

    std::map<std::string, std::set<std::string>> deps; // module -> modules it waits for
    std::map<std::string, std::set<std::string>> rdeps;
    for (const auto& o : objects) {
        deps[o.unit_name];
        for (const auto& imp : o.imports)
            if (modules.count(imp) && imp != o.unit_name) {
                deps[o.unit_name].insert(imp);
                rdeps[imp].insert(o.unit_name);
            }
    }

    std::set<std::string> ready;
    for (const auto& [m, d] : deps)
        if (d.empty()) ready.insert(m);

    std::vector<std::string> order;
    while (!ready.empty()) {
        std::string m = *ready.begin();
        ready.erase(ready.begin());
        order.push_back(m);
        for (const auto& r : rdeps[m]) {
            deps[r].erase(m);
            if (deps[r].empty()) ready.insert(r);
        }
    }
    if (order.size() == modules.size()) return order;

    // Walk the leftover subgraph until a module repeats; that is the cycle.
    std::vector<std::string> path;
    std::set<std::string> on_path;
    std::string at;
    for (const auto& [m, d] : deps)
        if (!d.empty()) {
            at = m;
            break;
        }
    while (!on_path.count(at)) {
        path.push_back(at);
        on_path.insert(at);
        at = *deps[at].begin();
    }
    std::string cycle = at;
    for (size_t i = path.size(); i-- > 0;) {
        cycle = path[i] + " -> " + cycle;
        if (path[i] == at) break;
    }
    throw Error(Err::InitCycle, "module initialization cycle: " + cycle);
}

} // namespace

Prelinked prelink(const std::vector<GeneratedUnit>& objects,
                  const std::map<std::string, UnitAst>& interfaces) {
    Prelinked out;
    out.init_order = init_order_of(objects);
    out.types = build_type_repo(interfaces);
    return out;
}

const SymbolDef* Image::find_symbol(const std::string& name) const {
    auto it = std::lower_bound(symbols.begin(), symbols.end(), name,
                               [](const SymbolDef& s, const std::string& n) { return s.name < n; });
    if (it == symbols.end() || it->name != name) return nullptr;
    return &*it;
}

Image link(const std::vector<GeneratedUnit>& objects, const Prelinked& pre,
           const std::string& entry) {
    Image img;
    img.init_order = pre.init_order;
    img.types = pre.types;
    img.entry = entry;

    // Section layout follows initialization order; objects outside it (none
    // in a normal link) go last, alphabetically.
    std::map<std::string, size_t> rank;
    for (size_t i = 0; i < pre.init_order.size(); i++) rank[pre.init_order[i]] = i;
    std::vector<const GeneratedUnit*> ordered;
    for (const auto& o : objects) ordered.push_back(&o);
    std::sort(ordered.begin(), ordered.end(),
              [&](const GeneratedUnit* a, const GeneratedUnit* b) {
                  auto ra = rank.count(a->unit_name) ? rank.at(a->unit_name) : rank.size();
                  auto rb = rank.count(b->unit_name) ? rank.at(b->unit_name) : rank.size();
                  if (ra != rb) return ra < rb;
                  return a->unit_name < b->unit_name;
              });

    std::map<std::string, uint64_t> text_base, data_base;
    for (const GeneratedUnit* o : ordered) {
        img.text.resize(align8(img.text.size()), 0);
        text_base[o->unit_name] = img.text.size();
        img.text.insert(img.text.end(), o->text.begin(), o->text.end());

        img.data.resize(align8(img.data.size()), 0);
        data_base[o->unit_name] = img.data.size();
        img.data.insert(img.data.end(), o->data.begin(), o->data.end());
    }

    std::map<std::string, SymbolDef> symbols;
    for (const GeneratedUnit* o : ordered)
        for (SymbolDef s : o->symbols) {
            s.offset += s.section == Section::Text ? text_base[o->unit_name]
                                                   : data_base[o->unit_name];
            if (!symbols.emplace(s.name, s).second)
                throw Error(Err::DuplicateSymbol, s.name + " is defined more than once");
        }

    // One slot per distinct symbol reached through the indirection table.
    std::set<std::string> slot_syms;
    for (const GeneratedUnit* o : ordered)
        for (const auto& r : o->relocs)
            if (r.kind == RelocKind::IndirectSlot) slot_syms.insert(r.symbol);

    std::map<std::string, uint32_t> slot_index;
    for (const auto& sym : slot_syms) {
        auto it = symbols.find(sym);
        if (it == symbols.end())
            throw Error(Err::UndefinedSymbol, sym + " is not defined in any linked object");
        slot_index[sym] = static_cast<uint32_t>(img.slots.size());
        img.slots.push_back(ImageSlot{sym, it->second.kind});
    }

    auto patch = [&](uint64_t at, uint32_t v) {
        for (int i = 0; i < 4; i++) img.text[at + i] = static_cast<uint8_t>(v >> (8 * i));
    };
    for (const GeneratedUnit* o : ordered)
        for (const auto& r : o->relocs) {
            if (r.section != Section::Text)
                throw Error(Err::OffsetOutOfRange,
                            "relocation outside the text section in " + o->unit_name);
            uint64_t field = text_base[o->unit_name] + r.offset;
            if (r.kind == RelocKind::IndirectSlot) {
                patch(field, slot_index.at(r.symbol));
                continue;
            }
            auto it = symbols.find(r.symbol);
            if (it == symbols.end())
                throw Error(Err::UndefinedSymbol,
                            r.symbol + " referenced from " + o->unit_name +
                                " is not defined in any linked object");
            if (it->second.section != Section::Text)
                throw Error(Err::UndefinedSymbol,
                            r.symbol + " is not code but is called pc-relative from " +
                                o->unit_name);
            patch(field, static_cast<uint32_t>(it->second.offset - (field + 4)));
        }

    for (const auto& [name, s] : symbols) img.symbols.push_back(s);

    if (!entry.empty()) {
        const SymbolDef* e = img.find_symbol(entry);
        if (!e || e->kind != SymKind::Proc)
            throw Error(Err::UndefinedSymbol, "entry " + entry + " is not a linked procedure");
    }
    return img;
}

std::string encode_image(const Image& img) {
    ByteWriter w;
    w.bytes(kMagic, sizeof kMagic);
    w.u16(kVersion);
    w.u16(0);
    w.str(img.entry);
    w.u32(static_cast<uint32_t>(img.text.size()));
    w.bytes(img.text.data(), img.text.size());
    w.u32(static_cast<uint32_t>(img.data.size()));
    w.bytes(img.data.data(), img.data.size());
    w.u32(static_cast<uint32_t>(img.slots.size()));
    for (const auto& s : img.slots) {
        w.str(s.symbol);
        w.u8(static_cast<uint8_t>(s.kind));
    }
    w.u32(static_cast<uint32_t>(img.init_order.size()));
    for (const auto& m : img.init_order) w.str(m);
    w.u32(static_cast<uint32_t>(img.symbols.size()));
    for (const auto& s : img.symbols) {
        w.str(s.name);
        w.u8(static_cast<uint8_t>(s.section));
        w.u64(s.offset);
        w.u8(static_cast<uint8_t>(s.kind));
        w.u64(s.size);
        w.u8(s.exported ? 1 : 0);
    }
    w.u32(static_cast<uint32_t>(img.types.types.size()));
    for (const auto& t : img.types.types) {
        w.u64(t.fp);
        w.u32(t.pre);
        w.u32(t.post);
    }
    w.u32(static_cast<uint32_t>(img.types.names.size()));
    for (const auto& [name, id] : img.types.names) {
        w.str(name);
        w.u32(id);
    }
    w.u32(static_cast<uint32_t>(img.types.opaques.size()));
    for (const auto& o : img.types.opaques) {
        w.str(o.name);
        w.str(o.revealed_in);
        w.u32(o.type_id);
    }
    const auto& buf = w.data();
    return std::string(reinterpret_cast<const char*>(buf.data()), buf.size());
}

namespace {

[[noreturn]] void out_of_range(const std::string& what) {
    throw Error(Err::OffsetOutOfRange, what);
}

} // namespace

Image decode_image(std::string_view bytes) {
    ByteReader r(std::span(reinterpret_cast<const uint8_t*>(bytes.data()), bytes.size()),
                 Err::TruncatedFile);
    auto magic = r.bytes(4);
    if (std::string_view(reinterpret_cast<const char*>(magic.data()), 4) !=
        std::string_view(kMagic, 4))
        throw Error(Err::BadMagic, "not an executable image (bad magic)");
    if (r.u16() != kVersion) throw Error(Err::BadMagic, "unsupported image version");
    r.u16();

    Image img;
    img.entry = r.str();
    img.text = r.bytes(r.u32());
    img.data = r.bytes(r.u32());

    uint32_t n_slots = r.u32();
    for (uint32_t i = 0; i < n_slots; i++) {
        ImageSlot s;
        s.symbol = r.str();
        uint8_t kind = r.u8();
        if (kind > 1) out_of_range("slot kind " + std::to_string(kind));
        s.kind = static_cast<SymKind>(kind);
        img.slots.push_back(std::move(s));
    }

    uint32_t n_init = r.u32();
    for (uint32_t i = 0; i < n_init; i++) img.init_order.push_back(r.str());

    uint32_t n_syms = r.u32();
    for (uint32_t i = 0; i < n_syms; i++) {
        SymbolDef s;
        s.name = r.str();
        uint8_t section = r.u8();
        if (section < 1 || section > 2) out_of_range("symbol section " + std::to_string(section));
        s.section = static_cast<Section>(section);
        s.offset = r.u64();
        uint8_t kind = r.u8();
        if (kind > 1) out_of_range("symbol kind " + std::to_string(kind));
        s.kind = static_cast<SymKind>(kind);
        s.size = r.u64();
        s.exported = r.u8() != 0;
        uint64_t limit = s.section == Section::Text ? img.text.size() : img.data.size();
        if (s.offset > limit || s.size > limit || s.offset + s.size > limit)
            out_of_range("symbol " + s.name + " lies outside its section");
        img.symbols.push_back(std::move(s));
    }

    uint32_t n_types = r.u32();
    for (uint32_t i = 0; i < n_types; i++) {
        TypeNode t;
        t.fp = r.u64();
        t.pre = r.u32();
        t.post = r.u32();
        img.types.types.push_back(t);
    }
    uint32_t n_names = r.u32();
    for (uint32_t i = 0; i < n_names; i++) {
        std::string name = r.str();
        uint32_t id = r.u32();
        if (id >= n_types) out_of_range("type name " + name + " maps to id " + std::to_string(id));
        img.types.names[name] = id;
    }
    uint32_t n_opaques = r.u32();
    for (uint32_t i = 0; i < n_opaques; i++) {
        OpaqueBinding o;
        o.name = r.str();
        o.revealed_in = r.str();
        o.type_id = r.u32();
        if (o.type_id >= n_types)
            out_of_range("opaque " + o.name + " maps to id " + std::to_string(o.type_id));
        img.types.opaques.push_back(std::move(o));
    }
    if (!r.at_end()) out_of_range("trailing bytes after image");
    return img;
}

} // namespace m3
