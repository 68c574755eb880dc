#include "m3/depcheck.hpp"

#include <filesystem>
#include <system_error>

#include "m3/bytes.hpp"
#include "m3/error.hpp"
#include "m3/fnv.hpp"

namespace m3 {

namespace {

constexpr char kMagic[4] = {'M', '3', 'S', '1'};
constexpr uint16_t kVersion = 1;

} // namespace

std::string encode_state(const BuildState& state) {
    ByteWriter w;
    w.bytes(kMagic, sizeof kMagic);
    w.u16(kVersion);
    w.u32(static_cast<uint32_t>(state.units.size()));
    for (const auto& [key, u] : state.units) {
        w.str(key);
        w.u64(u.text_hash);
        w.i64(u.mtime_sec);
        w.i64(u.mtime_nsec);
        size_t n = 0;
        for (const auto& [iface, decls] : u.used) n += decls.size();
        w.u32(static_cast<uint32_t>(n));
        for (const auto& [iface, decls] : u.used)
            for (const auto& [decl, fp] : decls) {
                w.str(iface);
                w.str(decl);
                w.u64(fp);
            }
    }
    const auto& buf = w.data();
    return std::string(reinterpret_cast<const char*>(buf.data()), buf.size());
}

BuildState decode_state(std::string_view bytes) {
    ByteReader r(std::span(reinterpret_cast<const uint8_t*>(bytes.data()), bytes.size()),
                 Err::StateCorrupt);
    auto magic = r.bytes(4);
    if (std::string_view(reinterpret_cast<const char*>(magic.data()), 4) !=
        std::string_view(kMagic, 4))
        r.fail("bad state magic");
    if (r.u16() != kVersion) r.fail("unsupported state version");

    BuildState state;
    uint32_t n_units = r.u32();
    for (uint32_t i = 0; i < n_units; i++) {
        std::string key = r.str();
        UnitState u;
        u.text_hash = r.u64();
        u.mtime_sec = r.i64();
        u.mtime_nsec = r.i64();
        uint32_t n_used = r.u32();
        for (uint32_t j = 0; j < n_used; j++) {
            std::string iface = r.str();
            std::string decl = r.str();
            u.used[iface][decl] = r.u64();
        }
        if (!state.units.emplace(std::move(key), std::move(u)).second)
            r.fail("duplicate unit entry");
    }
    if (!r.at_end()) r.fail("trailing bytes after last unit");
    return state;
}

uint64_t package_stamp(const BuildState& state) {
    return fnv1a(encode_state(state));
}

std::optional<BuildState> load_state(Vfs& vfs, const std::string& path) {
    auto content = vfs.read(path);
    if (!content) return std::nullopt;
    return decode_state(*content);
}

void save_state(Vfs& vfs, const std::string& path, const BuildState& state) {
    std::string tmp = path + ".tmp";
    vfs.write(tmp, encode_state(state));
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        throw Error(Err::PersistError,
                    "cannot rename " + tmp + " to " + path + ": " + ec.message());
}

ChangeSet detect_modified(const std::vector<SourceFile>& sources,
                          const BuildState& prev, Vfs& vfs) {
    ChangeSet out;
    std::set<std::string> seen;
    for (const auto& src : sources) {
        std::string key = src.key();
        seen.insert(key);
        auto st = vfs.stat(src.path);
        if (!st) {
            out.deleted.insert(key);
            continue;
        }
        out.stats[key] = *st;
        auto it = prev.units.find(key);
        if (it != prev.units.end() && it->second.mtime_sec == st->mtime_sec &&
            it->second.mtime_nsec == st->mtime_nsec)
            continue; // mtime gate: unchanged, content not read
        auto content = vfs.read(src.path);
        if (!content) {
            out.deleted.insert(key);
            continue;
        }
        uint64_t hash = fnv1a(*content);
        out.text_hashes[key] = hash;
        if (it == prev.units.end() || it->second.text_hash != hash)
            out.modified.insert(key);
    }
    for (const auto& [key, u] : prev.units)
        if (!seen.count(key)) out.deleted.insert(key);
    return out;
}

CurrentFingerprints fingerprint_interfaces(
    const std::map<std::string, UnitAst>& interfaces,
    const std::map<std::string, uint64_t>& generic_hashes) {
    CurrentFingerprints out;
    out.generic_hashes = generic_hashes;

    // Interfaces import only interfaces, so one pass in dependency order
    // suffices. Units whose imports are all processed go next; a leftover
    // means an import cycle.
    FpEnv env;
    std::set<std::string> done;
    while (done.size() < interfaces.size()) {
        bool progressed = false;
        for (const auto& [name, ast] : interfaces) {
            if (done.count(name)) continue;
            bool ready = true;
            for (const auto& imp : ast.imports)
                if (interfaces.count(imp) && !done.count(imp)) {
                    ready = false;
                    break;
                }
            if (!ready) continue;
            UnitFingerprints fps = fingerprint_unit(ast, env);
            env[name] = fps.decls;
            out.interfaces.emplace(name, std::move(fps));
            done.insert(name);
            progressed = true;
        }
        if (!progressed) {
            std::string stuck;
            for (const auto& [name, ast] : interfaces)
                if (!done.count(name)) stuck = stuck.empty() ? name : stuck + ", " + name;
            throw Error(Err::CycleDetected, "interface import cycle among: " + stuck);
        }
    }
    return out;
}

DirtySet compute_dirty_set(const std::set<std::string>& modified,
                           const std::vector<SourceFile>& sources,
                           const BuildState& prev,
                           const CurrentFingerprints& current,
                           const std::set<std::string>& objects_present) {
    DirtySet out;
    auto mark = [&](const std::string& key, DirtyReason reason) {
        out.units.insert(key);
        out.reasons[key].push_back(std::move(reason));
    };

    // Current fingerprint of one used entry; nullopt when the declaration (or
    // its whole unit) no longer exists, which counts as a change.
    auto current_fp = [&](const std::string& iface,
                          const std::string& decl) -> std::optional<uint64_t> {
        if (decl.empty()) {
            auto it = current.generic_hashes.find(iface);
            if (it == current.generic_hashes.end()) return std::nullopt;
            return it->second;
        }
        auto it = current.interfaces.find(iface);
        if (it == current.interfaces.end()) return std::nullopt;
        auto dit = it->second.decls.find(decl);
        if (dit == it->second.decls.end()) return std::nullopt;
        return dit->second;
    };

    for (const auto& src : sources) {
        std::string key = src.key();
        if (modified.count(key)) mark(key, {DirtyReason::SourceModified, "", ""});
        if (src.kind == UnitKind::Module && !objects_present.count(key))
            mark(key, {DirtyReason::MissingObject, "", ""});

        auto it = prev.units.find(key);
        if (it == prev.units.end()) {
            // Never compiled. New units are already in modified; guard anyway
            // so a unit absent from a hand-edited state file still rebuilds.
            if (!out.units.count(key)) mark(key, {DirtyReason::SourceModified, "", ""});
            continue;
        }
        for (const auto& [iface, decls] : it->second.used)
            for (const auto& [decl, old_fp] : decls) {
                auto now = current_fp(iface, decl);
                if (!now || *now != old_fp)
                    mark(key, {DirtyReason::UsedDeclChanged, iface, decl});
            }
    }
    return out;
}

BuildState record_build_state(const BuildState& prev,
                              const std::map<std::string, UnitState>& recompiled,
                              const std::set<std::string>& surviving) {
    BuildState next;
    for (const auto& [key, u] : prev.units)
        if (surviving.count(key) && !recompiled.count(key)) next.units[key] = u;
    for (const auto& [key, u] : recompiled) next.units[key] = u;
    return next;
}

} // namespace m3
