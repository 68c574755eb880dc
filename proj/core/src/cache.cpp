#include "m3/cache.hpp"

#include <algorithm>

#include "m3/error.hpp"
#include "m3/fnv.hpp"
#include "m3/parse.hpp"

namespace m3 {

namespace {

bool same_mtime(const FileStat& a, const FileStat& b) {
    return a.mtime_sec == b.mtime_sec && a.mtime_nsec == b.mtime_nsec;
}

} // namespace

void InterfaceCache::set_byte_budget(std::optional<uint64_t> budget) {
    budget_ = budget;
    enforce_budget("");
}

void InterfaceCache::begin_build(SourceResolver resolver, const ChangeSet* changes,
                                 PhaseClock* clock) {
    epoch_ += 1;
    resolver_ = std::move(resolver);
    changes_ = changes;
    clock_ = clock;
    checking_.clear();
    check_path_.clear();
    missing_.clear();
    counted_.clear();
    result_ = {};
    parsed_count_ = 0;
    reused_count_ = 0;
    parse_counts_.clear();
    check_counts_.clear();
    pending_stamps_.clear();
}

ShortcutResult InterfaceCache::apply_library_shortcut(const std::string& origin,
                                                      const std::string& state_path) {
    ShortcutResult res;
    auto st = vfs_->stat(state_path);
    if (!st) {
        // No state file, no shortcut: every entry gets its own check.
        pending_stamps_[origin] = LibraryStamp{};
        return res;
    }
    res.state_stat = st;
    auto known = library_stamps_.find(origin);
    bool unchanged = false;
    if (known != library_stamps_.end() && known->second.have) {
        if (same_mtime(known->second.mtime, *st)) {
            unchanged = true;
        } else {
            auto text = vfs_->read(state_path);
            if (text) {
                uint64_t h = fnv1a(*text);
                unchanged = h == known->second.hash;
                pending_stamps_[origin] = LibraryStamp{*st, h, true};
            }
        }
    } else {
        auto text = vfs_->read(state_path);
        if (text) pending_stamps_[origin] = LibraryStamp{*st, fnv1a(*text), true};
    }
    if (!unchanged) return res;
    for (auto& [name, e] : entries_)
        if (e->origin == origin) e->valid_stamp = epoch_;
    for (auto& [name, g] : generics_)
        if (g.origin == origin) g.stamp = epoch_;
    res.applied = true;
    return res;
}

ValidateResult InterfaceCache::validate(const std::set<std::string>& roots) {
    auto scope = clock_ ? std::optional(clock_->enter(Phase::SmartRecomp)) : std::nullopt;
    for (const auto& name : roots)
        validate_one(name);
    return result_;
}

std::shared_ptr<const CacheEntry> InterfaceCache::get_or_parse(const std::string& name) {
    if (!validate_one(name))
        throw Error(Err::ImportOfUnknownUnit, "no interface named " + name);
    return entries_.at(name);
}

std::shared_ptr<const CacheEntry> InterfaceCache::lookup_valid(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end() || it->second->valid_stamp != epoch_) return nullptr;
    return it->second;
}

uint64_t InterfaceCache::parse_count(const std::string& name) const {
    auto it = parse_counts_.find(name);
    return it == parse_counts_.end() ? 0 : it->second;
}

uint64_t InterfaceCache::check_count(const std::string& name) const {
    auto it = check_counts_.find(name);
    return it == check_counts_.end() ? 0 : it->second;
}

CurrentFingerprints InterfaceCache::current_fingerprints() const {
    CurrentFingerprints cur;
    for (const auto& [name, e] : entries_)
        if (e->valid_stamp == epoch_) cur.interfaces[name] = e->fps;
    for (const auto& [name, g] : generics_)
        if (g.stamp == epoch_) cur.generic_hashes[name] = g.hash;
    return cur;
}

void InterfaceCache::commit_build() {
    for (auto& [origin, stamp] : pending_stamps_)
        library_stamps_[origin] = stamp;
    pending_stamps_.clear();
}

void InterfaceCache::count_reuse(const std::string& name) {
    if (counted_.insert(name).second) reused_count_ += 1;
}

std::optional<FileStat> InterfaceCache::stat_source(const std::string& key,
                                                    const std::string& path) {
    if (changes_) {
        auto it = changes_->stats.find(key);
        if (it != changes_->stats.end()) return it->second;
        // Deleted package files are known by their absence from stats only
        // when listed in the change set.
        if (changes_->deleted.count(key)) return std::nullopt;
    }
    return vfs_->stat(path);
}

// The validation walk. Post-state: either the entry for `name` is stamped
// with the current epoch (returns true) or the name is recorded missing
// (returns false). An entry is kept iff its source file and every imported
// declaration fingerprint it depends on are unchanged; otherwise it is
// dropped and rebuilt from source.
bool InterfaceCache::validate_one(const std::string& name) {
    {
        auto it = entries_.find(name);
        if (it != entries_.end() && it->second->valid_stamp == epoch_) {
            count_reuse(name);
            return true;
        }
    }
    if (missing_.count(name)) return false;
    if (checking_.count(name)) {
        auto at = std::find(check_path_.begin(), check_path_.end(), name);
        std::string msg = "interface import cycle: ";
        for (auto it = at; it != check_path_.end(); ++it) msg += *it + " -> ";
        throw Error(Err::CycleDetected, msg + name);
    }
    checking_.insert(name);
    check_path_.push_back(name);
    check_counts_[name] += 1;

    SourceRef ref = resolver_ ? resolver_(name, UnitKind::Interface) : SourceRef{};
    std::shared_ptr<CacheEntry> old;
    if (auto it = entries_.find(name); it != entries_.end()) old = it->second;

    auto leave = [&](bool found) {
        checking_.erase(name);
        check_path_.pop_back();
        if (!found) missing_.insert(name);
        return found;
    };

    if (ref.path.empty()) {
        if (old) {
            resident_ -= old->resident_bytes;
            entries_.erase(name);
            result_.evicted.insert(name);
        }
        return leave(false);
    }

    std::string key = unit_key(name, UnitKind::Interface);
    auto st = stat_source(key, ref.path);
    if (!st) {
        if (old) {
            resident_ -= old->resident_bytes;
            entries_.erase(name);
            result_.evicted.insert(name);
        }
        return leave(false);
    }

    // Source identity check: same path, unchanged mtime, or a touch whose
    // content hashes the same.
    std::optional<std::string> text;
    std::optional<uint64_t> text_hash;
    if (changes_) {
        auto it = changes_->text_hashes.find(key);
        if (it != changes_->text_hashes.end()) text_hash = it->second;
    }
    bool source_unchanged = false;
    if (old && old->source_path == ref.path) {
        if (same_mtime(old->mtime, *st)) {
            source_unchanged = true;
        } else {
            if (!text_hash) {
                text = vfs_->read(ref.path);
                if (text) text_hash = fnv1a(*text);
            }
            source_unchanged = text_hash && *text_hash == old->text_hash;
        }
    }

    if (source_unchanged) {
        // The entry's own text is fine; its validity now rests on the
        // declarations it used from imports (and its generic's text, for an
        // instantiation).
        for (const auto& imp : old->ast->imports)
            validate_one(imp);
        // An empty declaration name marks dependence on a generic
        // interface's whole text; freshen those records before the check.
        for (const auto& [uname, decls] : old->fps.used)
            if (decls.count("")) generic_rec(uname);
        if (used_fps_current(old->fps.used)) {
            old->mtime = *st;
            old->valid_stamp = epoch_;
            result_.valid.insert(name);
            count_reuse(name);
            return leave(true);
        }
    }
    if (old) {
        resident_ -= old->resident_bytes;
        entries_.erase(name);
        result_.evicted.insert(name);
    }

    // Rebuild from source.
    if (!text) {
        text = vfs_->read(ref.path);
        if (!text) return leave(false);
    }
    CacheEntry fresh;
    fresh.source_path = ref.path;
    fresh.origin = ref.origin;
    fresh.text_hash = text_hash ? *text_hash : fnv1a(*text);
    fresh.mtime = *st;
    fresh.resident_bytes = text->size();

    UnitAst ast;
    std::string generic_name;
    try {
        {
            auto scope = clock_ ? std::optional(clock_->enter(Phase::Frontend)) : std::nullopt;
            ast = parse_unit(*text);
        }
        if (ast.kind == UnitKind::Module)
            throw Error(Err::SyntaxError, "expected an interface, found a module");
        if (ast.name != name)
            throw Error(Err::SyntaxError, "file declares " + ast.name + ", expected " + name);
        if (ast.is_instantiation) {
            generic_name = ast.generic_name;
            const std::string* gtext = generic_text(generic_name);
            if (!gtext)
                throw Error(Err::ImportOfUnknownUnit,
                            name + " instantiates unknown generic interface " + generic_name);
            auto scope = clock_ ? std::optional(clock_->enter(Phase::Frontend)) : std::nullopt;
            ast = instantiate_generic(ast, *gtext);
        }
    } catch (Error& e) {
        e.attach_file(ref.path);
        throw;
    }

    for (const auto& imp : ast.imports)
        if (!validate_one(imp))
            throw Error(Err::ImportOfUnknownUnit,
                        "interface " + name + " imports unknown interface " + imp);

    try {
        TypeEnv env;
        FpEnv fpenv;
        for (const auto& imp : ast.imports) {
            const auto& dep = *entries_.at(imp);
            env[imp] = dep.summary;
            fpenv[imp] = dep.fps.decls;
        }
        auto scope = clock_ ? std::optional(clock_->enter(Phase::Frontend)) : std::nullopt;
        fresh.summary = typecheck_unit(ast, env).exports;
        fresh.fps = fingerprint_unit(ast, fpenv);
    } catch (Error& e) {
        e.attach_file(ref.path);
        throw;
    }
    if (!generic_name.empty())
        fresh.fps.used[generic_name][""] = generics_.at(generic_name).hash;
    fresh.ast = std::make_shared<const UnitAst>(std::move(ast));
    fresh.valid_stamp = epoch_;

    insert_entry(name, std::move(fresh));
    parsed_count_ += 1;
    parse_counts_[name] += 1;
    counted_.insert(name);
    return leave(true);
}

bool InterfaceCache::used_fps_current(const FpEnv& used) const {
    for (const auto& [uname, decls] : used) {
        for (const auto& [dname, fp] : decls) {
            if (dname.empty()) {
                auto git = generics_.find(uname);
                if (git == generics_.end() || git->second.stamp != epoch_ ||
                    git->second.hash != fp)
                    return false;
                continue;
            }
            auto it = entries_.find(uname);
            if (it == entries_.end() || it->second->valid_stamp != epoch_) return false;
            const auto& cur = it->second->fps.decls;
            auto dit = cur.find(dname);
            if (dit == cur.end() || dit->second != fp) return false;
        }
    }
    return true;
}

// Confirms a generic interface's identity for this epoch: mtime gate first,
// content hash when the mtime moved. Returns null when the generic does not
// exist (a stale record is dropped).
const InterfaceCache::GenericRec* InterfaceCache::generic_rec(const std::string& name) {
    auto it = generics_.find(name);
    if (it != generics_.end() && it->second.stamp == epoch_) return &it->second;
    if (missing_.count("generic:" + name)) return nullptr;

    SourceRef ref = resolver_ ? resolver_(name, UnitKind::GenericInterface) : SourceRef{};
    auto fail = [&]() -> const GenericRec* {
        if (it != generics_.end()) generics_.erase(it);
        missing_.insert("generic:" + name);
        return nullptr;
    };
    if (ref.path.empty()) return fail();
    std::string key = unit_key(name, UnitKind::GenericInterface);
    auto st = stat_source(key, ref.path);
    if (!st) return fail();

    if (it != generics_.end() && it->second.path == ref.path &&
        same_mtime(it->second.mtime, *st)) {
        it->second.stamp = epoch_;
        return &it->second;
    }
    auto text = vfs_->read(ref.path);
    if (!text) return fail();
    GenericRec rec;
    rec.path = ref.path;
    rec.origin = ref.origin;
    rec.mtime = *st;
    rec.hash = fnv1a(*text);
    rec.text = std::move(*text);
    rec.stamp = epoch_;
    rec.text_epoch = epoch_;
    auto pos = generics_.insert_or_assign(name, std::move(rec)).first;
    return &pos->second;
}

const std::string* InterfaceCache::generic_text(const std::string& name) {
    const GenericRec* rec = generic_rec(name);
    if (!rec) return nullptr;
    if (rec->text_epoch != epoch_ || rec->text.empty()) {
        auto text = vfs_->read(rec->path);
        if (!text) return nullptr;
        auto& mut = generics_.at(name);
        mut.text = std::move(*text);
        mut.text_epoch = epoch_;
        return &mut.text;
    }
    return &rec->text;
}

std::optional<uint64_t> InterfaceCache::generic_hash(const std::string& name) {
    const GenericRec* rec = generic_rec(name);
    if (!rec) return std::nullopt;
    return rec->hash;
}

void InterfaceCache::insert_entry(const std::string& name, CacheEntry&& entry) {
    uint64_t bytes = entry.resident_bytes;
    entries_[name] = std::make_shared<CacheEntry>(std::move(entry));
    resident_ += bytes;
    enforce_budget(name);
}

// Least-recently-stamped eviction, oldest epoch first, name order breaking
// ties. The entry just inserted is spared so a reference handed out this
// instant stays cached.
void InterfaceCache::enforce_budget(const std::string& keep) {
    if (!budget_) return;
    while (resident_ > *budget_) {
        const std::string* victim = nullptr;
        uint64_t oldest = 0;
        for (const auto& [name, e] : entries_) {
            if (name == keep) continue;
            if (!victim || e->valid_stamp < oldest) {
                victim = &name;
                oldest = e->valid_stamp;
            }
        }
        if (!victim) return;
        auto it = entries_.find(*victim);
        resident_ -= it->second->resident_bytes;
        entries_.erase(it);
    }
}

} // namespace m3
