#include "m3/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>

#include "m3/codegen.hpp"
#include "m3/depcheck.hpp"
#include "m3/error.hpp"
#include "m3/fnv.hpp"
#include "m3/linker.hpp"
#include "m3/lower.hpp"
#include "m3/objfile.hpp"
#include "m3/parse.hpp"

namespace m3 {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

} // namespace

PackageManifest parse_manifest(const std::string& text) {
    PackageManifest man;
    bool saw_header = false;
    size_t pos = 0;
    int lineno = 0;
    auto fail = [&](const std::string& msg) -> Error {
        return Error(Err::ManifestError, "m3package line " + std::to_string(lineno) + ": " + msg);
    };
    while (pos <= text.size()) {
        size_t nl = text.find('\n', pos);
        std::string line = trim(text.substr(pos, nl == std::string::npos ? nl : nl - pos));
        pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
        lineno++;
        if (line.empty() || line[0] == '#') continue;
        if (!saw_header) {
            if (line != "m3package") throw fail("first line must be exactly 'm3package'");
            saw_header = true;
            continue;
        }
        size_t sp = line.find_first_of(" \t");
        std::string key = line.substr(0, sp);
        std::string value = sp == std::string::npos ? "" : trim(line.substr(sp));
        if (value.empty()) throw fail("'" + key + "' needs a value");
        if (key == "name") {
            if (!man.name.empty()) throw fail("duplicate 'name'");
            man.name = value;
        } else if (key == "unit") {
            if (!classify_path(value))
                throw fail("unit '" + value + "' must end in .i3, .m3 or .ig");
            man.units.push_back(value);
        } else if (key == "library") {
            man.libraries.push_back(value);
        } else if (key == "option") {
            man.options.push_back(value);
        } else if (key == "entry") {
            if (!man.entry.empty()) throw fail("duplicate 'entry'");
            if (value.find('.') == std::string::npos)
                throw fail("entry must be 'Module.Procedure'");
            man.entry = value;
        } else {
            throw fail("unknown keyword '" + key + "'");
        }
    }
    if (!saw_header) throw Error(Err::ManifestError, "empty manifest: first line must be 'm3package'");
    if (man.name.empty()) throw Error(Err::ManifestError, "manifest declares no 'name'");
    return man;
}

PhaseReport BuildExecutor::build(const std::string& package_dir,
                                 const std::vector<std::string>& options, const TextSink& sink) {
    PhaseReport report;
    PhaseClock clock(report);
    bool opened = false;
    auto emit = [&](std::string text) {
        if (sink) sink(text);
    };
    try {
        fs::path pdir(package_dir);
        std::string out_dir = (pdir / "m3out").string();
        std::string state_path = (pdir / "m3out" / "package.m3state").string();

        auto mtext = vfs_->read((pdir / "m3package").string());
        if (!mtext)
            throw Error(Err::ManifestError, "no m3package manifest in " + package_dir);
        PackageManifest man = parse_manifest(*mtext);
        fs::create_directories(pdir / "m3out");
        // Build options are carried for protocol compatibility; none are
        // defined yet.
        (void)options;

        std::vector<SourceFile> sources;
        std::map<std::string, std::string> iface_paths, generic_paths;
        std::vector<SourceFile> module_sources;
        std::set<std::string> source_keys;
        for (const auto& u : man.units) {
            SourceFile sf;
            sf.path = (pdir / u).lexically_normal().string();
            sf.unit_name = unit_name_from_path(u);
            sf.kind = *classify_path(u);
            if (!source_keys.insert(sf.key()).second)
                throw Error(Err::ManifestError, "unit " + sf.key() + " listed twice");
            if (sf.kind == UnitKind::Interface) iface_paths[sf.unit_name] = sf.path;
            if (sf.kind == UnitKind::GenericInterface) generic_paths[sf.unit_name] = sf.path;
            if (sf.kind == UnitKind::Module) module_sources.push_back(sf);
            sources.push_back(std::move(sf));
        }

        // Library directories, absolutized: the path is the cache's origin
        // key, shared across every package that links the library.
        std::vector<std::pair<std::string, std::string>> libs; // origin, state path
        for (const auto& l : man.libraries) {
            fs::path lp = fs::path(l).is_absolute() ? fs::path(l) : pdir / l;
            std::error_code ec;
            fs::path canon = fs::weakly_canonical(lp, ec);
            if (ec) canon = lp.lexically_normal();
            libs.emplace_back(canon.string(),
                              (canon / "m3out" / "package.m3state").string());
        }

        // Package units shadow library units of the same name; libraries are
        // probed in manifest order. Captures are by value: the resolver
        // outlives this frame inside the cache.
        SourceResolver resolver = [ip = iface_paths, gp = generic_paths, libs,
                                   vfs = vfs_](const std::string& name,
                                               UnitKind kind) -> SourceRef {
            const std::map<std::string, std::string>* local = nullptr;
            const char* ext = "";
            if (kind == UnitKind::Interface) {
                local = &ip;
                ext = ".i3";
            } else if (kind == UnitKind::GenericInterface) {
                local = &gp;
                ext = ".ig";
            } else {
                return {};
            }
            if (auto it = local->find(name); it != local->end()) return {it->second, ""};
            for (const auto& [origin, state] : libs) {
                std::string candidate = origin + "/" + name + ext;
                if (vfs->stat(candidate)) return {candidate, origin};
            }
            return {};
        };

        BuildState prev;
        ChangeSet changes;
        DirtySet dirty;
        std::vector<std::pair<std::string, std::optional<FileStat>>> lib_state_stats;
        {
            auto scope = clock.enter(Phase::SmartRecomp);
            if (auto loaded = load_state(*vfs_, state_path)) prev = *loaded;
            changes = detect_modified(sources, prev, *vfs_);
            for (const auto& sf : sources)
                if (changes.deleted.count(sf.key()))
                    throw Error(Err::ManifestError,
                                "listed unit file is missing: " + sf.path);

            cache_->begin_build(resolver, &changes, &clock);
            opened = true;
            for (const auto& [origin, lib_state] : libs) {
                auto res = cache_->apply_library_shortcut(origin, lib_state);
                lib_state_stats.emplace_back(origin, res.state_stat);
            }

            // Roots: every package interface, plus every interface any
            // previously compiled unit used — those fingerprints must be
            // current for the dirty-set comparison even when no live import
            // path reaches them.
            std::set<std::string> roots;
            for (const auto& [name, path] : iface_paths) roots.insert(name);
            for (const auto& [key, unit] : prev.units)
                for (const auto& [uname, decls] : unit.used)
                    if (!decls.count("")) roots.insert(uname);
            cache_->validate(roots);

            std::set<std::string> objects_present;
            for (const auto& sf : module_sources)
                if (vfs_->stat((pdir / "m3out" / (sf.unit_name + ".m3o")).string()))
                    objects_present.insert(sf.key());

            dirty = compute_dirty_set(changes.modified, sources, prev,
                                      cache_->current_fingerprints(), objects_present);
        }

        // Compile every dirty unit, smallest key first. Interfaces were
        // already (re)parsed into the cache by validation; their "compile" is
        // the new state entry. Modules run the full front end and code
        // generator.
        std::map<std::string, UnitState> recompiled;
        std::map<std::string, const SourceFile*> by_key;
        for (const auto& sf : sources) by_key[sf.key()] = &sf;
        bool wrote_objects = false;
        for (const auto& key : dirty.units) {
            auto bit = by_key.find(key);
            if (bit == by_key.end()) continue; // deleted unit: no compile
            const SourceFile& sf = *bit->second;
            UnitState st;
            auto stat_it = changes.stats.find(key);
            if (stat_it == changes.stats.end())
                throw Error(Err::IoError, "lost stat for " + sf.path);
            st.mtime_sec = stat_it->second.mtime_sec;
            st.mtime_nsec = stat_it->second.mtime_nsec;

            if (sf.kind == UnitKind::Interface) {
                auto entry = cache_->get_or_parse(sf.unit_name);
                st.text_hash = entry->text_hash;
                st.used = entry->fps.used;
            } else if (sf.kind == UnitKind::GenericInterface) {
                auto h = cache_->generic_hash(sf.unit_name);
                if (!h) throw Error(Err::IoError, "cannot read " + sf.path);
                st.text_hash = *h;
            } else {
                try {
                    UnitIr ir;
                    std::vector<std::string> init_imports;
                    {
                        auto fscope = clock.enter(Phase::Frontend);
                        auto text = vfs_->read(sf.path);
                        if (!text) throw Error(Err::IoError, "cannot read " + sf.path);
                        st.text_hash = fnv1a(*text);
                        UnitAst ast = parse_unit(*text);
                        if (ast.kind != UnitKind::Module)
                            throw Error(Err::SyntaxError, "expected a module");
                        if (ast.name != sf.unit_name)
                            throw Error(Err::SyntaxError, "file declares " + ast.name +
                                                              ", expected " + sf.unit_name);
                        // The init-order dependency set: the module's
                        // imports, its interface, and its interface's
                        // imports.
                        std::set<std::string> needed(ast.imports.begin(), ast.imports.end());
                        bool paired = iface_paths.count(ast.name) != 0;
                        if (paired) needed.insert(ast.name);
                        TypeEnv env;
                        FpEnv fpenv;
                        std::set<std::string> init_deps = needed;
                        for (const auto& dep : needed) {
                            auto e = cache_->get_or_parse(dep);
                            env[dep] = e->summary;
                            fpenv[dep] = e->fps.decls;
                            if (paired && dep == ast.name)
                                init_deps.insert(e->ast->imports.begin(),
                                                 e->ast->imports.end());
                        }
                        CheckedUnit checked = typecheck_unit(ast, env);
                        st.used = fingerprint_unit(ast, fpenv).used;
                        ir = lower_unit(ast, checked, env);
                        validate_ir(ir);
                        init_imports.assign(init_deps.begin(), init_deps.end());
                    }
                    auto cscope = clock.enter(Phase::Codegen);
                    GeneratedUnit gen = generate_code(ir);
                    gen.imports = std::move(init_imports);
                    vfs_->write((pdir / "m3out" / (sf.unit_name + ".m3o")).string(),
                                encode_object(gen));
                    wrote_objects = true;
                } catch (Error& e) {
                    e.attach_file(sf.path);
                    throw;
                }
            }
            recompiled[key] = std::move(st);
            report.units_compiled += 1;
        }

        // Link when the package declares an entry and the image is missing
        // or older than any object or library state that feeds it.
        if (!man.entry.empty()) {
            std::string image_path = (pdir / "m3out" / (man.name + ".m3x")).string();
            bool relink = wrote_objects || !dirty.units.empty() || !changes.deleted.empty();
            auto img_stat = vfs_->stat(image_path);
            if (!img_stat) {
                relink = true;
            } else if (!relink) {
                auto newer = [&](const std::optional<FileStat>& st) {
                    return st && (st->mtime_sec > img_stat->mtime_sec ||
                                  (st->mtime_sec == img_stat->mtime_sec &&
                                   st->mtime_nsec > img_stat->mtime_nsec));
                };
                for (const auto& sf : module_sources)
                    if (newer(vfs_->stat(
                            (pdir / "m3out" / (sf.unit_name + ".m3o")).string())))
                        relink = true;
                for (const auto& [origin, st] : lib_state_stats)
                    if (newer(st)) relink = true;
            }
            if (relink) {
                auto lscope = clock.enter(Phase::Link);
                std::vector<GeneratedUnit> objects;
                for (const auto& sf : module_sources) {
                    std::string opath = (pdir / "m3out" / (sf.unit_name + ".m3o")).string();
                    auto bytes = vfs_->read(opath);
                    if (!bytes) throw Error(Err::IoError, "missing object " + opath);
                    objects.push_back(decode_object(*bytes));
                }
                for (const auto& [origin, lib_state] : libs) {
                    std::vector<std::string> lib_objs;
                    std::error_code ec;
                    for (fs::directory_iterator it(fs::path(origin) / "m3out", ec), end;
                         !ec && it != end; it.increment(ec)) {
                        if (it->path().extension() == ".m3o")
                            lib_objs.push_back(it->path().string());
                    }
                    std::sort(lib_objs.begin(), lib_objs.end());
                    for (const auto& opath : lib_objs) {
                        auto bytes = vfs_->read(opath);
                        if (!bytes) throw Error(Err::IoError, "missing object " + opath);
                        objects.push_back(decode_object(*bytes));
                    }
                }

                // Interfaces reachable from the linked objects feed the type
                // repository and initialization order.
                std::map<std::string, UnitAst> interfaces;
                std::vector<std::string> work;
                for (const auto& o : objects)
                    for (const auto& imp : o.imports) work.push_back(imp);
                while (!work.empty()) {
                    std::string name = work.back();
                    work.pop_back();
                    if (interfaces.count(name)) continue;
                    auto e = cache_->get_or_parse(name);
                    interfaces.emplace(name, *e->ast);
                    for (const auto& imp : e->ast->imports) work.push_back(imp);
                }

                Image img = link(objects, prelink(objects, interfaces), man.entry);
                vfs_->write(image_path, encode_image(img));
            }
        }

        // Success tail: drop objects of deleted modules, persist the new
        // state (only when it changed — dependents shortcut on this file's
        // identity), and commit library stamps.
        for (const auto& key : changes.deleted) {
            if (auto kind = classify_path(key); kind && *kind == UnitKind::Module) {
                std::error_code ec;
                fs::remove(pdir / "m3out" /
                               (key.substr(0, key.size() - 3) + ".m3o"),
                           ec);
            }
        }
        BuildState next = record_build_state(prev, recompiled, source_keys);
        if (!(next == prev) || !vfs_->stat(state_path))
            save_state(*vfs_, state_path, next);
        cache_->commit_build();
    } catch (Error& e) {
        report.failed = true;
        report.error = format_diagnostic(e);
        emit(report.error + "\n");
    } catch (std::exception& e) {
        report.failed = true;
        report.error = std::string("error: ") + e.what();
        emit(report.error + "\n");
    }
    if (opened) {
        report.interfaces_parsed = cache_->parses();
        report.interfaces_reused = cache_->reuses();
        cache_->end_build();
    }
    clock.finish();
    return report;
}

} // namespace m3
