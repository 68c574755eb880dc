#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <random>

#include "m3/depcheck.hpp"
#include "m3/error.hpp"
#include "m3/fnv.hpp"
#include "m3/vfs.hpp"
#include "support/randpkg.hpp"
#include "support/support.hpp"

using namespace m3;
using namespace m3::test;

namespace {

BuildState sample_state() {
    BuildState st;
    UnitState a;
    a.text_hash = 111;
    a.mtime_sec = 1000;
    a.mtime_nsec = 500;
    a.used["B"]["K"] = 42;
    a.used["G"][""] = 7; // whole-file dependency on a generic
    st.units["A.i3"] = a;
    UnitState m;
    m.text_hash = 222;
    m.used["A"]["K"] = 9;
    st.units["A.m3"] = m;
    return st;
}

} // namespace

TEST_CASE("state codec: roundtrip, determinism, stamp sensitivity") {
    BuildState st = sample_state();
    std::string bytes = encode_state(st);
    CHECK(bytes.substr(0, 4) == "M3S1");
    BuildState back = decode_state(bytes);
    CHECK(back == st);
    CHECK(encode_state(back) == bytes);

    uint64_t stamp = package_stamp(st);
    st.units["A.i3"].used["B"]["K"] = 43;
    CHECK(package_stamp(st) != stamp);
}

TEST_CASE("state codec: malformed input raises StateCorrupt") {
    std::string bytes = encode_state(sample_state());
    auto expect_corrupt = [](const std::string& data) {
        try {
            decode_state(data);
            FAIL("decode accepted corrupt state");
        } catch (const Error& e) {
            CHECK(e.code() == Err::StateCorrupt);
        }
    };
    expect_corrupt("");
    expect_corrupt("M3S0" + bytes.substr(4));
    expect_corrupt(bytes.substr(0, bytes.size() / 2));
    expect_corrupt(bytes + "x"); // trailing garbage
}

TEST_CASE("state file: load/save through the filesystem") {
    TempDir tmp;
    Vfs vfs;
    std::string path = tmp.sub("pkg.m3state");
    CHECK(!load_state(vfs, path).has_value());

    BuildState st = sample_state();
    save_state(vfs, path, st);
    auto back = load_state(vfs, path);
    REQUIRE(back.has_value());
    CHECK(*back == st);

    write_file(path, "garbage");
    try {
        load_state(vfs, path);
        FAIL("corrupt state file accepted");
    } catch (const Error& e) {
        CHECK(e.code() == Err::StateCorrupt);
    }
}

TEST_CASE("detect_modified: mtime gates, hash confirms") {
    TempDir tmp;
    Vfs base;
    CountingVfs vfs(base);

    std::vector<SourceFile> sources;
    auto add = [&](const std::string& name, UnitKind kind, const std::string& text) {
        std::string ext = kind == UnitKind::Interface ? ".i3" : ".m3";
        std::string path = tmp.sub(name + ext);
        write_file(path, text);
        sources.push_back({path, name, kind});
    };
    add("A", UnitKind::Interface, "INTERFACE A;\nEND A.\n");
    add("B", UnitKind::Module, "MODULE B;\nEND B.\n");

    // First build: everything is modified, observations are recorded.
    ChangeSet first = detect_modified(sources, {}, vfs);
    CHECK(first.modified == std::set<std::string>{"A.i3", "B.m3"});
    CHECK(first.stats.size() == 2);
    CHECK(first.text_hashes.count("A.i3") == 1);

    BuildState prev;
    for (const auto& s : sources) {
        UnitState u;
        u.text_hash = first.text_hashes.at(s.key());
        u.mtime_sec = first.stats.at(s.key()).mtime_sec;
        u.mtime_nsec = first.stats.at(s.key()).mtime_nsec;
        prev.units[s.key()] = u;
    }

    // Untouched files: one stat each, no reads.
    vfs.reset();
    ChangeSet second = detect_modified(sources, prev, vfs);
    CHECK(second.modified.empty());
    CHECK(second.deleted.empty());
    CHECK(vfs.stats() == 2);
    CHECK(vfs.reads() == 0);

    // Touch without content change: mtime moves, the hash acquits it.
    set_mtime(sources[0].path, prev.units["A.i3"].mtime_sec + 5, 0);
    vfs.reset();
    ChangeSet touched = detect_modified(sources, prev, vfs);
    CHECK(touched.modified.empty());
    CHECK(vfs.reads() == 1); // only the touched file was read
    CHECK(touched.text_hashes.count("A.i3") == 1);

    // Real change.
    write_file(sources[0].path, "INTERFACE A;\nCONST K = 1;\nEND A.\n");
    set_mtime(sources[0].path, prev.units["A.i3"].mtime_sec + 9, 0);
    ChangeSet changed = detect_modified(sources, prev, vfs);
    CHECK(changed.modified == std::set<std::string>{"A.i3"});

    // Deletion.
    std::remove(sources[1].path.c_str());
    ChangeSet deleted = detect_modified(sources, prev, vfs);
    CHECK(deleted.deleted == std::set<std::string>{"B.m3"});
}

TEST_CASE("dirty set: declaration-level ripple on the running example") {
    auto files = fig2_sources();
    auto objects = std::set<std::string>{"P.m3"};

    // Editing E's constant dirties the fingerprint chain E, B, C, A, P but
    // never D.
    auto edited = files;
    edited["E.i3"] = "INTERFACE E;\nCONST EVal = 6;\nEND E.\n";
    DirtySet d = dirty_via_depcheck(files, edited, objects);
    CHECK(d.units ==
          std::set<std::string>{"E.i3", "B.i3", "C.i3", "A.i3", "P.m3"});
    CHECK(!d.is_dirty("D.i3"));

    // The reasons name the culprit declaration.
    bool found = false;
    for (const auto& r : d.reasons.at("B.i3"))
        if (r.kind == DirtyReason::UsedDeclChanged && r.interface_name == "E" &&
            r.decl_name == "EVal")
            found = true;
    CHECK(found);

    // An added constant nothing references dirties only its own file: the
    // fine-grain win over file-level dependencies.
    auto padded = files;
    padded["E.i3"] = "INTERFACE E;\nCONST EVal = 5;\nCONST Pad = 9;\nEND E.\n";
    DirtySet p = dirty_via_depcheck(files, padded, objects);
    CHECK(p.units == std::set<std::string>{"E.i3"});

    // A missing object forces the module dirty even with no source changes.
    DirtySet m = dirty_via_depcheck(files, files, {});
    CHECK(m.units == std::set<std::string>{"P.m3"});
    CHECK(m.reasons.at("P.m3")[0].kind == DirtyReason::MissingObject);

    // No changes, object present: nothing to do.
    DirtySet clean = dirty_via_depcheck(files, files, objects);
    CHECK(clean.units.empty());
}

TEST_CASE("dirty set: equals the recompile-and-diff oracle on random edits") {
    std::mt19937_64 rng(97);
    for (int trial = 0; trial < 80; trial++) {
        RandomBuild b = gen_build(rng, 10);
        auto prev_files = b.files();
        auto prev_states = full_compile_states(prev_files);

        std::set<std::string> objects;
        for (const auto& [key, st] : prev_states)
            if (key.substr(key.size() - 3) == ".m3") objects.insert(key);

        int nedits = 1 + static_cast<int>(rng() % 3);
        for (int e = 0; e < nedits; e++) random_edit(rng, b);
        auto now_files = b.files();

        DirtySet fine = dirty_via_depcheck(prev_files, now_files, objects);
        auto oracle =
            oracle_dirty(prev_states, full_compile_states(now_files), objects);
        CHECK(fine.units == oracle);
    }
}

TEST_CASE("record_build_state: replace, carry, drop") {
    BuildState prev = sample_state();
    std::map<std::string, UnitState> recompiled;
    UnitState fresh;
    fresh.text_hash = 999;
    recompiled["A.m3"] = fresh;

    // A.i3 survives untouched, A.m3 is replaced, C.i3 appears, B.i3 vanishes.
    prev.units["B.i3"] = UnitState{};
    UnitState c;
    c.text_hash = 5;
    recompiled["C.i3"] = c;

    std::set<std::string> surviving{"A.i3", "A.m3", "C.i3"};
    BuildState next = record_build_state(prev, recompiled, surviving);
    CHECK(next.units.size() == 3);
    CHECK(next.units.at("A.i3") == prev.units.at("A.i3"));
    CHECK(next.units.at("A.m3").text_hash == 999);
    CHECK(next.units.at("C.i3").text_hash == 5);
    CHECK(next.units.count("B.i3") == 0);
}
