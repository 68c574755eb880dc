#include "m3/typerepo.hpp"

#include <algorithm>
#include <set>

#include "m3/error.hpp"
#include "m3/fnv.hpp"

namespace m3 {

bool TypeRepo::is_subtype(uint32_t a, uint32_t b) const {
    if (a >= types.size() || b >= types.size())
        throw Error(Err::UnknownTypeId,
                    "type id " + std::to_string(a >= types.size() ? a : b) + " out of range");
    return types[b].pre <= types[a].pre && types[a].post <= types[b].post;
}

std::optional<uint32_t> TypeRepo::id_of(const std::string& qualified_name) const {
    auto it = names.find(qualified_name);
    if (it == names.end()) return std::nullopt;
    return it->second;
}

namespace {

constexpr uint8_t kSep = 0x1F;

enum class Shape : uint8_t { AnyRoot, Record, Object };

struct NodeInfo {
    Shape shape = Shape::Record;
    uint64_t parent_fp = 0; // Object only
};

class RepoBuilder {
public:
    explicit RepoBuilder(const std::map<std::string, UnitAst>& ifaces) : ifaces_(ifaces) {}

    TypeRepo run() {
        collect_revelations();
        check_coherence();

        Fnv1a any;
        any.update("any");
        fp_any_ = any.digest();
        nodes_[fp_any_] = NodeInfo{Shape::AnyRoot, 0};

        for (const auto& [name, ast] : ifaces_)
            for (const auto& d : ast.decls)
                if (d.kind == DeclKind::Type || d.kind == DeclKind::Opaque)
                    out_names_[name + "." + d.name] = fp_of_decl(name, d);

        number_forest();

        TypeRepo repo;
        repo.types = std::move(ordered_);
        repo.names["ANY"] = id_by_fp_.at(fp_any_);
        for (const auto& [qual, fp] : out_names_) repo.names[qual] = id_by_fp_.at(fp);
        for (const auto& [target, sites] : reveals_)
            repo.opaques.push_back(
                OpaqueBinding{target, sites.front().unit, id_by_fp_.at(decl_fp_.at(target))});

        check_bounds(repo);
        return repo;
    }

private:
    struct RevealSite {
        std::string unit;
        const Decl* decl;
    };

    [[noreturn]] static void type_err(int line, const std::string& msg) {
        throw Error::at(Err::TypeError, line, 0, msg);
    }

    std::string qualify(const std::string& from_unit, const QualIdent& q) const {
        return (q.unit.empty() ? from_unit : q.unit) + "." + q.name;
    }

    void collect_revelations() {
        for (const auto& [name, ast] : ifaces_)
            for (const auto& d : ast.decls)
                if (d.kind == DeclKind::Reveal)
                    reveals_[qualify(name, d.reveal_target)].push_back(RevealSite{name, &d});
    }

    void check_coherence() {
        for (const auto& [name, ast] : ifaces_)
            for (const auto& d : ast.decls) {
                if (d.kind != DeclKind::Opaque) continue;
                std::string full = name + "." + d.name;
                auto it = reveals_.find(full);
                if (it == reveals_.end())
                    throw Error(Err::MissingRevelation, "opaque type " + full +
                                                            " has no revelation in the link");
                if (it->second.size() > 1) {
                    std::string sites;
                    for (const auto& s : it->second)
                        sites += (sites.empty() ? "" : ", ") + s.unit;
                    throw Error(Err::DuplicateRevelation,
                                "opaque type " + full + " is revealed in " + sites);
                }
            }
        // A revelation must target an opaque declaration that exists.
        for (const auto& [target, sites] : reveals_) {
            size_t dot = target.rfind('.');
            std::string unit = target.substr(0, dot), decl = target.substr(dot + 1);
            auto it = ifaces_.find(unit);
            const Decl* d = it == ifaces_.end() ? nullptr : it->second.find_decl(decl);
            if (!d || d->kind != DeclKind::Opaque)
                type_err(sites.front().decl->line,
                         "revelation targets " + target + " which is not an opaque type");
        }
    }

    const Decl& lookup(const std::string& unit, const std::string& decl, int line) const {
        auto it = ifaces_.find(unit);
        if (it == ifaces_.end()) type_err(line, "interface " + unit + " is not in the link");
        const Decl* d = it->second.find_decl(decl);
        if (!d) type_err(line, unit + " has no declaration named " + decl);
        if (d->kind != DeclKind::Type && d->kind != DeclKind::Opaque)
            type_err(line, unit + "." + decl + " is not a type");
        return *d;
    }

    uint64_t fp_of_qual(const std::string& from_unit, const QualIdent& q) {
        std::string unit = q.unit.empty() ? from_unit : q.unit;
        return fp_of_decl(unit, lookup(unit, q.name, q.line));
    }

    uint64_t fp_of_decl(const std::string& unit, const Decl& d) {
        std::string key = unit + "." + d.name;
        if (auto it = decl_fp_.find(key); it != decl_fp_.end()) return it->second;
        if (!in_progress_.insert(key).second)
            throw Error(Err::CycleDetected, "type definition cycle involving " + key);

        uint64_t fp = 0;
        if (d.kind == DeclKind::Opaque) {
            const RevealSite& site = reveals_.at(key).front();
            fp = fp_of_type_expr(site.unit, *site.decl->type);
        } else {
            fp = fp_of_type_expr(unit, *d.type);
        }

        in_progress_.erase(key);
        decl_fp_[key] = fp;
        return fp;
    }

    uint64_t fp_of_type_expr(const std::string& unit, const TypeExpr& t) {
        switch (t.kind) {
            case TypeExprKind::Named:
                return fp_of_qual(unit, t.named);
            case TypeExprKind::Record: {
                Fnv1a h;
                h.update("record");
                for (const auto& f : t.fields) {
                    h.update_byte(kSep);
                    h.update(f.name);
                }
                uint64_t fp = h.digest();
                nodes_.emplace(fp, NodeInfo{Shape::Record, 0});
                return fp;
            }
            case TypeExprKind::Object: {
                uint64_t parent = t.super ? fp_of_qual(unit, *t.super) : fp_any_;
                Shape ps = nodes_.at(parent).shape;
                if (ps == Shape::Record)
                    type_err(t.super ? t.super->line : 0,
                             "supertype " + t.super->spelled() + " is not an object type");
                Fnv1a h;
                h.update("object");
                h.update_u64(parent);
                for (const auto& f : t.fields) {
                    h.update_byte(kSep);
                    h.update(f.name);
                }
                uint64_t fp = h.digest();
                nodes_.emplace(fp, NodeInfo{Shape::Object, parent});
                return fp;
            }
        }
        return 0;
    }

    void number_forest() {
        // Ids ascend with fingerprints; DFS visits roots and children in id
        // order, so numbering is deterministic.
        std::vector<uint64_t> fps;
        fps.reserve(nodes_.size());
        for (const auto& [fp, info] : nodes_) fps.push_back(fp);
        std::sort(fps.begin(), fps.end());
        for (uint32_t i = 0; i < fps.size(); i++) id_by_fp_[fps[i]] = i;

        std::vector<std::vector<uint32_t>> children(fps.size());
        std::vector<uint32_t> roots;
        for (uint32_t id = 0; id < fps.size(); id++) {
            const NodeInfo& info = nodes_.at(fps[id]);
            if (info.shape == Shape::Object)
                children[id_by_fp_.at(info.parent_fp)].push_back(id);
            else
                roots.push_back(id);
        }

        ordered_.resize(fps.size());
        uint32_t clock = 0;
        // Iterative DFS; entries are (id, child position).
        for (uint32_t root : roots) {
            std::vector<std::pair<uint32_t, size_t>> stack{{root, 0}};
            ordered_[root] = TypeNode{fps[root], clock++, 0};
            while (!stack.empty()) {
                auto& [id, next] = stack.back();
                if (next < children[id].size()) {
                    uint32_t c = children[id][next++];
                    ordered_[c] = TypeNode{fps[c], clock++, 0};
                    stack.emplace_back(c, 0);
                } else {
                    ordered_[id].post = clock++;
                    stack.pop_back();
                }
            }
        }
    }

    void check_bounds(const TypeRepo& repo) {
        for (const auto& [name, ast] : ifaces_)
            for (const auto& d : ast.decls) {
                if (d.kind != DeclKind::Opaque || !d.bound) continue;
                uint32_t own = id_by_fp_.at(decl_fp_.at(name + "." + d.name));
                uint32_t bound = id_by_fp_.at(fp_of_qual(name, *d.bound));
                if (!repo.is_subtype(own, bound))
                    throw Error::at(Err::RevelationIncompatible, d.line, 0,
                                    "revelation of " + name + "." + d.name +
                                        " is not a subtype of its bound " + d.bound->spelled());
            }
    }

    const std::map<std::string, UnitAst>& ifaces_;
    std::map<std::string, std::vector<RevealSite>> reveals_;
    std::map<uint64_t, NodeInfo> nodes_;
    std::map<std::string, uint64_t> decl_fp_;
    std::map<std::string, uint64_t> out_names_;
    std::set<std::string> in_progress_;
    std::map<uint64_t, uint32_t> id_by_fp_;
    std::vector<TypeNode> ordered_;
    uint64_t fp_any_ = 0;
};

} // namespace

TypeRepo build_type_repo(const std::map<std::string, UnitAst>& interfaces) {
    return RepoBuilder(interfaces).run();
}

} // namespace m3
