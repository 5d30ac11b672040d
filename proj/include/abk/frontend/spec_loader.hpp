#pragma once

// JSON spec files. Every expression is parsed and dimension-checked before
// any object is assembled; unknown keys are rejected. Schema errors carry a
// JSON pointer to the offending value.
//
// Fibre and multi-indices in files are 1-based; internally they are 0-based.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <tuple>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "abk/frontend/expr.hpp"
#include "abk/morphism.hpp"
#include "abk/semispray.hpp"

namespace abk::frontend {

class SchemaError : public Error {
public:
    SchemaError(std::string pointer, const std::string& message)
        : Error(message + " at " + (pointer.empty() ? std::string("/") : pointer)), pointer_(std::move(pointer)) {}

    const std::string& pointer() const noexcept { return pointer_; }

private:
    std::string pointer_;
};

struct ToleranceTiers {
    double exact = tolerance::exact;
    double single = tolerance::single;
    double nested = tolerance::nested;
};

struct NamedForm {
    std::string name;
    FormLocal form;
};

struct NamedSection {
    std::string name;
    SectionLocal section;
};

struct MorphismSpec {
    MorphismLocal morphism;
    std::vector<NamedForm> target_forms;  // user forms declared in the target spec
};

struct LoadedSpec {
    std::filesystem::path path;
    AnchoredBundleSpec bundle;
    std::optional<SemisprayLocal> semispray;
    bool expect_spray = true;
    std::optional<AlgebroidStructure> algebroid;
    std::vector<NamedForm> forms;
    std::vector<NamedSection> sections;
    std::optional<MorphismSpec> morphism;
    ToleranceTiers tolerances;
    std::uint64_t seed = 0;
    std::vector<std::string> expressions;  // every formula string, in file order

    const std::string& first_chart() const { return bundle.charts.front().name; }
};

namespace detail {

using json = nlohmann::json;

inline std::string escape_pointer_token(const std::string& key) {
    std::string out;
    for (char c : key) {
        if (c == '~') out += "~0";
        else if (c == '/') out += "~1";
        else out += c;
    }
    return out;
}

class Loader {
public:
    explicit Loader(std::filesystem::path path, int depth) : path_(std::move(path)), depth_(depth) {}

    LoadedSpec load() {
        std::ifstream in(path_);
        if (!in) throw SchemaError("", "cannot open spec file '" + path_.string() + "'");
        json doc;
        try {
            doc = json::parse(in);
        } catch (const json::parse_error& e) {
            throw SchemaError("", std::string("invalid JSON: ") + e.what());
        }
        return build(doc);
    }

private:
    using Ptr = std::string;

    static Ptr child(const Ptr& p, const std::string& key) { return p + "/" + escape_pointer_token(key); }
    static Ptr child(const Ptr& p, std::size_t i) { return p + "/" + std::to_string(i); }

    static void require_object(const json& j, const Ptr& p) {
        if (!j.is_object()) throw SchemaError(p, "expected an object");
    }
    static void require_array(const json& j, const Ptr& p) {
        if (!j.is_array()) throw SchemaError(p, "expected an array");
    }
    static void only_keys(const json& j, const Ptr& p, std::initializer_list<const char*> allowed) {
        require_object(j, p);
        for (const auto& [key, value] : j.items()) {
            bool ok = false;
            for (const char* a : allowed) ok = ok || key == a;
            if (!ok) throw SchemaError(child(p, key), "unknown key '" + key + "'");
        }
    }
    static const json& required(const json& j, const Ptr& p, const char* key) {
        if (!j.contains(key)) throw SchemaError(p, std::string("missing required key '") + key + "'");
        return j.at(key);
    }
    static double number(const json& j, const Ptr& p) {
        if (!j.is_number()) throw SchemaError(p, "expected a number");
        return j.get<double>();
    }
    static Index dimension(const json& j, const Ptr& p, Index min) {
        if (!j.is_number_integer() || j.get<long long>() < min)
            throw SchemaError(p, "expected an integer >= " + std::to_string(min));
        return static_cast<Index>(j.get<long long>());
    }
    static int index_1based(const json& j, const Ptr& p, Index bound) {
        if (!j.is_number_integer() || j.get<long long>() < 1 || j.get<long long>() > bound)
            throw SchemaError(p, "expected an index in 1.." + std::to_string(bound));
        return static_cast<int>(j.get<long long>()) - 1;
    }

    Expr expression(const json& j, const Ptr& p, Index m, Index k, bool allow_fibre) {
        if (!j.is_string()) throw SchemaError(p, "expected an expression string");
        const std::string src = j.get<std::string>();
        expressions_.push_back(src);
        try {
            return parse_expression(src, m, k, allow_fibre);
        } catch (const ParseError& e) {
            throw SchemaError(p, "parse error: " + e.message() + " at offset " + std::to_string(e.offset()));
        }
    }

    std::vector<Expr> expression_list(const json& j, const Ptr& p, std::size_t n, Index m, Index k, bool fibre) {
        require_array(j, p);
        if (j.size() != n) throw SchemaError(p, "expected " + std::to_string(n) + " expressions, got " + std::to_string(j.size()));
        std::vector<Expr> out;
        for (std::size_t i = 0; i < n; ++i) out.push_back(expression(j[i], child(p, i), m, k, fibre));
        return out;
    }

    std::vector<std::vector<Expr>> expression_matrix(const json& j, const Ptr& p, std::size_t rows, std::size_t cols,
                                                     Index m, const std::string& what) {
        require_array(j, p);
        if (j.size() != rows)
            throw SchemaError(p, what + " must have " + std::to_string(rows) + " rows, got " + std::to_string(j.size()));
        std::vector<std::vector<Expr>> out;
        for (std::size_t r = 0; r < rows; ++r) {
            const Ptr rp = child(p, r);
            require_array(j[r], rp);
            if (j[r].size() != cols)
                throw SchemaError(rp, what + " must have " + std::to_string(cols) + " columns, got " +
                                          std::to_string(j[r].size()));
            out.push_back(expression_list(j[r], rp, cols, m, 0, false));
        }
        return out;
    }

    Vector point(const json& j, const Ptr& p, Index dim) {
        require_array(j, p);
        if (static_cast<Index>(j.size()) != dim) throw SchemaError(p, "expected a point with " + std::to_string(dim) + " coordinates");
        Vector x(dim);
        for (Index i = 0; i < dim; ++i) x[i] = number(j[static_cast<std::size_t>(i)], child(p, static_cast<std::size_t>(i)));
        return x;
    }

    std::string chart_ref(const json& j, const Ptr& p, const AnchoredBundleSpec& b) {
        if (!j.is_string()) throw SchemaError(p, "expected a chart name");
        const std::string name = j.get<std::string>();
        if (!b.has_chart(name)) throw SchemaError(p, "unknown chart '" + name + "'");
        return name;
    }

    LoadedSpec build(const json& doc) {
        only_keys(doc, "", {"base_dim", "fibre_dim", "charts", "transitions", "anchor", "structure", "semispray", "spray",
                            "forms", "sections", "morphism", "tolerances", "seed"});
        LoadedSpec spec;
        spec.path = path_;
        AnchoredBundleSpec& b = spec.bundle;
        const Index m = b.base_dim = dimension(required(doc, "", "base_dim"), "/base_dim", 0);
        const Index k = b.fibre_dim = dimension(required(doc, "", "fibre_dim"), "/fibre_dim", 1);

        const json& charts = required(doc, "", "charts");
        require_array(charts, "/charts");
        if (charts.empty()) throw SchemaError("/charts", "at least one chart is required");
        for (std::size_t i = 0; i < charts.size(); ++i) {
            const Ptr p = child("/charts", i);
            only_keys(charts[i], p, {"name", "domain"});
            const json& name = required(charts[i], p, "name");
            if (!name.is_string() || name.get<std::string>().empty()) throw SchemaError(child(p, "name"), "expected a chart name");
            const std::string n = name.get<std::string>();
            if (b.has_chart(n)) throw SchemaError(child(p, "name"), "duplicate chart '" + n + "'");
            b.charts.push_back({n});
            Box box;
            const Ptr dp = child(p, "domain");
            const json& dom = required(charts[i], p, "domain");
            require_array(dom, dp);
            if (static_cast<Index>(dom.size()) != m) throw SchemaError(dp, "domain must have one interval per base coordinate");
            for (std::size_t c = 0; c < dom.size(); ++c) {
                const Vector iv = point(dom[c], child(dp, c), 2);
                if (!(iv[0] < iv[1])) throw SchemaError(child(dp, c), "interval must satisfy lo < hi");
                box.bounds.emplace_back(iv[0], iv[1]);
            }
            b.sample_domains.emplace(n, std::move(box));
        }

        const json& anchor = required(doc, "", "anchor");
        require_object(anchor, "/anchor");
        for (const auto& [name, value] : anchor.items()) {
            const Ptr p = child("/anchor", name);
            if (!b.has_chart(name)) throw SchemaError(p, "anchor given for unknown chart '" + name + "'");
            auto grid = expression_matrix(value, p, static_cast<std::size_t>(m), static_cast<std::size_t>(k), m,
                                          "anchor of chart '" + name + "'");
            b.anchors.emplace(name, compile_matrix(std::move(grid), k));
        }
        for (const auto& c : b.charts)
            if (!b.anchors.count(c.name)) throw SchemaError("/anchor", "missing anchor for chart '" + c.name + "'");

        if (doc.contains("transitions")) {
            const json& ts = doc.at("transitions");
            require_array(ts, "/transitions");
            for (std::size_t i = 0; i < ts.size(); ++i) {
                const Ptr p = child("/transitions", i);
                only_keys(ts[i], p, {"from", "to", "h", "M", "samples"});
                TransitionMap t;
                t.from = {chart_ref(required(ts[i], p, "from"), child(p, "from"), b)};
                t.to = {chart_ref(required(ts[i], p, "to"), child(p, "to"), b)};
                t.base_map = compile_base_map(expression_list(required(ts[i], p, "h"), child(p, "h"),
                                                              static_cast<std::size_t>(m), m, k, false), m);
                t.fibre_map = compile_matrix(expression_matrix(required(ts[i], p, "M"), child(p, "M"),
                                                               static_cast<std::size_t>(k), static_cast<std::size_t>(k),
                                                               m, "fibre map"), k);
                const json& samples = required(ts[i], p, "samples");
                const Ptr sp = child(p, "samples");
                require_array(samples, sp);
                if (samples.empty()) throw SchemaError(sp, "at least one overlap sample is required");
                for (std::size_t s = 0; s < samples.size(); ++s) t.overlap_samples.push_back(point(samples[s], child(sp, s), m));
                b.transitions.push_back(std::move(t));
            }
        }

        if (doc.contains("spray")) {
            if (!doc.at("spray").is_boolean()) throw SchemaError("/spray", "expected true or false");
            spec.expect_spray = doc.at("spray").get<bool>();
        }
        if (doc.contains("semispray")) {
            const json& ss = doc.at("semispray");
            require_object(ss, "/semispray");
            std::map<std::string, SmoothMap> coefficients;
            for (const auto& [name, value] : ss.items()) {
                const Ptr p = child("/semispray", name);
                if (!b.has_chart(name)) throw SchemaError(p, "semispray given for unknown chart '" + name + "'");
                coefficients.emplace(name, compile_total_map(expression_list(value, p, static_cast<std::size_t>(k), m, k, true), m, k));
            }
            spec.semispray = build_semispray(b, std::move(coefficients));
        }

        if (doc.contains("structure")) {
            const json& st = doc.at("structure");
            require_object(st, "/structure");
            std::map<std::string, StructureFunction> structure;
            for (const auto& [name, value] : st.items()) {
                const Ptr p = child("/structure", name);
                if (!b.has_chart(name)) throw SchemaError(p, "structure given for unknown chart '" + name + "'");
                require_array(value, p);
                struct Entry {
                    int g, a, b;
                    Expr e;
                };
                std::vector<Entry> entries;
                std::set<std::tuple<int, int, int>> seen;
                for (std::size_t i = 0; i < value.size(); ++i) {
                    const Ptr ep = child(p, i);
                    only_keys(value[i], ep, {"gamma", "alpha", "beta", "expr"});
                    Entry en{index_1based(required(value[i], ep, "gamma"), child(ep, "gamma"), k),
                             index_1based(required(value[i], ep, "alpha"), child(ep, "alpha"), k),
                             index_1based(required(value[i], ep, "beta"), child(ep, "beta"), k),
                             expression(required(value[i], ep, "expr"), child(ep, "expr"), m, k, false)};
                    if (!(en.a < en.b)) throw SchemaError(ep, "structure entries need alpha < beta");
                    if (!seen.insert({en.g, en.a, en.b}).second) throw SchemaError(ep, "duplicate structure entry");
                    entries.push_back(std::move(en));
                }
                structure.emplace(name, [entries = std::move(entries), k](const Vector& x) {
                    StructureTensor c(k);
                    const Vector none;
                    for (const auto& en : entries) {
                        const double v = evaluate(en.e, x, none);
                        c(en.g, en.a, en.b) = v;
                        c(en.g, en.b, en.a) = -v;
                    }
                    return c;
                });
            }
            for (const auto& c : b.charts)
                if (!structure.count(c.name)) structure.emplace(c.name, constant_structure(StructureTensor(k)));
            spec.algebroid = make_algebroid(b, std::move(structure));
        }

        if (doc.contains("sections")) {
            const json& ss = doc.at("sections");
            require_object(ss, "/sections");
            for (const auto& [name, value] : ss.items()) {
                const Ptr p = child("/sections", name);
                NamedSection s{name, {}};
                if (value.is_array()) {
                    s.section.reps.emplace(spec.first_chart(),
                                           compile_base_map(expression_list(value, p, static_cast<std::size_t>(k), m, k, false), m));
                } else {
                    require_object(value, p);
                    for (const auto& [chart, reps] : value.items()) {
                        const Ptr cp = child(p, chart);
                        if (!b.has_chart(chart)) throw SchemaError(cp, "unknown chart '" + chart + "'");
                        s.section.reps.emplace(chart, compile_base_map(expression_list(reps, cp, static_cast<std::size_t>(k), m, k, false), m));
                    }
                    if (s.section.reps.empty()) throw SchemaError(p, "section must be defined on at least one chart");
                }
                spec.sections.push_back(std::move(s));
            }
        }

        if (doc.contains("forms")) {
            const json& fs = doc.at("forms");
            require_object(fs, "/forms");
            for (const auto& [name, value] : fs.items()) spec.forms.push_back({name, form(value, child("/forms", name), b)});
        }

        if (doc.contains("tolerances")) {
            const json& tol = doc.at("tolerances");
            only_keys(tol, "/tolerances", {"exact", "single", "nested", "scale"});
            double scale = 1.0;
            if (tol.contains("scale")) scale = number(tol.at("scale"), "/tolerances/scale");
            auto tier = [&tol](const char* key, double& slot) {
                if (!tol.contains(key)) return;
                const Ptr p = std::string("/tolerances/") + key;
                slot = number(tol.at(key), p);
                if (!(slot > 0.0)) throw SchemaError(p, "tolerance must be positive");
            };
            tier("exact", spec.tolerances.exact);
            tier("single", spec.tolerances.single);
            tier("nested", spec.tolerances.nested);
            if (!(scale > 0.0)) throw SchemaError("/tolerances/scale", "scale must be positive");
            spec.tolerances.exact *= scale;
            spec.tolerances.single *= scale;
            spec.tolerances.nested *= scale;
        }
        if (doc.contains("seed")) {
            const json& s = doc.at("seed");
            if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
                throw SchemaError("/seed", "expected a nonnegative integer");
            spec.seed = s.get<std::uint64_t>();
        }

        if (doc.contains("morphism")) spec.morphism = morphism(doc.at("morphism"), spec);

        spec.expressions = std::move(expressions_);
        try {
            b.validate();
        } catch (const Error& e) {
            throw SchemaError("", e.what());
        }
        return spec;
    }

    FormLocal form(const json& j, const Ptr& p, const AnchoredBundleSpec& b) {
        only_keys(j, p, {"degree", "components", "chart"});
        const Index m = b.base_dim, k = b.fibre_dim;
        const Index q = dimension(required(j, p, "degree"), child(p, "degree"), 0);
        if (q > k) throw SchemaError(child(p, "degree"), "degree exceeds the fibre dimension");
        const std::string chart = j.contains("chart") ? chart_ref(j.at("chart"), child(p, "chart"), b) : b.charts.front().name;
        const json& comps = required(j, p, "components");
        const Ptr cp = child(p, "components");
        require_object(comps, cp);

        const auto indices = increasing_multi_indices(static_cast<int>(k), static_cast<int>(q));
        std::vector<Expr> exprs(indices.size());
        for (const auto& [key, value] : comps.items()) {
            const Ptr ep = child(cp, key);
            MultiIndex idx;
            std::size_t start = 0;
            while (q > 0 && start <= key.size()) {
                const std::size_t comma = std::min(key.find(',', start), key.size());
                const std::string tok = key.substr(start, comma - start);
                if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
                    throw SchemaError(ep, "multi-index keys are comma-separated 1-based indices");
                const int v = std::stoi(tok);
                if (v < 1 || v > k) throw SchemaError(ep, "index out of range 1.." + std::to_string(k));
                idx.push_back(v - 1);
                start = comma + 1;
            }
            if (q == 0 && !key.empty()) throw SchemaError(ep, "a degree-0 form has a single component with key \"\"");
            if (static_cast<Index>(idx.size()) != q) throw SchemaError(ep, "multi-index must have " + std::to_string(q) + " entries");
            for (std::size_t i = 1; i < idx.size(); ++i)
                if (!(idx[i - 1] < idx[i])) throw SchemaError(ep, "multi-index must be strictly increasing");
            exprs[multi_index_position(idx, static_cast<int>(k))] = expression(value, ep, m, k, false);
        }
        FormLocal w{static_cast<int>(q), k, {}};
        w.components.emplace(chart, compile_base_map(std::move(exprs), m));
        return w;
    }

    MorphismSpec morphism(const json& j, const LoadedSpec& source) {
        const Ptr p = "/morphism";
        only_keys(j, p, {"target", "f0", "F"});
        if (!source.algebroid) throw SchemaError(p, "a morphism needs a 'structure' block on the source");
        if (source.bundle.charts.size() != 1) throw SchemaError(p, "morphisms need a single-chart source");
        const json& tj = required(j, p, "target");
        if (!tj.is_string()) throw SchemaError(child(p, "target"), "expected a path");
        if (depth_ > 4) throw SchemaError(child(p, "target"), "morphism targets nest too deeply");
        std::filesystem::path tp = tj.get<std::string>();
        if (tp.is_relative()) tp = path_.parent_path() / tp;
        LoadedSpec target;
        try {
            target = Loader(tp, depth_ + 1).load();
        } catch (const SchemaError& e) {
            throw SchemaError(child(p, "target"), std::string("in target spec: ") + e.what());
        }
        if (!target.algebroid) throw SchemaError(child(p, "target"), "target spec has no 'structure' block");
        if (target.bundle.charts.size() != 1) throw SchemaError(child(p, "target"), "morphisms need a single-chart target");

        const Index m = source.bundle.base_dim, k = source.bundle.fibre_dim;
        const Index mt = target.bundle.base_dim, kt = target.bundle.fibre_dim;
        SmoothMap f0 = compile_base_map(expression_list(required(j, p, "f0"), child(p, "f0"), static_cast<std::size_t>(mt), m, k, false), m);
        MatrixFunction fibre = compile_matrix(expression_matrix(required(j, p, "F"), child(p, "F"), static_cast<std::size_t>(kt),
                                                                static_cast<std::size_t>(k), m, "morphism fibre map"), k);
        return MorphismSpec{make_morphism(*source.algebroid, source.first_chart(), *target.algebroid, target.first_chart(),
                                          std::move(f0), std::move(fibre)),
                            target.forms};
    }

    std::filesystem::path path_;
    int depth_;
    std::vector<std::string> expressions_;
};

} // namespace detail

inline LoadedSpec load_spec(const std::filesystem::path& path) { return detail::Loader(path, 0).load(); }

} // namespace abk::frontend
