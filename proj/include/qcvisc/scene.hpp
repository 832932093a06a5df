#pragma once
// Declarative scenes: a JSON config naming functions, subequations and an
// ordered list of checks; a runner producing a deterministic JSON report and
// a long-format CSV table.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "qcvisc/contact.hpp"
#include "qcvisc/sampled_io.hpp"
#include "qcvisc/subequation.hpp"
#include "qcvisc/theorems.hpp"

namespace qcvisc {

inline constexpr const char* kVersion = "0.1.0";

/// All validation problems found in a config, not just the first.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> errors)
        : std::runtime_error(join(errors)), errors_(std::move(errors)) {}
    const std::vector<std::string>& errors() const noexcept { return errors_; }

private:
    static std::string join(const std::vector<std::string>& e) {
        std::string s;
        for (const auto& m : e) s += (s.empty() ? "" : "\n") + m;
        return s;
    }
    std::vector<std::string> errors_;
};

struct FunctionSpec {
    enum class Kind { max_quad, sampled };
    Kind kind = Kind::max_quad;
    std::vector<Quadratic> pieces;
    SampledFunction samples;
    double eps = 0.0;

    MaxQuadFunction build() const {
        return kind == Kind::max_quad ? MaxQuadFunction(pieces) : sup_convolution(samples, eps);
    }
    bool operator==(const FunctionSpec&) const = default;
};

struct CheckSpec {
    std::string type;
    std::string label;
    std::string u;  // "function" for single-function checks
    std::string v;
    std::string F;  // "subequation" for single-subequation checks
    std::string G;
    std::optional<Box> domain;
    std::optional<std::size_t> grid;
    std::optional<double> tol;
    Vector x0;
    Vector p0;
    std::optional<SymMatrix> A0;
    std::vector<double> rhos;
    std::vector<double> eps_schedule;
    std::size_t samples = 10000;
    std::size_t budget = 100000;
    std::size_t split_budget = 4000;
    double margin = 0.0;
    std::string expect;  // contact_measure: "", "positive" or "zero"
    bool operator==(const CheckSpec&) const = default;
};

struct SceneConfig {
    std::size_t dim = 1;
    std::uint64_t seed = 0;
    std::optional<std::size_t> grid;
    std::optional<double> tol;
    std::map<std::string, FunctionSpec> functions;
    std::map<std::string, CatalogSpec> subequations;
    std::vector<CheckSpec> checks;
    bool operator==(const SceneConfig&) const = default;
};

inline const std::vector<std::string>& check_types() {
    static const std::vector<std::string> t = {"ae",   "viscosity",         "addition",        "decompose",
                                               "zmp",  "strict_comparison", "contact_measure", "positivity_audit"};
    return t;
}

// ------------------------------------------------------------------ JSON

using nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace detail {

class ErrorSink {
public:
    void add(std::string m) { errors.push_back(std::move(m)); }
    std::vector<std::string> errors;
};

inline std::optional<Vector> read_vector(const json& j, const std::string& where, ErrorSink& err) {
    if (!j.is_array()) {
        err.add(where + ": expected an array of numbers");
        return std::nullopt;
    }
    Vector v;
    for (const auto& e : j) {
        if (!e.is_number()) {
            err.add(where + ": expected an array of numbers");
            return std::nullopt;
        }
        v.push_back(e.get<double>());
    }
    return v;
}

inline std::optional<SymMatrix> read_matrix(const json& j, std::size_t n, const std::string& where,
                                            ErrorSink& err) {
    if (j.is_number()) return SymMatrix::scalar(n, j.get<double>());
    if (!j.is_array()) {
        err.add(where + ": expected a matrix (array of rows) or a number");
        return std::nullopt;
    }
    std::vector<Vector> rows;
    for (const auto& r : j) {
        auto row = read_vector(r, where, err);
        if (!row) return std::nullopt;
        rows.push_back(std::move(*row));
    }
    if (rows.size() != n) {
        err.add(where + ": matrix has dimension " + std::to_string(rows.size()) + ", scene dimension is " +
                std::to_string(n));
        return std::nullopt;
    }
    try {
        return SymMatrix::from_rows(rows);
    } catch (const UsageError& e) {
        err.add(where + ": " + e.what());
        return std::nullopt;
    }
}

inline std::optional<Vector> read_point(const json& obj, const char* key, std::size_t n, const std::string& where,
                                        ErrorSink& err) {
    if (!obj.contains(key)) {
        err.add(where + ": missing '" + key + "'");
        return std::nullopt;
    }
    auto v = read_vector(obj[key], where + "." + key, err);
    if (v && v->size() != n) {
        err.add(where + "." + key + ": dimension " + std::to_string(v->size()) + ", scene dimension is " +
                std::to_string(n));
        return std::nullopt;
    }
    return v;
}

inline json vector_json(const Vector& v) { return json(v); }

inline json matrix_json(const SymMatrix& m) { return json(m.rows()); }

template <typename T>
std::optional<T> get_opt(const json& obj, const char* key) {
    if (!obj.contains(key)) return std::nullopt;
    return obj[key].get<T>();
}

inline void parse_function(const std::string& name, const json& j, std::size_t n, const std::filesystem::path& base,
                           SceneConfig& cfg, ErrorSink& err) {
    const std::string where = "function '" + name + "'";
    if (!j.is_object()) {
        err.add(where + ": expected an object");
        return;
    }
    FunctionSpec f;
    const std::string type = j.value("type", std::string("max_quad"));
    if (type == "max_quad") {
        f.kind = FunctionSpec::Kind::max_quad;
        if (!j.contains("pieces") || !j["pieces"].is_array() || j["pieces"].empty()) {
            err.add(where + ": 'pieces' must be a non-empty array");
            return;
        }
        std::size_t k = 0;
        bool ok = true;
        for (const auto& pj : j["pieces"]) {
            const std::string pw = where + " piece " + std::to_string(k++);
            if (!pj.is_object()) {
                err.add(pw + ": expected an object");
                ok = false;
                continue;
            }
            Quadratic q = Quadratic::zero(n);
            q.c = pj.value("c", 0.0);
            if (pj.contains("p")) {
                auto p = read_vector(pj["p"], pw + ".p", err);
                if (!p) { ok = false; continue; }
                if (p->size() != n) {
                    err.add(pw + ": dimension " + std::to_string(p->size()) + ", scene dimension is " + std::to_string(n));
                    ok = false;
                    continue;
                }
                q.p = *p;
            }
            if (pj.contains("A")) {
                auto A = read_matrix(pj["A"], n, pw + ".A", err);
                if (!A) { ok = false; continue; }
                q.A = *A;
            }
            f.pieces.push_back(std::move(q));
        }
        if (!ok) return;
    } else if (type == "sampled") {
        f.kind = FunctionSpec::Kind::sampled;
        if (!j.contains("eps") || !j["eps"].is_number() || !(j["eps"].get<double>() > 0.0)) {
            err.add(where + ": 'eps' must be a positive number");
            return;
        }
        f.eps = j["eps"].get<double>();
        try {
            if (j.contains("csv")) {
                const std::filesystem::path p = base / j["csv"].get<std::string>();
                f.samples = read_sampled_csv(p.string());
            } else {
                std::vector<Vector> sites;
                for (const auto& s : j.at("sites")) sites.push_back(s.get<Vector>());
                f.samples = SampledFunction(std::move(sites), j.at("values").get<Vector>());
            }
        } catch (const std::exception& e) {
            err.add(where + ": " + e.what());
            return;
        }
        if (f.samples.dim() != n) {
            err.add(where + ": dimension " + std::to_string(f.samples.dim()) + ", scene dimension is " +
                    std::to_string(n));
            return;
        }
    } else {
        err.add(where + ": unknown function type '" + type + "'");
        return;
    }
    cfg.functions[name] = std::move(f);
}

inline void parse_subequation(const std::string& name, const json& j, std::size_t n, SceneConfig& cfg,
                              ErrorSink& err) {
    const std::string where = "subequation '" + name + "'";
    if (!j.is_object()) {
        err.add(where + ": expected an object");
        return;
    }
    CatalogSpec spec;
    spec.name = j.value("catalog", std::string());
    if (!is_catalog_name(spec.name)) {
        err.add(where + ": unknown catalog entry '" + spec.name + "'");
        return;
    }
    const json params = j.value("params", json::object());
    spec.c = params.value("c", 0.0);
    spec.k = params.value("k", std::size_t{1});
    if (params.contains("terms")) {
        for (const auto& t : params["terms"]) {
            Monomial m{t.value("coef", 0.0), t.value("exp", std::vector<unsigned>(n, 0u))};
            if (m.exponents.size() != n) {
                err.add(where + ": monomial exponent vector has dimension " + std::to_string(m.exponents.size()) +
                        ", scene dimension is " + std::to_string(n));
                return;
            }
            spec.poly.terms.push_back(std::move(m));
        }
    }
    try {
        (void)make_subequation(spec, n);
    } catch (const UsageError& e) {
        err.add(where + ": " + e.what());
        return;
    }
    cfg.subequations[name] = std::move(spec);
}

inline void parse_check(std::size_t idx, const json& j, std::size_t n, SceneConfig& cfg, ErrorSink& err) {
    if (!j.is_object()) {
        err.add("check " + std::to_string(idx) + ": expected an object");
        return;
    }
    CheckSpec c;
    c.type = j.value("type", std::string());
    const std::string where = "check " + std::to_string(idx) + " (" + c.type + ")";
    if (std::find(check_types().begin(), check_types().end(), c.type) == check_types().end()) {
        err.add("check " + std::to_string(idx) + ": unknown check type '" + c.type + "'");
        return;
    }
    c.label = j.value("label", std::string());
    c.grid = get_opt<std::size_t>(j, "grid");
    c.tol = get_opt<double>(j, "tol");

    auto need_fn = [&](const char* key, std::string& slot) {
        if (!j.contains(key)) {
            err.add(where + ": missing '" + key + "'");
            return;
        }
        slot = j[key].get<std::string>();
        if (!cfg.functions.count(slot)) err.add(where + ": undefined function '" + slot + "'");
    };
    auto need_sub = [&](const char* key, std::string& slot) {
        if (!j.contains(key)) {
            err.add(where + ": missing '" + key + "'");
            return;
        }
        slot = j[key].get<std::string>();
        if (!cfg.subequations.count(slot)) err.add(where + ": undefined subequation '" + slot + "'");
    };
    auto need_domain = [&] {
        if (!j.contains("domain")) {
            err.add(where + ": missing 'domain'");
            return;
        }
        auto lo = read_point(j["domain"], "lo", n, where + ".domain", err);
        auto hi = read_point(j["domain"], "hi", n, where + ".domain", err);
        if (!lo || !hi) return;
        try {
            c.domain = Box(*lo, *hi);
        } catch (const UsageError& e) {
            err.add(where + ".domain: " + e.what());
        }
    };

    if (c.type == "ae" || c.type == "viscosity") {
        need_fn("function", c.u);
        need_sub("subequation", c.F);
        need_domain();
    } else if (c.type == "addition") {
        need_fn("u", c.u);
        need_fn("v", c.v);
        need_sub("F", c.F);
        need_sub("G", c.G);
        need_domain();
        c.split_budget = j.value("split_budget", c.split_budget);
    } else if (c.type == "decompose") {
        need_fn("u", c.u);
        need_fn("v", c.v);
        if (auto x = read_point(j, "x0", n, where, err)) c.x0 = *x;
        if (auto p = read_point(j, "p0", n, where, err)) c.p0 = *p;
        if (!j.contains("A0")) err.add(where + ": missing 'A0'");
        else c.A0 = read_matrix(j["A0"], n, where + ".A0", err);
        c.budget = j.value("budget", c.budget);
        c.eps_schedule = j.value("eps_schedule", std::vector<double>{});
    } else if (c.type == "zmp") {
        need_fn("u", c.u);
        need_fn("v", c.v);
        need_domain();
    } else if (c.type == "strict_comparison") {
        need_sub("G", c.G);
        need_sub("F", c.F);
        need_fn("u", c.u);
        need_fn("v", c.v);
        need_domain();
        c.margin = j.value("margin", 0.0);
        c.samples = j.value("audit_samples", c.samples);
    } else if (c.type == "contact_measure") {
        need_fn("function", c.u);
        if (auto x = read_point(j, "x0", n, where, err)) c.x0 = *x;
        if (!j.contains("A0")) err.add(where + ": missing 'A0'");
        else c.A0 = read_matrix(j["A0"], n, where + ".A0", err);
        if (j.contains("rho") && j["rho"].is_number()) c.rhos = {j["rho"].get<double>()};
        else c.rhos = j.value("rho", std::vector<double>{});
        if (c.rhos.empty()) err.add(where + ": 'rho' must list at least one radius");
        for (double r : c.rhos)
            if (!(r > 0.0)) err.add(where + ": radii must be positive");
        c.samples = j.value("samples", c.samples);
        c.expect = j.value("expect", std::string());
        if (!c.expect.empty() && c.expect != "positive" && c.expect != "zero")
            err.add(where + ": 'expect' must be \"positive\" or \"zero\"");
    } else if (c.type == "positivity_audit") {
        need_sub("subequation", c.F);
        c.samples = j.value("samples", c.samples);
    }
    cfg.checks.push_back(std::move(c));
}

}  // namespace detail

inline SceneConfig parse_config_json(const json& j, const std::filesystem::path& base_dir = ".") {
    detail::ErrorSink err;
    SceneConfig cfg;
    try {
        if (!j.is_object()) throw ConfigError({"config: top level must be an object"});
        if (!j.contains("dim") || !j["dim"].is_number_integer() || j["dim"].get<std::int64_t>() <= 0)
            throw ConfigError({"config: 'dim' must be a positive integer"});
        cfg.dim = j["dim"].get<std::size_t>();
        cfg.seed = j.value("seed", std::uint64_t{0});
        cfg.grid = detail::get_opt<std::size_t>(j, "grid");
        cfg.tol = detail::get_opt<double>(j, "tol");
        const json fns = j.value("functions", json::object());
        const json subs = j.value("subequations", json::object());
        const json checks = j.value("checks", json::array());
        if (!fns.is_object()) err.add("config: 'functions' must be an object");
        if (!subs.is_object()) err.add("config: 'subequations' must be an object");
        if (!checks.is_array()) err.add("config: 'checks' must be an array");
        if (!err.errors.empty()) throw ConfigError(err.errors);
        for (const auto& [name, fj] : fns.items()) detail::parse_function(name, fj, cfg.dim, base_dir, cfg, err);
        for (const auto& [name, sj] : subs.items()) detail::parse_subequation(name, sj, cfg.dim, cfg, err);
        // Names that failed to parse still count as defined, so a bad
        // definition is not reported a second time as a dangling reference.
        SceneConfig lookup = cfg;
        for (const auto& [name, _] : fns.items()) lookup.functions.try_emplace(name);
        for (const auto& [name, _] : subs.items()) lookup.subequations.try_emplace(name);
        std::size_t idx = 0;
        for (const auto& cj : checks) detail::parse_check(idx++, cj, cfg.dim, lookup, err);
        cfg.checks = std::move(lookup.checks);
    } catch (const json::exception& e) {
        err.add(std::string("config: ") + e.what());
    }
    if (!err.errors.empty()) throw ConfigError(err.errors);
    return cfg;
}

inline SceneConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({"cannot open config '" + path + "'"});
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError({std::string("parse error: ") + e.what()});
    }
    return parse_config_json(j, std::filesystem::path(path).parent_path());
}

/// Normal form: every field explicit, samples inlined, keys sorted.
inline json to_json(const SceneConfig& cfg) {
    json j;
    j["dim"] = cfg.dim;
    j["seed"] = cfg.seed;
    if (cfg.grid) j["grid"] = *cfg.grid;
    if (cfg.tol) j["tol"] = *cfg.tol;
    j["functions"] = json::object();
    for (const auto& [name, f] : cfg.functions) {
        json fj;
        if (f.kind == FunctionSpec::Kind::max_quad) {
            fj["type"] = "max_quad";
            fj["pieces"] = json::array();
            for (const auto& q : f.pieces)
                fj["pieces"].push_back({{"c", q.c}, {"p", detail::vector_json(q.p)}, {"A", detail::matrix_json(q.A)}});
        } else {
            fj["type"] = "sampled";
            fj["eps"] = f.eps;
            fj["sites"] = f.samples.sites;
            fj["values"] = f.samples.values;
        }
        j["functions"][name] = fj;
    }
    j["subequations"] = json::object();
    for (const auto& [name, s] : cfg.subequations) {
        json params = {{"c", s.c}, {"k", s.k}};
        if (!s.poly.terms.empty()) {
            params["terms"] = json::array();
            for (const auto& t : s.poly.terms) params["terms"].push_back({{"coef", t.coef}, {"exp", t.exponents}});
        }
        j["subequations"][name] = {{"catalog", s.name}, {"params", params}};
    }
    j["checks"] = json::array();
    for (const auto& c : cfg.checks) {
        json cj;
        cj["type"] = c.type;
        if (!c.label.empty()) cj["label"] = c.label;
        if (c.grid) cj["grid"] = *c.grid;
        if (c.tol) cj["tol"] = *c.tol;
        if (c.domain) cj["domain"] = {{"lo", c.domain->lo}, {"hi", c.domain->hi}};
        if (c.type == "ae" || c.type == "viscosity") {
            cj["function"] = c.u;
            cj["subequation"] = c.F;
        } else if (c.type == "addition") {
            cj["u"] = c.u; cj["v"] = c.v; cj["F"] = c.F; cj["G"] = c.G;
            cj["split_budget"] = c.split_budget;
        } else if (c.type == "decompose") {
            cj["u"] = c.u; cj["v"] = c.v;
            cj["x0"] = c.x0; cj["p0"] = c.p0; cj["A0"] = detail::matrix_json(*c.A0);
            cj["budget"] = c.budget;
            cj["eps_schedule"] = c.eps_schedule;
        } else if (c.type == "zmp") {
            cj["u"] = c.u; cj["v"] = c.v;
        } else if (c.type == "strict_comparison") {
            cj["G"] = c.G; cj["F"] = c.F; cj["u"] = c.u; cj["v"] = c.v;
            cj["margin"] = c.margin;
            cj["audit_samples"] = c.samples;
        } else if (c.type == "contact_measure") {
            cj["function"] = c.u;
            cj["x0"] = c.x0;
            cj["A0"] = detail::matrix_json(*c.A0);
            cj["rho"] = c.rhos;
            cj["samples"] = c.samples;
            if (!c.expect.empty()) cj["expect"] = c.expect;
        } else if (c.type == "positivity_audit") {
            cj["subequation"] = c.F;
            cj["samples"] = c.samples;
        }
        j["checks"].push_back(cj);
    }
    return j;
}

// ---------------------------------------------------------------- running

struct RunOptions {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> grid;
    std::optional<double> tol;
    unsigned threads = 0;
};

struct CsvRow {
    std::size_t check = 0;
    std::string type;
    std::string param;
    double metric = 0.0;
    std::size_t n_samples = 0;
};

struct RunReport {
    ojson document;
    std::vector<Status> statuses;
    std::vector<CsvRow> rows;
    int exit_code = 0;

    std::string json_text() const { return document.dump(2) + "\n"; }
};

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace detail {

inline ojson number_or_null(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

inline ojson full_jet_json(const FullJet& j) {
    ojson o;
    o["x"] = j.x;
    o["r"] = number_or_null(j.jet.r);
    o["p"] = j.jet.p;
    o["A"] = j.jet.A.rows();
    return o;
}

inline ojson verdict_json(const Verdict& v) {
    ojson o;
    o["status"] = to_string(v.status);
    o["message"] = v.message;
    if (v.witness_jet) o["witness"] = full_jet_json(*v.witness_jet);
    else if (v.witness_point) o["witness"] = {{"x", *v.witness_point}};
    else o["witness"] = nullptr;
    ojson d = ojson::object();
    for (const auto& [k, val] : v.diagnostics) d[k] = number_or_null(val);
    o["diagnostics"] = d;
    return o;
}

inline std::string point_param(const Vector& x) {
    std::string s;
    for (std::size_t i = 0; i < x.size(); ++i) s += (i ? ";" : "") + format_double(x[i]);
    return s;
}

}  // namespace detail

inline int exit_code_for(const std::vector<Status>& statuses) {
    bool fail = false, pre = false, inc = false;
    for (Status s : statuses) {
        fail = fail || s == Status::fails;
        pre = pre || s == Status::precondition_failed;
        inc = inc || s == Status::inconclusive;
    }
    if (fail) return 1;
    if (pre) return 3;
    if (inc) return 2;
    return 0;
}

inline RunReport run(const SceneConfig& cfg, const RunOptions& ropt = {}) {
    RunReport rep;
    const std::uint64_t seed = ropt.seed.value_or(cfg.seed);
    const std::string config_text = to_json(cfg).dump();

    std::map<std::string, MaxQuadFunction> fns;
    for (const auto& [name, f] : cfg.functions) fns.emplace(name, f.build());
    auto sub = [&](const std::string& name) { return make_subequation(cfg.subequations.at(name), cfg.dim); };

    ojson checks = ojson::array();
    for (std::size_t idx = 0; idx < cfg.checks.size(); ++idx) {
        const CheckSpec& c = cfg.checks[idx];
        const std::uint64_t check_seed = derive_seed(seed, idx);
        ScanOptions scan;
        scan.grid = ropt.grid ? *ropt.grid : c.grid ? *c.grid : cfg.grid.value_or(0);
        scan.tol = ropt.tol ? *ropt.tol : c.tol ? *c.tol : cfg.tol.value_or(1e-9);
        scan.threads = ropt.threads;
        scan.trace = true;

        Verdict v;
        ojson extra = ojson::object();
        auto add_trace = [&](const Verdict& vv) {
            for (const auto& t : vv.trace) rep.rows.push_back({idx, c.type, detail::point_param(t.x), t.metric, 1});
        };

        if (c.type == "ae") {
            v = ae_check(fns.at(c.u), sub(c.F), *c.domain, scan);
            add_trace(v);
        } else if (c.type == "viscosity") {
            v = viscosity_check(fns.at(c.u), sub(c.F), *c.domain, scan);
            add_trace(v);
        } else if (c.type == "addition") {
            v = addition_check(fns.at(c.u), fns.at(c.v), sub(c.F), sub(c.G), *c.domain, scan, c.split_budget);
            add_trace(v);
        } else if (c.type == "zmp") {
            v = zmp_check(fns.at(c.u), fns.at(c.v), *c.domain, scan);
            add_trace(v);
        } else if (c.type == "strict_comparison") {
            StrictComparisonOptions so;
            so.scan = scan;
            so.margin = c.margin;
            so.audit_samples = c.samples;
            so.seed = check_seed;
            v = strict_comparison_test(sub(c.G), sub(c.F), fns.at(c.u), fns.at(c.v), *c.domain, so);
            add_trace(v);
        } else if (c.type == "decompose") {
            DecomposeOptions dopt;
            dopt.witness.budget = c.budget;
            dopt.witness.eps_schedule = c.eps_schedule;
            dopt.witness.seed = check_seed;
            dopt.witness.threads = ropt.threads;
            const Decomposition d = decompose_contact_jet(fns.at(c.u), fns.at(c.v), c.x0, c.p0, *c.A0, dopt);
            v.status = d.status;
            v.message = d.message;
            v.set("witnesses", static_cast<double>(d.sequence.witnesses.size()));
            v.set("samples_used", static_cast<double>(d.sequence.samples_used));
            if (d.status == Status::holds || d.status == Status::fails) {
                extra["u_jet"] = detail::full_jet_json(d.u_jet);
                extra["v_jet"] = detail::full_jet_json(d.v_jet);
                extra["residual_P"] = d.residual.rows();
                v.set("p_sum_error", d.p_sum_error);
                v.set("lambda_min_residual", d.lambda_min_residual);
                v.set("sandwich_ok", d.sandwich_ok ? 1.0 : 0.0);
            }
            if (d.sequence.best_candidate) {
                v.witness_point = *d.sequence.best_candidate;
                v.set("failed_eps", d.sequence.failed_eps);
            }
            for (const auto& w : d.sequence.witnesses)
                rep.rows.push_back({idx, c.type, format_double(w.eps), w.gradient_error, 1});
        } else if (c.type == "contact_measure") {
            MeasureOptions mo;
            mo.threads = ropt.threads;
            ojson per_rho = ojson::array();
            bool any_zero = false, any_positive = false;
            for (std::size_t r = 0; r < c.rhos.size(); ++r) {
                const auto est = contact_measure_fraction(fns.at(c.u), c.x0, *c.A0, c.rhos[r], c.samples,
                                                          derive_seed(check_seed, r), mo);
                per_rho.push_back({{"rho", est.rho}, {"fraction", est.fraction}, {"n_samples", est.n_samples}});
                rep.rows.push_back({idx, c.type, format_double(est.rho), est.fraction, est.n_samples});
                any_zero = any_zero || est.n_hits == 0;
                any_positive = any_positive || est.n_hits > 0;
            }
            extra["estimates"] = per_rho;
            v.status = Status::holds;
            if (c.expect == "positive" && any_zero) {
                v.status = Status::inconclusive;
                v.message = "no contact points found at some radius (under-resolved)";
            } else if (c.expect == "zero" && any_positive) {
                v.status = Status::fails;
                v.message = "contact points found where none were expected";
            }
        } else if (c.type == "positivity_audit") {
            const auto pr = check_positivity(sub(c.F), c.samples, check_seed, scan.tol, ropt.threads);
            v.status = pr.passed() ? Status::holds : Status::fails;
            if (!pr.passed()) {
                v.message = "positivity (P) violated";
                v.witness_jet = pr.violations.front().jet;
                extra["witness_P"] = pr.violations.front().P.rows();
            }
            v.set("samples", static_cast<double>(pr.n_samples));
            v.set("violations", static_cast<double>(pr.n_violations));
            v.set("worst_drop", pr.worst_drop);
            rep.rows.push_back({idx, c.type, c.F, pr.worst_drop, pr.n_samples});
        }

        ojson entry;
        entry["index"] = idx;
        entry["type"] = c.type;
        entry["label"] = c.label;
        const ojson verdict = detail::verdict_json(v);
        for (const auto& [k, val] : verdict.items()) entry[k] = val;
        for (const auto& [k, val] : extra.items()) entry[k] = val;
        checks.push_back(entry);
        rep.statuses.push_back(v.status);
    }

    rep.exit_code = exit_code_for(rep.statuses);
    std::size_t counts[4] = {0, 0, 0, 0};
    for (Status s : rep.statuses) ++counts[static_cast<int>(s)];

    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a64(config_text)));
    rep.document["tool"] = "qcvisc";
    rep.document["version"] = kVersion;
    rep.document["config_hash"] = std::string("fnv1a64:") + hash;
    rep.document["seed"] = seed;
    rep.document["checks"] = checks;
    rep.document["summary"] = {{"holds", counts[0]},
                               {"fails", counts[1]},
                               {"inconclusive", counts[2]},
                               {"precondition_failed", counts[3]},
                               {"exit_code", rep.exit_code}};
    return rep;
}

inline constexpr const char* kCsvHeader = "check,type,param,metric,n_samples";

inline std::string csv_text(const RunReport& rep) {
    std::string out = std::string(kCsvHeader) + "\n";
    for (const auto& r : rep.rows) {
        out += std::to_string(r.check) + "," + r.type + "," + r.param + "," + format_double(r.metric) + "," +
               std::to_string(r.n_samples) + "\n";
    }
    return out;
}

inline void emit_csv(const RunReport& rep, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << csv_text(rep);
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

inline void emit_json(const RunReport& rep, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << rep.json_text();
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace qcvisc
