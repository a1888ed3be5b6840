#pragma once

// The example cases as data, the runner that checks their expectations, and
// leaf-dimension maps over grids.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "orbitkit/conditions.hpp"
#include "orbitkit/fields_json.hpp"
#include "orbitkit/orbits.hpp"
#include "orbitkit/rules.hpp"

namespace orbitkit {

// ---------------------------------------------------------------------------
// Leaf-dimension maps

struct LeafMap {
    std::vector<int> res;  // nodes per axis
    Point lo, hi;
    std::vector<int> orbit;  // orbit_tangent_dim per node, row-major (x fastest)
    std::vector<int> rank;   // rank_at per node

    [[nodiscard]] std::size_t size() const { return orbit.size(); }

    [[nodiscard]] Point node(std::size_t index) const {
        Point p(res.size());
        for (std::size_t a = 0; a < res.size(); ++a) {
            const auto i = static_cast<int>(index % static_cast<std::size_t>(res[a]));
            index /= static_cast<std::size_t>(res[a]);
            p[a] = lo[a] + (hi[a] - lo[a]) * i / (res[a] - 1);
        }
        return p;
    }
};

struct LeafMapOptions {
    long budget = 256;  // flows per node
    double tol = kDefaultRankTol;
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

/// orbit_tangent_dim and rank_at at every node of a grid over the box.
/// Node i uses the seed mix_seed(seed, i), so nodes are independent.
inline LeafMap leaf_dim_map(const Family& f, const Point& lo, const Point& hi, const std::vector<int>& res,
                            const LeafMapOptions& opt = {}) {
    if (lo.size() != f.dimension || hi.size() != f.dimension || res.size() != f.dimension) {
        throw DimensionMismatch("leaf_dim_map: box and resolution must match the family dimension");
    }
    std::size_t total = 1;
    for (int r : res) {
        if (r < 2) throw std::invalid_argument("leaf_dim_map resolution must be at least 2 per axis");
        total *= static_cast<std::size_t>(r);
    }
    LeafMap m{res, lo, hi, std::vector<int>(total), std::vector<int>(total)};
    const auto members = f.materialize();
    parallel_for(total, opt.threads, [&](std::size_t i) {
        const Point p = m.node(i);
        SaturationOptions so;
        so.budget = opt.budget;
        so.tol = opt.tol;
        so.seed = mix_seed(opt.seed, i);
        m.orbit[i] = orbit_tangent_dim(f, p, so).dim;
        m.rank[i] = rank_at(members, p, opt.tol);
    });
    return m;
}

/// Header `# dims: nx,ny[,nz] box: lo1,hi1,lo2,hi2...`, then the orbit map
/// and the rank map, each introduced by a `# map: ...` line. Each CSV row
/// holds the nx values along the first axis; rows run over the remaining
/// axes with the second axis fastest.
inline void write_leafmap_csv(std::ostream& os, const LeafMap& m) {
    os << "# dims: ";
    for (std::size_t a = 0; a < m.res.size(); ++a) os << (a ? "," : "") << m.res[a];
    os << " box: ";
    for (std::size_t a = 0; a < m.lo.size(); ++a) os << (a ? "," : "") << format_double(m.lo[a]) << ',' << format_double(m.hi[a]);
    os << '\n';
    const auto nx = static_cast<std::size_t>(m.res[0]);
    for (const auto& [label, values] : {std::pair{"orbit", &m.orbit}, std::pair{"rank", &m.rank}}) {
        os << "# map: " << label << '\n';
        for (std::size_t i = 0; i < values->size(); ++i) {
            os << (*values)[i] << ((i + 1) % nx == 0 ? '\n' : ',');
        }
    }
}

/// Nodes whose value exceeds the value of every grid neighbour (including
/// diagonal ones). Lower semicontinuity rules these out.
inline std::vector<std::size_t> isolated_maxima(const LeafMap& m, const std::vector<int>& values) {
    std::vector<std::size_t> out;
    const std::size_t n = m.res.size();
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::vector<int> idx(n);
        std::size_t rest = i;
        for (std::size_t a = 0; a < n; ++a) {
            idx[a] = static_cast<int>(rest % static_cast<std::size_t>(m.res[a]));
            rest /= static_cast<std::size_t>(m.res[a]);
        }
        int best = -1;
        std::size_t combos = 1;
        for (std::size_t a = 0; a < n; ++a) combos *= 3;
        for (std::size_t c = 0; c < combos; ++c) {
            std::size_t cc = c, j = 0, stride = 1;
            bool self = true, inside = true;
            for (std::size_t a = 0; a < n; ++a) {
                const int d = static_cast<int>(cc % 3) - 1;
                cc /= 3;
                self = self && d == 0;
                const int k = idx[a] + d;
                if (k < 0 || k >= m.res[a]) inside = false;
                j += static_cast<std::size_t>(std::max(k, 0)) * stride;
                stride *= static_cast<std::size_t>(m.res[a]);
            }
            if (self || !inside) continue;
            best = std::max(best, values[j]);
        }
        if (best >= 0 && values[i] > best) out.push_back(i);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Case data

/// Where an expectation comes from: "stated" for values given with the
/// example itself, "derived" for values computed independently.
struct Basis {
    std::string kind = "stated";
    std::string note;
};

struct RankEntry {
    Point at;
    int expected = 0;
    Basis basis;
};

struct OrbitEntry {
    Point at;
    int expected = 0;
    Basis basis;
};

struct BracketEntry {
    std::size_t i = 0, j = 0;
    Point at;
    Vector expected;
    double tol = 1e-12;
    Basis basis;
};

struct VerdictEntry {
    std::string condition;
    json params = json::object();
    Outcome expected = Outcome::holds;
    std::optional<std::string> reason;  // required evidence.reason
    std::optional<std::pair<Point, double>> witness_within;
    Basis basis;
};

struct CloudEntry {
    Point from;
    double tmax = 1.0;
    double tol = 1e-9;
    std::string property;  // "constant-norm", "fixed", or "coordinate-constant"
    std::size_t axis = 0;  // for coordinate-constant
    double bound = 1e-5;
    Basis basis;
};

struct LeafRule {
    std::string map;  // "orbit" or "rank"
    json where;       // {"all":true} | {"box":{"lo","hi"}} | {"point":[..]} | {"except_point":[..]}
    int value = 0;
};

struct LeafmapEntry {
    Point lo, hi;
    std::vector<int> res;
    long budget = 256;
    std::vector<LeafRule> rules;
    Basis basis;
};

struct ExampleCase {
    std::string name;
    std::string citation;
    Family family;
    std::map<std::string, Family> companions;
    std::vector<BracketEntry> brackets;
    std::vector<RankEntry> ranks;
    std::vector<OrbitEntry> orbits;
    std::vector<VerdictEntry> verdicts;
    std::vector<CloudEntry> clouds;
    std::vector<LeafmapEntry> leafmaps;
};

// ---------------------------------------------------------------------------
// Region and condition parameters in JSON

inline Region region_from_json(const json& j) {
    if (!j.is_object()) throw InputError("region must be an object");
    if (j.contains("ball")) {
        const auto& b = j.at("ball");
        return Region::ball(b.at("center").get<Point>(), b.at("radius").get<double>());
    }
    if (j.contains("shell")) {
        const auto& b = j.at("shell");
        return Region::shell(b.at("center").get<Point>(), b.at("r_in").get<double>(), b.at("r_out").get<double>());
    }
    Region r = Region::box(detail::require(j, "lo").get<Point>(), detail::require(j, "hi").get<Point>());
    if (r.lo.size() != r.hi.size()) throw InputError("region lo and hi differ in dimension");
    if (j.contains("r_min")) r.r_min = j.at("r_min").get<double>();
    if (j.contains("r_max")) r.r_max = j.at("r_max").get<double>();
    return r;
}

struct RunOptions {
    long budget = 2000;
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

namespace detail {

inline Region region_in(const json& j, std::size_t n) {
    Region r = region_from_json(j);
    if (r.dimension() != n) throw InputError("region dimension does not match the family");
    return r;
}

inline Point point_param(const json& p, const char* key, std::size_t n) {
    const auto& v = require(p, key);
    if (!v.is_array() || v.size() != n) throw InputError(std::string("\"") + key + "\" must be a point of dimension " + std::to_string(n));
    return v.get<Point>();
}

inline Region region_param(const json& p, std::size_t n) { return region_in(require(p, "region"), n); }

}  // namespace detail

/// Runs one checker by name with JSON parameters. `companions` resolves the
/// optional "distribution" parameter of the invariance check.
inline Verdict run_condition(const std::string& condition, const Family& f, const json& p, const RunOptions& run = {},
                             const std::map<std::string, Family>& companions = {}) {
    const std::size_t n = f.dimension;
    if (condition == "involutive") {
        InvolutiveOptions o;
        o.samples = p.value("samples", o.samples);
        o.tol = p.value("tol", o.tol);
        o.cap = p.value("cap", o.cap);
        const std::string level = p.value("level", std::string("module"));
        if (level != "module" && level != "distribution") throw InputError("level must be \"module\" or \"distribution\"");
        o.level = level == "module" ? InvolutiveLevel::module : InvolutiveLevel::distribution;
        return check_involutive(f, detail::region_param(p, n), o);
    }
    if (condition == "invariance") {
        const Family* d = &f;
        if (p.contains("distribution")) {
            const auto name = p.at("distribution").get<std::string>();
            const auto it = companions.find(name);
            if (it == companions.end()) throw InputError("unknown distribution \"" + name + "\"");
            d = &it->second;
        }
        std::vector<InvarianceProbe> probes;
        const auto& pj = detail::require(p, "probes");
        if (pj.is_array()) {
            for (const auto& q : pj) {
                probes.push_back({detail::point_param(q, "at", n), detail::require(q, "member").get<std::size_t>(),
                                  detail::require(q, "time").get<double>()});
            }
        } else {
            probes = random_probes(f, detail::region_in(pj, n), pj.value("count", std::size_t{100}),
                                   pj.value("tmax", 1.0), pj.value("seed", run.seed));
        }
        InvarianceOptions o;
        o.tol = p.value("tol", o.tol);
        return check_invariance(f, *d, probes, o);
    }
    if (condition == "lobry") {
        LobryOptions o;
        o.radius = p.value("radius", o.radius);
        o.tol = p.value("tol", o.tol);
        o.cap = p.value("cap", o.cap);
        o.samples = p.value("samples", o.samples);
        return check_lobry(f, detail::point_param(p, "at", n), o);
    }
    if (condition == "curve") {
        const auto mode = curve_mode_from_string(p.value("mode", std::string("sussmann")));
        if (!mode) throw InputError("mode must be sussmann, stefan74 or balan");
        CurveOptions o;
        o.epsilon = p.value("epsilon", o.epsilon);
        o.samples = p.value("samples", o.samples);
        o.tol = p.value("tol", o.tol);
        o.cap = p.value("cap", o.cap);
        if (p.contains("U")) o.U = region_from_json(p.at("U"));
        std::optional<std::size_t> member;
        if (p.contains("member")) member = p.at("member").get<std::size_t>();
        return check_curve_condition(*mode, f, detail::point_param(p, "at", n), member, o);
    }
    if (condition == "hermann") {
        std::vector<std::size_t> gens;
        if (p.contains("generators")) {
            gens = p.at("generators").get<std::vector<std::size_t>>();
        } else {
            for (std::size_t i = 0; i < f.members.size(); ++i) gens.push_back(i);
        }
        HermannOptions o;
        o.samples = p.value("samples", o.samples);
        o.tol = p.value("tol", o.tol);
        o.cap = p.value("cap", o.cap);
        o.tmax = p.value("tmax", o.tmax);
        return check_hermann(f, gens, detail::region_param(p, n), o);
    }
    if (condition == "frobenius") {
        FrobeniusOptions o;
        o.samples = p.value("samples", o.samples);
        o.tol = p.value("tol", o.tol);
        o.cap = p.value("cap", o.cap);
        return check_frobenius(f, detail::region_param(p, n), o);
    }
    if (condition == "integrable") {
        IntegrableOptions o;
        o.budget = p.value("budget", run.budget);
        o.tol = p.value("tol", o.tol);
        o.seed = p.value("seed", run.seed);
        o.threads = run.threads;
        o.probes = p.value("probes", o.probes);
        o.tmax = p.value("tmax", o.tmax);
        return integrable_at(f, detail::point_param(p, "at", n), o);
    }
    throw InputError("unknown condition \"" + condition + "\"");
}

// ---------------------------------------------------------------------------
// Running a case

struct EntryResult {
    std::string kind;
    std::string label;
    bool pass = false;
    json detail;
};

struct CaseReport {
    std::string name;
    std::vector<EntryResult> entries;
    double seconds = 0.0;

    [[nodiscard]] bool pass() const {
        return std::all_of(entries.begin(), entries.end(), [](const EntryResult& e) { return e.pass; });
    }

    [[nodiscard]] json to_json() const {
        json a = json::array();
        for (const auto& e : entries) a.push_back({{"kind", e.kind}, {"label", e.label}, {"pass", e.pass}, {"detail", e.detail}});
        return {{"case", name}, {"pass", pass()}, {"entries", a}};
    }
};

namespace detail {

inline EntryResult make_entry(std::string kind, std::string label) {
    EntryResult e;
    e.kind = std::move(kind);
    e.label = std::move(label);
    return e;
}

inline std::string point_label(const Point& p) {
    std::string s = "(";
    for (std::size_t i = 0; i < p.size(); ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%g", p[i]);
        s += (i ? "," : "") + std::string(buf);
    }
    return s + ")";
}

inline bool node_matches(const json& where, const Point& p) {
    auto same = [&](const Point& q) {
        for (std::size_t a = 0; a < p.size(); ++a) {
            if (std::fabs(p[a] - q[a]) > 1e-12) return false;
        }
        return true;
    };
    if (where.contains("all")) return true;
    if (where.contains("point")) return same(where.at("point").get<Point>());
    if (where.contains("except_point")) return !same(where.at("except_point").get<Point>());
    if (where.contains("box")) {
        const auto lo = where.at("box").at("lo").get<Point>();
        const auto hi = where.at("box").at("hi").get<Point>();
        for (std::size_t a = 0; a < p.size(); ++a) {
            if (p[a] < lo[a] - 1e-12 || p[a] > hi[a] + 1e-12) return false;
        }
        return true;
    }
    throw InputError("leafmap rule needs all, point, except_point or box");
}

inline const Family& family_for(const ExampleCase& c, const json& params) {
    if (!params.contains("family")) return c.family;
    const auto name = params.at("family").get<std::string>();
    const auto it = c.companions.find(name);
    if (it == c.companions.end()) throw InputError("unknown companion family \"" + name + "\"");
    return it->second;
}

}  // namespace detail

/// Checks every expectation of a case. Failures are data: each entry reports
/// pass/fail with its evidence, and one failing entry does not stop the rest.
inline CaseReport run_case(const ExampleCase& c, const RunOptions& run = {}) {
    const auto start = std::chrono::steady_clock::now();
    CaseReport rep;
    rep.name = c.name;
    const auto members = c.family.materialize();

    for (const auto& e : c.brackets) {
        EntryResult r = detail::make_entry("bracket", "[" + std::to_string(e.i) + "," + std::to_string(e.j) + "] at " + detail::point_label(e.at));
        const Vector got = lie_bracket(members.at(e.i), members.at(e.j)).at(e.at);
        double err = 0.0;
        for (std::size_t k = 0; k < got.size(); ++k) err = std::max(err, std::fabs(got[k] - e.expected.at(k)));
        r.pass = err <= e.tol;
        r.detail = {{"value", got}, {"expected", e.expected}, {"error", err}};
        rep.entries.push_back(std::move(r));
    }
    for (const auto& e : c.ranks) {
        EntryResult r = detail::make_entry("rank", "rank at " + detail::point_label(e.at));
        const int got = rank_at(members, e.at);
        r.pass = got == e.expected;
        r.detail = {{"value", got}, {"expected", e.expected}};
        rep.entries.push_back(std::move(r));
    }
    for (const auto& e : c.orbits) {
        EntryResult r = detail::make_entry("orbit-dim", "orbit tangent dim at " + detail::point_label(e.at));
        SaturationOptions so;
        so.budget = run.budget;
        so.seed = run.seed;
        so.threads = run.threads;
        const Saturation s = orbit_tangent_dim(c.family, e.at, so);
        r.pass = s.dim == e.expected;
        r.detail = {{"value", s.dim}, {"expected", e.expected}, {"stable", s.stable}, {"flows_used", s.flows_used}};
        rep.entries.push_back(std::move(r));
    }
    for (const auto& e : c.verdicts) {
        EntryResult r = detail::make_entry("verdict", e.condition);
        if (e.params.contains("at")) r.label += " at " + detail::point_label(e.params.at("at").get<Point>());
        if (e.params.contains("mode")) r.label += " (" + e.params.at("mode").get<std::string>() + ")";
        if (e.params.contains("level")) r.label += " (" + e.params.at("level").get<std::string>() + ")";
        if (e.params.contains("family")) r.label += " [" + e.params.at("family").get<std::string>() + "]";
        try {
            const Verdict v = run_condition(e.condition, detail::family_for(c, e.params), e.params, run, c.companions);
            r.pass = v.outcome == e.expected;
            if (e.reason) r.pass = r.pass && v.evidence.value("reason", json()).is_string() && v.evidence["reason"] == *e.reason;
            if (e.witness_within) {
                bool near = false;
                for (const auto& w : v.evidence.value("witnesses", json::array())) {
                    const Point wp = w.get<Point>();
                    double d = 0.0;
                    for (std::size_t k = 0; k < wp.size(); ++k) d += std::pow(wp[k] - e.witness_within->first[k], 2);
                    near = near || std::sqrt(d) <= e.witness_within->second;
                }
                r.pass = r.pass && near;
            }
            r.detail = {{"expected", to_string(e.expected)}, {"verdict", v.to_json()}};
        } catch (const std::exception& ex) {
            r.pass = false;
            r.detail = {{"error", ex.what()}};
        }
        rep.entries.push_back(std::move(r));
    }
    for (const auto& e : c.clouds) {
        EntryResult r = detail::make_entry("cloud", e.property + " from " + detail::point_label(e.from));
        OrbitOptions oo;
        oo.budget = run.budget;
        oo.seed = run.seed;
        oo.tmax = e.tmax;
        oo.tol = e.tol;
        oo.threads = run.threads;
        const OrbitCloud cloud = sample_orbit(c.family, e.from, oo);
        double dev = 0.0;
        for (const auto& p : cloud.points) {
            if (e.property == "constant-norm") {
                dev = std::max(dev, std::fabs(norm(p) - norm(e.from)));
            } else if (e.property == "coordinate-constant") {
                dev = std::max(dev, std::fabs(p.at(e.axis) - e.from.at(e.axis)));
            } else if (e.property == "fixed") {
                for (std::size_t k = 0; k < p.size(); ++k) dev = std::max(dev, std::fabs(p[k] - e.from[k]));
            }
        }
        r.pass = dev <= e.bound && (e.property != "fixed" || cloud.points.size() == 1);
        r.detail = {{"points", cloud.points.size()}, {"max_deviation", dev}, {"bound", e.bound}, {"failures", cloud.failures}};
        rep.entries.push_back(std::move(r));
    }
    for (const auto& e : c.leafmaps) {
        std::string label = "leafmap ";
        for (std::size_t a = 0; a < e.res.size(); ++a) label += (a ? "x" : "") + std::to_string(e.res[a]);
        EntryResult r = detail::make_entry("leafmap", label);
        LeafMapOptions lo;
        lo.budget = e.budget;
        lo.seed = run.seed;
        lo.threads = run.threads;
        const LeafMap m = leaf_dim_map(c.family, e.lo, e.hi, e.res, lo);
        json mismatches = json::array();
        for (const auto& rule : e.rules) {
            const auto& values = rule.map == "orbit" ? m.orbit : m.rank;
            for (std::size_t i = 0; i < m.size(); ++i) {
                const Point p = m.node(i);
                if (detail::node_matches(rule.where, p) && values[i] != rule.value) {
                    if (mismatches.size() < 10) mismatches.push_back({{"map", rule.map}, {"node", p}, {"value", values[i]}, {"expected", rule.value}});
                }
            }
        }
        long below = 0;
        for (std::size_t i = 0; i < m.size(); ++i) below += m.rank[i] > m.orbit[i] ? 1 : 0;
        const auto maxima = isolated_maxima(m, m.orbit);
        r.pass = mismatches.empty() && below == 0 && maxima.empty();
        r.detail = {{"mismatches", mismatches}, {"rank_above_orbit", below}, {"isolated_maxima", maxima.size()}};
        rep.entries.push_back(std::move(r));
    }
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
}

// ---------------------------------------------------------------------------
// JSON form of cases

namespace detail {

inline json basis_json(const Basis& b) { return {{"basis", b.kind}, {"note", b.note}}; }

inline Basis basis_from(const json& j) {
    Basis b;
    b.kind = j.value("basis", std::string("stated"));
    if (b.kind != "stated" && b.kind != "derived") throw InputError("basis must be \"stated\" or \"derived\"");
    b.note = j.value("note", std::string());
    return b;
}

inline json merge(json a, const json& b) {
    a.update(b);
    return a;
}

}  // namespace detail

inline json case_to_json(const ExampleCase& c) {
    json j;
    j["name"] = c.name;
    j["citation"] = c.citation;
    j["family"] = family_to_json(c.family);
    json comps = json::object();
    for (const auto& [k, f] : c.companions) comps[k] = family_to_json(f);
    j["companions"] = comps;
    json ex = json::object();
    ex["brackets"] = json::array();
    for (const auto& e : c.brackets) {
        ex["brackets"].push_back(detail::merge({{"i", e.i}, {"j", e.j}, {"at", e.at}, {"expected", e.expected}, {"tol", e.tol}},
                                               detail::basis_json(e.basis)));
    }
    ex["rank"] = json::array();
    for (const auto& e : c.ranks) ex["rank"].push_back(detail::merge({{"at", e.at}, {"expected", e.expected}}, detail::basis_json(e.basis)));
    ex["orbit_dim"] = json::array();
    for (const auto& e : c.orbits) ex["orbit_dim"].push_back(detail::merge({{"at", e.at}, {"expected", e.expected}}, detail::basis_json(e.basis)));
    ex["verdicts"] = json::array();
    for (const auto& e : c.verdicts) {
        json v = {{"condition", e.condition}, {"params", e.params}, {"expected", to_string(e.expected)}};
        if (e.reason) v["reason"] = *e.reason;
        if (e.witness_within) v["witness_within"] = {{"center", e.witness_within->first}, {"radius", e.witness_within->second}};
        ex["verdicts"].push_back(detail::merge(v, detail::basis_json(e.basis)));
    }
    ex["clouds"] = json::array();
    for (const auto& e : c.clouds) {
        ex["clouds"].push_back(detail::merge({{"from", e.from}, {"tmax", e.tmax}, {"tol", e.tol}, {"property", e.property},
                                              {"axis", e.axis}, {"bound", e.bound}},
                                             detail::basis_json(e.basis)));
    }
    ex["leafmaps"] = json::array();
    for (const auto& e : c.leafmaps) {
        json rules = json::array();
        for (const auto& r : e.rules) rules.push_back({{"map", r.map}, {"where", r.where}, {"value", r.value}});
        ex["leafmaps"].push_back(detail::merge(
            {{"box", {{"lo", e.lo}, {"hi", e.hi}}}, {"res", e.res}, {"budget", e.budget}, {"expect", rules}},
            detail::basis_json(e.basis)));
    }
    j["expectations"] = ex;
    return j;
}

inline ExampleCase case_from_json(const json& j) {
    ExampleCase c;
    c.name = detail::require(j, "name").get<std::string>();
    c.citation = j.value("citation", std::string());
    c.family = family_from_json(detail::require(j, "family"));
    if (j.contains("companions")) {
        for (const auto& [k, f] : j.at("companions").items()) c.companions.emplace(k, family_from_json(f));
    }
    const json ex = j.value("expectations", json::object());
    const std::size_t n = c.family.dimension;
    auto point = [&](const json& e, const char* key) { return detail::point_param(e, key, n); };
    for (const auto& e : ex.value("brackets", json::array())) {
        c.brackets.push_back({e.at("i").get<std::size_t>(), e.at("j").get<std::size_t>(), point(e, "at"),
                              e.at("expected").get<Vector>(), e.value("tol", 1e-12), detail::basis_from(e)});
    }
    for (const auto& e : ex.value("rank", json::array())) c.ranks.push_back({point(e, "at"), e.at("expected").get<int>(), detail::basis_from(e)});
    for (const auto& e : ex.value("orbit_dim", json::array())) c.orbits.push_back({point(e, "at"), e.at("expected").get<int>(), detail::basis_from(e)});
    for (const auto& e : ex.value("verdicts", json::array())) {
        VerdictEntry v;
        v.condition = detail::require(e, "condition").get<std::string>();
        v.params = e.value("params", json::object());
        const auto o = outcome_from_string(detail::require(e, "expected").get<std::string>());
        if (!o) throw InputError("expected outcome must be holds, fails or inconclusive");
        v.expected = *o;
        if (e.contains("reason")) v.reason = e.at("reason").get<std::string>();
        if (e.contains("witness_within")) {
            v.witness_within = std::pair{e.at("witness_within").at("center").get<Point>(), e.at("witness_within").at("radius").get<double>()};
        }
        v.basis = detail::basis_from(e);
        c.verdicts.push_back(std::move(v));
    }
    for (const auto& e : ex.value("clouds", json::array())) {
        c.clouds.push_back({point(e, "from"), e.value("tmax", 1.0), e.value("tol", 1e-9), e.at("property").get<std::string>(),
                            e.value("axis", std::size_t{0}), e.value("bound", 1e-5), detail::basis_from(e)});
    }
    for (const auto& e : ex.value("leafmaps", json::array())) {
        LeafmapEntry l;
        l.lo = e.at("box").at("lo").get<Point>();
        l.hi = e.at("box").at("hi").get<Point>();
        l.res = e.at("res").get<std::vector<int>>();
        l.budget = e.value("budget", 256L);
        for (const auto& r : e.value("expect", json::array())) {
            l.rules.push_back({r.at("map").get<std::string>(), r.at("where"), r.at("value").get<int>()});
        }
        l.basis = detail::basis_from(e);
        c.leafmaps.push_back(std::move(l));
    }
    return c;
}

// ---------------------------------------------------------------------------
// Built-in cases

namespace cases {

inline ScalarExpr x_() { return var(0); }
inline ScalarExpr y_() { return var(1); }

/// e^{-1/u} for u > 0, else 0.
inline ScalarExpr flat(const ScalarExpr& u) { return piecewise({{gt_zero(u), exp(constant(-1.0) / u)}}, constant(0.0)); }

inline ScalarExpr r2() { return x_() * x_() + y_() * y_(); }

inline Basis stated(std::string note) { return {"stated", std::move(note)}; }
inline Basis derived(std::string note) { return {"derived", std::move(note)}; }

inline VerdictEntry expect(std::string condition, const char* params, Outcome outcome, Basis basis) {
    VerdictEntry v;
    v.condition = std::move(condition);
    v.params = json::parse(params);
    v.expected = outcome;
    v.basis = std::move(basis);
    return v;
}

inline LeafRule leaf(std::string map, const char* where, int value) { return {std::move(map), json::parse(where), value}; }

inline Family so3() {
    const ScalarExpr x = var(0), y = var(1), z = var(2);
    return Family(3, {VectorField("Rxy", {-y, x, constant(0.0)}), VectorField("Rxz", {-z, constant(0.0), x}),
                      VectorField("Ryz", {constant(0.0), -z, y})});
}

inline ExampleCase so3_spheres() {
    ExampleCase c;
    c.name = "so3-spheres";
    c.citation = "Rotation generators of so(3) on R^3: leaves are the concentric spheres and the origin.";
    c.family = so3();
    c.ranks = {{{0, 0, 0}, 0, stated("the origin is a point leaf")},
               {{1, 0, 0}, 2, stated("leaves away from the origin are spheres")},
               {{0.3, -0.5, 0.8}, 2, derived("three rotation generators span the tangent plane of the sphere")}};
    c.orbits = {{{1, 0, 0}, 2, stated("orbit of (1,0,0) is the unit sphere")},
                {{0, 0, 0}, 0, stated("the origin is fixed by every rotation")}};
    c.verdicts = {
        expect("involutive", R"({"region": {"lo": [-1, -1, -1], "hi": [1, 1, 1]}})", Outcome::holds,
               derived("so(3) structure constants")),
        expect("invariance", R"({"probes": {"lo": [-1, -1, -1], "hi": [1, 1, 1], "count": 100}})", Outcome::holds,
               stated("the distribution is invariant under rotations")),
        expect("hermann", R"({"region": {"lo": [-1, -1, -1], "hi": [1, 1, 1], "r_min": 0.25}})", Outcome::holds,
               derived("rotations preserve spheres, so the rank is constant along their curves")),
        expect("frobenius", R"({"region": {"shell": {"center": [0, 0, 0], "r_in": 0.9, "r_out": 1.1}}})", Outcome::holds,
               derived("rank 2 on the shell")),
        expect("integrable", R"({"at": [1, 0, 0]})", Outcome::holds, stated("the distribution is integrable")),
        expect("integrable", R"({"at": [0, 0, 0]})", Outcome::holds, derived("r = s = 0 at the fixed point")),
    };
    c.clouds = {{{1, 0, 0}, 1.0, 1e-9, "constant-norm", 0, 1e-5, stated("orbits stay on spheres")}};
    c.leafmaps = {{{-1, -1, -1},
                   {1, 1, 1},
                   {5, 5, 5},
                   256,
                   {leaf("orbit", R"({"point": [0, 0, 0]})", 0), leaf("orbit", R"({"except_point": [0, 0, 0]})", 2),
                    leaf("rank", R"({"point": [0, 0, 0]})", 0), leaf("rank", R"({"except_point": [0, 0, 0]})", 2)},
                   stated("2 everywhere except the origin")}};
    return c;
}

inline ExampleCase halfplane_y() {
    ExampleCase c;
    c.name = "halfplane-y";
    c.citation = "h(y) d/dx with h = e^{-1/y} for y > 0, else 0: horizontal leaves for y > 0 and points otherwise.";
    c.family = Family(2, {VectorField("h dx", {flat(y_()), constant(0.0)})});
    c.ranks = {{{0, 1}, 1, stated("horizontal leaves for y > 0")},
               {{0, -1}, 0, stated("points for y <= 0")},
               {{0, 0}, 0, stated("points for y <= 0")}};
    c.orbits = {{{0, 1}, 1, stated("horizontal leaves for y > 0")},
                {{0.5, 0.5}, 1, stated("horizontal leaves for y > 0")},
                {{0, -1}, 0, stated("points for y <= 0")},
                {{0, 0}, 0, stated("points for y <= 0")}};
    c.verdicts = {
        expect("integrable", R"({"at": [0, 1]})", Outcome::holds, stated("integrable everywhere")),
        expect("integrable", R"({"at": [0, 0]})", Outcome::holds, stated("integrable everywhere")),
        expect("integrable", R"({"at": [0, -1]})", Outcome::holds, stated("integrable everywhere")),
        expect("involutive", R"({"region": {"lo": [-1, -1], "hi": [1, 1]}})", Outcome::holds, derived("a single field")),
    };
    c.clouds = {{{0, 1}, 1.0, 1e-9, "coordinate-constant", 1, 1e-12, derived("the flow is horizontal")}};
    c.leafmaps = {{{-1, -1},
                   {1, 1},
                   {11, 11},
                   256,
                   {leaf("orbit", R"({"box": {"lo": [-1, 0.1], "hi": [1, 1]}})", 1),
                    leaf("orbit", R"({"box": {"lo": [-1, -1], "hi": [1, 0]}})", 0),
                    leaf("rank", R"({"box": {"lo": [-1, 0.1], "hi": [1, 1]}})", 1),
                    leaf("rank", R"({"box": {"lo": [-1, -1], "hi": [1, 0]}})", 0)},
                   stated("1 for y > 0, 0 for y <= 0")}};
    return c;
}

inline ExampleCase flag_line() {
    ExampleCase c;
    c.name = "flag-line";
    c.citation = "chi(x) d/dx on R with chi = e^{-1/x} for x > 0, else 0: integrable, not finitely generated near 0.";
    c.family = Family(1, {VectorField("chi dx", {flat(x_())})});
    c.ranks = {{{-1}, 0, stated("chi vanishes for x <= 0")},
               {{0}, 0, stated("chi vanishes for x <= 0")},
               {{1}, 1, stated("chi > 0 for x > 0")}};
    c.orbits = {{{-1}, 0, stated("points for x <= 0")},
                {{0}, 0, stated("points for x <= 0")},
                {{0.5}, 1, stated("an integral curve for x > 0")}};
    c.verdicts = {
        expect("integrable", R"({"at": [-1]})", Outcome::holds, stated("obviously integrable")),
        expect("integrable", R"({"at": [0]})", Outcome::holds, stated("obviously integrable")),
        expect("integrable", R"({"at": [1]})", Outcome::holds, stated("obviously integrable")),
    };
    c.clouds = {{{-1}, 1.0, 1e-9, "fixed", 0, 0.0, stated("the flow is stationary for x <= 0")}};
    c.leafmaps = {{{-1},
                   {1},
                   {21},
                   256,
                   {leaf("orbit", R"({"box": {"lo": [-1], "hi": [0]}})", 0),
                    leaf("orbit", R"({"box": {"lo": [0.05], "hi": [1]}})", 1)},
                   stated("0 for x <= 0, 1 for x > 0")}};
    return c;
}

inline ExampleCase halfplane_x_noninteg() {
    ExampleCase c;
    c.name = "halfplane-x-noninteg";
    c.citation = "{d/dx, m(x) d/dy} with m = e^{-1/x} for x > 0, else 0: involutive but not integrable.";
    c.family = Family(2, {coordinate_field(2, 0, "dx"), VectorField("m dy", {constant(0.0), flat(x_())})});
    c.ranks = {{{1, 0}, 2, stated("the full plane for x > 0")},
               {{0, 0}, 1, stated("Span(d/dx) for x <= 0")},
               {{-1, 5}, 1, stated("Span(d/dx) for x <= 0")}};
    c.orbits = {{{0, 5}, 2, stated("the distribution is not invariant; the orbit is the plane")},
                {{0, 0}, 2, derived("flows along d/dx reach x > 0")}};
    auto module = expect("involutive", R"({"region": {"lo": [-1, -1], "hi": [1, 1]}, "level": "module"})", Outcome::fails,
                         derived("[dx, m dy] = (1/x^2) m dy; the coefficient is unbounded as x -> 0+"));
    module.reason = "coefficient-blowup";
    c.verdicts = {
        expect("involutive", R"({"region": {"lo": [-1, -1], "hi": [1, 1]}, "level": "distribution"})", Outcome::holds,
               stated("the distribution is involutive")),
        module,
        expect("invariance", R"({"probes": [{"at": [0.5, 0], "member": 0, "time": -1.0}]})", Outcome::fails,
               stated("D is not invariant under the flow of d/dx")),
        expect("frobenius", R"({"region": {"lo": [-1, -1], "hi": [1, 1]}})", Outcome::fails, stated("the rank jumps from 1 to 2")),
        expect("integrable", R"({"at": [0, 0]})", Outcome::fails, stated("cannot be integrated into a singular foliation")),
        expect("integrable", R"({"at": [1, 0]})", Outcome::fails, derived("the orbit of (1,0) enters x <= 0 where the rank is 1")),
    };
    c.leafmaps = {{{-1, -1},
                   {1, 1},
                   {21, 21},
                   256,
                   {leaf("orbit", R"({"all": true})", 2), leaf("rank", R"({"box": {"lo": [-1, -1], "hi": [0, 1]}})", 1),
                    leaf("rank", R"({"box": {"lo": [0.05, -1], "hi": [1, 1]}})", 2)},
                   stated("rank 1 for x <= 0 and 2 for x > 0; orbit reach is computed")}};
    return c;
}

inline ExampleCase balan_pair() {
    ExampleCase c;
    c.name = "balan-pair";
    c.citation = "X = phi d/dx, Y = (x^2+y^2) d/dy, phi = e^{-1/(x^2+y^2)}: not involutive, yet integrable.";
    c.family = Family(2, {VectorField("X", {flat(r2()), constant(0.0)}), VectorField("Y", {constant(0.0), r2()})});
    c.brackets = {{0, 1, {1, 0}, {0.0, 2.0 * std::exp(-1.0)}, 1e-12, derived("coordinate formula")}};
    c.ranks = {{{1, 0}, 2, derived("both fields are nonzero and independent off the origin")},
               {{0, 0}, 0, derived("both fields vanish at the origin")}};
    c.orbits = {{{0, 0}, 0, derived("both fields vanish at the origin")}, {{1, 0}, 2, derived("open orbit off the origin")}};
    auto blowup = expect("involutive", R"({"region": {"lo": [-1, -1], "hi": [1, 1]}})", Outcome::fails,
                         stated("F is not involutive; a coefficient has no limit at the origin"));
    blowup.reason = "coefficient-blowup";
    blowup.witness_within = std::pair{Point{0, 0}, 0.2};
    c.verdicts = {
        blowup,
        expect("involutive", R"({"region": {"shell": {"center": [0, 0], "r_in": 0.5, "r_out": 1.0}}})", Outcome::holds,
               derived("the coefficients -2y/r^2 and 2x phi/r^2 are bounded on the annulus")),
        expect("hermann", R"({"region": {"lo": [-1, -1], "hi": [1, 1]}})", Outcome::fails,
               derived("the module check fails near the origin")),
        expect("integrable", R"({"at": [0, 0]})", Outcome::holds, stated("obviously integrable")),
        expect("integrable", R"({"at": [1, 0]})", Outcome::holds, stated("obviously integrable")),
    };
    return c;
}

inline ExampleCase arjen_module() {
    ExampleCase c;
    c.name = "arjen-module";
    c.citation =
        "The module of fields f d/dx + g d/dy with g = 0 near the origin, sampled by the rule X_r = (1+x^2) d/dx + g_r d/dy "
        "(g_r = 0 on |p| <= r, 1 on |p| >= 2r); companion presentation {d/dx, rho d/dy}, rho = e^{-1/(x^2+y^2)}. "
        "Locally of finite type, yet not integrable at the origin.";
    c.family = Family(2, {coordinate_field(2, 0, "dx")}, make_rule("arjen-bump", default_rule_samples()));
    c.companions.emplace("finite",
                         Family(2, {coordinate_field(2, 0, "dx"), VectorField("rho dy", {constant(0.0), flat(r2())})}));
    c.ranks = {{{0, 0}, 1, stated("Span(d/dx) at the origin")}, {{0.5, 0}, 2, stated("the full plane away from the origin")}};
    c.orbits = {{{0, 0}, 2, derived("flows of sampled members leave the vanishing disk")}};
    c.verdicts = {
        expect("lobry", R"({"at": [0, 0], "radius": 0.1})", Outcome::holds, stated("the module is locally of finite type")),
        expect("curve", R"({"at": [0, 0], "mode": "sussmann"})", Outcome::holds,
               stated("the condition holds with eps depending on X")),
        expect("curve", R"({"at": [0, 0], "mode": "balan", "U": {"ball": {"center": [0, 0], "radius": 0.3}}})",
               Outcome::fails, derived("members with bump radius below 0.3 acquire a d/dy bracket component inside U")),
        expect("integrable", R"({"at": [0, 0]})", Outcome::fails, stated("not integrable at the origin")),
        expect("lobry", R"({"at": [0, 0], "family": "finite"})", Outcome::fails,
               derived("[rho dy, dx] has a d/dy component not spanned by d/dx")),
        expect("integrable", R"({"at": [0, 0], "family": "finite"})", Outcome::fails, stated("not integrable at the origin")),
    };
    c.leafmaps = {{{-1, -1},
                   {1, 1},
                   {5, 5},
                   256,
                   {leaf("orbit", R"({"all": true})", 2), leaf("rank", R"({"point": [0, 0]})", 1),
                    leaf("rank", R"({"except_point": [0, 0]})", 2)},
                   stated("rank 1 only at the origin")}};
    return c;
}

}  // namespace cases

inline std::vector<ExampleCase> builtin_cases() {
    return {cases::so3_spheres(), cases::halfplane_y(), cases::flag_line(), cases::halfplane_x_noninteg(),
            cases::balan_pair(), cases::arjen_module()};
}

}  // namespace orbitkit
