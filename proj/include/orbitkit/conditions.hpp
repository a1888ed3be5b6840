#pragma once

// Numeric checkers for the classical integrability conditions. Every checker
// works on a finite (or sampled procedural) presentation of the family and
// returns a Verdict with the evidence it gathered; `holds` means no violation
// was found at the stated tolerances and sample sizes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "orbitkit/fields.hpp"
#include "orbitkit/flows.hpp"
#include "orbitkit/frames.hpp"
#include "orbitkit/orbits.hpp"
#include "orbitkit/sampling.hpp"

namespace orbitkit {

using nlohmann::json;

enum class Outcome { holds, fails, inconclusive };

inline const char* to_string(Outcome o) {
    switch (o) {
        case Outcome::holds: return "holds";
        case Outcome::fails: return "fails";
        case Outcome::inconclusive: return "inconclusive";
    }
    return "?";
}

inline std::optional<Outcome> outcome_from_string(const std::string& s) {
    if (s == "holds") return Outcome::holds;
    if (s == "fails") return Outcome::fails;
    if (s == "inconclusive") return Outcome::inconclusive;
    return std::nullopt;
}

struct Verdict {
    Outcome outcome = Outcome::inconclusive;
    json evidence = json::object();
    json params = json::object();

    [[nodiscard]] json to_json() const {
        return {{"outcome", to_string(outcome)}, {"evidence", evidence}, {"params", params}};
    }
};

inline json point_json(const Point& p) { return json(p); }

inline json names_json(std::span<const VectorField> fields) {
    json a = json::array();
    for (const auto& f : fields) a.push_back(f.name);
    return a;
}

namespace detail {

/// Running aggregate of fit reports.
struct FitTally {
    double max_residual = 0.0;
    double max_coefficient = 0.0;
    json failures = json::array();
    std::optional<Point> worst;
    double worst_score = -1.0;

    void add(const FitReport& r) {
        max_residual = std::max(max_residual, r.max_residual);
        max_coefficient = std::max(max_coefficient, r.max_coefficient);
    }
    void fail(const FitReport& r, json context) {
        context["status"] = to_string(r.status);
        context["max_coefficient"] = r.max_coefficient;
        context["max_residual"] = r.max_residual;
        if (r.witness) context["witness"] = point_json(*r.witness);
        failures.push_back(std::move(context));
        const double score = r.status == FitStatus::residual_failure ? HUGE_VAL : r.max_coefficient;
        if (r.witness && score > worst_score) {
            worst_score = score;
            worst = r.witness;
        }
    }
};

inline std::vector<VectorField> pick(std::span<const VectorField> fields, const std::vector<std::size_t>& idx) {
    std::vector<VectorField> out;
    for (std::size_t i : idx) out.push_back(fields[i]);
    return out;
}

/// Members spanning D^F at x: chosen among the explicit members when they
/// suffice, otherwise among all materialized members.
inline std::vector<std::size_t> spanning_at(const Family& f, std::span<const VectorField> members, const Point& x,
                                            int rank) {
    const std::size_t explicit_count = std::min(f.members.size(), members.size());
    auto chosen = select_spanning(members.first(explicit_count), x, rank);
    if (static_cast<int>(chosen.size()) < rank) chosen = select_spanning(members, x, rank);
    return chosen;
}

/// Symmetric times T*k/K, |k| < K, with 2K-1 = count (rounded up to odd).
inline std::vector<double> symmetric_times(double span, int count) {
    const int k_max = std::max(1, (count + 1) / 2);
    std::vector<double> t;
    for (int k = -(k_max - 1); k <= k_max - 1; ++k) t.push_back(span * k / k_max);
    return t;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Involutivity

enum class InvolutiveLevel {
    module,        // brackets are bounded-coefficient combinations of the members
    distribution,  // brackets lie pointwise in the span of the members
};

inline const char* to_string(InvolutiveLevel l) { return l == InvolutiveLevel::module ? "module" : "distribution"; }

struct InvolutiveOptions {
    std::size_t samples = 64;
    double tol = kDefaultFitTol;
    double cap = kDefaultCap;
    InvolutiveLevel level = InvolutiveLevel::module;
};

/// Fits every bracket of two members against all members on a Halton sample
/// of the region, plus an approach sequence toward its center.
inline Verdict check_involutive(const Family& f, const Region& region, const InvolutiveOptions& opt = {}) {
    if (f.members.empty()) throw std::invalid_argument("check_involutive needs at least one explicit member");
    Verdict v;
    v.params = {{"samples", opt.samples}, {"tol", opt.tol}, {"cap", opt.cap}, {"level", to_string(opt.level)},
                {"region", {{"lo", region.lo}, {"hi", region.hi}}}};
    const auto members = f.materialize();
    const auto pts = region_probe_sample(region, opt.samples);
    detail::FitTally tally;
    std::size_t dropped = 0;
    for (std::size_t i = 0; i < members.size(); ++i) {
        for (std::size_t j = i + 1; j < members.size(); ++j) {
            const VectorField br = lie_bracket(members[i], members[j]);
            const auto targets = field_targets(br, pts, &dropped);
            const FitReport rep = opt.level == InvolutiveLevel::module
                                      ? fit_coefficients(targets, members, opt.cap, opt.tol, ResidualScale::relative)
                                      : fit_pointwise(targets, members, opt.tol);
            tally.add(rep);
            if (!rep.ok()) tally.fail(rep, {{"pair", {members[i].name, members[j].name}}});
        }
    }
    v.evidence = {{"max_residual", tally.max_residual},
                  {"max_coefficient", tally.max_coefficient},
                  {"members_seen", names_json(members)},
                  {"sample_points", pts.size()},
                  {"dropped_points", dropped},
                  {"failures", tally.failures}};
    if (!tally.failures.empty()) {
        v.outcome = Outcome::fails;
        v.evidence["witnesses"] = json::array({point_json(*tally.worst)});
        v.evidence["reason"] = tally.failures.front()["status"];
    } else {
        v.outcome = Outcome::holds;
        v.evidence["witnesses"] = json::array({point_json(pts.empty() ? region.center() : pts.front())});
    }
    return v;
}

// ---------------------------------------------------------------------------
// Invariance of a distribution under flows

struct InvarianceProbe {
    Point point;
    std::size_t member = 0;  // index into F.materialize()
    double time = 0.0;
};

/// Probes at Halton points of the region with members and times drawn from a
/// seeded stream.
inline std::vector<InvarianceProbe> random_probes(const Family& f, const Region& region, std::size_t count,
                                                  double tmax = 1.0, std::uint64_t seed = 0) {
    const auto members = f.materialize();
    std::vector<InvarianceProbe> out;
    if (members.empty()) return out;
    Rng rng(seed);
    for (auto& p : halton_sample(region, count)) {
        const std::size_t m = rng.index(members.size());
        out.push_back({std::move(p), m, rng.uniform(-tmax, tmax)});
    }
    return out;
}

struct InvarianceOptions {
    double tol = 1e-6;  // containment tolerance for pushed vectors
    double rank_tol = kDefaultRankTol;
    double flow_tol = 1e-10;
};

/// For each probe (y, X, t), pushes a basis of D_y by the flow of X and tests
/// that the pushed vectors lie in D at the endpoint.
inline Verdict check_invariance(const Family& f, const Family& d, const std::vector<InvarianceProbe>& probes,
                                const InvarianceOptions& opt = {}) {
    if (f.dimension != d.dimension) throw DimensionMismatch("check_invariance: families differ in dimension");
    Verdict v;
    v.params = {{"tol", opt.tol}, {"rank_tol", opt.rank_tol}, {"flow_tol", opt.flow_tol}, {"probes", probes.size()}};
    const auto members = f.materialize();
    const auto dmembers = d.materialize();
    const auto compiled = compile(members);
    double max_residual = 0.0;
    json failures = json::array(), skipped = json::array(), witnesses = json::array();
    for (std::size_t k = 0; k < probes.size(); ++k) {
        const auto& pr = probes[k];
        if (pr.member >= compiled.size()) throw std::out_of_range("probe member index out of range");
        const auto at_y = member_values(dmembers, pr.point);
        const auto basis = at_y.empty() ? std::vector<Vector>{}
                                        : orthonormal_range(columns_to_matrix(at_y, d.dimension), opt.rank_tol);
        const FlowResult fr = integrate(compiled[pr.member], pr.point, pr.time, opt.flow_tol, true);
        if (!fr.ok()) {
            skipped.push_back({{"probe", k}, {"status", to_string(fr.status)}});
            continue;
        }
        const SubspaceBasis target(fr.endpoint, member_values(dmembers, fr.endpoint), opt.rank_tol);
        for (const auto& b : basis) {
            const Eigen::VectorXd pushed =
                (*fr.jacobian) * Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
            const Vector pv(pushed.data(), pushed.data() + pushed.size());
            const SpanTest st = span_contains(target, pv, opt.tol);
            max_residual = std::max(max_residual, st.residual);
            if (!st.contained) {
                failures.push_back({{"probe", k},
                                    {"from", point_json(pr.point)},
                                    {"to", point_json(fr.endpoint)},
                                    {"member", members[pr.member].name},
                                    {"time", pr.time},
                                    {"pushed", point_json(pv)},
                                    {"residual", st.residual}});
                if (witnesses.empty()) witnesses.push_back(point_json(fr.endpoint));
                break;
            }
        }
    }
    v.evidence = {{"max_residual", max_residual}, {"failures", failures}, {"skipped", skipped}};
    if (!failures.empty()) {
        v.outcome = Outcome::fails;
    } else if (!skipped.empty() || probes.empty()) {
        v.outcome = Outcome::inconclusive;
        v.evidence["reason"] = probes.empty() ? "no probes" : "flow failures";
    } else {
        v.outcome = Outcome::holds;
        witnesses.push_back(point_json(probes.front().point));
    }
    v.evidence["witnesses"] = witnesses;
    return v;
}

// ---------------------------------------------------------------------------
// Lobry: locally of finite type

struct LobryOptions {
    double radius = 0.1;
    double tol = kDefaultFitTol;
    double cap = kDefaultCap;
    std::size_t samples = 32;
    int shrink_steps = 6;  // the neighbourhood of each member may shrink by 2^-shrink_steps
    double rank_tol = kDefaultRankTol;
};

/// Chooses X_1..X_p spanning D^F_x, then for every member X looks for a ball
/// around x (starting at `radius`, halving) on which each [X, X_i] is a
/// bounded combination of the X_j. The radius found for each member is
/// reported: it may depend on the member.
inline Verdict check_lobry(const Family& f, const Point& x, const LobryOptions& opt = {}) {
    if (!(opt.radius > 0.0)) throw std::invalid_argument("check_lobry radius must be positive");
    Verdict v;
    v.params = {{"at", point_json(x)},         {"radius", opt.radius},     {"tol", opt.tol},
                {"cap", opt.cap},              {"samples", opt.samples},   {"shrink_steps", opt.shrink_steps},
                {"rank_tol", opt.rank_tol}};
    const auto members = f.materialize();
    const int r = rank_at(members, x, opt.rank_tol);
    const auto span_idx = detail::spanning_at(f, members, x, r);
    const auto gens = detail::pick(members, span_idx);

    detail::FitTally tally;
    json radii = json::array();
    for (const auto& m : members) {
        std::vector<VectorField> brackets;
        for (const auto& g : gens) brackets.push_back(lie_bracket(m, g));
        double rho = opt.radius;
        std::optional<double> found;
        FitReport last;
        std::vector<FitReport> attempt;  // fits at the radius that decided this member
        for (int s = 0; s <= opt.shrink_steps && !found; ++s, rho *= 0.5) {
            const auto pts = region_probe_sample(Region::ball(x, rho), opt.samples);
            attempt.clear();
            bool ok = true;
            for (const auto& br : brackets) {
                FitReport rep = fit_coefficients(field_targets(br, pts), gens, opt.cap, opt.tol, ResidualScale::relative);
                attempt.push_back(rep);
                if (!rep.ok()) {
                    ok = false;
                    last = std::move(rep);
                    break;
                }
            }
            if (ok) found = rho;
        }
        for (const auto& rep : attempt) tally.add(rep);
        if (found) {
            radii.push_back({{"member", m.name}, {"radius", *found}});
        } else {
            radii.push_back({{"member", m.name}, {"radius", nullptr}});
            tally.fail(last, {{"member", m.name}});
        }
    }
    v.evidence = {{"rank_at_x", r},
                  {"spanning", names_json(gens)},
                  {"member_radii", radii},
                  {"members_seen", names_json(members)},
                  {"max_residual", tally.max_residual},
                  {"max_coefficient", tally.max_coefficient},
                  {"failures", tally.failures}};
    if (!tally.failures.empty()) {
        v.outcome = Outcome::fails;
        v.evidence["witnesses"] = json::array({point_json(*tally.worst)});
        v.evidence["reason"] = tally.failures.front()["status"];
    } else {
        v.outcome = Outcome::holds;
        v.evidence["witnesses"] = json::array({point_json(x)});
    }
    return v;
}

// ---------------------------------------------------------------------------
// Conditions along integral curves

enum class CurveMode { sussmann, stefan74, balan };

inline const char* to_string(CurveMode m) {
    switch (m) {
        case CurveMode::sussmann: return "sussmann";
        case CurveMode::stefan74: return "stefan74";
        case CurveMode::balan: return "balan";
    }
    return "?";
}

inline std::optional<CurveMode> curve_mode_from_string(const std::string& s) {
    if (s == "sussmann") return CurveMode::sussmann;
    if (s == "stefan74") return CurveMode::stefan74;
    if (s == "balan") return CurveMode::balan;
    return std::nullopt;
}

struct CurveOptions {
    double epsilon = 0.5;            // initial half-length of the time window (sussmann, stefan74)
    std::optional<Region> U;         // balan; defaults to the ball of radius 0.3 about x
    int samples = 15;                // curve points per window
    int shrink_steps = 8;            // window may shrink by 2^-shrink_steps (sussmann, stefan74)
    double mu_max = 10.0;            // cap on the exit time from U
    double tol = kDefaultFitTol;
    double cap = kDefaultCap;
    double rank_tol = kDefaultRankTol;
    double flow_tol = 1e-10;
};

namespace detail {

/// mu_X = sup{s : phi_t(x) in U for all |t| < s}, capped at mu_max. Found by
/// scanning in steps of mu_max/1000 and bisecting the first exit, in each
/// time direction.
inline double exit_time(const CompiledField& x, const Point& p, const Region& u, double mu_max, double flow_tol) {
    double mu = mu_max;
    for (double dir : {1.0, -1.0}) {
        const double dt = mu_max / 1000.0;
        Point cur = p;
        double inside = 0.0;
        bool exited = false;
        while (inside < mu_max) {
            const FlowResult r = integrate(x, cur, dir * dt, flow_tol, false);
            if (!r.ok()) {
                exited = true;  // leaving the domain counts as leaving U
                break;
            }
            if (!u.contains(r.endpoint)) {
                exited = true;
                break;
            }
            cur = r.endpoint;
            inside += dt;
        }
        if (!exited) continue;
        double lo = 0.0, hi = dt;
        for (int it = 0; it < 50; ++it) {
            const double mid = 0.5 * (lo + hi);
            const FlowResult r = integrate(x, cur, dir * mid, flow_tol, false);
            if (r.ok() && u.contains(r.endpoint)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        mu = std::min(mu, inside + lo);
    }
    return mu;
}

struct CurveSample {
    std::vector<Point> points;
    bool complete = true;
};

inline CurveSample curve_points(const CompiledField& x, const Point& p, double span, int count, double flow_tol) {
    CurveSample out;
    for (double t : symmetric_times(span, count)) {
        const FlowResult r = integrate(x, p, t, flow_tol, false);
        if (!r.ok()) {
            out.complete = false;
            continue;
        }
        out.points.push_back(r.endpoint);
    }
    return out;
}

/// Members that span D^F along the curve: greedy additions (largest
/// orthogonal component, lowest index on ties) at each curve point, in order
/// of increasing |t|, until the chosen values reach the full rank there.
inline std::vector<std::size_t> spanning_along(std::span<const VectorField> members, const std::vector<Point>& pts,
                                               double rank_tol) {
    std::vector<std::size_t> chosen;
    for (const auto& p : pts) {
        const int full = rank_at(members, p, rank_tol);
        for (;;) {
            const auto cur = pick(members, chosen);
            const int have = rank_at(std::span<const VectorField>(cur), p, rank_tol);
            if (have >= full) break;
            std::vector<Vector> q;
            const auto vals = member_values(cur, p);
            if (!vals.empty()) q = orthonormal_range(columns_to_matrix(vals, p.size()), rank_tol);
            double best = 0.0;
            std::optional<std::size_t> pick_idx;
            for (std::size_t i = 0; i < members.size(); ++i) {
                if (std::find(chosen.begin(), chosen.end(), i) != chosen.end() || !members[i].contains(p)) continue;
                const double nr = norm(orthogonal_residual(q, members[i].at(p)));
                if (nr > best) {
                    best = nr;
                    pick_idx = i;
                }
            }
            if (!pick_idx) break;
            chosen.push_back(*pick_idx);
        }
    }
    return chosen;
}

}  // namespace detail

/// Bracket conditions along the integral curve of each tested member X
/// through x:
///   sussmann  X_1..X_p span D^F_x; each [X, X_i] fits the X_j on |t| < eps_X,
///             eps_X shrinking per member (reported, not folded into the outcome);
///   stefan74  X_1..X_p chosen per X so that they span D^F along the curve;
///             then as sussmann;
///   balan     X_1..X_p span D^F_x; each [X, X_i] fits the X_j on |t| < mu_X,
///             the exit time of the curve from the fixed open set U.
/// `member` restricts the test to one index of F.materialize().
inline Verdict check_curve_condition(CurveMode mode, const Family& f, const Point& x,
                                     std::optional<std::size_t> member = std::nullopt,
                                     const CurveOptions& opt = {}) {
    Verdict v;
    const Region u = opt.U ? *opt.U : Region::ball(x, 0.3);
    v.params = {{"mode", to_string(mode)}, {"at", point_json(x)},  {"samples", opt.samples},
                {"tol", opt.tol},          {"cap", opt.cap},       {"rank_tol", opt.rank_tol},
                {"flow_tol", opt.flow_tol}};
    if (mode == CurveMode::balan) {
        v.params["U"] = {{"lo", u.lo}, {"hi", u.hi}};
        if (u.r_max) v.params["U"]["r_max"] = *u.r_max;
        v.params["mu_max"] = opt.mu_max;
    } else {
        v.params["epsilon"] = opt.epsilon;
        v.params["shrink_steps"] = opt.shrink_steps;
    }
    if (mode == CurveMode::balan && !u.contains(x)) throw std::invalid_argument("balan mode: U must contain x");

    const auto members = f.materialize();
    const auto compiled = compile(members);
    const int r = rank_at(members, x, opt.rank_tol);
    const auto fixed_idx = detail::spanning_at(f, members, x, r);

    std::vector<std::size_t> tested;
    if (member) {
        if (*member >= members.size()) throw std::out_of_range("member index out of range");
        tested.push_back(*member);
    } else {
        for (std::size_t i = 0; i < members.size(); ++i) tested.push_back(i);
    }

    detail::FitTally tally;
    json per_member = json::array();
    bool incomplete = false;
    for (std::size_t k : tested) {
        const VectorField& xf = members[k];
        json rec = {{"member", xf.name}};

        std::vector<FitReport> attempt;  // fits in the window that decided this member
        auto try_window = [&](double span, std::vector<std::size_t>* spanning_used, FitReport* bad) {
            attempt.clear();
            const auto cs = detail::curve_points(compiled[k], x, span, opt.samples, opt.flow_tol);
            if (!cs.complete) incomplete = true;
            std::vector<std::size_t> idx = fixed_idx;
            if (mode == CurveMode::stefan74) {
                idx = detail::spanning_along(members, cs.points, opt.rank_tol);
                // Spanning condition: the chosen values span D^F at every sample.
                const auto chosen = detail::pick(members, idx);
                for (const auto& p : cs.points) {
                    if (rank_at(std::span<const VectorField>(chosen), p, opt.rank_tol) !=
                        rank_at(members, p, opt.rank_tol)) {
                        *bad = FitReport{FitStatus::residual_failure, {}, 0.0, 0.0, p};
                        return false;
                    }
                }
            }
            *spanning_used = idx;
            const auto gens = detail::pick(members, idx);
            for (const auto& g : gens) {
                const VectorField br = lie_bracket(xf, g);
                FitReport rep =
                    fit_coefficients(field_targets(br, cs.points), gens, opt.cap, opt.tol, ResidualScale::relative);
                attempt.push_back(rep);
                if (!rep.ok()) {
                    *bad = std::move(rep);
                    return false;
                }
            }
            return true;
        };

        std::vector<std::size_t> used;
        FitReport bad;
        bool ok = false;
        if (mode == CurveMode::balan) {
            const double mu = detail::exit_time(compiled[k], x, u, opt.mu_max, opt.flow_tol);
            rec["mu"] = mu;
            ok = try_window(mu, &used, &bad);
        } else {
            double eps = opt.epsilon;
            for (int s = 0; s <= opt.shrink_steps; ++s, eps *= 0.5) {
                if (try_window(eps, &used, &bad)) {
                    ok = true;
                    rec["epsilon"] = eps;
                    break;
                }
            }
            if (!ok) rec["epsilon"] = nullptr;
        }
        for (const auto& rep : attempt) tally.add(rep);
        rec["spanning"] = names_json(detail::pick(members, used.empty() ? fixed_idx : used));
        rec["holds"] = ok;
        if (!ok) tally.fail(bad, {{"member", xf.name}});
        per_member.push_back(std::move(rec));
    }

    v.evidence = {{"rank_at_x", r},
                  {"spanning_at_x", names_json(detail::pick(members, fixed_idx))},
                  {"members", per_member},
                  {"members_seen", names_json(members)},
                  {"max_residual", tally.max_residual},
                  {"max_coefficient", tally.max_coefficient},
                  {"failures", tally.failures}};
    if (!tally.failures.empty()) {
        v.outcome = Outcome::fails;
        v.evidence["witnesses"] = json::array({point_json(*tally.worst)});
        v.evidence["reason"] = tally.failures.front()["status"];
    } else if (incomplete) {
        v.outcome = Outcome::inconclusive;
        v.evidence["reason"] = "flow failure on a tested curve";
        v.evidence["witnesses"] = json::array({point_json(x)});
    } else {
        v.outcome = Outcome::holds;
        v.evidence["witnesses"] = json::array({point_json(x)});
    }
    return v;
}

// ---------------------------------------------------------------------------
// Hermann

struct HermannOptions {
    std::size_t samples = 64;
    double tol = kDefaultFitTol;
    double cap = kDefaultCap;
    std::size_t curve_starts = 8;
    double tmax = 1.0;
    int curve_samples = 9;
    double rank_tol = kDefaultRankTol;
    double flow_tol = 1e-10;
};

/// (a) every bracket [g_i, g_j] is a bounded combination of the generators
/// over the region; (b) rank_at is constant along integral curves of each
/// generator through Halton starting points.
inline Verdict check_hermann(const Family& f, const std::vector<std::size_t>& generators, const Region& region,
                             const HermannOptions& opt = {}) {
    if (generators.empty()) throw std::invalid_argument("check_hermann needs at least one generator");
    for (std::size_t g : generators) {
        if (g >= f.members.size()) throw std::out_of_range("generator index out of range");
    }
    Verdict v;
    v.params = {{"samples", opt.samples},         {"tol", opt.tol},   {"cap", opt.cap},
                {"curve_starts", opt.curve_starts}, {"tmax", opt.tmax}, {"rank_tol", opt.rank_tol},
                {"generators", generators},        {"region", {{"lo", region.lo}, {"hi", region.hi}}}};
    const std::vector<VectorField> gens = detail::pick(f.members, generators);
    const auto members = f.materialize();

    // (a) module check
    const auto pts = region_probe_sample(region, opt.samples);
    detail::FitTally tally;
    for (std::size_t i = 0; i < gens.size(); ++i) {
        for (std::size_t j = i + 1; j < gens.size(); ++j) {
            const FitReport rep = fit_coefficients(field_targets(lie_bracket(gens[i], gens[j]), pts), gens, opt.cap,
                                                   opt.tol, ResidualScale::relative);
            tally.add(rep);
            if (!rep.ok()) tally.fail(rep, {{"pair", {gens[i].name, gens[j].name}}});
        }
    }

    // (b) rank constancy along integral curves
    json rank_failures = json::array();
    long flow_failures = 0;
    std::optional<Point> rank_witness;
    const auto compiled = compile(gens);
    for (const auto& y : halton_sample(region, opt.curve_starts)) {
        const int r0 = rank_at(members, y, opt.rank_tol);
        for (std::size_t g = 0; g < compiled.size(); ++g) {
            for (double t : detail::symmetric_times(opt.tmax, opt.curve_samples)) {
                const FlowResult fr = integrate(compiled[g], y, t, opt.flow_tol, false);
                if (!fr.ok()) {
                    ++flow_failures;
                    continue;
                }
                const int rt = rank_at(members, fr.endpoint, opt.rank_tol);
                if (rt != r0) {
                    rank_failures.push_back({{"start", point_json(y)},
                                             {"generator", gens[g].name},
                                             {"time", t},
                                             {"point", point_json(fr.endpoint)},
                                             {"rank_start", r0},
                                             {"rank", rt}});
                    if (!rank_witness) rank_witness = fr.endpoint;
                    break;
                }
            }
        }
    }

    const bool module_ok = tally.failures.empty();
    const bool rank_ok = rank_failures.empty();
    v.evidence = {{"module_check", module_ok ? "holds" : "fails"},
                  {"rank_check", rank_ok ? "holds" : "fails"},
                  {"max_residual", tally.max_residual},
                  {"max_coefficient", tally.max_coefficient},
                  {"failures", tally.failures},
                  {"rank_failures", rank_failures},
                  {"flow_failures", flow_failures},
                  {"members_seen", names_json(gens)}};
    json witnesses = json::array();
    if (tally.worst) witnesses.push_back(point_json(*tally.worst));
    if (rank_witness) witnesses.push_back(point_json(*rank_witness));
    if (module_ok && rank_ok) {
        v.outcome = Outcome::holds;
        witnesses.push_back(point_json(pts.empty() ? region.center() : pts.front()));
    } else {
        v.outcome = Outcome::fails;
        v.evidence["reason"] = !module_ok ? tally.failures.front()["status"] : json("rank changes along a curve");
    }
    v.evidence["witnesses"] = witnesses;
    return v;
}

// ---------------------------------------------------------------------------
// Frobenius fast path

struct FrobeniusOptions {
    std::size_t samples = 64;
    double tol = kDefaultFitTol;
    double cap = kDefaultCap;
    double rank_tol = kDefaultRankTol;
};

/// Constant rank over the region sample and involutive (module level).
inline Verdict check_frobenius(const Family& f, const Region& region, const FrobeniusOptions& opt = {}) {
    Verdict v;
    v.params = {{"samples", opt.samples}, {"tol", opt.tol}, {"cap", opt.cap}, {"rank_tol", opt.rank_tol},
                {"region", {{"lo", region.lo}, {"hi", region.hi}}}};
    const auto members = f.materialize();
    const auto pts = region_probe_sample(region, opt.samples);
    std::optional<int> rank0;
    std::optional<Point> first, jump;
    int jump_rank = 0;
    for (const auto& p : pts) {
        const int r = rank_at(members, p, opt.rank_tol);
        if (!rank0) {
            rank0 = r;
            first = p;
        } else if (r != *rank0 && !jump) {
            jump = p;
            jump_rank = r;
        }
    }
    if (jump) {
        v.outcome = Outcome::fails;
        v.evidence = {{"reason", "rank is not constant"},
                      {"rank", *rank0},
                      {"rank_elsewhere", jump_rank},
                      {"witnesses", json::array({point_json(*first), point_json(*jump)})}};
        return v;
    }
    if (f.members.empty()) {
        v.outcome = Outcome::holds;
        v.evidence = {{"rank", rank0.value_or(0)}, {"witnesses", json::array({point_json(region.center())})}};
        return v;
    }
    const Verdict inv = check_involutive(f, region, {opt.samples, opt.tol, opt.cap, InvolutiveLevel::module});
    v.outcome = inv.outcome;
    v.evidence = inv.evidence;
    v.evidence["rank"] = rank0.value_or(0);
    return v;
}

// ---------------------------------------------------------------------------
// Integrability via the orbit tangent spaces

struct IntegrableOptions {
    long budget = 2000;  // flows, split between saturation and orbit sampling
    double tol = kDefaultRankTol;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::size_t probes = 20;
    double tmax = 1.0;
    double contain_tol = 1e-6;
    double flow_tol = 1e-10;
};

/// r = rank_at(F, x), s = dimension of the saturated distribution at x.
/// Fails when s > r. Otherwise samples orbit points y and requires
/// rank_at(F, y) = s and D^F_y inside the span transported from x.
inline Verdict integrable_at(const Family& f, const Point& x, const IntegrableOptions& opt = {}) {
    if (opt.budget <= 0) throw std::invalid_argument("integrable_at budget must be positive");
    Verdict v;
    v.params = {{"at", point_json(x)},       {"budget", opt.budget},   {"tol", opt.tol},
                {"seed", opt.seed},          {"probes", opt.probes},   {"tmax", opt.tmax},
                {"contain_tol", opt.contain_tol}};
    const auto members = f.materialize();
    const int r = rank_at(members, x, opt.tol);
    SaturationOptions so;
    so.budget = std::max(1L, opt.budget / 2);
    so.tol = opt.tol;
    so.seed = opt.seed;
    so.threads = opt.threads;
    const Saturation sat = orbit_tangent_dim(f, x, so);
    v.evidence = {{"r", r},
                  {"s", sat.dim},
                  {"saturation_stable", sat.stable},
                  {"flows_used", sat.flows_used},
                  {"members_seen", names_json(members)}};
    if (sat.dim > r) {
        v.outcome = Outcome::fails;
        v.evidence["reason"] = "saturated distribution is larger than D^F at x";
        v.evidence["witnesses"] = json::array({point_json(x)});
        return v;
    }

    OrbitOptions oo;
    oo.budget = std::max(1L, opt.budget - sat.flows_used);
    oo.tmax = opt.tmax;
    oo.seed = opt.seed;
    oo.tol = opt.flow_tol;
    oo.threads = opt.threads;
    const OrbitCloud cloud = sample_orbit(f, x, oo);
    const auto compiled = compile(members);

    std::vector<std::size_t> picks;
    const std::size_t others = cloud.points.size() - 1;
    const std::size_t want = std::min(opt.probes, others);
    for (std::size_t k = 0; k < want; ++k) picks.push_back(1 + k * others / want);

    json escapes = json::array();
    std::size_t checked = 0;
    for (std::size_t idx : picks) {
        const Point& y = cloud.points[idx];
        const FlowResult wr = apply_word(compiled, cloud.words[idx], x, opt.flow_tol, true);
        if (!wr.ok()) continue;
        ++checked;
        const int ry = rank_at(members, y, opt.tol);
        std::vector<Vector> moved;
        for (const auto& b : sat.basis.orthonormal()) {
            const Eigen::VectorXd m =
                (*wr.jacobian) * Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
            moved.emplace_back(m.data(), m.data() + m.size());
        }
        const SubspaceBasis transported(y, moved, opt.tol);
        bool contained = true;
        double worst = 0.0;
        for (const auto& val : member_values(members, y)) {
            const SpanTest st = span_contains(transported, val, opt.contain_tol);
            worst = std::max(worst, st.residual);
            contained = contained && st.contained;
        }
        if (ry != sat.dim || !contained) {
            escapes.push_back({{"point", point_json(y)},
                               {"word", word_to_string(cloud.words[idx])},
                               {"rank", ry},
                               {"residual", worst}});
        }
    }
    v.evidence["orbit_points"] = cloud.points.size();
    v.evidence["orbit_points_checked"] = checked;
    v.evidence["span_escapes"] = escapes;
    if (!escapes.empty()) {
        v.outcome = Outcome::fails;
        v.evidence["reason"] = "D^F at an orbit point differs from the transported tangent space";
        v.evidence["witnesses"] = json::array({escapes.front()["point"]});
    } else if (!sat.stable) {
        v.outcome = Outcome::inconclusive;
        v.evidence["reason"] = "budget exhausted while the saturation was still growing";
        v.evidence["witnesses"] = json::array({point_json(x)});
    } else {
        v.outcome = Outcome::holds;
        v.evidence["witnesses"] = json::array({point_json(x)});
    }
    return v;
}

}  // namespace orbitkit
