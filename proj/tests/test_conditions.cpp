#include <gtest/gtest.h>

#include <cmath>

#include "orbitkit/corpus.hpp"
#include "test_support.hpp"

using namespace orbitkit;

namespace {

Family plane() { return Family(2, {coordinate_field(2, 0, "dx"), coordinate_field(2, 1, "dy")}); }
Family xy() { return Family(2, {coordinate_field(2, 0, "dx"), VectorField("x dy", {constant(0.0), var(0)})}); }
Family halfplane_x() { return cases::halfplane_x_noninteg().family; }
Family balan() { return cases::balan_pair().family; }
Family arjen() { return cases::arjen_module().family; }
Family arjen_finite() { return cases::arjen_module().companions.at("finite"); }
Region square() { return Region::box({-1, -1}, {1, 1}); }
Region cube() { return Region::box({-1, -1, -1}, {1, 1, 1}); }

void expect_witnessed(const Verdict& v) {
    if (v.outcome == Outcome::inconclusive) {
        EXPECT_TRUE(v.evidence.contains("reason")) << v.evidence.dump();
    } else {
        ASSERT_TRUE(v.evidence.contains("witnesses")) << v.evidence.dump();
        EXPECT_GE(v.evidence["witnesses"].size(), 1u);
    }
}

}  // namespace

TEST(Involutive, So3Holds) {
    const Verdict v = check_involutive(cases::so3(), cube());
    EXPECT_EQ(v.outcome, Outcome::holds) << v.evidence.dump();
    expect_witnessed(v);
    EXPECT_LE(v.evidence["max_coefficient"].get<double>(), 1.0 + 1e-9);
}

TEST(Involutive, HalfplaneHoldsPointwise) {
    InvolutiveOptions o;
    o.level = InvolutiveLevel::distribution;
    EXPECT_EQ(check_involutive(halfplane_x(), square(), o).outcome, Outcome::holds);
}

TEST(Involutive, HalfplaneModuleLevelBlowsUp) {
    const Verdict v = check_involutive(halfplane_x(), square());
    EXPECT_EQ(v.outcome, Outcome::fails);
    EXPECT_EQ(v.evidence["reason"], "coefficient-blowup");
}

TEST(Involutive, BalanFailsNearTheOrigin) {
    const Verdict v = check_involutive(balan(), square());
    ASSERT_EQ(v.outcome, Outcome::fails);
    EXPECT_EQ(v.evidence["reason"], "coefficient-blowup");
    const Point w = v.evidence["witnesses"][0].get<Point>();
    EXPECT_LE(norm(w), 0.2);
    EXPECT_GT(v.evidence["max_coefficient"].get<double>(), kDefaultCap);
}

TEST(Involutive, BalanHoldsOnAnAnnulus) {
    EXPECT_EQ(check_involutive(balan(), Region::shell({0, 0}, 0.5, 1.0)).outcome, Outcome::holds);
}

TEST(Involutive, RecordsParametersAndMembers) {
    const Verdict v = check_involutive(xy(), square(), {16, 1e-8, 50.0, InvolutiveLevel::module});
    EXPECT_EQ(v.params["samples"], 16);
    EXPECT_EQ(v.params["cap"], 50.0);
    EXPECT_EQ(v.params["level"], "module");
    EXPECT_EQ(v.evidence["members_seen"].size(), 2u);
    EXPECT_EQ(v.outcome, Outcome::fails);
}

TEST(Involutive, NeedsAnExplicitMember) {
    EXPECT_THROW(check_involutive(Family(2, {}), square()), std::invalid_argument);
}

TEST(Invariance, VerticalDirectionIsNotCarriedByDx) {
    const Verdict v = check_invariance(halfplane_x(), halfplane_x(), {{{0.5, 0.0}, 0, -1.0}});
    EXPECT_EQ(v.outcome, Outcome::fails);
    expect_witnessed(v);
}

TEST(Invariance, So3RandomProbesHold) {
    const Family f = cases::so3();
    const Verdict v = check_invariance(f, f, random_probes(f, cube(), 100, 1.0, 0));
    EXPECT_EQ(v.outcome, Outcome::holds) << v.evidence.dump();
    EXPECT_EQ(v.params["probes"], 100);
}

TEST(Invariance, FullTangentBundleHolds) {
    const Family d(3, {coordinate_field(3, 0, "d1"), coordinate_field(3, 1, "d2"), coordinate_field(3, 2, "d3")});
    EXPECT_EQ(check_invariance(cases::so3(), d, random_probes(cases::so3(), cube(), 30)).outcome, Outcome::holds);
    EXPECT_EQ(check_invariance(xy(), plane(), random_probes(xy(), square(), 30)).outcome, Outcome::holds);
}

TEST(Invariance, DimensionsMustAgree) {
    EXPECT_THROW(check_invariance(plane(), cases::so3(), {}), DimensionMismatch);
}

TEST(Lobry, CoordinateFieldsHold) {
    EXPECT_EQ(check_lobry(plane(), {0.3, -0.2}).outcome, Outcome::holds);
}

TEST(Lobry, ArjenModuleHoldsAtTheOrigin) {
    const Verdict v = check_lobry(arjen(), {0, 0});
    EXPECT_EQ(v.outcome, Outcome::holds) << v.evidence.dump();
    EXPECT_EQ(v.evidence["spanning"], json::array({"dx"}));
    EXPECT_EQ(v.evidence["members_seen"].size(), 1u + default_rule_samples().size());
}

TEST(Lobry, FinitePresentationFails) {
    const Verdict v = check_lobry(arjen_finite(), {0, 0});
    EXPECT_EQ(v.outcome, Outcome::fails);
    expect_witnessed(v);
}

TEST(Lobry, RadiusMustBePositive) {
    LobryOptions o;
    o.radius = 0.0;
    EXPECT_THROW(check_lobry(plane(), {0, 0}, o), std::invalid_argument);
}

TEST(Curve, CoordinateFieldsHoldInEveryMode) {
    for (CurveMode m : {CurveMode::sussmann, CurveMode::stefan74, CurveMode::balan}) {
        const Verdict v = check_curve_condition(m, plane(), {0.1, 0.2});
        EXPECT_EQ(v.outcome, Outcome::holds) << to_string(m) << " " << v.evidence.dump();
        expect_witnessed(v);
    }
}

TEST(Curve, ArjenSussmannHoldsWithMemberDependentEpsilon) {
    const Verdict v = check_curve_condition(CurveMode::sussmann, arjen(), {0, 0});
    ASSERT_EQ(v.outcome, Outcome::holds) << v.evidence.dump();
    std::vector<double> eps;
    for (const auto& m : v.evidence["members"]) eps.push_back(m["epsilon"].get<double>());
    ASSERT_EQ(eps.size(), 1u + default_rule_samples().size());
    EXPECT_LT(*std::min_element(eps.begin(), eps.end()), *std::max_element(eps.begin(), eps.end()));
}

TEST(Curve, ArjenBalanFailsForSmallBumps) {
    CurveOptions o;
    o.U = Region::ball({0, 0}, 0.3);
    const Verdict v = check_curve_condition(CurveMode::balan, arjen(), {0, 0}, std::nullopt, o);
    EXPECT_EQ(v.outcome, Outcome::fails);
    for (const auto& m : v.evidence["members"]) EXPECT_TRUE(m.contains("mu"));
    EXPECT_TRUE(v.params.contains("U"));
    EXPECT_FALSE(v.params.contains("epsilon"));
}

TEST(Curve, SingleMemberRestriction) {
    const Verdict v = check_curve_condition(CurveMode::sussmann, arjen(), {0, 0}, 0);
    EXPECT_EQ(v.evidence["members"].size(), 1u);
    EXPECT_THROW(check_curve_condition(CurveMode::sussmann, plane(), {0, 0}, 7), std::out_of_range);
}

TEST(Curve, BalanNeedsUToContainThePoint) {
    CurveOptions o;
    o.U = Region::ball({5, 5}, 0.1);
    EXPECT_THROW(check_curve_condition(CurveMode::balan, plane(), {0, 0}, std::nullopt, o), std::invalid_argument);
}

TEST(Hermann, So3HoldsAwayFromTheOrigin) {
    Region r = cube();
    r.r_min = 0.25;
    const Verdict v = check_hermann(cases::so3(), {0, 1, 2}, r);
    EXPECT_EQ(v.outcome, Outcome::holds) << v.evidence.dump();
    EXPECT_EQ(v.evidence["module_check"], "holds");
    EXPECT_EQ(v.evidence["rank_check"], "holds");
}

TEST(Hermann, XyModuleCheckFails) {
    const Verdict v = check_hermann(xy(), {0, 1}, square());
    EXPECT_EQ(v.outcome, Outcome::fails);
    EXPECT_EQ(v.evidence["module_check"], "fails");
    // The sample reaches x = 0, where d/dy leaves the span outright; nearby the coefficient 1/x exceeds the cap.
    EXPECT_GT(v.evidence["max_coefficient"].get<double>(), kDefaultCap);
}

TEST(Hermann, SingleDilationHolds) {
    const Family f(1, {VectorField("x dx", {var(0)})});
    EXPECT_EQ(check_hermann(f, {0}, Region::box({-1}, {1})).outcome, Outcome::holds);
}

TEST(Hermann, GeneratorsAreValidated) {
    EXPECT_THROW(check_hermann(plane(), {}, square()), std::invalid_argument);
    EXPECT_THROW(check_hermann(plane(), {2}, square()), std::out_of_range);
}

TEST(Frobenius, PlaneHoldsWithRankTwo) {
    const Verdict v = check_frobenius(plane(), Region::box({3, 3}, {4, 5}));
    EXPECT_EQ(v.outcome, Outcome::holds);
    EXPECT_EQ(v.evidence["rank"], 2);
}

TEST(Frobenius, So3ShellHoldsWithRankTwo) {
    const Verdict v = check_frobenius(cases::so3(), Region::shell({0, 0, 0}, 0.9, 1.1));
    EXPECT_EQ(v.outcome, Outcome::holds) << v.evidence.dump();
    EXPECT_EQ(v.evidence["rank"], 2);
}

TEST(Frobenius, RankJumpFails) {
    const Verdict v = check_frobenius(halfplane_x(), square());
    EXPECT_EQ(v.outcome, Outcome::fails);
    EXPECT_EQ(v.evidence["reason"], "rank is not constant");
    EXPECT_EQ(v.evidence["witnesses"].size(), 2u);
}

TEST(Integrable, HalfplaneFailsAtTheOrigin) {
    const Verdict v = integrable_at(halfplane_x(), {0, 0});
    EXPECT_EQ(v.outcome, Outcome::fails);
    EXPECT_EQ(v.evidence["r"], 1);
    EXPECT_EQ(v.evidence["s"], 2);
}

TEST(Integrable, So3HoldsOnTheSphere) {
    const Verdict v = integrable_at(cases::so3(), {1, 0, 0});
    EXPECT_EQ(v.outcome, Outcome::holds) << v.evidence.dump();
    EXPECT_EQ(v.evidence["r"], 2);
    EXPECT_EQ(v.evidence["s"], 2);
    EXPECT_GT(v.evidence["orbit_points_checked"].get<int>(), 0);
}

TEST(Integrable, FiniteArjenFailsAtTheOrigin) {
    const Verdict v = integrable_at(arjen_finite(), {0, 0});
    EXPECT_EQ(v.outcome, Outcome::fails);
    EXPECT_EQ(v.evidence["r"], 1);
    EXPECT_EQ(v.evidence["s"], 2);
}

TEST(Integrable, BalanPairHolds) {
    const Verdict o = integrable_at(balan(), {0, 0});
    EXPECT_EQ(o.outcome, Outcome::holds);
    EXPECT_EQ(o.evidence["r"], 0);
    EXPECT_EQ(o.evidence["s"], 0);
    const Verdict p = integrable_at(balan(), {1, 0});
    EXPECT_EQ(p.outcome, Outcome::holds) << p.evidence.dump();
    EXPECT_EQ(p.evidence["r"], 2);
    EXPECT_EQ(p.evidence["s"], 2);
}

TEST(Integrable, BudgetMustBePositive) {
    IntegrableOptions o;
    o.budget = 0;
    EXPECT_THROW(integrable_at(plane(), {0, 0}, o), std::invalid_argument);
}

TEST(Conditions, ArjenRefutationTriple) {
    const Family f = arjen();
    EXPECT_EQ(check_lobry(f, {0, 0}).outcome, Outcome::holds);
    EXPECT_EQ(check_curve_condition(CurveMode::sussmann, f, {0, 0}).outcome, Outcome::holds);
    EXPECT_EQ(integrable_at(f, {0, 0}).outcome, Outcome::fails);
}

TEST(Conditions, VerdictsAreDeterministic) {
    IntegrableOptions o;
    o.seed = 11;
    EXPECT_EQ(integrable_at(arjen(), {0, 0}, o).to_json(), integrable_at(arjen(), {0, 0}, o).to_json());
    EXPECT_EQ(check_involutive(balan(), square()).to_json(), check_involutive(balan(), square()).to_json());
    const auto probes = random_probes(cases::so3(), cube(), 20, 1.0, 4);
    EXPECT_EQ(check_invariance(cases::so3(), cases::so3(), probes).to_json(),
              check_invariance(cases::so3(), cases::so3(), random_probes(cases::so3(), cube(), 20, 1.0, 4)).to_json());
}

// Every verdict in the corpus carries a witness, or a reason when inconclusive.
TEST(ConditionProperties, VerdictsCarryWitnesses) {
    for (const auto& c : builtin_cases()) {
        for (const auto& e : c.verdicts) {
            SCOPED_TRACE(c.name + " " + e.condition);
            expect_witnessed(run_condition(e.condition, detail::family_for(c, e.params), e.params, {}, c.companions));
        }
    }
}

namespace {

// Probe points for a region verdict: the case's own integrable probes inside
// the region plus a few Halton points of it.
std::vector<Point> probes_in(const ExampleCase& c, const Region& r) {
    std::vector<Point> out = halton_sample(r, 4);
    for (const auto& e : c.verdicts) {
        if (e.condition == "integrable" && !e.params.contains("family")) {
            const Point p = e.params["at"].get<Point>();
            if (r.contains(p)) out.push_back(p);
        }
    }
    return out;
}

}  // namespace

TEST(ConditionProperties, HermannHoldsImpliesIntegrable) {
    int exercised = 0;
    for (const auto& c : builtin_cases()) {
        for (const auto& e : c.verdicts) {
            if (e.condition != "hermann" || e.params.contains("family")) continue;
            if (run_condition("hermann", c.family, e.params).outcome != Outcome::holds) continue;
            const Region r = detail::region_param(e.params, c.family.dimension);
            for (const auto& p : probes_in(c, r)) {
                ++exercised;
                EXPECT_EQ(integrable_at(c.family, p).outcome, Outcome::holds) << c.name << " at " << json(p).dump();
            }
        }
    }
    EXPECT_GT(exercised, 0);
}

TEST(ConditionProperties, FrobeniusHoldsImpliesIntegrable) {
    int exercised = 0;
    for (const auto& c : builtin_cases()) {
        for (const auto& e : c.verdicts) {
            if (e.condition != "frobenius" || e.params.contains("family")) continue;
            if (run_condition("frobenius", c.family, e.params).outcome != Outcome::holds) continue;
            const Region r = detail::region_param(e.params, c.family.dimension);
            for (const auto& p : probes_in(c, r)) {
                ++exercised;
                EXPECT_EQ(integrable_at(c.family, p).outcome, Outcome::holds) << c.name << " at " << json(p).dump();
            }
        }
    }
    EXPECT_GT(exercised, 0);
}

TEST(ConditionProperties, IntegrableHoldsImpliesTangentDimEqualsRank) {
    OrbitOptions oo;
    oo.budget = 200;
    for (const auto& c : builtin_cases()) {
        for (const auto& e : c.verdicts) {
            if (e.condition != "integrable" || e.params.contains("family")) continue;
            const Point x = e.params["at"].get<Point>();
            if (integrable_at(c.family, x).outcome != Outcome::holds) continue;
            const OrbitCloud cloud = sample_orbit(c.family, x, oo);
            for (std::size_t k = 0; k < cloud.points.size(); k += std::max<std::size_t>(1, cloud.points.size() / 5)) {
                const Point& y = cloud.points[k];
                EXPECT_EQ(orbit_tangent_dim(c.family, y).dim, rank_at(c.family, y)) << c.name << " at " << json(y).dump();
            }
        }
    }
}
