#include <gtest/gtest.h>

#include "coarse/bm_homology.hpp"
#include "coarse/json_io.hpp"
#include "support.hpp"

using namespace coarse;
using coarse::testing::pt;

namespace {

const char* kBundled[] = {"lattice1d", "lattice2d", "lattice3d", "lattice_spacing2", "lattice_defects_1d",
                          "lattice_defects_ring2d", "lattice_defects_added", "clusters_exp", "clusters_linear",
                          "clusters_2d", "clusters_const", "wedge3", "finite_cloud"};

}  // namespace

TEST(BM, ClassIsNonzeroExactlyWhenAFiniteComponentIsCertified) {
  coarse::testing::Gen gen(2);
  for (int trial = 0; trial < 20; ++trial) {
    PointModel m = PointModel::finite_cloud(2, gen.cloud(30, 2, 10, 1));
    Window w = enumerate_window(m, m.default_region());
    for (auto& s : critical_scales(m, w, Length::from_value(5))) {
      auto r = analyze_scale(m, w, s);
      auto e = bm_class_per_scale(r.graph, r.certs, r.coverage);
      EXPECT_TRUE(e.class_nonzero);
      EXPECT_EQ(e.finite_components.size(), r.graph.component_count);
    }
  }
}

TEST(BM, UncoveredZeroIsInconclusive) {
  PointModel m = PointModel::lattice(1, 1);
  Window w = enumerate_window(m, Region::box(pt({0}), pt({5})));
  auto r = analyze_scale(m, w, Length::from_value(1));
  EXPECT_TRUE(bm_class_per_scale(r.graph, r.certs, true).class_zero());
  EXPECT_TRUE(bm_class_per_scale(r.graph, r.certs, false).inconclusive);
}

TEST(BM, CertificatesMustCoverEveryComponentOnce) {
  PointModel m = PointModel::finite_cloud(1, {{"a", pt({0})}, {"b", pt({5})}});
  Window w = enumerate_window(m, m.default_region());
  auto r = analyze_scale(m, w, Length::from_value(1));
  auto certs = r.certs;
  certs.pop_back();
  EXPECT_THROW(bm_class_per_scale(r.graph, certs), ContractError);
  certs = r.certs;
  certs.push_back(certs.front());
  EXPECT_THROW(bm_class_per_scale(r.graph, certs), ContractError);
}

// Vanishes(a) iff Satisfied(a), Persists iff Fails, on every bundled model.
TEST(BM, LimitAgreesWithCriterionOnBundledModels) {
  for (auto name : kBundled) {
    PointModel m = load_model(coarse::testing::source_path(std::string("models/") + name + ".json"));
    Window w = enumerate_window(m, m.default_region());
    auto scales = critical_scales(m, w, Length::from_value(4));
    auto reports = analyze_scales(m, w, scales);
    BMReport bm = bm_report(m, w, reports);
    CriterionVerdict v = decide_criterion(m, w, Length::from_value(4));
    SCOPED_TRACE(name);
    EXPECT_NE(v.outcome, Outcome::Inconclusive);
    EXPECT_EQ(v.outcome == Outcome::Satisfied, bm.limit.verdict == BMLimit::Vanishes);
    EXPECT_EQ(v.outcome == Outcome::Fails, bm.limit.verdict == BMLimit::Persists);
    if (v.outcome == Outcome::Satisfied) EXPECT_EQ(v.alpha_star, bm.limit.alpha_star);
  }
}

TEST(BM, ZeroClassIsStableAcrossLargerScales) {
  PointModel m = PointModel::lattice(2, 1);
  Window w = enumerate_window(m, Region::box(pt({-3, -3}), pt({3, 3})));
  auto reports = analyze_scales(m, w, critical_scales(m, w, Length::from_value(3)));
  BMReport bm = bm_report(m, w, reports);
  bool zero = false;
  for (auto& e : bm.entries) {
    if (zero) EXPECT_TRUE(e.class_zero()) << e.alpha.exact_string();
    zero = zero || e.class_zero();
  }
  EXPECT_TRUE(zero);
}

TEST(BM, LimitNeedsMatchingScales) {
  PointModel m = PointModel::lattice(1, 1);
  Window w = enumerate_window(m, Region::box(pt({0}), pt({5})));
  auto reports = analyze_scales(m, w, critical_scales(m, w, Length::from_value(2)));
  auto tree = merge_tree_from(m, w, reports);
  EXPECT_THROW(bm_limit(tree, {}), ContractError);
}
