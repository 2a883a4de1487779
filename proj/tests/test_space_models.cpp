#include <gtest/gtest.h>

#include "coarse/json_io.hpp"
#include "coarse/rips_multiscale.hpp"
#include "coarse/space_models.hpp"
#include "support.hpp"

using namespace coarse;
using coarse::testing::pt;

namespace {

PointModel exp_clusters() { return PointModel::cluster_sequence(1, {{pt({0})}}, GapRule::exponential(2)); }

// Every site of the model in `outer` within `radius` of some site of `s`,
// found by brute force.
std::set<std::string> brute_near(const PointModel& m, const Region& outer, const std::vector<Site>& s, const Length& radius) {
  std::set<std::string> out;
  for (auto& y : m.sites_in(outer))
    for (auto& x : s)
      if (m.distance(x, y) <= radius) {
        out.insert(y.label);
        break;
      }
  return out;
}

}  // namespace

TEST(SpaceModels, LabelsRoundTripForEveryKind) {
  std::vector<PointModel> models = {
      PointModel::finite_cloud(2, {{"a", pt({0, 0})}, {"b", pt({1, Rational(1, 2)})}}),
      PointModel::lattice(2, 1),
      PointModel::lattice_with_defects(1, 1, pt({0}), {{0}}, {{"x", pt({Rational(1, 2)})}}),
      exp_clusters(),
      PointModel::wedge_of_rays(3),
  };
  for (auto& m : models) {
    auto sites = m.sites_in(m.default_region());
    ASSERT_FALSE(sites.empty()) << to_string(m.kind());
    for (auto& s : sites) {
      Site r = m.resolve(s.label);
      EXPECT_EQ(r.label, s.label);
      EXPECT_EQ(r.pos, s.pos);
    }
  }
}

TEST(SpaceModels, ResolveRejectsForeignLabels) {
  EXPECT_THROW(PointModel::lattice(2, 1).resolve("L:1"), ResolutionError);
  EXPECT_THROW(PointModel::lattice_with_defects(1, 1, pt({0}), {{0}}, {}).resolve("L:0"), ResolutionError);
  EXPECT_THROW(exp_clusters().resolve("C:0:0"), ResolutionError);
  EXPECT_THROW(PointModel::wedge_of_rays(2).resolve("W:2:0"), ResolutionError);
}

TEST(SpaceModels, LatticeDistanceIsScaledIndexNorm) {
  PointModel m = PointModel::lattice(2, Rational(3, 2));
  coarse::testing::Gen gen(3);
  for (int i = 0; i < 200; ++i) {
    std::int64_t a = gen.between(-9, 9), b = gen.between(-9, 9), c = gen.between(-9, 9), d = gen.between(-9, 9);
    Site x = m.resolve("L:" + std::to_string(a) + "," + std::to_string(b));
    Site y = m.resolve("L:" + std::to_string(c) + "," + std::to_string(d));
    Rational sq = Rational(9, 4) * ((a - c) * (a - c) + (b - d) * (b - d));
    EXPECT_EQ(m.distance(x, y), Length::from_square(sq));
  }
}

TEST(SpaceModels, WedgeDistanceGoesThroughTheBasepoint) {
  PointModel m = PointModel::wedge_of_rays(3);
  EXPECT_EQ(distance(m, "W:0:2", "W:0:7"), Length::from_value(5));
  EXPECT_EQ(distance(m, "W:0:2", "W:1:3"), Length::from_value(6));
  EXPECT_EQ(distance(m, "W:1:0", "W:2:0"), Length::from_value(1));
}

TEST(SpaceModels, LatticeBoxEnumerationCountsIndices) {
  PointModel m = PointModel::lattice(2, Rational(1, 2));
  Region r = Region::box(pt({Rational(-3, 4), 0}), pt({2, Rational(5, 4)}));
  // x indices -1..4, y indices 0..2
  EXPECT_EQ(m.sites_in(r).size(), 6u * 3u);
  for (auto& s : m.sites_in(r)) EXPECT_TRUE(r.contains(s.pos));
}

TEST(SpaceModels, DefectsRemoveAndAdd) {
  PointModel m = PointModel::lattice_with_defects(1, 1, pt({0}), {{0}, {3}}, {{"x", pt({Rational(1, 2)})}});
  auto sites = m.sites_in(Region::box(pt({-1}), pt({4})));
  std::set<std::string> labels;
  for (auto& s : sites) labels.insert(s.label);
  EXPECT_EQ(labels, (std::set<std::string>{"L:-1", "L:1", "L:2", "L:4", "x"}));
}

// The neighbourhood box must contain every model point within the radius.
TEST(SpaceModels, NeighborhoodContainsEveryNearPoint) {
  coarse::testing::Gen gen(5);
  std::vector<PointModel> models = {
      PointModel::lattice(2, 1),
      PointModel::lattice_with_defects(2, 1, pt({0, 0}), {{0, 0}, {1, 0}}, {{"x", pt({Rational(1, 3), Rational(2, 3)})}}),
      exp_clusters(),
      PointModel::cluster_sequence(2, {{pt({0, 0}), pt({1, 1})}}, GapRule::linear(1, 1)),
      PointModel::wedge_of_rays(3),
  };
  for (auto& m : models) {
    Region base = m.default_region();
    auto sites = m.sites_in(base);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<Site> s;
      for (int k = 0; k < 3; ++k) s.push_back(sites[static_cast<std::size_t>(gen.between(0, static_cast<std::int64_t>(sites.size()) - 1))]);
      Length radius = Length::from_value(Rational(gen.between(1, 12), 3));
      Region nb = m.neighborhood(s, radius);
      std::set<std::string> got;
      for (auto& y : m.sites_in(nb)) got.insert(y.label);
      Region outer = m.neighborhood(s, radius.scaled(3));
      for (auto& label : brute_near(m, outer, s, radius)) EXPECT_TRUE(got.count(label)) << to_string(m.kind()) << " " << label;
    }
  }
}

// Cluster F_3 of the 2^n model sits at margin 8 from the rest.
TEST(SpaceModels, ExponentialClusterMargin) {
  PointModel m = exp_clusters();
  auto f3 = m.cluster_sites(3);
  ASSERT_EQ(f3.size(), 1u);
  EXPECT_EQ(isolation_margin(m, f3, Length::from_value(1)), Length::from_value(8));
  // For single-point templates margin(F_n) = min(gap(n), gap(n+1)) = 2^n.
  for (std::int64_t n = 2; n <= 10; ++n)
    EXPECT_EQ(isolation_margin(m, m.cluster_sites(n), Length::from_value(1)), Length::from_value(Rational(std::int64_t{1} << n)));
}

TEST(SpaceModels, AuditReportsSeparationAndBallCounts) {
  PointModel m = PointModel::lattice(2, 2);
  m.set_declared_separation(Length::from_value(3));
  Window w = enumerate_window(m, Region::box(pt({-6, -6}), pt({6, 6})));
  auto audit = audit_geometry(m, w, {Length::from_value(2)});
  EXPECT_EQ(audit.separation, Length::from_value(2));
  ASSERT_EQ(audit.ball_count_table.size(), 1u);
  EXPECT_EQ(audit.ball_count_table[0].second, 5u);
  EXPECT_FALSE(audit.declared_bounds_ok);
}

TEST(SpaceModels, CriticalScalesAreSortedDistinctPairDistances) {
  PointModel m = PointModel::finite_cloud(1, {{"a", pt({0})}, {"b", pt({1})}, {"c", pt({3})}});
  Window w = enumerate_window(m, m.default_region());
  auto scales = critical_scales(m, w, Length::from_value(10));
  std::vector<Length> want = {Length::from_value(1), Length::from_value(2), Length::from_value(3)};
  EXPECT_EQ(scales, want);
  EXPECT_EQ(critical_scales(m, w, Length::from_value(Rational(3, 2))).size(), 1u);
}

TEST(SpaceModels, ModelErrors) {
  EXPECT_THROW(PointModel::finite_cloud(1, {{"a", pt({0})}, {"a", pt({1})}}), ModelError);
  EXPECT_THROW(PointModel::cluster_sequence(1, {{pt({0})}}, GapRule::exponential(Rational(1, 2))), ModelError);
  EXPECT_THROW(PointModel::wedge_of_rays(0), ModelError);
  EXPECT_THROW(PointModel::lattice_with_defects(1, 1, pt({0}), {}, {{"L:5", pt({0})}}), ModelError);
}

TEST(SpaceModels, BundledModelsLoad) {
  for (auto name : {"lattice1d", "lattice2d", "lattice3d", "lattice_spacing2", "lattice_defects_1d", "lattice_defects_ring2d",
                    "lattice_defects_added", "clusters_exp", "clusters_linear", "clusters_2d", "clusters_const", "wedge3",
                    "finite_cloud"}) {
    PointModel m = load_model(coarse::testing::source_path(std::string("models/") + name + ".json"));
    EXPECT_EQ(m.name(), name);
    EXPECT_FALSE(enumerate_window(m, m.default_region()).empty()) << name;
  }
}
