#pragma once

// Rips graphs D(alpha) over windows, per-component finiteness certificates,
// the merge tree across scales, and the finite-component criterion.

#include <type_traits>
#include <algorithm>
#include <future>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "coarse/graph.hpp"
#include "coarse/space_models.hpp"

namespace coarse {

struct ScaleGraph {
  Length alpha;
  std::vector<std::string> labels;  // window order
  Graph graph;
  std::vector<std::size_t> component;  // vertex -> component id
  std::size_t component_count = 0;
  std::size_t degree_max = 0;

  std::vector<std::vector<std::size_t>> members() const {
    std::vector<std::vector<std::size_t>> out(component_count);
    for (std::size_t v = 0; v < component.size(); ++v) out[component[v]].push_back(v);
    return out;
  }
};

// Closed threshold: an edge joins x != y exactly when d(x, y) <= alpha.
template <class WithinFn>
  requires std::is_invocable_r_v<bool, WithinFn&, const Site&, const Site&, const Length&>
ScaleGraph build_rips(const Window& window, const Length& alpha, WithinFn&& within) {
  if (alpha <= Length()) throw ContractError("Rips scale must be positive");
  const auto& s = window.sites;
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = i + 1; j < s.size(); ++j)
      if (within(s[i], s[j], alpha)) edges.emplace_back(i, j);

  ScaleGraph g;
  g.alpha = alpha;
  g.labels.reserve(s.size());
  for (auto& site : s) g.labels.push_back(site.label);
  g.graph = Graph::from_edges(s.size(), std::move(edges));
  g.component = g.graph.components();
  g.component_count = g.component.empty() ? 0 : *std::max_element(g.component.begin(), g.component.end()) + 1;
  g.degree_max = g.graph.max_degree();
  return g;
}

inline ScaleGraph build_rips(const Window& window, const Length& alpha, const PointModel& model) {
  return build_rips(window, alpha, [&](const Site& a, const Site& b, const Length& r) { return model.within(a, b, r); });
}

enum class CertStatus { CertifiedFinite, CertifiedInfinite, Unknown };

inline std::string_view to_string(CertStatus s) {
  switch (s) {
    case CertStatus::CertifiedFinite: return "CertifiedFinite";
    case CertStatus::CertifiedInfinite: return "CertifiedInfinite";
    case CertStatus::Unknown: return "Unknown";
  }
  return "?";
}

struct ComponentCertificate {
  std::size_t component = 0;
  CertStatus status = CertStatus::Unknown;
  std::vector<std::string> members;  // sorted labels
  Length margin;                     // CertifiedFinite: distance to the rest of the model (> alpha)
  std::string rule;                  // CertifiedInfinite: rule invoked; Unknown: reason
};

// Exact distance from `members` to the nearest model point outside it,
// searched on growing neighbourhoods. Infinite when the model has no other point.
inline Length isolation_margin(const PointModel& model, std::span<const Site> members, const Length& start) {
  std::unordered_set<std::string> inside;
  for (auto& s : members) inside.insert(s.label);
  Length radius = start.is_zero() ? Length::from_value(1) : start;
  auto extent = model.extent();
  for (int round = 0; round < 64; ++round) {
    Region region = model.neighborhood(members, radius);
    Length best = Length::infinite();
    for (auto& other : model.sites_in(region)) {
      if (inside.count(other.label)) continue;
      for (auto& m : members) best = std::min(best, model.distance(m, other));
    }
    if (best <= radius) return best;
    if (extent && region.contains_box(extent->first, extent->second)) return best;
    radius = radius.scaled(2);
  }
  throw Error("margin_search_exhausted", "could not bound the isolation margin");
}

// True when no model point outside `members` lies within alpha of it; the
// check runs against the full model, not the window.
inline bool isolated_at(const PointModel& model, std::span<const Site> members, const Length& alpha) {
  std::unordered_set<std::string> inside;
  for (auto& s : members) inside.insert(s.label);
  for (auto& other : model.sites_in(model.neighborhood(members, alpha))) {
    if (inside.count(other.label)) continue;
    for (auto& m : members)
      if (model.within(m, other, alpha)) return false;
  }
  return true;
}

inline bool outside_box(const Point& p, const std::pair<Point, Point>& box) {
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] < box.first[i] || p[i] > box.second[i]) return true;
  return false;
}

inline std::vector<ComponentCertificate> classify_components(const PointModel& model, const ScaleGraph& graph,
                                                             const Window& window) {
  if (graph.labels.size() != window.size()) throw ContractError("graph was not built from this window");
  GlobalRule rule = model.global_rule(graph.alpha);
  std::vector<ComponentCertificate> out;
  auto members = graph.members();
  for (std::size_t c = 0; c < members.size(); ++c) {
    ComponentCertificate cert;
    cert.component = c;
    std::vector<Site> sites;
    for (auto v : members[c]) {
      sites.push_back(window.sites[v]);
      cert.members.push_back(window.sites[v].label);
    }

    bool infinite = rule.all_infinite_outside &&
                    std::any_of(sites.begin(), sites.end(), [&](const Site& s) {
                      return !rule.exceptional || outside_box(s.pos, *rule.exceptional);
                    });
    if (infinite) {
      cert.status = CertStatus::CertifiedInfinite;
      cert.rule = rule.name;
    } else if (isolated_at(model, sites, graph.alpha)) {
      cert.status = CertStatus::CertifiedFinite;
      cert.margin = isolation_margin(model, sites, graph.alpha);
      cert.rule = "isolation_margin";
    } else {
      cert.status = CertStatus::Unknown;
      cert.rule = "component continues beyond the window and no infinitude rule applies";
    }
    out.push_back(std::move(cert));
  }
  return out;
}

// Whether window components speak for the whole of D(alpha): every model point
// outside the window is in an infinite component, and the window covers the
// model's exceptional box widened by alpha.
inline bool global_coverage(const PointModel& model, const Window& window, const Length& alpha) {
  GlobalRule rule = model.global_rule(alpha);
  if (!rule.all_infinite_outside) return false;
  if (!rule.exceptional) return true;
  Rational r = rational_root_upper(alpha);
  Point lo = rule.exceptional->first, hi = rule.exceptional->second;
  for (std::size_t i = 0; i < lo.size(); ++i) {
    lo[i] -= r;
    hi[i] += r;
  }
  return window.region.bounded() && window.region.contains_box(lo, hi);
}

struct ScaleReport {
  Length alpha;
  ScaleGraph graph;
  std::vector<ComponentCertificate> certs;
  bool coverage = false;
  std::string rule;

  bool all_infinite() const {
    return std::all_of(certs.begin(), certs.end(), [](auto& c) { return c.status == CertStatus::CertifiedInfinite; });
  }
  bool any_status(CertStatus s) const {
    return std::any_of(certs.begin(), certs.end(), [&](auto& c) { return c.status == s; });
  }
};

inline ScaleReport analyze_scale(const PointModel& model, const Window& window, const Length& alpha) {
  ScaleReport r;
  r.alpha = alpha;
  r.graph = build_rips(window, alpha, model);
  r.certs = classify_components(model, r.graph, window);
  r.coverage = global_coverage(model, window, alpha);
  r.rule = model.global_rule(alpha).name;
  return r;
}

// Per-scale analysis, optionally spread over threads; the result order follows
// `scales` regardless of scheduling.
inline std::vector<ScaleReport> analyze_scales(const PointModel& model, const Window& window,
                                               const std::vector<Length>& scales, unsigned threads = 1) {
  std::vector<ScaleReport> out(scales.size());
  if (threads <= 1 || scales.size() < 2) {
    for (std::size_t i = 0; i < scales.size(); ++i) out[i] = analyze_scale(model, window, scales[i]);
    return out;
  }
  for (std::size_t begin = 0; begin < scales.size(); begin += threads) {
    std::vector<std::future<ScaleReport>> batch;
    for (std::size_t i = begin; i < std::min(scales.size(), begin + threads); ++i)
      batch.push_back(std::async(std::launch::async, [&, i] { return analyze_scale(model, window, scales[i]); }));
    for (std::size_t i = 0; i < batch.size(); ++i) out[begin + i] = batch[i].get();
  }
  return out;
}

struct MergeLevel {
  Length alpha;
  std::vector<std::size_t> component_of;  // vertex -> component at this level
  std::vector<std::size_t> parent;        // component -> component at the next level
  std::vector<CertStatus> status;         // per component
  bool coverage = false;
};

struct MergeTree {
  std::vector<std::string> labels;
  std::vector<MergeLevel> levels;
  // Model-level proof that finite components exist at every scale.
  std::optional<std::string> persistent_finite;
  std::vector<std::string> violations;  // refinement or status-monotonicity breaches

  bool consistent() const { return violations.empty(); }
};

inline MergeTree merge_tree_from(const PointModel& model, const Window& window, const std::vector<ScaleReport>& reports) {
  MergeTree tree;
  for (auto& s : window.sites) tree.labels.push_back(s.label);
  tree.persistent_finite = model.persistent_finite_reason();
  for (auto& r : reports) {
    MergeLevel level;
    level.alpha = r.alpha;
    level.component_of = r.graph.component;
    level.status.resize(r.graph.component_count, CertStatus::Unknown);
    for (auto& c : r.certs) level.status[c.component] = c.status;
    level.coverage = r.coverage;
    tree.levels.push_back(std::move(level));
  }
  for (std::size_t k = 0; k < tree.levels.size(); ++k) {
    auto& level = tree.levels[k];
    std::size_t count = level.status.size();
    level.parent.assign(count, SIZE_MAX);
    for (std::size_t v = 0; v < level.component_of.size(); ++v) {
      std::size_t c = level.component_of[v];
      std::size_t p = k + 1 < tree.levels.size() ? tree.levels[k + 1].component_of[v] : c;
      if (level.parent[c] == SIZE_MAX) {
        level.parent[c] = p;
      } else if (level.parent[c] != p) {
        tree.violations.push_back("component " + std::to_string(c) + " at scale " + level.alpha.exact_string() +
                                  " splits at the next scale");
      }
    }
    if (k + 1 < tree.levels.size()) {
      for (std::size_t c = 0; c < count; ++c) {
        if (level.status[c] == CertStatus::CertifiedInfinite &&
            tree.levels[k + 1].status[level.parent[c]] == CertStatus::CertifiedFinite) {
          tree.violations.push_back("infinite component " + std::to_string(c) + " at scale " +
                                    level.alpha.exact_string() + " became finite");
        }
      }
    }
  }
  return tree;
}

inline MergeTree merge_tree(const PointModel& model, const Window& window, const std::vector<Length>& scales) {
  if (!std::is_sorted(scales.begin(), scales.end())) throw ContractError("merge tree scales must be ascending");
  return merge_tree_from(model, window, analyze_scales(model, window, scales));
}

enum class Outcome { Satisfied, Fails, Inconclusive };

inline std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Satisfied: return "Satisfied";
    case Outcome::Fails: return "Fails";
    case Outcome::Inconclusive: return "Inconclusive";
  }
  return "?";
}

struct CriterionVerdict {
  Outcome outcome = Outcome::Inconclusive;
  std::optional<Length> alpha_star;
  std::vector<Length> scales_examined;
  std::vector<ScaleReport> reports;  // one per examined scale
  std::vector<Length> unknown_scales;
  std::string reason;
};

inline CriterionVerdict verdict_from(const PointModel& model, std::vector<ScaleReport> reports) {
  CriterionVerdict v;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (reports[i].coverage && reports[i].all_infinite()) {
      v.outcome = Outcome::Satisfied;
      v.alpha_star = reports[i].alpha;
      v.reason = "every component of D(alpha*) is certified infinite (" + reports[i].rule + ")";
      reports.resize(i + 1);
      break;
    }
  }
  for (auto& r : reports) v.scales_examined.push_back(r.alpha);
  if (v.outcome != Outcome::Satisfied) {
    if (auto proof = model.persistent_finite_reason()) {
      v.outcome = Outcome::Fails;
      v.reason = *proof;
    } else {
      v.outcome = Outcome::Inconclusive;
      v.reason = "no examined scale certifies all components infinite and the model gives no proof of failure";
      for (auto& r : reports)
        if (r.any_status(CertStatus::Unknown) || !r.coverage) v.unknown_scales.push_back(r.alpha);
    }
  }
  v.reports = std::move(reports);
  return v;
}

inline CriterionVerdict decide_criterion(const PointModel& model, const Window& window, const Length& alpha_max,
                                         unsigned threads = 1) {
  auto scales = critical_scales(model, window, alpha_max);
  if (threads > 1) return verdict_from(model, analyze_scales(model, window, scales, threads));
  // Sequential scan stops at the first satisfying scale.
  std::vector<ScaleReport> reports;
  for (auto& s : scales) {
    reports.push_back(analyze_scale(model, window, s));
    if (reports.back().coverage && reports.back().all_infinite()) break;
  }
  return verdict_from(model, std::move(reports));
}

}  // namespace coarse
