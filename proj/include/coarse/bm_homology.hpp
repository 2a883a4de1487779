#pragma once

// Borel-Moore H_0 of the all-ones chain c on D(alpha). For a locally finite
// graph, [c] restricted to a component vanishes iff the component is infinite
// (telescope along a ray), so the class is tracked through component
// certificates rather than chain groups.

#include <optional>
#include <string>
#include <vector>

#include "coarse/rips_multiscale.hpp"

namespace coarse {

struct BMScaleEntry {
  Length alpha;
  std::vector<ComponentCertificate> finite_components;
  bool class_nonzero = false;
  bool inconclusive = false;  // class not proven nonzero, and not proven zero either

  bool class_zero() const { return !class_nonzero && !inconclusive; }
};

enum class BMLimit { Vanishes, Persists, Inconclusive };

inline std::string_view to_string(BMLimit l) {
  switch (l) {
    case BMLimit::Vanishes: return "Vanishes";
    case BMLimit::Persists: return "Persists";
    case BMLimit::Inconclusive: return "Inconclusive";
  }
  return "?";
}

struct BMLimitVerdict {
  BMLimit verdict = BMLimit::Inconclusive;
  std::optional<Length> alpha_star;
  std::string reason;
};

struct BMReport {
  std::vector<BMScaleEntry> entries;
  BMLimitVerdict limit;
};

// `coverage` says whether the graph's window speaks for all of D(alpha); when it
// does not, a zero class on the window is only an Inconclusive entry.
inline BMScaleEntry bm_class_per_scale(const ScaleGraph& graph, const std::vector<ComponentCertificate>& certs,
                                       bool coverage = true) {
  std::vector<int> seen(graph.component_count, 0);
  for (auto& c : certs) {
    if (c.component >= graph.component_count) throw ContractError("certificate for a component not in the graph");
    ++seen[c.component];
  }
  for (std::size_t c = 0; c < seen.size(); ++c)
    if (seen[c] != 1) throw ContractError("component " + std::to_string(c) + " needs exactly one certificate");

  BMScaleEntry e;
  e.alpha = graph.alpha;
  bool unknown = false;
  for (auto& c : certs) {
    if (c.status == CertStatus::CertifiedFinite) e.finite_components.push_back(c);
    if (c.status == CertStatus::Unknown) unknown = true;
  }
  e.class_nonzero = !e.finite_components.empty();
  e.inconclusive = !e.class_nonzero && (unknown || !coverage);
  return e;
}

inline BMLimitVerdict bm_limit(const MergeTree& tree, const std::vector<BMScaleEntry>& entries) {
  if (entries.size() != tree.levels.size()) throw ContractError("entries must cover every merge-tree scale");
  for (std::size_t i = 0; i < entries.size(); ++i)
    if (entries[i].alpha != tree.levels[i].alpha) throw ContractError("entry scales do not match the merge tree");

  BMLimitVerdict v;
  // Transition maps send the zero class to zero, so the first zero scale decides.
  for (auto& e : entries) {
    if (e.class_zero()) {
      v.verdict = BMLimit::Vanishes;
      v.alpha_star = e.alpha;
      v.reason = "[c] = 0 at alpha = " + e.alpha.exact_string();
      return v;
    }
  }
  if (tree.persistent_finite) {
    v.verdict = BMLimit::Persists;
    v.reason = *tree.persistent_finite;
  } else {
    v.verdict = BMLimit::Inconclusive;
    v.reason = "no scale proves [c] = 0 and the model gives no proof that it persists";
  }
  return v;
}

inline BMReport bm_report(const PointModel& model, const Window& window, const std::vector<ScaleReport>& reports) {
  BMReport report;
  for (auto& r : reports) report.entries.push_back(bm_class_per_scale(r.graph, r.certs, r.coverage));
  report.limit = bm_limit(merge_tree_from(model, window, reports), report.entries);
  return report;
}

}  // namespace coarse
