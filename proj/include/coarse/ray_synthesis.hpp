#pragma once

// Ray structures: partitions of an augmented point set D' (the model plus
// co-located clones) into rays, each the bijective image of N under a map with
// uniformly bounded steps. Windows are finite, so a witness lists each ray's
// prefix inside the window and closes it with a continuation rule that the
// model certifies symbolically; the model's exterior rule partitions whatever
// lies outside the window.

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "coarse/graph.hpp"
#include "coarse/rips_multiscale.hpp"

namespace coarse {

// ---- forests ------------------------------------------------------------------------

struct ForestDecomposition {
  std::vector<std::vector<Edge>> forests;
  std::size_t count() const { return forests.size(); }
};

// Greedy arboricity cover: each edge goes to the first forest in which it closes
// no cycle. An edge is pushed past forest k only if both endpoints already meet
// in forest k, so a graph of maximum degree N never needs more than N forests.
inline ForestDecomposition spanning_forest(const Graph& graph) {
  ForestDecomposition out;
  std::vector<UnionFind> sets;
  for (auto [u, v] : graph.edges) {
    std::size_t k = 0;
    while (k < sets.size() && sets[k].connected(u, v)) ++k;
    if (k == sets.size()) {
      sets.emplace_back(graph.vertex_count);
      out.forests.emplace_back();
    }
    sets[k].unite(u, v);
    out.forests[k].emplace_back(u, v);
  }
  if (out.count() > std::max<std::size_t>(graph.max_degree(), out.count() ? 1 : 0))
    throw Error("forest_bound_violated", "forest count exceeds the maximum degree");
  return out;
}

inline ForestDecomposition spanning_forest(const ScaleGraph& graph) { return spanning_forest(graph.graph); }

// ---- rooted trees and walks -----------------------------------------------------------

struct RootedTree {
  std::size_t root = 0;
  std::vector<std::size_t> parent;  // SIZE_MAX for the root and for vertices outside the tree
  std::vector<std::vector<std::size_t>> children;
  std::vector<std::size_t> depth;
  std::vector<std::size_t> order;  // BFS order of the tree's vertices
};

// Roots the component of `root` in an acyclic graph; throws on a cycle.
inline RootedTree root_tree(const Graph& tree, std::size_t root) {
  if (root >= tree.vertex_count) throw ContractError("tree root out of range");
  RootedTree t;
  t.root = root;
  t.parent.assign(tree.vertex_count, SIZE_MAX);
  t.children.resize(tree.vertex_count);
  t.depth.assign(tree.vertex_count, 0);
  std::vector<bool> seen(tree.vertex_count, false);
  seen[root] = true;
  t.order.push_back(root);
  for (std::size_t head = 0; head < t.order.size(); ++head) {
    std::size_t u = t.order[head];
    for (std::size_t v : tree.adjacency[u]) {
      if (v == t.parent[u]) continue;
      if (seen[v]) throw ContractError("graph passed as a tree contains a cycle");
      seen[v] = true;
      t.parent[v] = u;
      t.depth[v] = t.depth[u] + 1;
      t.children[u].push_back(v);
      t.order.push_back(v);
    }
  }
  return t;
}

// BFS spanning tree of the component of `root`.
inline Graph bfs_spanning_tree(const Graph& graph, std::size_t root) {
  std::vector<Edge> edges;
  std::vector<bool> seen(graph.vertex_count, false);
  std::vector<std::size_t> queue{root};
  seen[root] = true;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    std::size_t u = queue[head];
    for (std::size_t v : graph.adjacency[u]) {
      if (seen[v]) continue;
      seen[v] = true;
      edges.emplace_back(u, v);
      queue.push_back(v);
    }
  }
  return Graph::from_edges(graph.vertex_count, std::move(edges));
}

struct CloneWalk {
  std::size_t root = 0;
  std::vector<std::size_t> walk;                     // z_0 .. z_m as vertex ids
  std::map<std::size_t, std::size_t> multiplicity;   // n_y
};

namespace detail {

// Closed depth-first walk from `root` using each tree edge once in each
// direction; `kids(u)` lists the children to descend into.
template <class Kids>
CloneWalk euler_walk(std::size_t root, Kids&& kids) {
  CloneWalk w;
  w.root = root;
  w.walk.push_back(root);
  std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
  while (!stack.empty()) {
    auto& [u, next] = stack.back();
    const std::vector<std::size_t>& c = kids(u);
    if (next < c.size()) {
      std::size_t v = c[next++];
      w.walk.push_back(v);
      stack.emplace_back(v, 0);
    } else {
      stack.pop_back();
      if (!stack.empty()) w.walk.push_back(stack.back().first);
    }
  }
  for (auto v : w.walk) ++w.multiplicity[v];
  return w;
}

}  // namespace detail

// Closed walk through a finite tree, starting and ending at `root`. A vertex
// with c children is visited c + 1 times, so degree <= N gives n_y <= N + 1 <= 2N.
inline CloneWalk make_clone_walk(const Graph& subtree, std::size_t root, std::size_t max_degree) {
  RootedTree t = root_tree(subtree, root);
  for (auto v : t.order)
    if (subtree.degree(v) > max_degree) throw ContractError("subtree degree exceeds the declared bound");
  return detail::euler_walk(root, [&](std::size_t u) -> const std::vector<std::size_t>& { return t.children[u]; });
}

// ---- witness types ----------------------------------------------------------------------

struct Continuation {
  enum class Rule { LatticeAxis, WedgeTail, ClusterTail };
  Rule rule = Rule::LatticeAxis;
  std::size_t axis = 0;           // LatticeAxis
  int sign = 1;                   // LatticeAxis
  std::int64_t next_cluster = 0;  // ClusterTail

  friend bool operator==(const Continuation&, const Continuation&) = default;
};

inline std::string_view to_string(Continuation::Rule r) {
  switch (r) {
    case Continuation::Rule::LatticeAxis: return "lattice_axis";
    case Continuation::Rule::WedgeTail: return "wedge_tail";
    case Continuation::Rule::ClusterTail: return "cluster_tail";
  }
  return "?";
}

struct Ray {
  std::size_t id = 0;
  std::vector<std::string> prefix;
  std::optional<Continuation> continuation;
};

inline constexpr std::string_view kCloneConvention =
    "clones are co-located with their originals; distances are measured through originals";

struct RayStructureWitness {
  Length lipschitz_C;
  std::optional<Region> window;
  std::vector<Ray> rays;
  std::map<std::string, std::string> clones;  // clone label -> original label
  std::string exterior_rule;

  const std::string& original_of(const std::string& label) const {
    auto it = clones.find(label);
    return it == clones.end() ? label : it->second;
  }

  // Issues the next clone label of `original` and records it.
  std::string add_clone(const std::string& original) {
    std::size_t k = 1;
    while (clones.count(original + "#" + std::to_string(k))) ++k;
    std::string label = original + "#" + std::to_string(k);
    clones[label] = original;
    return label;
  }

  std::size_t slot_count() const {
    std::size_t n = 0;
    for (auto& r : rays) n += r.prefix.size();
    return n;
  }
};

// Rays produced from one spanning tree; labels already carry clone suffixes.
struct TreeRays {
  bool finite = false;  // no branch reaches an exit: the tree must be attached to a carrier
  std::vector<Ray> rays;
  std::map<std::string, std::string> clones;
  std::vector<CloneWalk> walks;
};

using ExitOracle = std::function<std::optional<Continuation>(std::size_t vertex)>;

// Peels rays off a tree: an infinite branch from the root first, then from the
// roots of the remaining forest in order of distance from the original root.
// Finite hanging subtrees are folded into the carrying ray as closed clone walks
// (x_0, ..., x_{n-1}, z_0, ..., z_m, x_{n+1}, ...).
inline TreeRays tree_to_rays(const Graph& tree, std::size_t root, const std::vector<std::string>& labels,
                             const ExitOracle& exit_of) {
  RootedTree t = root_tree(tree, root);
  TreeRays out;

  std::vector<std::optional<Continuation>> exits(tree.vertex_count);
  std::vector<bool> has_exit(tree.vertex_count, false);
  for (auto it = t.order.rbegin(); it != t.order.rend(); ++it) {
    std::size_t v = *it;
    exits[v] = exit_of(v);
    has_exit[v] = exits[v].has_value();
    for (auto c : t.children[v]) has_exit[v] = has_exit[v] || has_exit[c];
  }
  if (!has_exit[root]) {
    out.finite = true;
    return out;
  }

  std::map<std::size_t, std::size_t> copies;
  auto emit = [&](std::size_t v) {
    std::size_t k = copies[v]++;
    if (k == 0) return labels[v];
    std::string label = labels[v] + "#" + std::to_string(k);
    out.clones[label] = labels[v];
    return label;
  };

  using Start = std::pair<std::size_t, std::size_t>;  // (depth, vertex)
  std::priority_queue<Start, std::vector<Start>, std::greater<>> starts;
  starts.emplace(0, root);
  while (!starts.empty()) {
    std::size_t u = starts.top().second;
    starts.pop();

    std::vector<std::size_t> path{u};
    while (!exits[path.back()]) {
      const auto& kids = t.children[path.back()];
      path.push_back(*std::find_if(kids.begin(), kids.end(), [&](std::size_t c) { return has_exit[c]; }));
    }

    Ray ray;
    ray.id = out.rays.size();
    for (std::size_t i = 0; i < path.size(); ++i) {
      std::size_t x = path[i];
      std::size_t next = i + 1 < path.size() ? path[i + 1] : SIZE_MAX;
      std::vector<std::size_t> hanging;
      for (auto c : t.children[x]) {
        if (c == next) continue;
        if (has_exit[c]) {
          starts.emplace(t.depth[c], c);
        } else {
          hanging.push_back(c);
        }
      }
      if (hanging.empty()) {
        ray.prefix.push_back(emit(x));
        continue;
      }
      CloneWalk walk = detail::euler_walk(x, [&](std::size_t v) -> const std::vector<std::size_t>& {
        return v == x ? hanging : t.children[v];
      });
      for (auto z : walk.walk) ray.prefix.push_back(emit(z));
      out.walks.push_back(std::move(walk));
    }
    ray.continuation = exits[path.back()];
    out.rays.push_back(std::move(ray));
  }
  return out;
}

// ---- model-certified continuations and exteriors ---------------------------------------------

struct ContinuationCheck {
  bool valid = false;
  std::string detail;
  Length jump;  // from the last listed point to the first continuation point
  Length step;  // supremum of steps inside the continuation
};

namespace detail {

inline std::optional<std::pair<Index, Index>> lattice_window_box(const PointModel& model, const Region& region) {
  if (region.is_ball() || !region.bounded()) return std::nullopt;
  auto [lo, hi] = region.bounds();
  return model.lattice_index_box(lo, hi);
}

// Template slots in the order a cluster tail visits them.
inline std::vector<std::size_t> tail_order(const std::vector<Point>& tmpl) {
  std::vector<std::size_t> order(tmpl.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return tmpl[a] < tmpl[b]; });
  return order;
}

// Last cluster lying entirely in the window, provided clusters 1..m are all
// complete and nothing past m is in the window.
inline std::optional<std::int64_t> last_complete_cluster(const PointModel& model, const Region& region, std::string* why) {
  if (!region.bounded()) {
    if (why) *why = "window is unbounded";
    return std::nullopt;
  }
  auto [lo, hi] = region.bounds();
  std::int64_t m = 0;
  for (std::int64_t n = 1; n <= PointModel::kMaxClusters; ++n) {
    auto sites = model.cluster_sites(n);
    std::size_t inside = std::count_if(sites.begin(), sites.end(), [&](const Site& s) { return region.contains(s.pos); });
    if (inside == sites.size()) {
      m = n;
      continue;
    }
    if (inside == 0 && model.cluster_start(n) > hi[0]) break;
    if (why) {
      if (inside > 0) *why = "window cuts cluster " + std::to_string(n);
      else *why = n == 1 ? "window does not contain the first cluster" : "window misses cluster " + std::to_string(n);
    }
    return std::nullopt;
  }
  if (m == 0) {
    if (why) *why = "window contains no complete cluster";
    return std::nullopt;
  }
  return m;
}

inline Length cluster_tail_step(const PointModel& model) {
  Length step;
  const auto& tmpls = model.templates();
  for (std::size_t t = 0; t < tmpls.size(); ++t) {
    auto order = tail_order(tmpls[t]);
    for (std::size_t i = 0; i + 1 < order.size(); ++i)
      step = std::max(step, Length::from_square(squared_euclidean(tmpls[t][order[i]], tmpls[t][order[i + 1]])));
  }
  // Consecutive clusters are periodic in the template index once gaps are bounded.
  for (std::int64_t n = 1; n <= static_cast<std::int64_t>(tmpls.size()); ++n) {
    auto a = model.cluster_sites(n), b = model.cluster_sites(n + 1);
    const auto& ta = tmpls[model.template_of(n)];
    const auto& tb = tmpls[model.template_of(n + 1)];
    step = std::max(step, model.distance(a[tail_order(ta).back()], b[tail_order(tb).front()]));
  }
  return step;
}

}  // namespace detail

inline ContinuationCheck check_continuation(const PointModel& model, const Region& region, const Site& last,
                                            const Continuation& cont) {
  ContinuationCheck c;
  auto fail = [&](std::string why) {
    c.valid = false;
    c.detail = std::move(why);
    return c;
  };
  switch (cont.rule) {
    case Continuation::Rule::LatticeAxis: {
      if (model.kind() != ModelKind::Lattice && model.kind() != ModelKind::LatticeWithDefects)
        return fail("lattice_axis continuation on a non-lattice model");
      auto box = detail::lattice_window_box(model, region);
      if (!box) return fail("lattice_axis continuation needs a bounded box window");
      if (!last.label.starts_with("L:") || last.key.size() != model.dim()) return fail("continuation must start at a lattice point");
      if (cont.axis >= model.dim() || (cont.sign != 1 && cont.sign != -1)) return fail("invalid lattice direction");
      std::int64_t face = cont.sign > 0 ? box->second[cont.axis] : box->first[cont.axis];
      if (last.key[cont.axis] != face) return fail(last.label + " is not on the window face the continuation leaves through");
      if (auto defects = model.defect_box(); defects && !region.contains_box(defects->first, defects->second))
        return fail("window does not contain the defect box, so the continuation may hit removed points");
      c.jump = c.step = Length::from_value(model.spacing());
      break;
    }
    case Continuation::Rule::WedgeTail: {
      if (model.kind() != ModelKind::WedgeOfRays) return fail("wedge_tail continuation on a non-wedge model");
      if (region.is_ball() || !region.bounded()) return fail("wedge_tail continuation needs a bounded box window");
      auto [lo, hi] = region.bounds();
      if (last.key.size() != 2 || last.key[1] != PointModel::floor_int(hi[0]))
        return fail(last.label + " is not at the window's maximal depth");
      c.jump = c.step = Length::from_value(1);
      break;
    }
    case Continuation::Rule::ClusterTail: {
      if (model.kind() != ModelKind::ClusterSequence) return fail("cluster_tail continuation on a non-cluster model");
      if (!model.gap_rule().bounded()) return fail("cluster_tail needs bounded gaps");
      std::string why;
      auto m = detail::last_complete_cluster(model, region, &why);
      if (!m) return fail(why);
      if (cont.next_cluster != *m + 1) return fail("cluster_tail must start right after the last window cluster");
      if (last.key.size() != 2 || last.key[0] != *m) return fail(last.label + " is not in the last window cluster");
      auto next = model.cluster_sites(*m + 1);
      c.jump = model.distance(last, next[detail::tail_order(model.templates()[model.template_of(*m + 1)]).front()]);
      c.step = detail::cluster_tail_step(model);
      break;
    }
  }
  c.valid = true;
  return c;
}

struct ExteriorCheck {
  bool valid = false;
  std::string rule;
  std::string detail;
  Length step;  // step of the exterior rays not claimed by any continuation
};

// Whether the model's exterior rule partitions everything outside the window
// into rays that continue the window's rays or stand alone.
inline ExteriorCheck check_exterior(const PointModel& model, const Region& region) {
  ExteriorCheck e;
  switch (model.kind()) {
    case ModelKind::Lattice:
    case ModelKind::LatticeWithDefects: {
      e.rule = "lattice_axis_lines";
      if (!detail::lattice_window_box(model, region)) {
        e.detail = "exterior rule needs a bounded box window";
        return e;
      }
      if (auto defects = model.defect_box(); defects && !region.contains_box(defects->first, defects->second)) {
        e.detail = "window must contain the defect box";
        return e;
      }
      // Exterior point p: first axis j with p_j outside the window range gives
      // the half-line {p + t e_j} leaving the window; these partition the exterior.
      e.step = Length::from_value(model.spacing());
      break;
    }
    case ModelKind::WedgeOfRays: {
      e.rule = "wedge_tails";
      if (region.is_ball() || !region.bounded() || region.bounds().first[0] > 0) {
        e.detail = "window must be a depth box starting at the basepoints";
        return e;
      }
      e.step = Length::from_value(1);
      break;
    }
    case ModelKind::ClusterSequence: {
      e.rule = "cluster_tail";
      if (!model.gap_rule().bounded()) {
        e.detail = "unbounded gaps admit no ray structure";
        return e;
      }
      std::string why;
      if (!detail::last_complete_cluster(model, region, &why)) {
        e.detail = why;
        return e;
      }
      e.step = detail::cluster_tail_step(model);
      break;
    }
    case ModelKind::FiniteCloud:
      e.rule = "none";
      e.detail = "a finite model has no ray structure";
      return e;
  }
  e.valid = true;
  return e;
}

// Model-supplied infinitude oracle over window vertices.
inline ExitOracle window_exit_oracle(const PointModel& model, const Window& window) {
  const Region& region = window.region;
  switch (model.kind()) {
    case ModelKind::Lattice:
    case ModelKind::LatticeWithDefects: {
      auto box = detail::lattice_window_box(model, region);
      if (!box) throw Refusal("ray synthesis on a lattice needs a bounded box window");
      return [&window, box = *box, dim = model.dim()](std::size_t v) -> std::optional<Continuation> {
        const Site& s = window.sites[v];
        if (!s.label.starts_with("L:")) return std::nullopt;
        for (std::size_t j = 0; j < dim; ++j) {
          if (s.key[j] == box.second[j]) return Continuation{Continuation::Rule::LatticeAxis, j, 1, 0};
          if (s.key[j] == box.first[j]) return Continuation{Continuation::Rule::LatticeAxis, j, -1, 0};
        }
        return std::nullopt;
      };
    }
    case ModelKind::WedgeOfRays: {
      if (region.is_ball() || !region.bounded()) throw Refusal("ray synthesis on a wedge needs a depth box window");
      std::int64_t depth = PointModel::floor_int(region.bounds().second[0]);
      return [&window, depth](std::size_t v) -> std::optional<Continuation> {
        if (window.sites[v].key[1] == depth) return Continuation{Continuation::Rule::WedgeTail, 0, 1, 0};
        return std::nullopt;
      };
    }
    case ModelKind::ClusterSequence: {
      std::string why;
      auto m = detail::last_complete_cluster(model, region, &why);
      if (!m) throw Refusal("ray synthesis on a cluster sequence: " + why);
      auto last = model.cluster_sites(*m);
      std::string exit_label = last[detail::tail_order(model.templates()[model.template_of(*m)]).back()].label;
      std::int64_t next = *m + 1;
      return [&window, exit_label, next](std::size_t v) -> std::optional<Continuation> {
        if (window.sites[v].label == exit_label) return Continuation{Continuation::Rule::ClusterTail, 0, 1, next};
        return std::nullopt;
      };
    }
    case ModelKind::FiniteCloud:
      break;
  }
  throw Refusal("a finite model admits no ray structure");
}

// ---- attaching finite pieces ----------------------------------------------------------------

// Splices a finite tree (vertices of `window`, spanning `tree`) into the nearest
// carrier ray: (..., x, f, ..., f, x', next, ...), with x' a clone of x.
inline void attach_finite(RayStructureWitness& witness, const PointModel& model, const Window& window,
                          const Graph& tree, const std::vector<std::size_t>& vertices,
                          std::optional<Length> max_jump = std::nullopt) {
  if (vertices.empty()) return;
  struct Best {
    Length d = Length::infinite();
    std::size_t ray = 0, pos = 0, f = 0;
  } best;
  bool any_carrier = false;
  for (std::size_t r = 0; r < witness.rays.size(); ++r) {
    const Ray& ray = witness.rays[r];
    if (!ray.continuation) continue;
    any_carrier = true;
    for (std::size_t p = 0; p < ray.prefix.size(); ++p) {
      const std::string& label = ray.prefix[p];
      if (witness.clones.count(label)) continue;
      Site x = model.resolve(label);
      for (auto f : vertices) {
        Length d = model.distance(x, window.sites[f]);
        if (d < best.d) best = {d, r, p, f};
      }
    }
  }
  if (!any_carrier) throw Refusal("no infinite carrier ray exists; the criterion fails and no ray structure exists");
  if (max_jump && best.d > *max_jump)
    throw Refusal("nearest carrier ray is " + best.d.exact_string() + " away, beyond the declared coarse range");

  CloneWalk walk = make_clone_walk(tree, best.f, std::max<std::size_t>(tree.max_degree(), 1));
  std::vector<std::string> splice;
  std::map<std::size_t, std::size_t> copies;
  for (auto z : walk.walk) {
    const std::string& label = window.sites[z].label;
    splice.push_back(copies[z]++ == 0 ? label : witness.add_clone(label));
  }
  Ray& ray = witness.rays[best.ray];
  splice.push_back(witness.add_clone(ray.prefix[best.pos]));
  ray.prefix.insert(ray.prefix.begin() + static_cast<std::ptrdiff_t>(best.pos) + 1, splice.begin(), splice.end());
  witness.lipschitz_C = std::max(witness.lipschitz_C, best.d);
}

// ---- validation ---------------------------------------------------------------------------

struct ValidationCheck {
  std::string name;
  bool passed = true;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](auto& c) { return c.passed; });
  }
  const ValidationCheck* find(std::string_view name) const {
    for (auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

// Largest step over listed prefixes, continuations and the exterior rule.
inline Length witness_step_bound(const RayStructureWitness& w, const PointModel& model) {
  Length c;
  std::map<std::string, Site> cache;
  auto site = [&](const std::string& label) -> const Site& {
    const std::string& o = w.original_of(label);
    auto it = cache.find(o);
    if (it == cache.end()) it = cache.emplace(o, model.resolve(o)).first;
    return it->second;
  };
  for (auto& ray : w.rays) {
    for (std::size_t k = 0; k + 1 < ray.prefix.size(); ++k)
      c = std::max(c, model.distance(site(ray.prefix[k]), site(ray.prefix[k + 1])));
    if (ray.continuation && w.window && !ray.prefix.empty()) {
      auto cc = check_continuation(model, *w.window, site(ray.prefix.back()), *ray.continuation);
      if (cc.valid) c = std::max({c, cc.jump, cc.step});
    }
  }
  if (w.window) {
    auto e = check_exterior(model, *w.window);
    if (e.valid) c = std::max(c, e.step);
  }
  return c;
}

inline ValidationReport validate_ray_structure(const RayStructureWitness& w, const PointModel& model) {
  ValidationReport report;
  auto add = [&](std::string name, bool ok, std::string detail) {
    report.checks.push_back({std::move(name), ok, std::move(detail)});
  };

  // Labels resolve (originals directly, clones through their original).
  std::map<std::string, Site> sites;
  std::string unresolved;
  for (auto& ray : w.rays)
    for (auto& label : ray.prefix) {
      const std::string& o = w.original_of(label);
      if (sites.count(o)) continue;
      try {
        sites.emplace(o, model.resolve(o));
      } catch (const ResolutionError&) {
        if (unresolved.empty()) unresolved = label;
      }
    }
  for (auto& [clone, original] : w.clones)
    if (!sites.count(original) && unresolved.empty()) {
      try {
        sites.emplace(original, model.resolve(original));
      } catch (const ResolutionError&) {
        unresolved = clone;
      }
    }
  add("labels_resolve", unresolved.empty(), unresolved.empty() ? "" : "unresolved label " + unresolved);
  if (!unresolved.empty()) return report;

  // Partition: every slot once across rays; originals of the window covered.
  std::map<std::string, std::size_t> seen;
  std::string duplicate;
  std::string injectivity;
  for (auto& ray : w.rays) {
    std::set<std::string> in_ray;
    for (auto& label : ray.prefix) {
      if (!in_ray.insert(label).second && injectivity.empty())
        injectivity = "ray " + std::to_string(ray.id) + " repeats " + label;
      if (seen[label]++ == 1 && duplicate.empty()) duplicate = label;
    }
  }
  std::string partition_detail = duplicate.empty() ? "" : "label " + duplicate + " appears in more than one slot";
  if (partition_detail.empty()) {
    for (auto& [label, n] : seen) {
      bool is_clone = w.clones.count(label) > 0;
      bool looks_clone = label.find('#') != std::string::npos && !sites.count(label);
      if (looks_clone && !is_clone) {
        partition_detail = "clone " + label + " is missing from the clone map";
        break;
      }
    }
  }
  if (partition_detail.empty()) {
    for (auto& [clone, original] : w.clones)
      if (!seen.count(clone)) {
        partition_detail = "clone " + clone + " is not on any ray";
        break;
      }
  }
  if (partition_detail.empty() && w.window) {
    for (auto& s : model.sites_in(*w.window))
      if (!seen.count(s.label)) {
        partition_detail = "window point " + s.label + " is on no ray";
        break;
      }
    if (partition_detail.empty())
      for (auto& [label, n] : seen)
        if (!w.clones.count(label) && !w.window->contains(sites.at(label).pos)) {
          partition_detail = "listed point " + label + " lies outside the window";
          break;
        }
  }
  add("partition", partition_detail.empty(), partition_detail);
  add("injectivity", injectivity.empty(), injectivity);

  // Uniform Lipschitz bound on listed steps.
  std::string lipschitz;
  for (auto& ray : w.rays) {
    for (std::size_t k = 0; k + 1 < ray.prefix.size() && lipschitz.empty(); ++k) {
      Length d = model.distance(sites.at(w.original_of(ray.prefix[k])), sites.at(w.original_of(ray.prefix[k + 1])));
      if (d > w.lipschitz_C)
        lipschitz = "ray " + std::to_string(ray.id) + " step " + std::to_string(k) + " has length " + d.exact_string() +
                    " > C = " + w.lipschitz_C.exact_string();
    }
  }
  add("lipschitz", lipschitz.empty(), lipschitz);

  std::string proximity;
  for (auto& [clone, original] : w.clones) {
    Length d = model.distance(sites.at(original), sites.at(original));
    if (d > w.lipschitz_C) proximity = "clone " + clone + " is farther than C from " + original;
  }
  add("clone_proximity", proximity.empty(), proximity);

  // Continuations: every ray infinite, each rule certified by the model.
  std::string cont;
  std::size_t cluster_tails = 0;
  for (auto& ray : w.rays) {
    if (!cont.empty()) break;
    if (ray.prefix.empty()) {
      cont = "ray " + std::to_string(ray.id) + " is empty";
    } else if (!ray.continuation) {
      cont = "ray " + std::to_string(ray.id) + " is finite (no continuation rule)";
    } else if (!w.window) {
      cont = "no window recorded; continuation rules cannot be certified";
    } else {
      if (ray.continuation->rule == Continuation::Rule::ClusterTail) ++cluster_tails;
      auto cc = check_continuation(model, *w.window, sites.at(w.original_of(ray.prefix.back())), *ray.continuation);
      if (!cc.valid) {
        cont = "ray " + std::to_string(ray.id) + ": " + cc.detail;
      } else if (cc.jump > w.lipschitz_C || cc.step > w.lipschitz_C) {
        cont = "ray " + std::to_string(ray.id) + ": continuation step exceeds C";
      }
    }
  }
  if (cont.empty() && cluster_tails > 1) cont = "more than one ray claims the cluster tail";
  add("continuation", cont.empty(), cont);

  std::string exterior;
  if (!w.window) {
    exterior = "no window recorded; the exterior cannot be certified";
  } else {
    auto e = check_exterior(model, *w.window);
    if (!e.valid) {
      exterior = e.detail;
    } else if (w.exterior_rule != e.rule) {
      exterior = "declared exterior rule '" + w.exterior_rule + "' is not the model's rule '" + e.rule + "'";
    } else if (e.step > w.lipschitz_C) {
      exterior = "exterior rays step " + e.step.exact_string() + " exceeds C";
    } else if (e.rule == "cluster_tail" && cluster_tails != 1) {
      exterior = "the cluster tail must be claimed by exactly one ray";
    }
  }
  add("exterior", exterior.empty(), exterior);
  return report;
}

// ---- full pipeline ---------------------------------------------------------------------------

struct SynthesisResult {
  RayStructureWitness witness;
  std::vector<CloneWalk> walks;
  std::size_t attached_components = 0;
};

inline SynthesisResult synthesize_ray_structure_detailed(const PointModel& model, const Window& window, const Length& alpha) {
  ScaleReport scale = analyze_scale(model, window, alpha);
  if (!scale.coverage || !scale.all_infinite()) {
    std::string why = model.persistent_finite_reason().value_or(
        "D(alpha) on this window is not certified free of finite components at alpha = " + alpha.exact_string());
    throw Refusal("criterion not satisfied, so no ray structure is synthesized: " + why);
  }

  SynthesisResult result;
  RayStructureWitness& w = result.witness;
  w.window = window.region;
  ExteriorCheck exterior = check_exterior(model, window.region);
  if (!exterior.valid) throw Refusal("exterior rule unavailable: " + exterior.detail);
  w.exterior_rule = exterior.rule;

  ExitOracle exits = window_exit_oracle(model, window);
  const Graph& g = scale.graph.graph;
  std::vector<std::pair<Graph, std::vector<std::size_t>>> finite_pieces;
  for (auto& members : scale.graph.members()) {
    std::size_t root = members.front();  // smallest label
    Graph tree = bfs_spanning_tree(g, root);
    TreeRays tr = tree_to_rays(tree, root, scale.graph.labels, exits);
    if (tr.finite) {
      finite_pieces.emplace_back(std::move(tree), members);
      continue;
    }
    for (auto& ray : tr.rays) {
      ray.id = w.rays.size();
      w.rays.push_back(std::move(ray));
    }
    w.clones.insert(tr.clones.begin(), tr.clones.end());
    for (auto& walk : tr.walks) result.walks.push_back(std::move(walk));
  }
  for (auto& [tree, members] : finite_pieces) {
    attach_finite(w, model, window, tree, members);
    ++result.attached_components;
  }
  w.lipschitz_C = std::max(w.lipschitz_C, witness_step_bound(w, model));
  return result;
}

inline RayStructureWitness synthesize_ray_structure(const PointModel& model, const Window& window, const Length& alpha) {
  return synthesize_ray_structure_detailed(model, window, alpha).witness;
}

}  // namespace coarse
