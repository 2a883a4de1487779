#pragma once

// Uniformly discrete metric point models: finite clouds and symbolic infinite
// families (lattices, lattices with finitely many defects, separated cluster
// sequences, wedges of rays). Every query on an infinite model goes through a
// bounded Region, which the model resolves into an exact, complete Window.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "coarse/error.hpp"
#include "coarse/exact.hpp"

namespace coarse {

enum class ModelKind { FiniteCloud, Lattice, LatticeWithDefects, ClusterSequence, WedgeOfRays };

inline std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::FiniteCloud: return "FiniteCloud";
    case ModelKind::Lattice: return "Lattice";
    case ModelKind::LatticeWithDefects: return "LatticeWithDefects";
    case ModelKind::ClusterSequence: return "ClusterSequence";
    case ModelKind::WedgeOfRays: return "WedgeOfRays";
  }
  return "?";
}

inline ModelKind parse_model_kind(std::string_view s) {
  for (auto k : {ModelKind::FiniteCloud, ModelKind::Lattice, ModelKind::LatticeWithDefects,
                 ModelKind::ClusterSequence, ModelKind::WedgeOfRays}) {
    if (to_string(k) == s) return k;
  }
  throw ModelError("unknown model kind: " + std::string(s));
}

using Point = std::vector<Rational>;
using Index = std::vector<std::int64_t>;

inline Rational squared_euclidean(const Point& a, const Point& b) {
  Rational sum = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    Rational d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

inline std::vector<double> approximate(const Point& p) {
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = to_double(p[i]);
  return out;
}

// A resolved model point. `pos` is the chart position: Euclidean coordinates
// for every kind except WedgeOfRays, whose chart coordinate is the depth k.
// `key` carries the kind-specific integer identity (lattice index, (cluster,
// slot), (ray, depth), cloud index).
struct Site {
  std::string label;
  Point pos;
  std::vector<double> approx;
  Index key;

  friend bool operator==(const Site& a, const Site& b) { return a.label == b.label; }
};

inline bool by_label(const Site& a, const Site& b) { return a.label < b.label; }

// Axis-aligned box (possibly with missing bounds, which makes it unbounded)
// or a closed Euclidean ball in chart coordinates.
class Region {
 public:
  using Bound = std::optional<Rational>;

  static Region box(std::vector<Bound> lo, std::vector<Bound> hi) {
    if (lo.size() != hi.size() || lo.empty()) throw ContractError("box bounds must have equal nonzero dimension");
    Region r;
    r.lo_ = std::move(lo);
    r.hi_ = std::move(hi);
    return r;
  }

  static Region box(const Point& lo, const Point& hi) {
    return box(std::vector<Bound>(lo.begin(), lo.end()), std::vector<Bound>(hi.begin(), hi.end()));
  }

  static Region ball(Point center, Rational radius) {
    if (center.empty()) throw ContractError("ball center must have nonzero dimension");
    if (radius < 0) throw ContractError("ball radius must be nonnegative");
    Region r;
    r.is_ball_ = true;
    r.center_ = std::move(center);
    r.radius_ = std::move(radius);
    return r;
  }

  bool is_ball() const { return is_ball_; }
  std::size_t dim() const { return is_ball_ ? center_.size() : lo_.size(); }
  const Point& center() const { return center_; }
  const Rational& radius() const { return radius_; }
  const std::vector<Bound>& lo_bounds() const { return lo_; }
  const std::vector<Bound>& hi_bounds() const { return hi_; }

  bool bounded() const {
    if (is_ball_) return true;
    return std::all_of(lo_.begin(), lo_.end(), [](const Bound& b) { return b.has_value(); }) &&
           std::all_of(hi_.begin(), hi_.end(), [](const Bound& b) { return b.has_value(); });
  }

  // Bounding box of a bounded region.
  std::pair<Point, Point> bounds() const {
    if (!bounded()) throw Error("unbounded_region", "region is unbounded");
    Point lo(dim()), hi(dim());
    for (std::size_t i = 0; i < dim(); ++i) {
      lo[i] = is_ball_ ? center_[i] - radius_ : *lo_[i];
      hi[i] = is_ball_ ? center_[i] + radius_ : *hi_[i];
    }
    return {lo, hi};
  }

  bool contains(const Point& p) const {
    if (p.size() != dim()) return false;
    if (is_ball_) return squared_euclidean(p, center_) <= radius_ * radius_;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (lo_[i] && p[i] < *lo_[i]) return false;
      if (hi_[i] && p[i] > *hi_[i]) return false;
    }
    return true;
  }

  bool contains_box(const Point& lo, const Point& hi) const {
    if (!is_ball_) {
      for (std::size_t i = 0; i < dim(); ++i) {
        if (lo_[i] && lo[i] < *lo_[i]) return false;
        if (hi_[i] && hi[i] > *hi_[i]) return false;
      }
      return true;
    }
    // A ball contains a box iff it contains the farthest corner.
    Rational far = 0;
    for (std::size_t i = 0; i < dim(); ++i) {
      Rational a = lo[i] - center_[i], b = hi[i] - center_[i];
      Rational m = std::max(a * a, b * b);
      far += m;
    }
    return far <= radius_ * radius_;
  }

 private:
  bool is_ball_ = false;
  std::vector<Bound> lo_, hi_;
  Point center_;
  Rational radius_ = 0;
};

struct Window {
  Region region;
  std::vector<Site> sites;  // sorted by label, duplicate-free

  std::size_t size() const { return sites.size(); }
  bool empty() const { return sites.empty(); }

  std::optional<std::size_t> find(std::string_view label) const {
    auto it = std::lower_bound(sites.begin(), sites.end(), label,
                               [](const Site& s, std::string_view l) { return s.label < l; });
    if (it == sites.end() || it->label != label) return std::nullopt;
    return static_cast<std::size_t>(it - sites.begin());
  }
};

// Monotone nondecreasing separation rule between consecutive clusters.
struct GapRule {
  enum class Type { Constant, Linear, Exponential };
  Type type = Type::Linear;
  Rational a = 1;  // Constant: value; Linear: slope; Exponential: base
  Rational b = 1;  // Linear: intercept

  static GapRule constant(Rational v) { return {Type::Constant, std::move(v), 0}; }
  static GapRule linear(Rational slope, Rational intercept) { return {Type::Linear, std::move(slope), std::move(intercept)}; }
  static GapRule exponential(Rational base) { return {Type::Exponential, std::move(base), 0}; }

  Rational operator()(std::int64_t n) const {
    switch (type) {
      case Type::Constant: return a;
      case Type::Linear: return a * n + b;
      case Type::Exponential: {
        Rational r = 1;
        for (std::int64_t i = 0; i < n; ++i) r *= a;
        return r;
      }
    }
    return a;
  }

  bool bounded() const {
    return type == Type::Constant || (type == Type::Linear && a == 0) || (type == Type::Exponential && a == 1);
  }

  void validate() const {
    bool ok = true;
    if (type == Type::Constant) ok = a > 0;
    if (type == Type::Linear) ok = a >= 0 && a + b > 0;
    if (type == Type::Exponential) ok = a >= 1;
    if (!ok) throw ModelError("gap rule must be positive and nondecreasing");
  }
};

// Scale-dependent global knowledge a model has about D(alpha).
struct GlobalRule {
  // Every model point outside `exceptional` lies in an infinite component of D(alpha).
  bool all_infinite_outside = false;
  // Bounded box (chart coordinates) a window must cover, widened by alpha, for
  // window components to speak for the whole model.
  std::optional<std::pair<Point, Point>> exceptional;
  std::string name;
};

class PointModel {
 public:
  // ---- construction -------------------------------------------------------

  static PointModel finite_cloud(std::size_t dim, std::vector<std::pair<std::string, Point>> points) {
    PointModel m(ModelKind::FiniteCloud, dim);
    std::set<std::string> seen;
    for (std::size_t i = 0; i < points.size(); ++i) {
      auto& [label, pos] = points[i];
      if (pos.size() != dim) throw ModelError("point '" + label + "' has wrong dimension");
      if (!seen.insert(label).second) throw ModelError("duplicate label '" + label + "'");
      m.cloud_.push_back(Site{label, pos, approximate(pos), {static_cast<std::int64_t>(i)}});
    }
    std::sort(m.cloud_.begin(), m.cloud_.end(), by_label);
    return m;
  }

  static PointModel lattice(std::size_t dim, Rational spacing, Point offset = {}) {
    PointModel m(ModelKind::Lattice, dim);
    m.set_lattice(std::move(spacing), std::move(offset));
    return m;
  }

  static PointModel lattice_with_defects(std::size_t dim, Rational spacing, Point offset,
                                         std::vector<Index> removed,
                                         std::vector<std::pair<std::string, Point>> added) {
    PointModel m(ModelKind::LatticeWithDefects, dim);
    m.set_lattice(std::move(spacing), std::move(offset));
    for (auto& idx : removed) {
      if (idx.size() != dim) throw ModelError("removed index has wrong dimension");
      m.removed_.insert(idx);
    }
    std::set<std::string> seen;
    for (auto& [label, pos] : added) {
      if (pos.size() != dim) throw ModelError("added point '" + label + "' has wrong dimension");
      if (label.starts_with("L:")) throw ModelError("added labels may not use the lattice prefix 'L:'");
      if (!seen.insert(label).second) throw ModelError("duplicate label '" + label + "'");
      m.added_.push_back(Site{label, pos, approximate(pos), {}});
    }
    std::sort(m.added_.begin(), m.added_.end(), by_label);
    return m;
  }

  static PointModel cluster_sequence(std::size_t dim, std::vector<std::vector<Point>> templates, GapRule gap,
                                     Point offset = {}) {
    PointModel m(ModelKind::ClusterSequence, dim);
    if (templates.empty()) throw ModelError("cluster sequence needs at least one template");
    gap.validate();
    m.gap_ = gap;
    m.offset_ = offset.empty() ? Point(dim, Rational(0)) : std::move(offset);
    if (m.offset_.size() != dim) throw ModelError("offset has wrong dimension");
    for (auto& t : templates) {
      if (t.empty()) throw ModelError("cluster template must be nonempty");
      Rational min0 = t.front().at(0), max0 = t.front().at(0);
      for (auto& p : t) {
        if (p.size() != dim) throw ModelError("template point has wrong dimension");
        min0 = std::min(min0, p[0]);
        max0 = std::max(max0, p[0]);
      }
      for (auto& p : t) p[0] -= min0;
      for (std::size_t i = 0; i < t.size(); ++i)
        for (std::size_t j = i + 1; j < t.size(); ++j)
          if (t[i] == t[j]) throw ModelError("cluster template has coincident points");
      m.widths_.push_back(max0 - min0);
      m.templates_.push_back(std::move(t));
    }
    return m;
  }

  static PointModel wedge_of_rays(std::int64_t rays) {
    if (rays < 1) throw ModelError("wedge needs at least one ray");
    PointModel m(ModelKind::WedgeOfRays, 1);
    m.rays_ = rays;
    return m;
  }

  // ---- declared data -------------------------------------------------------

  ModelKind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  const std::string& name() const { return name_; }
  void set_name(std::string n) { name_ = std::move(n); }

  const std::optional<Length>& declared_separation() const { return declared_separation_; }
  void set_declared_separation(Length l) { declared_separation_ = std::move(l); }
  const std::vector<std::pair<Length, std::size_t>>& declared_ball_bounds() const { return declared_ball_bounds_; }
  void set_declared_ball_bounds(std::vector<std::pair<Length, std::size_t>> b) {
    std::sort(b.begin(), b.end(), [](auto& x, auto& y) { return x.first < y.first; });
    declared_ball_bounds_ = std::move(b);
  }
  void set_default_region(Region r) { default_region_ = std::move(r); }

  // ---- kind data ------------------------------------------------------------

  const std::vector<Site>& cloud() const { return cloud_; }
  const Rational& spacing() const { return spacing_; }
  const Point& offset() const { return offset_; }
  const std::set<Index>& removed() const { return removed_; }
  const std::vector<Site>& added() const { return added_; }
  const std::vector<std::vector<Point>>& templates() const { return templates_; }
  const GapRule& gap_rule() const { return gap_; }
  std::int64_t ray_count() const { return rays_; }

  bool is_euclidean() const { return kind_ != ModelKind::WedgeOfRays; }
  bool is_finite() const { return kind_ == ModelKind::FiniteCloud; }

  // ---- lattice helpers --------------------------------------------------------

  static std::string lattice_label(const Index& idx) {
    std::string s = "L:";
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (i) s += ',';
      s += std::to_string(idx[i]);
    }
    return s;
  }

  Site lattice_site(const Index& idx) const {
    Point p(dim_);
    for (std::size_t i = 0; i < dim_; ++i) p[i] = offset_[i] + spacing_ * idx[i];
    return Site{lattice_label(idx), p, approximate(p), idx};
  }

  bool lattice_point_present(const Index& idx) const {
    return kind_ == ModelKind::Lattice || (kind_ == ModelKind::LatticeWithDefects && !removed_.count(idx));
  }

  // Index box of lattice points whose positions lie in [lo, hi].
  std::pair<Index, Index> lattice_index_box(const Point& lo, const Point& hi) const {
    Index a(dim_), b(dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
      a[i] = ceil_int((lo[i] - offset_[i]) / spacing_);
      b[i] = floor_int((hi[i] - offset_[i]) / spacing_);
    }
    return {a, b};
  }

  // ---- cluster helpers ----------------------------------------------------------

  std::size_t template_of(std::int64_t n) const { return static_cast<std::size_t>((n - 1) % static_cast<std::int64_t>(templates_.size())); }

  // Axis-0 start of cluster n (1-based); gap(n) separates cluster n-1 from n.
  Rational cluster_start(std::int64_t n) const {
    Rational x = offset_[0];
    for (std::int64_t k = 1; k < n; ++k) x += widths_[template_of(k)] + gap_(k + 1);
    return x;
  }

  Site cluster_site(std::int64_t n, std::size_t slot, const Rational& start) const {
    const Point& t = templates_[template_of(n)][slot];
    Point p(dim_);
    p[0] = start + t[0];
    for (std::size_t i = 1; i < dim_; ++i) p[i] = offset_[i] + t[i];
    return Site{"C:" + std::to_string(n) + ":" + std::to_string(slot), p, approximate(p), {n, static_cast<std::int64_t>(slot)}};
  }

  std::vector<Site> cluster_sites(std::int64_t n) const {
    Rational start = cluster_start(n);
    std::vector<Site> out;
    for (std::size_t j = 0; j < templates_[template_of(n)].size(); ++j) out.push_back(cluster_site(n, j, start));
    return out;
  }

  // Scale from which consecutive clusters and each template are connected;
  // only meaningful for bounded gap rules.
  Length cluster_connect_scale() const {
    Length scale;
    for (std::size_t t = 0; t < templates_.size(); ++t) {
      scale = std::max(scale, mst_bottleneck(templates_[t]));
      // Consecutive pair (template t, template t+1) placed with the bounded gap.
      std::size_t u = (t + 1) % templates_.size();
      Rational shift = widths_[t] + gap_(2);
      Rational best = -1;
      for (auto& p : templates_[t])
        for (auto& q : templates_[u]) {
          Point qq = q;
          qq[0] += shift;
          Rational d = squared_euclidean(p, qq);
          if (best < 0 || d < best) best = d;
        }
      scale = std::max(scale, Length::from_square(best));
    }
    return scale;
  }

  // ---- wedge helpers ---------------------------------------------------------------

  Site wedge_site(std::int64_t ray, std::int64_t depth) const {
    Point p{Rational(depth)};
    return Site{"W:" + std::to_string(ray) + ":" + std::to_string(depth), p, approximate(p), {ray, depth}};
  }

  // ---- metric --------------------------------------------------------------------

  Site resolve(std::string_view label) const {
    auto fail = [&] { return ResolutionError(std::string(label)); };
    switch (kind_) {
      case ModelKind::FiniteCloud: {
        auto it = std::lower_bound(cloud_.begin(), cloud_.end(), label,
                                   [](const Site& s, std::string_view l) { return s.label < l; });
        if (it == cloud_.end() || it->label != label) throw fail();
        return *it;
      }
      case ModelKind::Lattice:
      case ModelKind::LatticeWithDefects: {
        if (!label.starts_with("L:")) {
          for (auto& s : added_)
            if (s.label == label) return s;
          throw fail();
        }
        auto parts = split_ints(label.substr(2), ',');
        if (!parts || parts->size() != dim_ || !lattice_point_present(*parts)) throw fail();
        return lattice_site(*parts);
      }
      case ModelKind::ClusterSequence: {
        if (!label.starts_with("C:")) throw fail();
        auto parts = split_ints(label.substr(2), ':');
        if (!parts || parts->size() != 2) throw fail();
        auto [n, j] = std::pair{(*parts)[0], (*parts)[1]};
        if (n < 1 || j < 0 || static_cast<std::size_t>(j) >= templates_[template_of(n)].size()) throw fail();
        return cluster_site(n, static_cast<std::size_t>(j), cluster_start(n));
      }
      case ModelKind::WedgeOfRays: {
        if (!label.starts_with("W:")) throw fail();
        auto parts = split_ints(label.substr(2), ':');
        if (!parts || parts->size() != 2) throw fail();
        auto [i, k] = std::pair{(*parts)[0], (*parts)[1]};
        if (i < 0 || i >= rays_ || k < 0) throw fail();
        return wedge_site(i, k);
      }
    }
    throw fail();
  }

  Length distance(const Site& a, const Site& b) const {
    if (kind_ == ModelKind::WedgeOfRays) return Length::from_value(Rational(wedge_distance(a, b)));
    return Length::from_square(squared_euclidean(a.pos, b.pos));
  }

  // d(a, b) <= alpha, decided exactly. Euclidean kinds first try a
  // floating-point filter with a conservative error bound.
  bool within(const Site& a, const Site& b, const Length& alpha) const {
    if (alpha.is_infinite()) return true;
    if (kind_ == ModelKind::WedgeOfRays) {
      Rational d = wedge_distance(a, b);
      return d * d <= alpha.square();
    }
    double dsq = 0, mag = 0;
    for (std::size_t i = 0; i < a.approx.size(); ++i) {
      double dx = a.approx[i] - b.approx[i];
      dsq += dx * dx;
      double m = std::abs(a.approx[i]) + std::abs(b.approx[i]);
      mag += m * m;
    }
    double asq = alpha.approx_square();
    double err = 1e-12 * (1.0 + mag + asq);
    if (dsq < asq - err) return true;
    if (dsq > asq + err) return false;
    return squared_euclidean(a.pos, b.pos) <= alpha.square();
  }

  // ---- enumeration -------------------------------------------------------------------

  // All model points inside a bounded region, sorted by label.
  std::vector<Site> sites_in(const Region& region) const {
    if (!region.bounded()) throw Error("unbounded_region", "window region must be bounded");
    if (region.dim() != dim_) throw ContractError("region dimension does not match the model");
    auto [lo, hi] = region.bounds();
    std::vector<Site> out;
    auto keep = [&](Site s) {
      if (region.contains(s.pos)) out.push_back(std::move(s));
    };

    switch (kind_) {
      case ModelKind::FiniteCloud:
        for (auto& s : cloud_) keep(s);
        break;
      case ModelKind::Lattice:
      case ModelKind::LatticeWithDefects: {
        auto [a, b] = lattice_index_box(lo, hi);
        for_each_index(a, b, [&](const Index& idx) {
          if (lattice_point_present(idx)) keep(lattice_site(idx));
        });
        for (auto& s : added_) keep(s);
        break;
      }
      case ModelKind::ClusterSequence: {
        Rational start = offset_[0];
        for (std::int64_t n = 1;; ++n) {
          if (start > hi[0]) break;
          if (n > kMaxClusters) throw Error("window_too_large", "window spans too many clusters");
          if (start + widths_[template_of(n)] >= lo[0]) {
            for (std::size_t j = 0; j < templates_[template_of(n)].size(); ++j) keep(cluster_site(n, j, start));
          }
          start += widths_[template_of(n)] + gap_(n + 1);
        }
        break;
      }
      case ModelKind::WedgeOfRays: {
        std::int64_t k0 = std::max<std::int64_t>(0, ceil_int(lo[0]));
        std::int64_t k1 = floor_int(hi[0]);
        if (k1 >= k0 && (k1 - k0 + 1) * rays_ > kMaxWindow) throw Error("window_too_large", "window has too many points");
        for (std::int64_t i = 0; i < rays_; ++i)
          for (std::int64_t k = k0; k <= k1; ++k) keep(wedge_site(i, k));
        break;
      }
    }
    std::sort(out.begin(), out.end(), by_label);
    return out;
  }

  // Box guaranteed to contain every model point within `radius` of `sites`.
  Region neighborhood(std::span<const Site> sites, const Length& radius) const {
    if (sites.empty()) throw ContractError("neighborhood of an empty set");
    Rational r = rational_root_upper(radius);
    Point lo = sites.front().pos, hi = sites.front().pos;
    for (auto& s : sites)
      for (std::size_t i = 0; i < dim_; ++i) {
        lo[i] = std::min(lo[i], s.pos[i]);
        hi[i] = std::max(hi[i], s.pos[i]);
      }
    for (std::size_t i = 0; i < dim_; ++i) {
      lo[i] -= r;
      hi[i] += r;
    }
    if (kind_ == ModelKind::WedgeOfRays) {
      // Cross-ray neighbours sit at depth <= radius - 1 on every other ray.
      lo[0] = std::min(lo[0], Rational(0));
      hi[0] = std::max(hi[0], r);
    }
    return Region::box(lo, hi);
  }

  // Bounding box of the whole model, for finite models.
  std::optional<std::pair<Point, Point>> extent() const {
    if (kind_ != ModelKind::FiniteCloud || cloud_.empty()) return std::nullopt;
    Point lo = cloud_.front().pos, hi = lo;
    for (auto& s : cloud_)
      for (std::size_t i = 0; i < dim_; ++i) {
        lo[i] = std::min(lo[i], s.pos[i]);
        hi[i] = std::max(hi[i], s.pos[i]);
      }
    return std::pair{lo, hi};
  }

  // ---- oracles --------------------------------------------------------------------------

  GlobalRule global_rule(const Length& alpha) const {
    GlobalRule rule;
    switch (kind_) {
      case ModelKind::FiniteCloud:
        rule.name = "finite_model";
        break;
      case ModelKind::Lattice:
        rule.all_infinite_outside = alpha >= Length::from_value(spacing_);
        rule.name = "lattice_connected_at_spacing";
        break;
      case ModelKind::LatticeWithDefects: {
        rule.all_infinite_outside = alpha >= Length::from_value(spacing_);
        rule.exceptional = defect_box();
        rule.name = "lattice_outside_defect_box_connected";
        break;
      }
      case ModelKind::ClusterSequence:
        rule.all_infinite_outside = gap_.bounded() && alpha >= cluster_connect_scale();
        rule.name = gap_.bounded() ? "bounded_gaps_chain_connected" : "unbounded_gaps";
        break;
      case ModelKind::WedgeOfRays:
        rule.all_infinite_outside = alpha >= Length::from_value(1);
        rule.name = "wedge_rays_unit_steps";
        break;
    }
    return rule;
  }

  // Model-level proof that D(alpha) has a finite component for every alpha.
  std::optional<std::string> persistent_finite_reason() const {
    if (kind_ == ModelKind::FiniteCloud && !cloud_.empty()) return "finite model: every component is finite at every scale";
    if (kind_ == ModelKind::ClusterSequence && !gap_.bounded())
      return "unbounded gap rule: for every alpha almost every cluster is isolated by a gap exceeding alpha";
    return std::nullopt;
  }

  // Scales at which the model's global structure changes, up to alpha_max.
  std::vector<Length> structural_scales(const Length& alpha_max) const {
    std::vector<Length> out;
    auto add = [&](const Length& l) {
      if (!l.is_zero() && l <= alpha_max) out.push_back(l);
    };
    switch (kind_) {
      case ModelKind::Lattice:
      case ModelKind::LatticeWithDefects:
        add(Length::from_value(spacing_));
        break;
      case ModelKind::ClusterSequence:
        if (gap_.bounded()) {
          add(Length::from_value(gap_(1)));
          add(cluster_connect_scale());
        } else {
          for (std::int64_t n = 1; n <= kMaxClusters; ++n) {
            Length g = Length::from_value(gap_(n));
            if (g > alpha_max) break;
            add(g);
          }
        }
        break;
      case ModelKind::WedgeOfRays:
        add(Length::from_value(1));
        break;
      case ModelKind::FiniteCloud:
        break;
    }
    return out;
  }

  Region default_region() const {
    if (default_region_) return *default_region_;
    switch (kind_) {
      case ModelKind::FiniteCloud: {
        auto e = extent();
        if (!e) return Region::box(Point(dim_, Rational(0)), Point(dim_, Rational(0)));
        return Region::box(e->first, e->second);
      }
      case ModelKind::Lattice:
      case ModelKind::LatticeWithDefects: {
        Point lo(dim_), hi(dim_);
        for (std::size_t i = 0; i < dim_; ++i) {
          lo[i] = offset_[i] - spacing_ * 5;
          hi[i] = offset_[i] + spacing_ * 5;
        }
        if (auto box = defect_box()) {
          for (std::size_t i = 0; i < dim_; ++i) {
            lo[i] = std::min(lo[i], box->first[i] - spacing_ * 2);
            hi[i] = std::max(hi[i], box->second[i] + spacing_ * 2);
          }
        }
        return Region::box(lo, hi);
      }
      case ModelKind::ClusterSequence: {
        Point lo(dim_), hi(dim_);
        lo[0] = offset_[0];
        hi[0] = cluster_start(6) + widths_[template_of(6)];
        for (std::size_t i = 1; i < dim_; ++i) {
          lo[i] = hi[i] = offset_[i];
          for (auto& t : templates_)
            for (auto& p : t) {
              lo[i] = std::min(lo[i], offset_[i] + p[i]);
              hi[i] = std::max(hi[i], offset_[i] + p[i]);
            }
        }
        return Region::box(lo, hi);
      }
      case ModelKind::WedgeOfRays:
        return Region::box(Point{Rational(0)}, Point{Rational(10)});
    }
    throw ContractError("unreachable");
  }

  // Chart box around removed and added points, widened by one spacing.
  std::optional<std::pair<Point, Point>> defect_box() const {
    if (kind_ != ModelKind::LatticeWithDefects || (removed_.empty() && added_.empty())) return std::nullopt;
    std::optional<Point> lo, hi;
    auto grow = [&](const Point& p) {
      if (!lo) {
        lo = hi = p;
        return;
      }
      for (std::size_t i = 0; i < dim_; ++i) {
        (*lo)[i] = std::min((*lo)[i], p[i]);
        (*hi)[i] = std::max((*hi)[i], p[i]);
      }
    };
    for (auto& idx : removed_) grow(lattice_site(idx).pos);
    for (auto& s : added_) grow(s.pos);
    for (std::size_t i = 0; i < dim_; ++i) {
      (*lo)[i] -= spacing_;
      (*hi)[i] += spacing_;
    }
    return std::pair{*lo, *hi};
  }

  static constexpr std::int64_t kMaxWindow = 4'000'000;
  static constexpr std::int64_t kMaxClusters = 1'000'000;

  static std::int64_t floor_int(const Rational& r) {
    BigInt q = numerator(r) / denominator(r);
    if (r < 0 && q * denominator(r) != numerator(r)) q -= 1;
    return q.convert_to<std::int64_t>();
  }
  static std::int64_t ceil_int(const Rational& r) { return -floor_int(-r); }

 private:
  PointModel(ModelKind k, std::size_t dim) : kind_(k), dim_(dim) {
    if (dim == 0) throw ModelError("dimension must be positive");
  }

  void set_lattice(Rational spacing, Point offset) {
    if (spacing <= 0) throw ModelError("lattice spacing must be positive");
    spacing_ = std::move(spacing);
    offset_ = offset.empty() ? Point(dim_, Rational(0)) : std::move(offset);
    if (offset_.size() != dim_) throw ModelError("offset has wrong dimension");
  }

  Rational wedge_distance(const Site& a, const Site& b) const {
    if (a.key[0] == b.key[0]) return Rational(a.key[1] > b.key[1] ? a.key[1] - b.key[1] : b.key[1] - a.key[1]);
    return Rational(a.key[1] + b.key[1] + 1);
  }

  // Largest edge of a minimum spanning tree: the least scale connecting the set.
  static Length mst_bottleneck(const std::vector<Point>& pts) {
    if (pts.size() < 2) return Length();
    std::vector<Rational> best(pts.size(), Rational(-1));
    std::vector<bool> in(pts.size(), false);
    in[0] = true;
    for (std::size_t j = 1; j < pts.size(); ++j) best[j] = squared_euclidean(pts[0], pts[j]);
    Rational worst = 0;
    for (std::size_t step = 1; step < pts.size(); ++step) {
      std::size_t pick = 0;
      for (std::size_t j = 0; j < pts.size(); ++j)
        if (!in[j] && (pick == 0 || best[j] < best[pick])) pick = j;
      in[pick] = true;
      worst = std::max(worst, best[pick]);
      for (std::size_t j = 0; j < pts.size(); ++j)
        if (!in[j]) best[j] = std::min(best[j], squared_euclidean(pts[pick], pts[j]));
    }
    return Length::from_square(worst);
  }

  static std::optional<Index> split_ints(std::string_view s, char sep) {
    Index out;
    while (true) {
      auto pos = s.find(sep);
      std::string_view part = s.substr(0, pos);
      std::int64_t v = 0;
      auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
      if (part.empty() || ec != std::errc{} || ptr != part.data() + part.size()) return std::nullopt;
      out.push_back(v);
      if (pos == std::string_view::npos) break;
      s.remove_prefix(pos + 1);
    }
    return out;
  }

  template <class F>
  void for_each_index(const Index& a, const Index& b, F&& f) const {
    double count = 1;
    for (std::size_t i = 0; i < dim_; ++i) {
      if (b[i] < a[i]) return;
      count *= static_cast<double>(b[i] - a[i] + 1);
    }
    if (count > static_cast<double>(kMaxWindow)) throw Error("window_too_large", "window has too many lattice points");
    Index idx = a;
    while (true) {
      f(idx);
      std::size_t i = 0;
      while (i < dim_ && idx[i] == b[i]) {
        idx[i] = a[i];
        ++i;
      }
      if (i == dim_) break;
      ++idx[i];
    }
  }

  ModelKind kind_;
  std::size_t dim_;
  std::string name_;
  std::optional<Length> declared_separation_;
  std::vector<std::pair<Length, std::size_t>> declared_ball_bounds_;
  std::optional<Region> default_region_;

  std::vector<Site> cloud_;
  Rational spacing_ = 1;
  Point offset_;
  std::set<Index> removed_;
  std::vector<Site> added_;
  std::vector<std::vector<Point>> templates_;
  std::vector<Rational> widths_;
  GapRule gap_;
  std::int64_t rays_ = 0;
};

// ---- module operations ---------------------------------------------------------------------

inline Length distance(const PointModel& model, std::string_view x, std::string_view y) {
  return model.distance(model.resolve(x), model.resolve(y));
}

inline Window enumerate_window(const PointModel& model, const Region& region) {
  return Window{region, model.sites_in(region)};
}

struct GeometryAudit {
  Length separation = Length::infinite();
  std::vector<std::pair<Length, std::size_t>> ball_count_table;  // R -> max count, in query order
  bool declared_bounds_ok = true;
  std::vector<std::string> violations;
};

inline GeometryAudit audit_geometry(const PointModel& model, const Window& window, const std::vector<Length>& radii) {
  if (window.empty()) throw ContractError("audit requires a nonempty window");
  GeometryAudit audit;
  const auto& s = window.sites;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = i + 1; j < s.size(); ++j) audit.separation = std::min(audit.separation, model.distance(s[i], s[j]));

  for (const auto& r : radii) {
    std::size_t best = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      std::size_t count = 0;
      for (std::size_t j = 0; j < s.size(); ++j)
        if (model.within(s[i], s[j], r)) ++count;
      best = std::max(best, count);
    }
    audit.ball_count_table.emplace_back(r, best);
  }

  if (auto sep = model.declared_separation(); sep && !audit.separation.is_infinite() && audit.separation < *sep) {
    audit.declared_bounds_ok = false;
    audit.violations.push_back("separation " + audit.separation.exact_string() + " below declared " + sep->exact_string());
  }
  for (auto& [r, count] : audit.ball_count_table) {
    // The tightest declared bound applicable to radius r is the one at the
    // smallest declared radius >= r.
    for (auto& [dr, n] : model.declared_ball_bounds()) {
      if (dr < r) continue;
      if (count > n) {
        audit.declared_bounds_ok = false;
        audit.violations.push_back("ball count " + std::to_string(count) + " at R=" + r.exact_string() +
                                   " exceeds declared " + std::to_string(n) + " at R=" + dr.exact_string());
      }
      break;
    }
  }
  return audit;
}

// Distinct pairwise distances <= alpha_max in the window merged with the
// model's structural scales; D(alpha) restricted to the window is constant
// between consecutive entries.
inline std::vector<Length> critical_scales(const PointModel& model, const Window& window, const Length& alpha_max) {
  if (alpha_max <= Length()) throw ContractError("alpha_max must be positive");
  if (window.size() < 2) return {};
  std::set<Rational> squares;
  const auto& s = window.sites;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = i + 1; j < s.size(); ++j)
      if (model.within(s[i], s[j], alpha_max)) squares.insert(model.distance(s[i], s[j]).square());
  for (auto& l : model.structural_scales(alpha_max)) squares.insert(l.square());
  std::vector<Length> out;
  for (auto& sq : squares) out.push_back(Length::from_square(sq));
  return out;
}

}  // namespace coarse
