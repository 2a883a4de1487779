#pragma once

// Maximal r-disjoint nets in grid samples of connected domains, and the checks
// behind "D(3r) is connected": separation, covering radius, 3r-connectivity.

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "coarse/graph.hpp"
#include "coarse/space_models.hpp"

namespace coarse {

struct DomainSample {
  std::string shape;
  std::size_t dim = 0;
  Rational h;  // every point of the region lies within h of a sample point
  std::vector<Point> points;
  std::vector<std::vector<double>> approx;
  bool declared_connected = true;

  std::size_t size() const { return points.size(); }
};

namespace detail {

inline void finish_sample(DomainSample& d) {
  d.approx.clear();
  for (auto& p : d.points) d.approx.push_back(approximate(p));
}

// Grid over [lo, hi] with at most `step` between neighbours along each axis,
// endpoints included, in lexicographic order.
inline std::vector<Point> box_grid(const Point& lo, const Point& hi, const Rational& step) {
  std::size_t dim = lo.size();
  std::vector<std::int64_t> count(dim);
  std::vector<Rational> pitch(dim);
  std::int64_t total = 1;
  for (std::size_t i = 0; i < dim; ++i) {
    if (hi[i] < lo[i]) throw ContractError("box bounds are inverted");
    Rational span = hi[i] - lo[i];
    std::int64_t n = span == 0 ? 0 : PointModel::ceil_int(span / step);
    count[i] = n;
    pitch[i] = n == 0 ? Rational(0) : span / n;
    total *= n + 1;
    if (total > PointModel::kMaxWindow) throw ContractError("domain sample is too large");
  }
  std::vector<Point> out;
  out.reserve(static_cast<std::size_t>(total));
  std::vector<std::int64_t> idx(dim, 0);
  while (true) {
    Point p(dim);
    for (std::size_t i = 0; i < dim; ++i) p[i] = lo[i] + pitch[i] * idx[i];
    out.push_back(std::move(p));
    std::size_t i = dim;
    while (i > 0) {
      --i;
      if (idx[i] < count[i]) {
        ++idx[i];
        break;
      }
      idx[i] = 0;
      if (i == 0) return out;
    }
    if (dim == 0) return out;
  }
}

inline void check_resolution(const Rational& h) {
  if (h <= 0) throw ContractError("sample resolution must be positive");
}

}  // namespace detail

inline DomainSample sample_box(const Point& lo, const Point& hi, const Rational& h) {
  detail::check_resolution(h);
  if (lo.size() != hi.size() || lo.empty()) throw ContractError("box bounds must share a positive dimension");
  // Pitch h per axis keeps the covering radius at h*sqrt(dim)/2 <= h up to dimension 4.
  if (lo.size() > 4) throw ContractError("box samples support dimension at most 4");
  DomainSample d{"box", lo.size(), h, detail::box_grid(lo, hi, h), {}, true};
  detail::finish_sample(d);
  return d;
}

// Curved shapes sample at pitch h/2: pushing a region point h/2 inwards lands
// it where the nearest grid point is still inside, at distance < h overall.
inline DomainSample sample_annulus(const Point& center, const Rational& inner, const Rational& outer, const Rational& h) {
  detail::check_resolution(h);
  if (center.size() != 2) throw ContractError("disk and annulus samples are planar");
  if (inner < 0 || outer <= inner) throw ContractError("annulus radii must satisfy 0 <= inner < outer");
  if (outer - inner < h) throw ContractError("annulus is thinner than the resolution");
  Point lo{center[0] - outer, center[1] - outer}, hi{center[0] + outer, center[1] + outer};
  DomainSample d{inner == 0 ? "disk" : "annulus", 2, h, {}, {}, true};
  Rational in2 = inner * inner, out2 = outer * outer;
  for (auto& p : detail::box_grid(lo, hi, h / 2)) {
    Rational r2 = squared_euclidean(p, center);
    if (r2 >= in2 && r2 <= out2) d.points.push_back(std::move(p));
  }
  detail::finish_sample(d);
  return d;
}

inline DomainSample sample_disk(const Point& center, const Rational& radius, const Rational& h) {
  return sample_annulus(center, Rational(0), radius, h);
}

// Union of two disjoint boxes: the disconnected control.
inline DomainSample sample_two_box(const Point& lo1, const Point& hi1, const Point& lo2, const Point& hi2, const Rational& h) {
  DomainSample a = sample_box(lo1, hi1, h), b = sample_box(lo2, hi2, h);
  if (a.dim != b.dim) throw ContractError("boxes must share a dimension");
  a.shape = "two_box";
  a.declared_connected = false;
  a.points.insert(a.points.end(), b.points.begin(), b.points.end());
  detail::finish_sample(a);
  return a;
}

inline DomainSample sample_point(const Point& p, const Rational& h) {
  detail::check_resolution(h);
  DomainSample d{"point", p.size(), h, {p}, {}, true};
  detail::finish_sample(d);
  return d;
}

namespace detail {

// Exact d(a, b) > r decided with a double filter first.
inline bool farther_than(const Point& a, const std::vector<double>& aa, const Point& b, const std::vector<double>& bb,
                         const Rational& r2, double r2d) {
  double s = 0, mag = 0;
  for (std::size_t i = 0; i < aa.size(); ++i) {
    double t = aa[i] - bb[i];
    s += t * t;
    mag += (std::abs(aa[i]) + std::abs(bb[i])) * (std::abs(aa[i]) + std::abs(bb[i]));
  }
  double err = 1e-12 * (1.0 + mag + r2d);
  if (s > r2d + err) return true;
  if (s < r2d - err) return false;
  return squared_euclidean(a, b) > r2;
}

// Buckets of side r so that candidates within r sit in neighbouring buckets.
struct Buckets {
  double side;
  std::map<std::vector<std::int64_t>, std::vector<std::size_t>> cells;

  std::vector<std::int64_t> key(const std::vector<double>& p) const {
    std::vector<std::int64_t> k(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) k[i] = static_cast<std::int64_t>(std::floor(p[i] / side));
    return k;
  }
  void add(const std::vector<double>& p, std::size_t id) { cells[key(p)].push_back(id); }

  template <class F>
  void near(const std::vector<double>& p, F&& f) const {
    auto base = key(p);
    std::vector<std::int64_t> off(p.size(), -1);
    while (true) {
      auto k = base;
      for (std::size_t i = 0; i < k.size(); ++i) k[i] += off[i];
      if (auto it = cells.find(k); it != cells.end())
        for (auto id : it->second) f(id);
      std::size_t i = 0;
      while (i < off.size() && off[i] == 1) off[i++] = -1;
      if (i == off.size()) return;
      ++off[i];
    }
  }
};

}  // namespace detail

// Greedy maximal r-disjoint subset in sample order. Pairwise distances in the
// net exceed r; every sample point is within r of it.
inline std::vector<Point> build_net(const DomainSample& domain, const Rational& r) {
  if (r <= 2 * domain.h)
    throw Refusal("net radius r = " + to_string(r) + " must exceed 2h = " + to_string(2 * domain.h) +
                  " or sampling error can break the 3r-connectivity argument");
  Rational r2 = r * r;
  double r2d = to_double(r2);
  detail::Buckets buckets{to_double(r) * (1 + 1e-9), {}};
  std::vector<std::size_t> chosen;
  for (std::size_t i = 0; i < domain.size(); ++i) {
    bool free = true;
    buckets.near(domain.approx[i], [&](std::size_t j) {
      if (free && !detail::farther_than(domain.points[i], domain.approx[i], domain.points[j], domain.approx[j], r2, r2d))
        free = false;
    });
    if (free) {
      chosen.push_back(i);
      buckets.add(domain.approx[i], i);
    }
  }
  std::vector<Point> net;
  for (auto i : chosen) net.push_back(domain.points[i]);
  return net;
}

struct NetSplit {
  std::vector<std::size_t> x1, x2;  // net indices
  Length gap;                        // d(X1, X2)
};

struct PackingRow {
  Rational radius;
  std::size_t max_count = 0;
  std::size_t bound = 0;
};

struct NetReport {
  std::vector<Point> net;
  Rational r;
  bool separation_ok = false;
  Length min_separation = Length::infinite();
  Length covering_radius = Length::infinite();
  bool covering_ok = false;
  bool connectivity_3r_ok = false;
  std::size_t components_3r = 0;
  std::optional<NetSplit> split;
  std::vector<PackingRow> packing;
  bool packing_ok = true;
  bool declared_connected = true;

  bool passed() const { return separation_ok && covering_ok && connectivity_3r_ok && packing_ok; }
};

inline NetReport check_net(const std::vector<Point>& net, const DomainSample& domain, const Rational& r) {
  NetReport rep;
  rep.net = net;
  rep.r = r;
  rep.declared_connected = domain.declared_connected;
  std::size_t n = net.size();
  std::vector<std::vector<double>> na;
  for (auto& p : net) na.push_back(approximate(p));

  // Exact pairwise separation.
  std::vector<std::vector<Rational>> d2(n, std::vector<Rational>(n));
  Rational r2 = r * r;
  rep.separation_ok = true;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      d2[i][j] = d2[j][i] = squared_euclidean(net[i], net[j]);
      rep.min_separation = std::min(rep.min_separation, Length::from_square(d2[i][j]));
      if (d2[i][j] <= r2) rep.separation_ok = false;
    }

  // Covering radius: nearest net point per sample, exact among near-ties.
  if (n > 0) {
    rep.covering_radius = Length();
    for (std::size_t s = 0; s < domain.size(); ++s) {
      std::vector<double> approx_d(n);
      double best = INFINITY;
      for (std::size_t i = 0; i < n; ++i) {
        double t = 0;
        for (std::size_t k = 0; k < na[i].size(); ++k) t += (na[i][k] - domain.approx[s][k]) * (na[i][k] - domain.approx[s][k]);
        approx_d[i] = t;
        best = std::min(best, t);
      }
      std::optional<Rational> exact;
      for (std::size_t i = 0; i < n; ++i)
        if (approx_d[i] <= best * (1 + 1e-9) + 1e-12) {
          Rational e = squared_euclidean(net[i], domain.points[s]);
          if (!exact || e < *exact) exact = e;
        }
      rep.covering_radius = std::max(rep.covering_radius, Length::from_square(*exact));
    }
  } else if (domain.size() == 0) {
    rep.covering_radius = Length();
  }
  rep.covering_ok = rep.covering_radius <= Length::from_value(r);

  // D(3r) on the net.
  Rational lim = 9 * r2;
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (d2[i][j] <= lim) edges.emplace_back(i, j);
  Graph g = Graph::from_edges(n, std::move(edges));
  auto comp = g.components();
  std::size_t count = 0;
  for (auto c : comp) count = std::max(count, c + 1);
  rep.components_3r = count;
  rep.connectivity_3r_ok = n > 0 && count == 1;
  if (count > 1) {
    NetSplit split;
    split.gap = Length::infinite();
    for (std::size_t i = 0; i < n; ++i) (comp[i] == comp[0] ? split.x1 : split.x2).push_back(i);
    for (auto i : split.x1)
      for (auto j : split.x2) split.gap = std::min(split.gap, Length::from_square(d2[i][j]));
    rep.split = std::move(split);
  }

  // Packing: ball of radius R about any net point holds <= (ceil(2R/r)+1)^dim net points.
  for (int m = 1; m <= 3; ++m) {
    PackingRow row;
    row.radius = r * m;
    std::size_t side = static_cast<std::size_t>(PointModel::ceil_int(2 * row.radius / r)) + 1;
    row.bound = 1;
    for (std::size_t k = 0; k < domain.dim; ++k) row.bound *= side;
    Rational R2 = row.radius * row.radius;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t c = 0;
      for (std::size_t j = 0; j < n; ++j) c += (i == j || d2[i][j] <= R2) ? 1 : 0;
      row.max_count = std::max(row.max_count, c);
    }
    if (row.max_count > row.bound) rep.packing_ok = false;
    rep.packing.push_back(row);
  }
  return rep;
}

inline std::string net_label(std::size_t i) { return "N:" + std::to_string(i); }

// The net as a finite cloud, consumable by every other module.
inline PointModel net_to_model(const std::vector<Point>& net, std::size_t dim) {
  std::vector<std::pair<std::string, Point>> pts;
  for (std::size_t i = 0; i < net.size(); ++i) pts.emplace_back(net_label(i), net[i]);
  return PointModel::finite_cloud(dim, std::move(pts));
}

}  // namespace coarse
