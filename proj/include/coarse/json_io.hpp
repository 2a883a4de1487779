#pragma once

// JSON in and out. Coordinates and lengths accept exact decimal strings
// ("0.3", "1/3", "sqrt(2)") or JSON numbers (read via their shortest decimal).
// nlohmann::json keeps object keys sorted, so output is canonical.

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "coarse/bm_homology.hpp"
#include "coarse/coarse_transfer.hpp"
#include "coarse/net_builder.hpp"
#include "coarse/operator_witness.hpp"
#include "coarse/ray_synthesis.hpp"

namespace coarse {

using Json = nlohmann::json;

// ---- scalars -------------------------------------------------------------------------

inline Rational rational_from_json(const Json& j) {
  if (j.is_string()) return parse_rational(j.get<std::string>());
  if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
  if (j.is_number_unsigned()) return Rational(j.get<std::uint64_t>());
  if (j.is_number_float()) return rational_from_double(j.get<double>());
  throw ModelError("expected a number, got " + j.dump());
}

inline Length length_from_json(const Json& j) {
  if (j.is_string()) {
    auto s = j.get<std::string>();
    if (s == "inf") return Length::infinite();
    return Length::parse(s);
  }
  if (j.is_object() && j.contains("exact")) return length_from_json(j.at("exact"));
  Rational r = rational_from_json(j);
  if (r < 0) throw ModelError("lengths must be nonnegative");
  return Length::from_value(r);
}

inline Json to_json(const Length& l) {
  Json j;
  j["exact"] = l.exact_string();
  if (l.is_infinite()) {
    j["value"] = nullptr;
  } else {
    j["value"] = l.value();
  }
  return j;
}

inline Json to_json(const Rational& r) { return to_string(r); }

inline Point point_from_json(const Json& j) {
  if (!j.is_array()) throw ModelError("expected a coordinate array, got " + j.dump());
  Point p;
  for (auto& x : j) p.push_back(rational_from_json(x));
  return p;
}

inline Json to_json(const Point& p) {
  Json j = Json::array();
  for (auto& x : p) j.push_back(to_string(x));
  return j;
}

// ---- regions --------------------------------------------------------------------------

inline Region region_from_json(const Json& j) {
  if (j.contains("box")) {
    const Json& b = j.at("box");
    std::vector<Region::Bound> lo, hi;
    for (auto& x : b.at("lo")) lo.push_back(x.is_null() ? Region::Bound{} : Region::Bound{rational_from_json(x)});
    for (auto& x : b.at("hi")) hi.push_back(x.is_null() ? Region::Bound{} : Region::Bound{rational_from_json(x)});
    return Region::box(std::move(lo), std::move(hi));
  }
  if (j.contains("ball")) {
    const Json& b = j.at("ball");
    return Region::ball(point_from_json(b.at("center")), rational_from_json(b.at("radius")));
  }
  throw ModelError("window must be {\"box\": ...} or {\"ball\": ...}");
}

inline Json to_json(const Region& r) {
  Json j;
  if (r.is_ball()) {
    j["ball"] = {{"center", to_json(r.center())}, {"radius", to_string(r.radius())}};
    return j;
  }
  Json lo = Json::array(), hi = Json::array();
  for (auto& b : r.lo_bounds()) lo.push_back(b ? Json(to_string(*b)) : Json(nullptr));
  for (auto& b : r.hi_bounds()) hi.push_back(b ? Json(to_string(*b)) : Json(nullptr));
  j["box"] = {{"lo", lo}, {"hi", hi}};
  return j;
}

// Command-line window syntax: "box:lo1,lo2:hi1,hi2" or "ball:c1,c2:r".
inline Region parse_window(std::string_view text) {
  auto split = [](std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
      auto pos = s.find(sep, start);
      out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
      if (pos == std::string_view::npos) return out;
      start = pos + 1;
    }
  };
  auto parts = split(text, ':');
  auto coords = [&](const std::string& s) {
    Point p;
    for (auto& x : split(s, ',')) p.push_back(parse_rational(x));
    return p;
  };
  if (parts.size() == 3 && parts[0] == "box") return Region::box(coords(parts[1]), coords(parts[2]));
  if (parts.size() == 3 && parts[0] == "ball") return Region::ball(coords(parts[1]), parse_rational(parts[2]));
  throw ContractError("window must look like box:lo1,lo2:hi1,hi2 or ball:c1,c2:r, got '" + std::string(text) + "'");
}

// ---- models ----------------------------------------------------------------------------

inline std::vector<std::pair<std::string, Point>> labeled_points(const Json& arr) {
  std::vector<std::pair<std::string, Point>> out;
  for (auto& p : arr) out.emplace_back(p.at("label").get<std::string>(), point_from_json(p.at("coords")));
  return out;
}

inline GapRule gap_from_json(const Json& g) {
  std::string rule = g.at("rule").get<std::string>();
  if (rule == "constant") return GapRule::constant(rational_from_json(g.at("value")));
  if (rule == "linear")
    return GapRule::linear(rational_from_json(g.value("slope", Json(1))), rational_from_json(g.value("intercept", Json(1))));
  if (rule == "exponential") return GapRule::exponential(rational_from_json(g.value("base", Json(2))));
  throw ModelError("unknown gap rule '" + rule + "'");
}

inline Json to_json(const GapRule& g) {
  switch (g.type) {
    case GapRule::Type::Constant: return {{"rule", "constant"}, {"value", to_string(g.a)}};
    case GapRule::Type::Linear: return {{"rule", "linear"}, {"slope", to_string(g.a)}, {"intercept", to_string(g.b)}};
    case GapRule::Type::Exponential: return {{"rule", "exponential"}, {"base", to_string(g.a)}};
  }
  return {};
}

inline PointModel model_from_json(const Json& j) {
  try {
    ModelKind kind = parse_model_kind(j.at("kind").get<std::string>());
    const Json params = j.value("params", Json::object());
    std::size_t dim = kind == ModelKind::WedgeOfRays ? 1 : j.at("dim").get<std::size_t>();
    if (dim == 0) throw ModelError("dim must be positive");
    auto offset = [&] { return params.contains("offset") ? point_from_json(params.at("offset")) : Point(dim, Rational(0)); };
    PointModel m = [&] {
      switch (kind) {
        case ModelKind::FiniteCloud: return PointModel::finite_cloud(dim, labeled_points(params.value("points", Json::array())));
        case ModelKind::Lattice: return PointModel::lattice(dim, rational_from_json(params.value("spacing", Json(1))), offset());
        case ModelKind::LatticeWithDefects: {
          std::vector<Index> removed;
          for (auto& r : params.value("removed", Json::array())) removed.push_back(r.get<Index>());
          return PointModel::lattice_with_defects(dim, rational_from_json(params.value("spacing", Json(1))), offset(),
                                                  std::move(removed), labeled_points(params.value("added", Json::array())));
        }
        case ModelKind::ClusterSequence: {
          std::vector<std::vector<Point>> templates;
          for (auto& t : params.at("templates")) {
            templates.emplace_back();
            for (auto& p : t) templates.back().push_back(point_from_json(p));
          }
          GapRule gap = params.contains("gap") ? gap_from_json(params.at("gap")) : GapRule::linear(1, 1);
          return PointModel::cluster_sequence(dim, std::move(templates), gap, offset());
        }
        case ModelKind::WedgeOfRays: return PointModel::wedge_of_rays(params.at("rays").get<std::int64_t>());
      }
      throw ModelError("unknown model kind");
    }();
    if (j.contains("name")) m.set_name(j.at("name").get<std::string>());
    if (j.contains("declared_separation") && !j.at("declared_separation").is_null())
      m.set_declared_separation(length_from_json(j.at("declared_separation")));
    if (j.contains("declared_ball_bounds")) {
      std::vector<std::pair<Length, std::size_t>> b;
      for (auto& e : j.at("declared_ball_bounds")) b.emplace_back(length_from_json(e.at("R")), e.at("N").get<std::size_t>());
      m.set_declared_ball_bounds(std::move(b));
    }
    if (j.contains("window")) {
      Region r = region_from_json(j.at("window"));
      if (r.dim() != m.dim()) throw ModelError("window dimension does not match the model");
      m.set_default_region(std::move(r));
    }
    return m;
  } catch (const Json::exception& e) {
    throw ModelError(std::string("malformed model: ") + e.what());
  }
}

inline Json to_json(const PointModel& m) {
  Json j;
  j["kind"] = std::string(to_string(m.kind()));
  j["dim"] = m.dim();
  if (!m.name().empty()) j["name"] = m.name();
  Json params = Json::object();
  auto pts = [](const std::vector<Site>& sites) {
    Json a = Json::array();
    for (auto& s : sites) a.push_back({{"label", s.label}, {"coords", to_json(s.pos)}});
    return a;
  };
  switch (m.kind()) {
    case ModelKind::FiniteCloud: params["points"] = pts(m.cloud()); break;
    case ModelKind::LatticeWithDefects: {
      Json removed = Json::array();
      for (auto& r : m.removed()) removed.push_back(r);
      params["removed"] = removed;
      params["added"] = pts(m.added());
      [[fallthrough]];
    }
    case ModelKind::Lattice:
      params["spacing"] = to_string(m.spacing());
      params["offset"] = to_json(m.offset());
      break;
    case ModelKind::ClusterSequence: {
      Json t = Json::array();
      for (auto& tmpl : m.templates()) {
        Json a = Json::array();
        for (auto& p : tmpl) a.push_back(to_json(p));
        t.push_back(a);
      }
      params["templates"] = t;
      params["gap"] = to_json(m.gap_rule());
      params["offset"] = to_json(m.offset());
      break;
    }
    case ModelKind::WedgeOfRays: params["rays"] = m.ray_count(); break;
  }
  j["params"] = params;
  if (m.declared_separation()) j["declared_separation"] = m.declared_separation()->exact_string();
  if (!m.declared_ball_bounds().empty()) {
    Json b = Json::array();
    for (auto& [r, n] : m.declared_ball_bounds()) b.push_back({{"R", r.exact_string()}, {"N", n}});
    j["declared_ball_bounds"] = b;
  }
  j["window"] = to_json(m.default_region());
  return j;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("io_error", "cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error("malformed_json", path + ": " + e.what());
  }
}

inline PointModel load_model(const std::string& path) { return model_from_json(read_json_file(path)); }

// ---- domains ---------------------------------------------------------------------------

inline DomainSample domain_from_json(const Json& j) {
  try {
    std::string shape = j.at("shape").get<std::string>();
    Rational h = rational_from_json(j.at("resolution"));
    const Json& b = j.at("bounds");
    if (shape == "box") return sample_box(point_from_json(b.at("lo")), point_from_json(b.at("hi")), h);
    if (shape == "disk") return sample_disk(point_from_json(b.at("center")), rational_from_json(b.at("radius")), h);
    if (shape == "annulus")
      return sample_annulus(point_from_json(b.at("center")), rational_from_json(b.at("inner")), rational_from_json(b.at("outer")), h);
    if (shape == "two_box") {
      const Json& boxes = b.at("boxes");
      if (boxes.size() != 2) throw ModelError("two_box needs exactly two boxes");
      return sample_two_box(point_from_json(boxes[0].at("lo")), point_from_json(boxes[0].at("hi")),
                            point_from_json(boxes[1].at("lo")), point_from_json(boxes[1].at("hi")), h);
    }
    if (shape == "point") return sample_point(point_from_json(b.at("point")), h);
    throw ModelError("unknown domain shape '" + shape + "'");
  } catch (const Json::exception& e) {
    throw ModelError(std::string("malformed domain: ") + e.what());
  }
}

// ---- discretized spaces -------------------------------------------------------------------

struct WannierInput {
  DiscretizedSpace space;
  Eigen::MatrixXd phi;                          // cells x centers
  std::vector<std::vector<Rational>> amp_sq;    // exact squared amplitudes
  std::vector<Rational> weights;
};

// {"cells": [{"label", "position", "weight"}],
//  "centers": [{"label", "cell", "amplitudes": {cell label: value}}]}
// with the support of a center taken as the cells it lists. Amplitudes may be
// "sqrt(q)" or "-sqrt(q)" to stay exact.
inline WannierInput wannier_from_json(const Json& j) {
  try {
    WannierInput in;
    std::map<std::string, std::size_t> cell_index;
    for (auto& c : j.at("cells")) {
      std::string label = c.at("label").get<std::string>();
      if (!cell_index.emplace(label, in.space.cells.size()).second) throw ModelError("duplicate cell '" + label + "'");
      in.space.cells.push_back(label);
      std::vector<double> pos;
      for (auto& x : c.at("position")) pos.push_back(to_double(rational_from_json(x)));
      in.space.positions.push_back(std::move(pos));
      Rational w = rational_from_json(c.value("weight", Json(1)));
      in.weights.push_back(w);
      in.space.weights.push_back(to_double(w));
    }
    auto cell = [&](const std::string& label) {
      auto it = cell_index.find(label);
      if (it == cell_index.end()) throw ResolutionError(label);
      return it->second;
    };
    const Json& centers = j.at("centers");
    std::size_t nc = in.space.cells.size(), nx = centers.size();
    in.phi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nc), static_cast<Eigen::Index>(nx));
    in.amp_sq.assign(nc, std::vector<Rational>(nx, Rational(0)));
    for (std::size_t x = 0; x < nx; ++x) {
      const Json& cj = centers[x];
      in.space.centers.push_back(cj.at("label").get<std::string>());
      in.space.center_cell.push_back(cell(cj.at("cell").get<std::string>()));
      std::vector<std::size_t> support;
      for (auto& [label, v] : cj.at("amplitudes").items()) {
        std::size_t c = cell(label);
        support.push_back(c);
        Rational sq;
        double value;
        if (v.is_string() && (v.get<std::string>().starts_with("sqrt(") || v.get<std::string>().starts_with("-sqrt("))) {
          std::string s = v.get<std::string>();
          bool neg = s.front() == '-';
          sq = Length::parse(neg ? s.substr(1) : s).square();
          value = (neg ? -1.0 : 1.0) * std::sqrt(to_double(sq));
        } else {
          Rational r = rational_from_json(v);
          sq = r * r;
          value = to_double(r);
        }
        in.amp_sq[c][x] = sq;
        in.phi(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(x)) = value;
      }
      std::sort(support.begin(), support.end());
      in.space.supports.push_back(std::move(support));
    }
    in.space.validate();
    return in;
  } catch (const Json::exception& e) {
    throw ModelError(std::string("malformed discretized space: ") + e.what());
  }
}

// ---- reports ----------------------------------------------------------------------------

inline Json to_json(const ComponentCertificate& c) {
  Json j{{"component", c.component}, {"status", std::string(to_string(c.status))}, {"members", c.members}, {"rule", c.rule}};
  j["margin"] = c.status == CertStatus::CertifiedFinite ? to_json(c.margin) : Json(nullptr);
  return j;
}

inline ComponentCertificate certificate_from_json(const Json& j) {
  ComponentCertificate c;
  c.component = j.value("component", std::size_t{0});
  std::string s = j.at("status").get<std::string>();
  if (s == "CertifiedFinite") c.status = CertStatus::CertifiedFinite;
  else if (s == "CertifiedInfinite") c.status = CertStatus::CertifiedInfinite;
  else if (s == "Unknown") c.status = CertStatus::Unknown;
  else throw ModelError("unknown certificate status '" + s + "'");
  c.members = j.at("members").get<std::vector<std::string>>();
  if (j.contains("margin") && !j.at("margin").is_null()) c.margin = length_from_json(j.at("margin"));
  c.rule = j.value("rule", "");
  return c;
}

inline Json to_json(const ScaleReport& r) {
  Json certs = Json::array();
  for (auto& c : r.certs) certs.push_back(to_json(c));
  return {{"alpha", to_json(r.alpha)},     {"component_count", r.graph.component_count},
          {"degree_max", r.graph.degree_max}, {"edge_count", r.graph.graph.edges.size()},
          {"coverage", r.coverage},        {"global_rule", r.rule},
          {"components", certs}};
}

inline Json to_json(const CriterionVerdict& v) {
  Json j;
  j["outcome"] = std::string(to_string(v.outcome));
  j["alpha_star"] = v.alpha_star ? to_json(*v.alpha_star) : Json(nullptr);
  j["reason"] = v.reason;
  Json scales = Json::array(), unknown = Json::array(), reports = Json::array();
  for (auto& s : v.scales_examined) scales.push_back(to_json(s));
  for (auto& s : v.unknown_scales) unknown.push_back(to_json(s));
  for (auto& r : v.reports) reports.push_back(to_json(r));
  j["scales_examined"] = scales;
  j["unknown_scales"] = unknown;
  j["scales"] = reports;
  return j;
}

inline Json to_json(const BMReport& r) {
  Json entries = Json::array();
  for (auto& e : r.entries) {
    Json fin = Json::array();
    for (auto& c : e.finite_components) fin.push_back(to_json(c));
    entries.push_back({{"alpha", to_json(e.alpha)},
                       {"class", e.class_nonzero ? "nonzero" : (e.inconclusive ? "inconclusive" : "zero")},
                       {"finite_components", fin}});
  }
  Json limit{{"verdict", std::string(to_string(r.limit.verdict))}, {"reason", r.limit.reason}};
  limit["alpha_star"] = r.limit.alpha_star ? to_json(*r.limit.alpha_star) : Json(nullptr);
  return {{"entries", entries}, {"limit", limit}};
}

inline Json to_json(const Continuation& c) {
  Json j{{"rule", std::string(to_string(c.rule))}};
  if (c.rule == Continuation::Rule::LatticeAxis) {
    j["axis"] = c.axis;
    j["sign"] = c.sign;
  }
  if (c.rule == Continuation::Rule::ClusterTail) j["next_cluster"] = c.next_cluster;
  return j;
}

inline Continuation continuation_from_json(const Json& j) {
  Continuation c;
  std::string rule = j.at("rule").get<std::string>();
  if (rule == "lattice_axis") {
    c.rule = Continuation::Rule::LatticeAxis;
    c.axis = j.at("axis").get<std::size_t>();
    c.sign = j.at("sign").get<int>();
  } else if (rule == "wedge_tail") {
    c.rule = Continuation::Rule::WedgeTail;
  } else if (rule == "cluster_tail") {
    c.rule = Continuation::Rule::ClusterTail;
    c.next_cluster = j.at("next_cluster").get<std::int64_t>();
  } else {
    throw ModelError("unknown continuation rule '" + rule + "'");
  }
  return c;
}

inline Json to_json(const RayStructureWitness& w) {
  Json rays = Json::array();
  for (auto& r : w.rays)
    rays.push_back({{"id", r.id}, {"prefix", r.prefix}, {"continuation", r.continuation ? to_json(*r.continuation) : Json(nullptr)}});
  Json clones = Json::array();
  for (auto& [label, original] : w.clones) clones.push_back({{"label", label}, {"original", original}});
  Json j{{"lipschitz_C", to_json(w.lipschitz_C)},
         {"rays", rays},
         {"clones", clones},
         {"convention", std::string(kCloneConvention)},
         {"exterior_rule", w.exterior_rule}};
  j["window"] = w.window ? to_json(*w.window) : Json(nullptr);
  return j;
}

inline RayStructureWitness witness_from_json(const Json& j) {
  try {
    RayStructureWitness w;
    w.lipschitz_C = length_from_json(j.at("lipschitz_C"));
    if (j.contains("window") && !j.at("window").is_null()) w.window = region_from_json(j.at("window"));
    for (auto& r : j.at("rays")) {
      Ray ray;
      ray.id = r.value("id", w.rays.size());
      ray.prefix = r.at("prefix").get<std::vector<std::string>>();
      if (r.contains("continuation") && !r.at("continuation").is_null()) ray.continuation = continuation_from_json(r.at("continuation"));
      w.rays.push_back(std::move(ray));
    }
    for (auto& c : j.value("clones", Json::array())) w.clones[c.at("label").get<std::string>()] = c.at("original").get<std::string>();
    w.exterior_rule = j.value("exterior_rule", "");
    return w;
  } catch (const Json::exception& e) {
    throw ModelError(std::string("malformed witness: ") + e.what());
  }
}

inline Json to_json(const ValidationReport& r) {
  Json checks = Json::array();
  for (auto& c : r.checks) checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  return {{"passed", r.passed()}, {"checks", checks}};
}

inline Json to_json(const NetReport& r) {
  Json packing = Json::array();
  for (auto& p : r.packing) packing.push_back({{"radius", to_string(p.radius)}, {"max_count", p.max_count}, {"bound", p.bound}});
  Json j{{"net_size", r.net.size()},
         {"r", to_string(r.r)},
         {"separation_ok", r.separation_ok},
         {"min_separation", to_json(r.min_separation)},
         {"covering_radius", to_json(r.covering_radius)},
         {"covering_ok", r.covering_ok},
         {"connectivity_3r_ok", r.connectivity_3r_ok},
         {"components_3r", r.components_3r},
         {"declared_connected", r.declared_connected},
         {"packing", packing},
         {"packing_ok", r.packing_ok},
         {"passed", r.passed()}};
  if (r.split) {
    std::vector<std::string> x1, x2;
    for (auto i : r.split->x1) x1.push_back(net_label(i));
    for (auto i : r.split->x2) x2.push_back(net_label(i));
    j["split"] = {{"x1", x1}, {"x2", x2}, {"gap", to_json(r.split->gap)}};
  } else {
    j["split"] = nullptr;
  }
  return j;
}

inline Json to_json(const TransferResult& t) {
  Json certs = Json::array();
  for (auto& c : t.certificates) certs.push_back(to_json(c));
  return {{"alpha", to_json(t.alpha)}, {"source_scale", to_json(t.source_scale)}, {"C", to_json(t.C)},
          {"source", t.source},        {"z", t.z},                                 {"separation", to_json(t.separation)},
          {"certificates", certs}};
}

inline Json to_json(const OperatorCertificate& c) {
  Json j{{"kind", c.kind}, {"dims", c.dims}, {"residuals", c.residuals}, {"exact_flags", c.exact_flags}, {"values", c.values}};
  j["propagation"] = c.propagation ? Json(*c.propagation) : Json(nullptr);
  j["boundary_defect_rank"] = c.boundary_defect_rank ? Json(*c.boundary_defect_rank) : Json(nullptr);
  return j;
}

inline Json error_json(std::string_view code, std::string_view message) {
  return {{"error", {{"code", code}, {"message", message}}}};
}

}  // namespace coarse
