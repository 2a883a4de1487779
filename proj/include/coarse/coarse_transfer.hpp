#pragma once

// Two subsets D1, D2 of a common space at mutual covering distance C. A finite
// component of D1(alpha + 2C) pushes forward to a union of finite components of
// D2(alpha): Z = {z in D2 : d(z, x) <= C for some x in the component}.

#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "coarse/rips_multiscale.hpp"

namespace coarse {

namespace detail {

inline void require_common_space(const PointModel& a, const PointModel& b) {
  if (a.dim() != b.dim() || a.is_euclidean() != b.is_euclidean())
    throw ContractError("models do not live in a common space");
  if (!a.is_euclidean() && a.ray_count() != b.ray_count()) throw ContractError("wedges with different ray counts");
}

// Distance from `x` to the nearest point of `model`, searched on growing
// neighbourhoods; infinite when the model is empty.
inline Length nearest_distance(const PointModel& model, const Site& x) {
  Length radius = Length::from_value(1);
  auto extent = model.extent();  // finite models only
  std::span<const Site> one(&x, 1);
  for (int round = 0; round < 64; ++round) {
    Region region = model.neighborhood(one, radius);
    Length best = Length::infinite();
    for (auto& y : model.sites_in(region)) best = std::min(best, model.distance(x, y));
    if (best <= radius) return best;
    if (extent && region.contains_box(extent->first, extent->second)) return best;
    radius = radius.scaled(2);
  }
  throw Error("nearest_search_exhausted", "could not locate a nearest point");
}

}  // namespace detail

// sup over windowed x in `from` of d(x, to).
inline Length directed_covering_radius(const PointModel& from, const PointModel& to, const Region& window) {
  detail::require_common_space(from, to);
  auto sites = from.sites_in(window);
  if (sites.empty()) throw Error("empty_window", "model has no points in the window");
  Length c;
  for (auto& x : sites) {
    Length d = detail::nearest_distance(to, x);
    if (d.is_infinite()) throw Error("empty_window", "target model has no points");
    c = std::max(c, d);
  }
  return c;
}

inline Length coarse_constant(const PointModel& d1, const PointModel& d2, const Region& window) {
  return std::max(directed_covering_radius(d1, d2, window), directed_covering_radius(d2, d1, window));
}

struct CoarsePair {
  PointModel d1, d2;
  Region window;
  Length window_constant;
  std::optional<Length> declared;
  Length C;  // the larger of the window constant and the declared bound
};

inline CoarsePair make_coarse_pair(PointModel d1, PointModel d2, Region window, std::optional<Length> declared = std::nullopt) {
  Length wc = coarse_constant(d1, d2, window);
  Length c = declared ? std::max(wc, *declared) : wc;
  return CoarsePair{std::move(d1), std::move(d2), std::move(window), wc, declared, c};
}

// alpha + 2C, exact whenever both are rational.
inline Length transfer_source_scale(const CoarsePair& pair, const Length& alpha) {
  return sum_length(alpha, pair.C.scaled(2));
}

struct TransferResult {
  Length alpha;
  Length source_scale;
  Length C;
  std::vector<std::string> source;
  std::vector<std::string> z;
  Length separation;  // d(Z, D2 \ Z)
  std::vector<ComponentCertificate> certificates;
};

inline TransferResult transfer_finite_component(const ComponentCertificate& source, const CoarsePair& pair, const Length& alpha) {
  if (source.status != CertStatus::CertifiedFinite)
    throw Refusal("source component is " + std::string(to_string(source.status)) + ", not CertifiedFinite");
  if (source.members.empty()) throw Refusal("source certificate has no members");
  if (alpha <= Length()) throw ContractError("transfer scale must be positive");
  const PointModel& d1 = pair.d1;
  const PointModel& d2 = pair.d2;
  Length twoC = pair.C.scaled(2);

  std::vector<Site> gamma;
  std::unordered_set<std::string> in_gamma;
  for (auto& label : source.members) {
    try {
      gamma.push_back(d1.resolve(label));
    } catch (const ResolutionError&) {
      throw Refusal("source member " + label + " is not a point of D1");
    }
    in_gamma.insert(label);
  }

  // Re-verify the source at alpha + 2C: isolated, and connected.
  Length reach = sum_upper(alpha, twoC);
  for (auto& y : d1.sites_in(d1.neighborhood(gamma, reach))) {
    if (in_gamma.count(y.label)) continue;
    for (auto& x : gamma)
      if (!exceeds_sum(d1.distance(x, y), alpha, twoC))
        throw Refusal("source is not isolated at alpha + 2C: " + x.label + " is within reach of " + y.label);
  }
  {
    UnionFind uf(gamma.size());
    for (std::size_t i = 0; i < gamma.size(); ++i)
      for (std::size_t j = i + 1; j < gamma.size(); ++j)
        if (!exceeds_sum(d1.distance(gamma[i], gamma[j]), alpha, twoC)) uf.unite(i, j);
    if (uf.set_count() != 1) throw Refusal("source members are not connected at alpha + 2C");
  }

  TransferResult out;
  out.alpha = alpha;
  out.source_scale = transfer_source_scale(pair, alpha);
  out.C = pair.C;
  out.source = source.members;

  std::vector<Site> z;
  for (auto& y : d2.sites_in(d2.neighborhood(gamma, pair.C)))
    for (auto& x : gamma)
      if (d2.distance(x, y) <= pair.C) {
        z.push_back(y);
        break;
      }
  if (z.empty()) throw Error("empty_transfer", "no point of D2 lies within C of the source; the covering property is violated");
  std::sort(z.begin(), z.end(), by_label);
  for (auto& s : z) out.z.push_back(s.label);

  out.separation = isolation_margin(d2, z, alpha);
  if (out.separation <= alpha)
    throw Error("transfer_separation_failed", "d(Z, D2 \\ Z) = " + out.separation.exact_string() +
                                                  " is not above alpha; the coarse constant underestimates");

  Window zw{d2.neighborhood(z, Length()), z};
  ScaleGraph g = build_rips(zw, alpha, d2);
  auto members = g.members();
  for (std::size_t c = 0; c < members.size(); ++c) {
    ComponentCertificate cert;
    cert.component = c;
    cert.status = CertStatus::CertifiedFinite;
    std::vector<Site> sites;
    for (auto v : members[c]) {
      sites.push_back(z[v]);
      cert.members.push_back(z[v].label);
    }
    cert.margin = isolation_margin(d2, sites, alpha);
    cert.rule = "coarse_transfer";
    out.certificates.push_back(std::move(cert));
  }
  return out;
}

// Finite components of D1(scale) seen on the window.
inline std::vector<ComponentCertificate> find_source_certificates(const PointModel& d1, const Window& window, const Length& scale) {
  std::vector<ComponentCertificate> out;
  for (auto& c : analyze_scale(d1, window, scale).certs)
    if (c.status == CertStatus::CertifiedFinite) out.push_back(c);
  return out;
}

// Every finite component of D1(alpha + 2C) on the pair's window, transferred.
inline std::vector<TransferResult> transfer_all(const CoarsePair& pair, const Length& alpha) {
  Window w = enumerate_window(pair.d1, pair.window);
  std::vector<TransferResult> out;
  for (auto& c : find_source_certificates(pair.d1, w, transfer_source_scale(pair, alpha)))
    out.push_back(transfer_finite_component(c, pair, alpha));
  return out;
}

}  // namespace coarse
