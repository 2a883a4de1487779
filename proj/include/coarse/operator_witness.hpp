#pragma once

// Finite-dimensional operator certificates: the Wannier isometry U and its
// projection p = UU*, the polar frame W = V (V*V)^(-1/2), and the propagation-1
// shift T with T*T = P + Q and TT* = Q along a ray.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "coarse/error.hpp"
#include "coarse/exact.hpp"

namespace coarse {

// Cells with positions and measure weights; each center owns a support.
struct DiscretizedSpace {
  std::vector<std::string> cells;
  std::vector<std::vector<double>> positions;
  std::vector<double> weights;
  std::vector<std::string> centers;
  std::vector<std::size_t> center_cell;
  std::vector<std::vector<std::size_t>> supports;

  std::size_t cell_count() const { return cells.size(); }
  std::size_t center_count() const { return centers.size(); }

  double cell_distance(std::size_t a, std::size_t b) const {
    double s = 0;
    for (std::size_t i = 0; i < positions[a].size(); ++i) s += (positions[a][i] - positions[b][i]) * (positions[a][i] - positions[b][i]);
    return std::sqrt(s);
  }

  double support_diameter(std::size_t x) const {
    double d = 0;
    for (auto a : supports[x])
      for (auto b : supports[x]) d = std::max(d, cell_distance(a, b));
    return d;
  }

  double max_support_diameter() const {
    double d = 0;
    for (std::size_t x = 0; x < center_count(); ++x) d = std::max(d, support_diameter(x));
    return d;
  }

  void validate() const {
    if (positions.size() != cells.size() || weights.size() != cells.size())
      throw ContractError("cells, positions and weights must have equal length");
    if (center_cell.size() != centers.size() || supports.size() != centers.size())
      throw ContractError("every center needs a cell and a support");
    for (auto w : weights)
      if (!(w > 0)) throw ContractError("cell weights must be positive");
    for (std::size_t x = 0; x < centers.size(); ++x) {
      if (center_cell[x] >= cells.size()) throw ContractError("center cell out of range");
      bool has_center = false;
      for (auto c : supports[x]) {
        if (c >= cells.size()) throw ContractError("support cell out of range");
        has_center = has_center || c == center_cell[x];
      }
      if (!has_center) throw ContractError("center " + centers[x] + " does not lie in its support");
    }
  }

  // First shared cell between two supports, if any.
  std::optional<std::pair<std::size_t, std::size_t>> overlap() const {
    std::vector<std::size_t> owner(cells.size(), SIZE_MAX);
    for (std::size_t x = 0; x < centers.size(); ++x)
      for (auto c : supports[x]) {
        if (owner[c] != SIZE_MAX && owner[c] != x) return std::pair{owner[c], x};
        owner[c] = x;
      }
    return std::nullopt;
  }
};

struct OperatorCertificate {
  std::string kind;
  std::map<std::string, std::size_t> dims;
  std::map<std::string, double> residuals;
  std::map<std::string, bool> exact_flags;
  std::optional<double> propagation;
  std::optional<std::size_t> boundary_defect_rank;
  std::map<std::string, double> values;  // auxiliary scalars (eigenvalue bounds, diameters)
  Eigen::MatrixXd primary;                // U or W
  Eigen::MatrixXd projection;             // UU* or WW*
};

// Largest singular value.
inline double operator_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

inline void dump_dense(std::ostream& os, const Eigen::MatrixXd& m) {
  os << m.rows() << ' ' << m.cols() << '\n';
  os.precision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? " " : "") << m(i, j);
    os << '\n';
  }
}

namespace detail {

// V = diag(sqrt(w)) Phi, with amplitudes required to vanish off the supports.
inline Eigen::MatrixXd weighted_columns(const DiscretizedSpace& space, const Eigen::MatrixXd& phi) {
  space.validate();
  if (static_cast<std::size_t>(phi.rows()) != space.cell_count() || static_cast<std::size_t>(phi.cols()) != space.center_count())
    throw ContractError("amplitude matrix must be cells x centers");
  for (std::size_t x = 0; x < space.center_count(); ++x) {
    std::vector<bool> in(space.cell_count(), false);
    for (auto c : space.supports[x]) in[c] = true;
    for (std::size_t c = 0; c < space.cell_count(); ++c)
      if (!in[c] && phi(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(x)) != 0.0)
        throw ContractError("amplitude of " + space.centers[x] + " is nonzero outside its support");
  }
  Eigen::VectorXd root(space.cell_count());
  for (std::size_t c = 0; c < space.cell_count(); ++c) root(static_cast<Eigen::Index>(c)) = std::sqrt(space.weights[c]);
  return root.asDiagonal() * phi;
}

}  // namespace detail

// Exact isometry check from squared amplitudes (cells x centers) and rational
// weights: with disjoint supports the off-diagonal Gram entries vanish
// structurally, and each diagonal entry sum_c phi_x(c)^2 w_c is rational.
inline bool exact_isometry(const DiscretizedSpace& space, const std::vector<std::vector<Rational>>& amp_sq,
                           const std::vector<Rational>& weights) {
  if (space.overlap()) return false;
  for (std::size_t x = 0; x < space.center_count(); ++x) {
    Rational s = 0;
    for (std::size_t c = 0; c < space.cell_count(); ++c) s += amp_sq[c][x] * weights[c];
    if (s != 1) return false;
  }
  return true;
}

inline OperatorCertificate build_wannier_isometry(const DiscretizedSpace& space, const Eigen::MatrixXd& phi,
                                                  double norm_tol = 1e-12) {
  if (auto o = space.overlap())
    throw Refusal("supports of " + space.centers[o->first] + " and " + space.centers[o->second] +
                  " overlap; use the frame path");
  Eigen::MatrixXd u = detail::weighted_columns(space, phi);
  for (Eigen::Index x = 0; x < u.cols(); ++x) {
    double norm = u.col(x).norm();
    if (std::abs(norm - 1.0) > norm_tol)
      throw Refusal("column " + space.centers[static_cast<std::size_t>(x)] + " has norm " + std::to_string(norm) + ", not 1");
  }
  OperatorCertificate cert;
  cert.kind = "wannier_isometry";
  cert.dims = {{"cells", space.cell_count()}, {"centers", space.center_count()}};
  Eigen::MatrixXd id = Eigen::MatrixXd::Identity(u.cols(), u.cols());
  Eigen::MatrixXd p = u * u.transpose();
  cert.residuals["isometry"] = operator_norm(u.transpose() * u - id);
  cert.residuals["idempotent"] = operator_norm(p * p - p);
  cert.residuals["self_adjoint"] = operator_norm(p - p.transpose());
  cert.exact_flags["disjoint_supports"] = true;
  cert.values["max_support_diameter"] = space.max_support_diameter();
  cert.primary = std::move(u);
  cert.projection = std::move(p);
  return cert;
}

// Smallest R with every entry of `p` between cells farther apart than R at most
// `entry_tol` in magnitude.
inline double propagation_bound(const Eigen::MatrixXd& p, const DiscretizedSpace& space, double entry_tol = 0.0) {
  if (static_cast<std::size_t>(p.rows()) != space.cell_count() || p.rows() != p.cols())
    throw ContractError("projection must be cells x cells");
  double r = 0;
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index j = 0; j < p.cols(); ++j)
      if (std::abs(p(i, j)) > entry_tol) r = std::max(r, space.cell_distance(static_cast<std::size_t>(i), static_cast<std::size_t>(j)));
  return r;
}

// Orthonormal basis of the column space of `v` from a rank-revealing QR.
inline Eigen::MatrixXd column_space_projector(const Eigen::MatrixXd& v) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(v);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(v.rows(), qr.rank());
  return q * q.transpose();
}

inline OperatorCertificate frame_polar(const DiscretizedSpace& space, const Eigen::MatrixXd& phi, double lambda_min) {
  if (!(lambda_min > 0)) throw ContractError("lambda_min must be positive");
  Eigen::MatrixXd v = detail::weighted_columns(space, phi);
  Eigen::MatrixXd g = v.transpose() * v;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g);
  if (eig.info() != Eigen::Success) throw Error("eigensolver_failed", "Gram eigendecomposition failed");
  double min_eig = g.rows() ? eig.eigenvalues().minCoeff() : 1.0;
  if (min_eig < lambda_min)
    throw Refusal("Gram matrix min eigenvalue " + std::to_string(min_eig) + " is below lambda_min = " + std::to_string(lambda_min));

  Eigen::MatrixXd inv_sqrt = eig.eigenvectors() * eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                             eig.eigenvectors().transpose();
  Eigen::MatrixXd w = v * inv_sqrt;
  Eigen::MatrixXd p = w * w.transpose();
  Eigen::MatrixXd id = Eigen::MatrixXd::Identity(w.cols(), w.cols());

  OperatorCertificate cert;
  cert.kind = "frame_polar";
  cert.dims = {{"cells", space.cell_count()}, {"centers", space.center_count()}};
  cert.residuals["isometry"] = operator_norm(w.transpose() * w - id);
  cert.residuals["projector_vs_reference"] = operator_norm(p - column_space_projector(v));
  cert.residuals["gram_minus_identity"] = operator_norm(g - id);
  cert.exact_flags["disjoint_supports"] = !space.overlap().has_value();
  cert.values["min_eigenvalue"] = min_eig;
  cert.values["lambda_min"] = lambda_min;
  cert.values["max_support_diameter"] = space.max_support_diameter();
  cert.primary = std::move(w);
  cert.projection = std::move(p);
  return cert;
}

// ---- exact shift along a ray -----------------------------------------------------------

// Sparse integer matrix; entries kept in a map so products are exact.
struct SparseInt {
  std::size_t rows = 0, cols = 0;
  std::map<std::pair<std::size_t, std::size_t>, std::int64_t> entries;

  void set(std::size_t r, std::size_t c, std::int64_t v) {
    if (r >= rows || c >= cols) throw ContractError("sparse entry out of range");
    if (v == 0) {
      entries.erase({r, c});
    } else {
      entries[{r, c}] = v;
    }
  }

  SparseInt transpose() const {
    SparseInt t{cols, rows, {}};
    for (auto& [rc, v] : entries) t.entries[{rc.second, rc.first}] = v;
    return t;
  }

  friend SparseInt operator*(const SparseInt& a, const SparseInt& b) {
    if (a.cols != b.rows) throw ContractError("sparse product dimension mismatch");
    std::vector<std::vector<std::pair<std::size_t, std::int64_t>>> brow(b.rows);
    for (auto& [rc, v] : b.entries) brow[rc.first].emplace_back(rc.second, v);
    SparseInt out{a.rows, b.cols, {}};
    for (auto& [rc, v] : a.entries)
      for (auto [c, w] : brow[rc.second]) out.entries[{rc.first, c}] += v * w;
    std::erase_if(out.entries, [](auto& e) { return e.second == 0; });
    return out;
  }

  friend bool operator==(const SparseInt& a, const SparseInt& b) {
    return a.rows == b.rows && a.cols == b.cols && a.entries == b.entries;
  }

  // Rank of a diagonal 0/1 matrix (a coordinate projection); nullopt otherwise.
  std::optional<std::size_t> projection_rank() const {
    if (rows != cols) return std::nullopt;
    for (auto& [rc, v] : entries)
      if (rc.first != rc.second || v != 1) return std::nullopt;
    return entries.size();
  }

  Eigen::MatrixXd dense() const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (auto& [rc, v] : entries) m(static_cast<Eigen::Index>(rc.first), static_cast<Eigen::Index>(rc.second)) = static_cast<double>(v);
    return m;
  }
};

inline SparseInt operator-(const SparseInt& a, const SparseInt& b) {
  if (a.rows != b.rows || a.cols != b.cols) throw ContractError("sparse difference dimension mismatch");
  SparseInt out = a;
  for (auto& [rc, v] : b.entries) out.entries[rc] -= v;
  std::erase_if(out.entries, [](auto& e) { return e.second == 0; });
  return out;
}

struct MvnShift {
  std::vector<std::int64_t> k;     // k_1 .. k_nmax
  std::vector<std::int64_t> l;     // l_0 = 0, l_n = k_1 + ... + k_n
  std::size_t h_dim = 0;
  SparseInt t, p_plus_q, q;        // T : source -> target
  SparseInt tstar_t, t_tstar;      // h' = T*T, h = TT*

  std::size_t sites() const { return k.size(); }
  // Source site n (1-based) holds a P-copy then a Q-copy of H.
  std::size_t source_p(std::size_t n, std::size_t j) const { return (n - 1) * 2 * h_dim + j; }
  std::size_t source_q(std::size_t n, std::size_t j) const { return (n - 1) * 2 * h_dim + h_dim + j; }
  std::size_t target(std::size_t n, std::size_t j) const { return (n - 1) * h_dim + j; }
};

// Block matching with l_0 = 0: target site n receives the Q-block of source
// site n-1 (first l_{n-1} basis vectors) and the P-block of source site n (next
// k_n), so its rank is l_n. The Q-block of the last source site has no target.
inline MvnShift build_mvn_shift(const std::vector<std::int64_t>& k, std::optional<std::size_t> h_dim = std::nullopt) {
  if (k.size() < 3) throw ContractError("the shift needs at least 3 sites");
  MvnShift s;
  s.k = k;
  s.l.assign(k.size() + 1, 0);
  for (std::size_t n = 1; n <= k.size(); ++n) {
    if (k[n - 1] < 0) throw ContractError("k must be nonnegative");
    s.l[n] = s.l[n - 1] + k[n - 1];
  }
  std::size_t need = static_cast<std::size_t>(s.l.back());
  s.h_dim = h_dim.value_or(need);
  if (s.h_dim < need)
    throw Refusal("H_dim = " + std::to_string(s.h_dim) + " is smaller than l(n_max) = " + std::to_string(need));

  std::size_t n_max = k.size();
  std::size_t src = 2 * s.h_dim * n_max, tgt = s.h_dim * n_max;
  s.t = SparseInt{tgt, src, {}};
  s.p_plus_q = SparseInt{src, src, {}};
  s.q = SparseInt{tgt, tgt, {}};
  for (std::size_t n = 1; n <= n_max; ++n) {
    auto kn = static_cast<std::size_t>(s.k[n - 1]);
    auto ln = static_cast<std::size_t>(s.l[n]), lprev = static_cast<std::size_t>(s.l[n - 1]);
    for (std::size_t j = 0; j < kn; ++j) s.p_plus_q.set(s.source_p(n, j), s.source_p(n, j), 1);
    for (std::size_t j = 0; j < ln; ++j) s.p_plus_q.set(s.source_q(n, j), s.source_q(n, j), 1);
    for (std::size_t j = 0; j < ln; ++j) s.q.set(s.target(n, j), s.target(n, j), 1);
    for (std::size_t j = 0; j < kn; ++j) s.t.set(s.target(n, lprev + j), s.source_p(n, j), 1);
    if (n < n_max)
      for (std::size_t j = 0; j < ln; ++j) s.t.set(s.target(n + 1, j), s.source_q(n, j), 1);
  }
  SparseInt ts = s.t.transpose();
  s.tstar_t = ts * s.t;
  s.t_tstar = s.t * ts;
  return s;
}

inline OperatorCertificate mvn_shift_witness(const std::vector<std::int64_t>& k, std::optional<std::size_t> h_dim = std::nullopt) {
  MvnShift s = build_mvn_shift(k, h_dim);
  std::size_t n_max = s.sites();

  // Restrict a source-side square matrix to the rows/columns of sites < n_max.
  auto interior = [&](const SparseInt& m) {
    SparseInt out{m.rows, m.cols, {}};
    std::size_t limit = 2 * s.h_dim * (n_max - 1);
    for (auto& [rc, v] : m.entries)
      if (rc.first < limit && rc.second < limit) out.entries[rc] = v;
    return out;
  };

  SparseInt defect = s.p_plus_q - s.tstar_t;
  auto defect_rank = defect.projection_rank();
  bool defect_on_last_q = defect_rank.has_value();
  for (auto& [rc, v] : defect.entries)
    defect_on_last_q = defect_on_last_q && rc.first >= s.source_q(n_max, 0) && rc.first < s.source_q(n_max, 0) + s.h_dim;

  OperatorCertificate cert;
  cert.kind = "mvn_shift";
  cert.dims = {{"sites", n_max},
               {"h_dim", s.h_dim},
               {"source", s.t.cols},
               {"target", s.t.rows},
               {"l_nmax", static_cast<std::size_t>(s.l.back())}};
  cert.exact_flags["tstar_t_eq_p_plus_q_interior"] = interior(s.tstar_t) == interior(s.p_plus_q);
  cert.exact_flags["t_tstar_eq_q"] = s.t_tstar == s.q;
  cert.exact_flags["partial_isometry"] = s.t * s.t.transpose() * s.t == s.t;
  cert.exact_flags["defect_is_last_site_q_block"] = defect_on_last_q;
  std::size_t rank_pq = *s.p_plus_q.projection_rank(), rank_q = *s.q.projection_rank();
  auto rank_tt = s.tstar_t.projection_rank(), rank_ttstar = s.t_tstar.projection_rank();
  cert.exact_flags["rank_bookkeeping"] = defect_rank && rank_tt && rank_ttstar && *rank_tt + *defect_rank == rank_pq &&
                                         *rank_ttstar == rank_q && *rank_tt == *rank_ttstar;
  cert.residuals["tstar_t_minus_p_plus_q_interior"] = static_cast<double>((interior(s.tstar_t) - interior(s.p_plus_q)).entries.size());
  cert.residuals["t_tstar_minus_q"] = static_cast<double>((s.t_tstar - s.q).entries.size());
  cert.boundary_defect_rank = defect_rank.value_or(SIZE_MAX);

  // Propagation in sites: T moves a basis vector by at most one site.
  std::size_t prop = 0;
  for (auto& [rc, v] : s.t.entries) {
    std::size_t to = rc.first / s.h_dim + 1, from = rc.second / (2 * s.h_dim) + 1;
    prop = std::max(prop, to > from ? to - from : from - to);
  }
  cert.propagation = static_cast<double>(prop);
  cert.values["rank_p_plus_q"] = static_cast<double>(rank_pq);
  cert.values["rank_q"] = static_cast<double>(rank_q);
  cert.values["rank_tstar_t"] = static_cast<double>(rank_tt.value_or(0));
  return cert;
}

}  // namespace coarse
