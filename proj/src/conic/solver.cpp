// Primal-dual interior-point method on the homogeneous self-dual embedding
//
//   minimize c'x  s.t.  Ax = b,  Gx + s = h,  s in K = R+^l x Q^{q1} x ... ,
//
// with Nesterov-Todd scaling and a Mehrotra predictor-corrector. The user
// problem is first reduced (fixed and isolated variables removed, constant
// rows checked) and equilibrated; residuals used for termination are always
// measured on the unscaled problem.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <optional>
#include <cstdio>
#include <memory>
#include <mutex>

#include "dercap/conic/solver.hpp"
#include "cones.hpp"

namespace dercap::conic {

std::string_view to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
    case Status::max_iterations: return "max-iterations";
  }
  return "unknown";
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using namespace detail;

enum class RowKind { upper, lower, range_upper, range_lower };

struct LpOrigin {
  RowKind kind;
  int index;       // variable index (bounds) or range row index
  int bound_var;   // reduced variable when the row is a plain bound, else -1
};


// Reduced, equilibrated problem in standard form.
struct Reduced {
  int n = 0;
  std::vector<int> to_original;     // reduced -> original variable
  std::vector<double> removed_value;  // original-space value of removed vars (NaN if active)
  MatrixXd A;
  VectorXd b;
  std::vector<int> eq_origin;
  MatrixXd G;
  VectorXd h;
  std::vector<LpOrigin> lp_origin;
  std::vector<int> cone_origin;
  Layout layout;
  VectorXd c;

  VectorXd col_scale;
  VectorXd eq_scale;
  VectorXd row_scale;

  // unscaled copies for residual measurement
  MatrixXd A0, G0;
  VectorXd b0, h0, c0;
};

struct PresolveVerdict {
  Status status = Status::optimal;  // optimal => continue to IPM
  Multipliers certificate;
  std::vector<double> ray;
  std::vector<double> x;
};

Multipliers empty_multipliers(const ConicProblem& p) {
  Multipliers m;
  m.equality.assign(p.equalities().size(), 0.0);
  m.lower.assign(p.num_variables(), 0.0);
  m.upper.assign(p.num_variables(), 0.0);
  m.range_lower.assign(p.ranges().size(), 0.0);
  m.range_upper.assign(p.ranges().size(), 0.0);
  m.cones.resize(p.cones().size());
  for (std::size_t k = 0; k < p.cones().size(); ++k) m.cones[k].assign(p.cones()[k].u.size() + 1, 0.0);
  return m;
}

// Sets bound multipliers of removed variables so stationarity (or the Farkas
// identity when with_cost == false) holds on them.
void complete_removed(const ConicProblem& p, const std::vector<double>& removed_value, Multipliers& m,
                      bool with_cost) {
  std::vector<double> g(p.num_variables(), 0.0);
  for (std::size_t r = 0; r < p.equalities().size(); ++r)
    for (const auto& t : p.equalities()[r].terms) g[t.var] += t.coef * m.equality[r];
  for (std::size_t r = 0; r < p.ranges().size(); ++r) {
    const double w = m.range_upper[r] - m.range_lower[r];
    for (const auto& t : p.ranges()[r].expr.terms) g[t.var] += t.coef * w;
  }
  for (std::size_t k = 0; k < p.cones().size(); ++k) {
    const auto& cone = p.cones()[k];
    const auto& z = m.cones[k];
    for (const auto& t : cone.t.terms) g[t.var] -= t.coef * z[0];
    for (std::size_t j = 0; j < cone.u.size(); ++j)
      for (const auto& t : cone.u[j].terms) g[t.var] -= t.coef * z[j + 1];
  }
  for (int i = 0; i < p.num_variables(); ++i) {
    if (std::isnan(removed_value[i])) continue;
    const double r = (with_cost ? p.cost()[i] : 0.0) + g[i];
    m.upper[i] = std::isfinite(p.upper()[i]) ? std::max(0.0, -r) : 0.0;
    m.lower[i] = std::isfinite(p.lower()[i]) ? std::max(0.0, r) : 0.0;
  }
}

double soc_gap(const double* v, int d) {
  double s = 0.0;
  for (int i = 1; i < d; ++i) s += v[i] * v[i];
  return std::sqrt(s) - v[0];
}

// ---------------------------------------------------------------------------
// Presolve + standard form

std::optional<PresolveVerdict> reduce(const ConicProblem& p, const SolverOptions& opts, Reduced& red) {
  const int n0 = p.num_variables();
  const double tol = 1e-9;
  std::vector<char> active(n0, 0);
  red.removed_value.assign(n0, std::nan(""));

  for (int i = 0; i < n0; ++i) {
    if (p.lower()[i] > p.upper()[i]) {
      PresolveVerdict v;
      v.status = Status::infeasible;
      v.certificate = empty_multipliers(p);
      v.certificate.upper[i] = 1.0;
      v.certificate.lower[i] = 1.0;
      return v;
    }
  }

  auto mark = [&](const std::vector<Term>& terms) {
    for (const auto& t : terms)
      if (t.coef != 0.0) active[t.var] = 1;
  };
  for (const auto& r : p.equalities()) mark(r.terms);
  for (const auto& r : p.ranges()) mark(r.expr.terms);
  for (const auto& c : p.cones()) {
    mark(c.t.terms);
    for (const auto& u : c.u) mark(u.terms);
  }

  std::vector<double> ray;
  for (int i = 0; i < n0; ++i) {
    const double lo = p.lower()[i], up = p.upper()[i];
    if (opts.presolve && lo == up) {
      active[i] = 0;
      red.removed_value[i] = lo;
      continue;
    }
    if (active[i]) continue;
    const double c = p.cost()[i];
    if (c > 0.0) {
      if (!std::isfinite(lo)) {
        if (ray.empty()) ray.assign(n0, 0.0);
        ray[i] = -1.0;
      }
      red.removed_value[i] = lo;
    } else if (c < 0.0) {
      if (!std::isfinite(up)) {
        if (ray.empty()) ray.assign(n0, 0.0);
        ray[i] = 1.0;
      }
      red.removed_value[i] = up;
    } else {
      red.removed_value[i] = std::clamp(0.0, lo, up);
    }
  }
  if (!ray.empty()) {
    PresolveVerdict v;
    v.status = Status::unbounded;
    v.ray = ray;
    return v;
  }

  std::vector<int> to_reduced(n0, -1);
  for (int i = 0; i < n0; ++i)
    if (std::isnan(red.removed_value[i])) {
      to_reduced[i] = static_cast<int>(red.to_original.size());
      red.to_original.push_back(i);
    }
  const int n = static_cast<int>(red.to_original.size());
  red.n = n;

  auto fixed_part = [&](const std::vector<Term>& terms) {
    double s = 0.0;
    for (const auto& t : terms)
      if (to_reduced[t.var] < 0) s += t.coef * red.removed_value[t.var];
    return s;
  };
  auto has_active = [&](const std::vector<Term>& terms) {
    for (const auto& t : terms)
      if (to_reduced[t.var] >= 0 && t.coef != 0.0) return true;
    return false;
  };
  auto infeasible = [&](Multipliers cert) {
    complete_removed(p, red.removed_value, cert, false);
    PresolveVerdict v;
    v.status = Status::infeasible;
    v.certificate = std::move(cert);
    return v;
  };

  // equalities
  std::vector<int> eq_rows;
  std::vector<double> eq_rhs;
  for (std::size_t r = 0; r < p.equalities().size(); ++r) {
    const auto& row = p.equalities()[r];
    const double rhs = row.rhs - fixed_part(row.terms);
    if (!has_active(row.terms)) {
      if (std::abs(rhs) > tol * (1.0 + std::abs(row.rhs))) {
        auto cert = empty_multipliers(p);
        cert.equality[r] = rhs > 0 ? -1.0 : 1.0;
        return infeasible(cert);
      }
      continue;
    }
    eq_rows.push_back(static_cast<int>(r));
    eq_rhs.push_back(rhs);
  }
  const int pe = static_cast<int>(eq_rows.size());
  red.A = MatrixXd::Zero(pe, n);
  red.b = VectorXd::Zero(pe);
  red.eq_origin = eq_rows;
  for (int k = 0; k < pe; ++k) {
    for (const auto& t : p.equalities()[eq_rows[k]].terms)
      if (to_reduced[t.var] >= 0) red.A(k, to_reduced[t.var]) += t.coef;
    red.b(k) = eq_rhs[k];
  }

  // LP rows: bounds, then ranges
  struct LpRow {
    LpOrigin origin;
    std::vector<Term> terms;  // reduced indices
    double h;
  };
  std::vector<LpRow> lp_rows;
  for (int j = 0; j < n; ++j) {
    const int i = red.to_original[j];
    if (std::isfinite(p.upper()[i])) lp_rows.push_back({{RowKind::upper, i, j}, {{j, 1.0}}, p.upper()[i]});
    if (std::isfinite(p.lower()[i])) lp_rows.push_back({{RowKind::lower, i, j}, {{j, -1.0}}, -p.lower()[i]});
  }
  for (std::size_t r = 0; r < p.ranges().size(); ++r) {
    const auto& row = p.ranges()[r];
    if (row.lower > row.upper) {
      auto cert = empty_multipliers(p);
      cert.range_lower[r] = cert.range_upper[r] = 1.0;
      return infeasible(cert);
    }
    const double k0 = row.expr.constant + fixed_part(row.expr.terms);
    if (!has_active(row.expr.terms)) {
      if (std::isfinite(row.upper) && k0 > row.upper + tol * (1.0 + std::abs(row.upper))) {
        auto cert = empty_multipliers(p);
        cert.range_upper[r] = 1.0;
        return infeasible(cert);
      }
      if (std::isfinite(row.lower) && k0 < row.lower - tol * (1.0 + std::abs(row.lower))) {
        auto cert = empty_multipliers(p);
        cert.range_lower[r] = 1.0;
        return infeasible(cert);
      }
      continue;
    }
    std::vector<Term> terms;
    for (const auto& t : row.expr.terms)
      if (to_reduced[t.var] >= 0) terms.push_back({to_reduced[t.var], t.coef});
    if (std::isfinite(row.upper)) lp_rows.push_back({{RowKind::range_upper, static_cast<int>(r), -1}, terms, row.upper - k0});
    if (std::isfinite(row.lower)) {
      std::vector<Term> neg = terms;
      for (auto& t : neg) t.coef = -t.coef;
      lp_rows.push_back({{RowKind::range_lower, static_cast<int>(r), -1}, neg, k0 - row.lower});
    }
  }

  // cones
  std::vector<int> kept_cones;
  for (std::size_t k = 0; k < p.cones().size(); ++k) {
    const auto& c = p.cones()[k];
    bool any = has_active(c.t.terms);
    for (const auto& u : c.u) any = any || has_active(u.terms);
    if (!any) {
      std::vector<double> s;
      s.push_back(c.t.constant + fixed_part(c.t.terms));
      for (const auto& u : c.u) s.push_back(u.constant + fixed_part(u.terms));
      const double gap = soc_gap(s.data(), static_cast<int>(s.size()));
      if (gap > tol * (1.0 + std::abs(s[0]))) {
        auto cert = empty_multipliers(p);
        double nu = 0.0;
        for (std::size_t j = 1; j < s.size(); ++j) nu += s[j] * s[j];
        nu = std::sqrt(nu);
        cert.cones[k][0] = 1.0;
        for (std::size_t j = 1; j < s.size(); ++j) cert.cones[k][j] = -s[j] / nu;
        return infeasible(cert);
      }
      continue;
    }
    kept_cones.push_back(static_cast<int>(k));
  }

  Layout& L = red.layout;
  L.lp = static_cast<int>(lp_rows.size());
  int m = L.lp;
  for (int k : kept_cones) {
    const int d = static_cast<int>(p.cones()[k].u.size()) + 1;
    L.offsets.push_back(m);
    L.dims.push_back(d);
    m += d;
  }
  L.m = m;
  L.degree = L.lp + static_cast<int>(kept_cones.size());
  red.cone_origin = kept_cones;

  red.G = MatrixXd::Zero(m, n);
  red.h = VectorXd::Zero(m);
  for (int r = 0; r < L.lp; ++r) {
    for (const auto& t : lp_rows[r].terms) red.G(r, t.var) += t.coef;
    red.h(r) = lp_rows[r].h;
    red.lp_origin.push_back(lp_rows[r].origin);
  }
  for (std::size_t q = 0; q < kept_cones.size(); ++q) {
    const auto& c = p.cones()[kept_cones[q]];
    const int off = L.offsets[q];
    auto fill = [&](int row, const Affine& a) {
      // s_row = a(x) = a.constant + fixed + sum coef x  ->  G = -coef, h = constant
      for (const auto& t : a.terms)
        if (to_reduced[t.var] >= 0) red.G(row, to_reduced[t.var]) -= t.coef;
      red.h(row) = a.constant + fixed_part(a.terms);
    };
    fill(off, c.t);
    for (std::size_t j = 0; j < c.u.size(); ++j) fill(off + 1 + static_cast<int>(j), c.u[j]);
  }

  red.c = VectorXd::Zero(n);
  for (int j = 0; j < n; ++j) red.c(j) = p.cost()[red.to_original[j]];

  red.A0 = red.A;
  red.G0 = red.G;
  red.b0 = red.b;
  red.h0 = red.h;
  red.c0 = red.c;
  return std::nullopt;
}

// Ruiz equilibration with one scalar per cone block.
void equilibrate(Reduced& red) {
  const int n = red.n, p = static_cast<int>(red.A.rows()), m = static_cast<int>(red.G.rows());
  red.col_scale = VectorXd::Ones(n);
  red.eq_scale = VectorXd::Ones(p);
  red.row_scale = VectorXd::Ones(m);
  const auto& L = red.layout;
  for (int pass = 0; pass < 8; ++pass) {
    VectorXd cmax = VectorXd::Zero(n);
    for (int j = 0; j < n; ++j) {
      double v = 0.0;
      if (p > 0) v = red.A.col(j).lpNorm<Eigen::Infinity>();
      if (m > 0) v = std::max(v, red.G.col(j).lpNorm<Eigen::Infinity>());
      cmax(j) = v;
    }
    for (int j = 0; j < n; ++j) {
      const double d = cmax(j) > 0.0 ? 1.0 / std::sqrt(cmax(j)) : 1.0;
      red.col_scale(j) *= d;
      if (p > 0) red.A.col(j) *= d;
      if (m > 0) red.G.col(j) *= d;
    }
    for (int i = 0; i < p; ++i) {
      const double v = red.A.row(i).lpNorm<Eigen::Infinity>();
      const double e = v > 0.0 ? 1.0 / std::sqrt(v) : 1.0;
      red.eq_scale(i) *= e;
      red.A.row(i) *= e;
    }
    for (int i = 0; i < L.lp; ++i) {
      const double v = red.G.row(i).lpNorm<Eigen::Infinity>();
      const double e = v > 0.0 ? 1.0 / std::sqrt(v) : 1.0;
      red.row_scale(i) *= e;
      red.G.row(i) *= e;
    }
    for (std::size_t k = 0; k < L.dims.size(); ++k) {
      const double v = red.G.middleRows(L.offsets[k], L.dims[k]).lpNorm<Eigen::Infinity>();
      const double e = v > 0.0 ? 1.0 / std::sqrt(v) : 1.0;
      red.row_scale.segment(L.offsets[k], L.dims[k]) *= e;
      red.G.middleRows(L.offsets[k], L.dims[k]) *= e;
    }
  }
  red.b = red.eq_scale.cwiseProduct(red.b0);
  red.h = red.row_scale.cwiseProduct(red.h0);
  red.c = red.col_scale.cwiseProduct(red.c0);
}

// ---------------------------------------------------------------------------
// Reduced KKT system  [0 A' G'; A 0 0; G 0 -W'W]

// Normal-equations solver. G is dense in storage but each LP row and each
// cone block usually touches only a few columns, so N = G'W^{-2}G is
// assembled block by block over the columns each block actually uses.
class KktSystem {
 public:
  KktSystem(const MatrixXd& A, const MatrixXd& G, const Layout& L)
      : A_(A), G_(G), L_(L), Gs_(G.sparseView()), GsT_(G.transpose().sparseView()) {
    const int n = static_cast<int>(G.cols());
    auto support = [&](int r0, int rows) {
      Block b;
      b.row0 = r0;
      b.rows = rows;
      for (int j = 0; j < n; ++j)
        if (G.block(r0, j, rows, 1).cwiseAbs().maxCoeff() > 0.0) b.cols.push_back(j);
      b.sub.resize(rows, b.cols.size());
      for (std::size_t c = 0; c < b.cols.size(); ++c) b.sub.col(c) = G.block(r0, b.cols[c], rows, 1);
      return b;
    };
    // Blocks touching many columns go through one dense rank update.
    const std::size_t dense_cut = std::max<std::size_t>(8, n / 4);
    for (int i = 0; i < L.lp; ++i) {
      Block b = support(i, 1);
      if (b.cols.size() > dense_cut) {
        // Two-sided rows arrive as a pair g, -alpha g; they share one outer product.
        DenseBlock d{i, 1, -1};
        if (i + 1 < L.lp) {
          const int j0 = b.cols.front();
          const double alpha = -G(i + 1, j0) / G(i, j0);
          if (alpha > 0.0 && (G.row(i + 1) + alpha * G.row(i)).cwiseAbs().maxCoeff() <=
                                 1e-14 * alpha * G.row(i).cwiseAbs().maxCoeff()) {
            d.partner = i + 1;
            d.alpha = alpha;
            ++i;
          }
        }
        dense_.push_back(d);
        dense_rows_ += 1;
      } else {
        sparse_.push_back({std::move(b), -1});
      }
    }
    for (std::size_t q = 0; q < L.dims.size(); ++q) {
      Block b = support(L.offsets[q], L.dims[q]);
      if (b.cols.size() > dense_cut) {
        dense_.push_back({L.offsets[q], L.dims[q], static_cast<int>(q)});
        dense_rows_ += L.dims[q];
      } else {
        sparse_.push_back({std::move(b), static_cast<int>(q)});
      }
    }
    Vd_.resize(dense_rows_, n);
  }

  bool factor(const Scaling& W) {
    W_ = &W;
    const int n = static_cast<int>(G_.cols());
    const int p = static_cast<int>(A_.rows());
    MatrixXd N = MatrixXd::Zero(n, n);
    if (dense_rows_ > 0) {
      int r = 0;
      for (const auto& d : dense_) {
        if (d.cone < 0) {
          double w2 = 1.0 / (W.lp(d.row0) * W.lp(d.row0));
          if (d.partner >= 0) w2 += d.alpha * d.alpha / (W.lp(d.partner) * W.lp(d.partner));
          Vd_.row(r) = G_.row(d.row0) * std::sqrt(w2);
        } else {
          auto blk = Vd_.middleRows(r, d.rows);
          blk = G_.middleRows(d.row0, d.rows);
          apply_inverse(W.soc[d.cone], blk);
        }
        r += d.rows;
      }
      N.selfadjointView<Eigen::Lower>().rankUpdate(Vd_.transpose());
      N.triangularView<Eigen::StrictlyUpper>() = N.transpose();
    }
    MatrixXd V;
    for (const auto& sb : sparse_) {
      const auto& b = sb.block;
      if (b.cols.empty()) continue;
      V = b.sub;
      if (sb.cone < 0) {
        V /= W.lp(b.row0);
      } else {
        apply_inverse(W.soc[sb.cone], V);
      }
      const MatrixXd nb = V.transpose() * V;
      for (std::size_t a = 0; a < b.cols.size(); ++a)
        for (std::size_t c = 0; c < b.cols.size(); ++c) N(b.cols[a], b.cols[c]) += nb(a, c);
    }
    // Regularise relative to each diagonal entry: near the optimum the
    // diagonal spans many orders of magnitude and a uniform shift would
    // swamp the directions of variables that sit away from every bound.
    const double dmax = n > 0 ? N.diagonal().cwiseAbs().maxCoeff() : 1.0;
    double rel = 1e-12, abs = 1e-24 * (1.0 + dmax);
    for (int attempt = 0; attempt < 6; ++attempt) {
      MatrixXd Nr = N;
      Nr.diagonal().array() += rel * N.diagonal().array().abs() + abs;
      llt_.compute(Nr);
      if (llt_.info() == Eigen::Success) break;
      rel *= 100.0;
      abs *= 1e4;
      if (attempt == 5) return false;
    }
    if (p > 0) {
      NinvAt_ = llt_.solve(A_.transpose());
      MatrixXd S = A_ * NinvAt_;
      const double smax = S.diagonal().cwiseAbs().maxCoeff();
      S.diagonal().array() += 1e-13 * (1.0 + smax);
      ldlt_.compute(S);
      if (ldlt_.info() != Eigen::Success) return false;
    }
    return true;
  }

  void solve(const VectorXd& r1, const VectorXd& r2, const VectorXd& r3, VectorXd& dx, VectorXd& dy,
             VectorXd& dz) const {
    raw_solve(r1, r2, r3, dx, dy, dz);
    // iterative refinement against the unregularised system
    double prev = kInf;
    for (int it = 0; it < 8; ++it) {
      VectorXd e1 = r1 - (A_.transpose() * dy + GsT_ * dz);
      VectorXd e2 = r2 - A_ * dx;
      VectorXd e3 = r3 - (Gs_ * dx - apply_h(dz));
      const double err = std::max({e1.lpNorm<Eigen::Infinity>(), e2.size() ? e2.lpNorm<Eigen::Infinity>() : 0.0,
                                   e3.size() ? e3.lpNorm<Eigen::Infinity>() : 0.0});
      if (err < 1e-14 || err > 0.5 * prev) break;
      prev = err;
      VectorXd cx, cy, cz;
      raw_solve(e1, e2, e3, cx, cy, cz);
      dx += cx;
      dy += cy;
      dz += cz;
    }
  }

 private:
  struct Block {
    int row0 = 0;
    int rows = 0;
    std::vector<int> cols;
    MatrixXd sub;
  };
  struct SparseBlock {
    Block block;
    int cone;  // -1 for an LP row
  };
  struct DenseBlock {
    int row0;
    int rows;
    int cone;
    int partner = -1;  // LP row equal to -alpha times this one
    double alpha = 0.0;
  };

  // W^{-1} = (1/beta)(2 Jw (Jw)' - J), applied to the rows of M in place.
  template <class M>
  static void apply_inverse(const SocScaling& s, M&& m) {
    VectorXd jw = s.w;
    jw.tail(jw.size() - 1) *= -1.0;
    const Eigen::RowVectorXd proj = 2.0 * (jw.transpose() * m);
    m.row(0) *= -1.0;
    m.noalias() += jw * proj;
    m /= s.beta;
  }

  VectorXd apply_h(const VectorXd& v) const {
    return scaled(L_, *W_, false, scaled(L_, *W_, false, v));
  }

  // dz = W^{-2}(G dx - r3), with dx from N dx = r1 + G'W^{-2} r3 - A'dy.
  void raw_solve(const VectorXd& r1, const VectorXd& r2, const VectorXd& r3, VectorXd& dx, VectorXd& dy,
                 VectorXd& dz) const {
    const VectorXd w2r3 = scaled(L_, *W_, true, scaled(L_, *W_, true, r3));
    const VectorXd f = r1 + GsT_ * w2r3;
    const VectorXd nf = llt_.solve(f);
    if (A_.rows() > 0) {
      dy = ldlt_.solve(A_ * nf - r2);
      dx = nf - NinvAt_ * dy;
    } else {
      dy = VectorXd::Zero(0);
      dx = nf;
    }
    dz = scaled(L_, *W_, true, scaled(L_, *W_, true, Gs_ * dx - r3));
  }

  const MatrixXd& A_;
  const MatrixXd& G_;
  const Layout& L_;
  // Row-major copies for the matrix-vector products of the solve phase.
  Eigen::SparseMatrix<double, Eigen::RowMajor> Gs_;
  Eigen::SparseMatrix<double, Eigen::RowMajor> GsT_;
  std::vector<DenseBlock> dense_;
  std::vector<SparseBlock> sparse_;
  int dense_rows_ = 0;
  MatrixXd Vd_;
  const Scaling* W_ = nullptr;
  MatrixXd NinvAt_;
  Eigen::LLT<MatrixXd> llt_;
  Eigen::LDLT<MatrixXd> ldlt_;
};

// ---------------------------------------------------------------------------
// Mapping back to the user problem

std::vector<double> full_x(const ConicProblem& p, const Reduced& red, const VectorXd& xr) {
  std::vector<double> x(p.num_variables());
  for (int i = 0; i < p.num_variables(); ++i) x[i] = red.removed_value[i];
  for (int j = 0; j < red.n; ++j) x[red.to_original[j]] = xr(j);
  return x;
}

Multipliers to_multipliers(const ConicProblem& p, const Reduced& red, const VectorXd& y, const VectorXd& z) {
  Multipliers m = empty_multipliers(p);
  for (std::size_t k = 0; k < red.eq_origin.size(); ++k) m.equality[red.eq_origin[k]] = y(k);
  for (int i = 0; i < red.layout.lp; ++i) {
    const auto& o = red.lp_origin[i];
    switch (o.kind) {
      case RowKind::upper: m.upper[o.index] = z(i); break;
      case RowKind::lower: m.lower[o.index] = z(i); break;
      case RowKind::range_upper: m.range_upper[o.index] = z(i); break;
      case RowKind::range_lower: m.range_lower[o.index] = z(i); break;
    }
  }
  for (std::size_t q = 0; q < red.cone_origin.size(); ++q) {
    auto& zc = m.cones[red.cone_origin[q]];
    for (int j = 0; j < red.layout.dims[q]; ++j) zc[j] = z(red.layout.offsets[q] + j);
  }
  return m;
}

ConicSolution solve_impl(const ConicProblem& problem, const SolverOptions& opts);

std::mutex observer_mutex;
std::shared_ptr<const SolveObserver> observer;

}  // namespace

SolveObserver set_solve_observer(SolveObserver obs) {
  std::lock_guard lock(observer_mutex);
  SolveObserver previous = observer ? *observer : SolveObserver{};
  observer = obs ? std::make_shared<const SolveObserver>(std::move(obs)) : nullptr;
  return previous;
}

ConicSolution solve(const ConicProblem& problem, const SolverOptions& opts) {
  auto sol = solve_impl(problem, opts);
  std::shared_ptr<const SolveObserver> obs;
  {
    std::lock_guard lock(observer_mutex);
    obs = observer;
  }
  if (obs) (*obs)(problem, sol);
  return sol;
}

namespace {

ConicSolution solve_impl(const ConicProblem& problem, const SolverOptions& opts) {
  problem.validate();
  ConicSolution sol;
  Reduced red;
  if (auto verdict = reduce(problem, opts, red)) {
    sol.status = verdict->status;
    sol.certificate = std::move(verdict->certificate);
    sol.ray = std::move(verdict->ray);
    return sol;
  }
  equilibrate(red);

  const int n = red.n;
  const int p = static_cast<int>(red.A.rows());
  const Layout& L = red.layout;
  const int m = L.m;

  const MatrixXd& A = red.A;
  const MatrixXd& G = red.G;
  const VectorXd& b = red.b;
  const VectorXd& h = red.h;
  const VectorXd& c = red.c;

  KktSystem kkt(A, G, L);
  using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;
  const SpMat Gs = G.sparseView(), GsT = G.transpose().sparseView();
  const SpMat G0s = red.G0.sparseView(), G0sT = red.G0.transpose().sparseView();
  const VectorXd e = identity(L);

  auto finish_optimal = [&](const VectorXd& x, const VectorXd& y, const VectorXd& z, double tau) {
    const VectorXd xo = red.col_scale.cwiseProduct(x) / tau;
    const VectorXd yo = red.eq_scale.cwiseProduct(y) / tau;
    const VectorXd zo = red.row_scale.cwiseProduct(z) / tau;
    sol.x = full_x(problem, red, xo);
    sol.duals = to_multipliers(problem, red, yo, zo);
    complete_removed(problem, red.removed_value, sol.duals, true);
    sol.objective = problem.objective(sol.x);
    sol.kkt = check_kkt(problem, sol);
  };

  // Trivial problem: nothing left after presolve.
  if (n == 0 || (m == 0 && p == 0)) {
    if (n > 0 && c.lpNorm<Eigen::Infinity>() > 0.0) {
      sol.status = Status::unbounded;
      VectorXd r = -c;
      sol.ray = full_x(problem, red, red.col_scale.cwiseProduct(r));
      for (int i = 0; i < problem.num_variables(); ++i)
        if (!std::isnan(red.removed_value[i])) sol.ray[i] = 0.0;
      return sol;
    }
    finish_optimal(VectorXd::Zero(n), VectorXd::Zero(p), VectorXd::Zero(m), 1.0);
    sol.status = Status::optimal;
    return sol;
  }

  // Initial point.
  VectorXd x, y, z, s;
  {
    Scaling I;
    I.lp = VectorXd::Ones(L.lp);
    I.soc.resize(L.dims.size());
    for (std::size_t k = 0; k < L.dims.size(); ++k) {
      I.soc[k].beta = 1.0;
      I.soc[k].w = VectorXd::Zero(L.dims[k]);
      I.soc[k].w(0) = 1.0;
    }
    if (!kkt.factor(I)) {
      sol.status = Status::max_iterations;
      return sol;
    }
    VectorXd px, py, pz;
    kkt.solve(VectorXd::Zero(n), b, h, px, py, pz);
    s = -pz;
    VectorXd dx, dy, dz;
    kkt.solve(-c, VectorXd::Zero(p), VectorXd::Zero(m), dx, dy, dz);
    x = px;
    y = dy;
    z = dz;
    auto shift = [&](VectorXd& v) {
      double a = -kInf;
      for (int i = 0; i < L.lp; ++i) a = std::max(a, -v(i));
      for (std::size_t k = 0; k < L.dims.size(); ++k) a = std::max(a, soc_gap(v.data() + L.offsets[k], L.dims[k]));
      if (a >= -1e-8) v += (1.0 + std::max(a, 0.0)) * e;
    };
    shift(s);
    shift(z);
  }
  double tau = 1.0, kappa = 1.0;

  const double bnorm = std::max(red.b0.size() ? red.b0.lpNorm<Eigen::Infinity>() : 0.0,
                                red.h0.size() ? red.h0.lpNorm<Eigen::Infinity>() : 0.0);
  const double cnorm = red.c0.lpNorm<Eigen::Infinity>();

  Scaling W;
  VectorXd lambda;
  int stall = 0;
  for (int it = 0; it <= opts.max_iterations; ++it) {
    sol.iterations = it;

    // residuals in the scaled space
    const VectorXd rx = A.transpose() * y + GsT * z + c * tau;
    const VectorXd ry = -A * x + b * tau;
    const VectorXd rz = -(Gs * x) + h * tau - s;
    const double rt = -c.dot(x) - b.dot(y) - h.dot(z) - kappa;
    const double mu = (s.dot(z) + tau * kappa) / (L.degree + 1);

    // termination on the unscaled reduced problem
    {
      const VectorXd xo = red.col_scale.cwiseProduct(x) / tau;
      const VectorXd yo = red.eq_scale.cwiseProduct(y) / tau;
      const VectorXd zo = red.row_scale.cwiseProduct(z) / tau;
      const VectorXd so = s.cwiseQuotient(red.row_scale) / tau;
      double pres = 0.0;
      if (p > 0) pres = (red.A0 * xo - red.b0).lpNorm<Eigen::Infinity>();
      if (m > 0) pres = std::max(pres, (G0s * xo + so - red.h0).lpNorm<Eigen::Infinity>());
      pres /= (1.0 + bnorm);
      VectorXd st = red.c0;
      if (p > 0) st += red.A0.transpose() * yo;
      if (m > 0) st += G0sT * zo;
      const double dres = st.lpNorm<Eigen::Infinity>() / (1.0 + cnorm);
      const double gap = std::abs(so.dot(zo)) / (1.0 + std::abs(red.c0.dot(xo)));
      if (opts.verbose)
        std::fprintf(stderr, "%3d  pres %9.2e  dres %9.2e  gap %9.2e  tau %9.2e  kappa %9.2e  mu %9.2e\n", it, pres,
                     dres, gap, tau, kappa, mu);
      if (pres < opts.feastol && dres < opts.feastol && gap < opts.gaptol) {
        finish_optimal(x, y, z, tau);
        if (sol.kkt.max() <= std::max(opts.feastol, opts.gaptol)) {
          sol.status = Status::optimal;
          return sol;
        }
      }

      // infeasibility certificates (invariant under the equilibration)
      const double by_hz = b.dot(y) + h.dot(z);
      if (by_hz < 0.0) {
        const VectorXd yc = red.eq_scale.cwiseProduct(y) / -by_hz;
        const VectorXd zc = red.row_scale.cwiseProduct(z) / -by_hz;
        VectorXd g = VectorXd::Zero(n);
        if (p > 0) g += red.A0.transpose() * yc;
        if (m > 0) g += red.G0.transpose() * zc;
        if (g.lpNorm<Eigen::Infinity>() < opts.feastol) {
          sol.status = Status::infeasible;
          sol.certificate = to_multipliers(problem, red, yc, zc);
          complete_removed(problem, red.removed_value, sol.certificate, false);
          return sol;
        }
      }
      const double cx = c.dot(x);
      if (cx < 0.0) {
        const VectorXd xr = red.col_scale.cwiseProduct(x) / -cx;
        const VectorXd sr = s.cwiseQuotient(red.row_scale) / -cx;
        double r = 0.0;
        if (p > 0) r = (red.A0 * xr).lpNorm<Eigen::Infinity>();
        if (m > 0) r = std::max(r, (red.G0 * xr + sr).lpNorm<Eigen::Infinity>());
        if (r < opts.feastol) {
          sol.status = Status::unbounded;
          sol.ray = full_x(problem, red, xr);
          for (int i = 0; i < problem.num_variables(); ++i)
            if (!std::isnan(red.removed_value[i])) sol.ray[i] = 0.0;
          return sol;
        }
      }
    }
    if (it == opts.max_iterations) break;

    nt_scaling(L, s, z, W, lambda);
    if (!kkt.factor(W)) break;

    VectorXd x1, y1, z1;
    kkt.solve(-c, b, h, x1, y1, z1);
    const double den_base = -c.dot(x1) - b.dot(y1) - h.dot(z1);

    auto direction = [&](double eta, const VectorXd& ds, double dkappa, VectorXd& dx, VectorXd& dy, VectorXd& dz,
                         VectorXd& dsv, double& dtau, double& dkap) {
      const VectorXd lds = jordan_div(L, lambda, ds);
      VectorXd x2, y2, z2;
      kkt.solve(-eta * rx, eta * ry, eta * rz - scaled(L, W, false, lds), x2, y2, z2);
      dtau = (-eta * rt + c.dot(x2) + b.dot(y2) + h.dot(z2) + dkappa / tau) / (kappa / tau + den_base);
      dx = x2 + dtau * x1;
      dy = y2 + dtau * y1;
      dz = z2 + dtau * z1;
      dsv = scaled(L, W, false, VectorXd(lds - scaled(L, W, false, dz)));
      dkap = (dkappa - kappa * dtau) / tau;
    };
    auto step_length = [&](const VectorXd& dsv, const VectorXd& dz, double dtau, double dkap) {
      double a = std::min(max_step(L, s, dsv), max_step(L, z, dz));
      if (dtau < 0.0) a = std::min(a, -tau / dtau);
      if (dkap < 0.0) a = std::min(a, -kappa / dkap);
      return a;
    };

    // predictor
    VectorXd dxa, dya, dza, dsa;
    double dta = 0.0, dka = 0.0;
    direction(1.0, -jordan(L, lambda, lambda), -tau * kappa, dxa, dya, dza, dsa, dta, dka);
    const double alpha_aff = std::min(1.0, step_length(dsa, dza, dta, dka));
    double sigma = std::pow(1.0 - alpha_aff, 3);
    sigma = std::clamp(sigma, 0.0, 1.0);

    // corrector
    const VectorXd corr = jordan(L, scaled(L, W, true, dsa), scaled(L, W, false, dza));
    const VectorXd ds = -jordan(L, lambda, lambda) - corr + sigma * mu * e;
    const double dk = -tau * kappa - dta * dka + sigma * mu;
    VectorXd dx, dy, dz, dsv;
    double dtau = 0.0, dkap = 0.0;
    direction(1.0 - sigma, ds, dk, dx, dy, dz, dsv, dtau, dkap);
    double alpha = std::min(1.0, 0.99 * step_length(dsv, dz, dtau, dkap));
    const bool finite = dx.allFinite() && dy.allFinite() && dz.allFinite() && dsv.allFinite() &&
                        std::isfinite(dtau) && std::isfinite(dkap);
    if (!finite) break;
    if (!std::isfinite(alpha) || alpha < 1e-12) {
      if (++stall > 3) break;
      alpha = 0.0;
    }

    x += alpha * dx;
    y += alpha * dy;
    z += alpha * dz;
    s += alpha * dsv;
    tau += alpha * dtau;
    kappa += alpha * dkap;

    // keep tau bounded away from overflow when the embedding drifts
    const double scale = std::max({tau, kappa, 1.0});
    if (scale > 1e8) {
      x /= scale;
      y /= scale;
      z /= scale;
      s /= scale;
      tau /= scale;
      kappa /= scale;
    }
  }

  // Ran out of iterations or broke down: report the last iterate.
  finish_optimal(x, y, z, tau);
  sol.status = Status::max_iterations;
  return sol;
}

}  // namespace

}  // namespace dercap::conic
