#include "cones.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dercap::conic::detail {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

Layout make_layout(int lp, const std::vector<int>& soc_dims) {
  Layout L;
  L.lp = lp;
  L.m = lp;
  for (int d : soc_dims) {
    L.offsets.push_back(L.m);
    L.dims.push_back(d);
    L.m += d;
  }
  L.degree = lp + static_cast<int>(soc_dims.size());
  return L;
}

double jdet(const double* v, int d) {
  double nu = 0.0;
  for (int i = 1; i < d; ++i) nu += v[i] * v[i];
  nu = std::sqrt(nu);
  return (v[0] - nu) * (v[0] + nu);
}

void nt_scaling(const Layout& L, const VectorXd& s, const VectorXd& z, Scaling& W, VectorXd& lambda) {
  W.lp.resize(L.lp);
  lambda.resize(L.m);
  for (int i = 0; i < L.lp; ++i) {
    W.lp(i) = std::sqrt(s(i) / z(i));
    lambda(i) = std::sqrt(s(i) * z(i));
  }
  W.soc.resize(L.dims.size());
  for (std::size_t k = 0; k < L.dims.size(); ++k) {
    const int o = L.offsets[k], d = L.dims[k];
    const double sd = std::sqrt(std::max(jdet(s.data() + o, d), 1e-300));
    const double zd = std::sqrt(std::max(jdet(z.data() + o, d), 1e-300));
    VectorXd sb = s.segment(o, d) / sd;
    VectorXd zb = z.segment(o, d) / zd;
    const double gamma = std::sqrt(std::max((1.0 + sb.dot(zb)) / 2.0, 1e-300));
    VectorXd w = sb;
    w(0) += zb(0);
    w.tail(d - 1) -= zb.tail(d - 1);
    w /= 2.0 * gamma;
    // W = beta (2 v v' - J) with v the midpoint between w and the identity
    w(0) += 1.0;
    w /= std::sqrt(2.0 * w(0));
    auto& S = W.soc[k];
    S.w = w;
    S.beta = std::sqrt(sd / zd);
    // lambda = W z
    const VectorXd zk = z.segment(o, d);
    VectorXd jz = zk;
    jz.tail(d - 1) = -jz.tail(d - 1);
    lambda.segment(o, d) = S.beta * (2.0 * w.dot(zk) * w - jz);
  }
}

void apply_scaling(const Layout& L, const Scaling& W, bool inverse, Eigen::Ref<MatrixXd> M) {
  for (int i = 0; i < L.lp; ++i) M.row(i) *= inverse ? 1.0 / W.lp(i) : W.lp(i);
  for (std::size_t k = 0; k < L.dims.size(); ++k) {
    const int o = L.offsets[k], d = L.dims[k];
    const auto& S = W.soc[k];
    auto blk = M.middleRows(o, d);
    if (!inverse) {
      // beta (2 w w' - J) B
      Eigen::RowVectorXd wb = S.w.transpose() * blk;
      blk.row(0) *= -1.0;
      blk.noalias() += 2.0 * S.w * wb;
      blk *= S.beta;
    } else {
      // (1/beta) (2 Jw (Jw)' - J) B
      VectorXd jw = S.w;
      jw.tail(d - 1) *= -1.0;
      Eigen::RowVectorXd wb = jw.transpose() * blk;
      blk.row(0) *= -1.0;
      blk.noalias() += 2.0 * jw * wb;
      blk /= S.beta;
    }
  }
}

VectorXd scaled(const Layout& L, const Scaling& W, bool inverse, const VectorXd& v) {
  MatrixXd M = v;
  apply_scaling(L, W, inverse, M);
  return M.col(0);
}

VectorXd jordan(const Layout& L, const VectorXd& a, const VectorXd& b) {
  VectorXd r(L.m);
  for (int i = 0; i < L.lp; ++i) r(i) = a(i) * b(i);
  for (std::size_t k = 0; k < L.dims.size(); ++k) {
    const int o = L.offsets[k], d = L.dims[k];
    r(o) = a.segment(o, d).dot(b.segment(o, d));
    r.segment(o + 1, d - 1) = a(o) * b.segment(o + 1, d - 1) + b(o) * a.segment(o + 1, d - 1);
  }
  return r;
}

VectorXd jordan_div(const Layout& L, const VectorXd& lam, const VectorXd& d) {
  VectorXd x(L.m);
  for (int i = 0; i < L.lp; ++i) x(i) = d(i) / lam(i);
  for (std::size_t k = 0; k < L.dims.size(); ++k) {
    const int o = L.offsets[k], n = L.dims[k];
    const double l0 = lam(o);
    const auto l1 = lam.segment(o + 1, n - 1);
    const double rho = jdet(lam.data() + o, n);
    const double x0 = (l0 * d(o) - l1.dot(d.segment(o + 1, n - 1))) / rho;
    x(o) = x0;
    x.segment(o + 1, n - 1) = (d.segment(o + 1, n - 1) - x0 * l1) / l0;
  }
  return x;
}

VectorXd identity(const Layout& L) {
  VectorXd e = VectorXd::Zero(L.m);
  for (int i = 0; i < L.lp; ++i) e(i) = 1.0;
  for (std::size_t k = 0; k < L.dims.size(); ++k) e(L.offsets[k]) = 1.0;
  return e;
}

double max_step(const Layout& L, const VectorXd& u, const VectorXd& d) {
  double amax = kInf;
  for (int i = 0; i < L.lp; ++i)
    if (d(i) < 0.0) amax = std::min(amax, -u(i) / d(i));
  for (std::size_t k = 0; k < L.dims.size(); ++k) {
    const int o = L.offsets[k], n = L.dims[k];
    const double u0 = u(o), d0 = d(o);
    const auto u1 = u.segment(o + 1, n - 1);
    const auto d1 = d.segment(o + 1, n - 1);
    const double a = d0 * d0 - d1.squaredNorm();
    const double bb = u0 * d0 - u1.dot(d1);
    const double c = std::max(jdet(u.data() + o, n), 0.0);
    double root = kInf;
    if (std::abs(a) < 1e-300) {
      if (bb < 0.0) root = -c / (2.0 * bb);
    } else {
      const double disc = bb * bb - a * c;
      if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        const double q = -(bb + std::copysign(sq, bb));
        double r1 = q / a;
        double r2 = q != 0.0 ? c / q : kInf;
        if (r1 > 0.0) root = std::min(root, r1);
        if (r2 > 0.0) root = std::min(root, r2);
      }
    }
    if (d0 < 0.0) root = std::min(root, -u0 / d0);
    amax = std::min(amax, root);
  }
  return amax;
}

}  // namespace dercap::conic::detail
