#pragma once

// Jordan algebra and Nesterov-Todd scaling for products of the nonnegative
// orthant and second-order cones. Internal to the solver; exposed for tests.

#include <Eigen/Dense>
#include <vector>

namespace dercap::conic::detail {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// First `lp` entries are orthant coordinates, followed by SOC blocks.
struct Layout {
  int lp = 0;
  std::vector<int> dims;
  std::vector<int> offsets;
  int m = 0;
  int degree = 0;
};

Layout make_layout(int lp, const std::vector<int>& soc_dims);

struct SocScaling {
  double beta = 1.0;
  VectorXd w;  // hyperbolic unit vector, w'Jw = 1
};

struct Scaling {
  VectorXd lp;  // sqrt(s/z)
  std::vector<SocScaling> soc;
};

/// v0^2 - ||v1||^2
double jdet(const double* v, int d);

/// Scaling W with W z = W^{-1} s = lambda, for s, z strictly interior.
void nt_scaling(const Layout& L, const VectorXd& s, const VectorXd& z, Scaling& W, VectorXd& lambda);

/// Applies W (or W^{-1}) to every column of M in place. W is symmetric.
void apply_scaling(const Layout& L, const Scaling& W, bool inverse, Eigen::Ref<MatrixXd> M);
VectorXd scaled(const Layout& L, const Scaling& W, bool inverse, const VectorXd& v);

VectorXd jordan(const Layout& L, const VectorXd& a, const VectorXd& b);
/// Solves lambda o x = d.
VectorXd jordan_div(const Layout& L, const VectorXd& lambda, const VectorXd& d);
VectorXd identity(const Layout& L);

/// Largest alpha with u + alpha d in K, for u interior; +inf if unbounded.
double max_step(const Layout& L, const VectorXd& u, const VectorXd& d);

}  // namespace dercap::conic::detail
