#pragma once

#include <span>
#include <string>
#include <vector>

#include "shapeflow/fem.hpp"

namespace shapeflow {

struct MetricSpec {
  enum class Kind { Hs, SteklovPoincare };

  Kind kind = Kind::Hs;
  int order = 1;    // s, for Hs
  double A = 1.0;   // for Hs
  double mu_min = 1.0, mu_max = 1.0;  // for SteklovPoincare

  static MetricSpec hs(int order, double A);
  static MetricSpec steklov_poincare(double mu_min, double mu_max);

  void validate() const;
  /// "sp", "h1", "h2", ...
  std::string name() const;
};

/// Solves with these options: the chained solves need more accuracy than a
/// single system to keep the Riesz residual small.
inline constexpr double kGradientSolveTolerance = 1e-11;

/// Nodes where every gradient vanishes: all marked nodes except shape nodes.
std::vector<int> gradient_constrained_nodes(const Mesh &mesh);

/// Split H^s gradient: B X_{s-1} = dJ, B X_j = M X_{j+1}, B V = M X_1 with
/// B = M + A K and homogeneous Dirichlet data on the constrained nodes.
NodalField hs_gradient(const MetricSpec &spec, const Mesh &mesh, const LinearFunctional &dj);

/// Harmonic mu with mu_min on shape nodes and mu_max on the other marked nodes.
NodalField sp_mu_field(const MetricSpec &spec, const Mesh &mesh);

/// Elasticity with the sp_mu_field Lame parameter and lambda = 0.
NodalField sp_gradient(const MetricSpec &spec, const Mesh &mesh, const LinearFunctional &dj);

NodalField riemannian_gradient(const MetricSpec &spec, const Mesh &mesh,
                               const LinearFunctional &dj);

/// Discrete metric g(V, W) restricted to the free dofs.
double metric_inner(const MetricSpec &spec, const Mesh &mesh, const NodalField &v,
                    const NodalField &w);

/// max over probes of |g(V, W) - dJ(W)| / max(|dJ(W)|, 1e-300).
double riesz_residual(const MetricSpec &spec, const Mesh &mesh, const NodalField &v,
                      const LinearFunctional &dj, std::span<const NodalField> probes);

}  // namespace shapeflow
