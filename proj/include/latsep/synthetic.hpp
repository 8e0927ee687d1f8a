#pragma once

#include <cstdint>

#include <latsep/dataset.hpp>
#include <latsep/types.hpp>

namespace latsep {

// Entangled labeled world with a known disentangled ground truth. Binary
// factors of magnitude `margin` plus Gaussian nuisance coordinates are mixed
// by a seeded orthogonal matrix and warped elementwise by
// psi(x) = x + nonlinearity * tanh(x), which is strictly increasing for
// nonlinearity > -1 and therefore invertible.
struct WorldSpec {
  int num_attributes = 4;
  int dim = 32;
  double nonlinearity = 2.0;  // a in psi
  double margin = 1.0;        // gamma, factor magnitude
  double correlation = 0.0;   // rho in [0,1), pairwise factor correlation
  std::uint64_t seed = 0;     // fixes the mixing matrix
  bool identity_mixing = false;

  void validate() const;
};

// The seeded orthogonal mixing matrix Q (identity when identity_mixing).
Mat mixing_matrix(const WorldSpec& spec);

double warp(double x, double nonlinearity);
// Inverse of warp by monotone bisection to 1e-10.
double unwarp(double y, double nonlinearity);

// N samples: factors g in {-margin, +margin}^K with pairwise correlation rho
// via a shared latent bit, nuisance ~ N(0,1), code = psi(Q [g; n]),
// label_k = 1 iff g_k > 0.
LabeledLatentDataset generate_world(const WorldSpec& spec, int n, std::uint64_t seed);

// Recovers the factor vector of a code generated by this spec:
// first K entries of Q^T psi^-1(code).
Vec true_factors(const WorldSpec& spec, const Eigen::Ref<const RowVec>& code);

}  // namespace latsep
