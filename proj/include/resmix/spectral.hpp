#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

#include "resmix/network.hpp"

namespace resmix {

/// Laplace matrix of a network: off-diagonal c(i,j), diagonal
/// -kappa(i) - sum_k c(i,k). Generator of the single killed random walker.
struct LaplaceMatrix {
  Eigen::MatrixXd values;

  Eigen::Index size() const { return values.rows(); }
};

LaplaceMatrix build_laplace(const Network& net);

struct SpectralOptions {
  std::size_t max_size = 4096;
  /// lambda_1 must exceed this multiple of the matrix infinity norm.
  double pd_tolerance = 1e-12;
  double degeneracy_tolerance = 1e-10;
};

/// Eigen-decomposition of -Delta: ascending eigenvalues, orthonormal
/// eigenvectors (column k belongs to eigenvalue k), overlaps <psi_k, 1>^2.
/// Column 0 is the Perron vector, sign-normalized to be entrywise >= 0.
struct Spectrum {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;
  Eigen::VectorXd overlaps;
  /// Set when lambda_2 - lambda_1 falls below the degeneracy tolerance.
  bool perron_degenerate = false;

  Eigen::Index size() const { return eigenvalues.size(); }
  double lambda() const { return eigenvalues[0]; }
  Eigen::VectorXd perron() const { return eigenvectors.col(0); }
  double perron_overlap() const { return overlaps[0]; }
  /// psi / <psi, 1>, the quasi-stationary distribution of the killed walk.
  Eigen::VectorXd quasi_stationary() const;
};

/// Throws Error(NotPositiveDefinite) when lambda_1 is not strictly positive
/// and Error(CapExceeded) past `max_size`.
Spectrum spectrum(const LaplaceMatrix& lap, const SpectralOptions& opts = {});

/// ||z(t)||^2 = sum_k exp(-2 lambda_k t) <psi_k,1>^2.
double survival_norm2(const Spectrum& spec, double t);

/// z(t) = exp(t Delta) 1, entries clamped to [0, 1].
Eigen::VectorXd survival_vector(const Spectrum& spec, double t);

struct SurvivalCurve {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> z;
  std::vector<double> znorm2;
};

SurvivalCurve survival(const Spectrum& spec, std::span<const double> times);

/// Independent path for z(t): classical RK4 on dz/dt = Delta z, z(0) = 1,
/// with step at most 0.01 / ||Delta||_inf.
Eigen::VectorXd survival_ode_oracle(const LaplaceMatrix& lap, double t);

struct BoxEigenpair {
  double lambda = 0.0;
  Eigen::VectorXd psi;
};

/// Closed-form Perron pair of a box. Open axes use sin(pi i/(n+1)); SemiOpen
/// axes, whose reservoir sits at i = n, use sin(pi (n+1-i)/(2n+1)). Vertices
/// in row-major order, matching build_box.
BoxEigenpair box_eigenpair(std::span<const std::size_t> dims, std::span<const Boundary> boundary);

/// A (+) B = A (x) I + I (x) B; A acts on the slow (leading) index.
Eigen::MatrixXd kron_sum(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

}  // namespace resmix
