#include "resmix/spectral.hpp"

#include <cmath>
#include <numbers>

#include "resmix/errors.hpp"

namespace resmix {

LaplaceMatrix build_laplace(const Network& net) {
  const auto n = static_cast<Eigen::Index>(net.n);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double diag = -net.kappa[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const double cij = net.c(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      m(i, j) = cij;
      diag -= cij;
    }
    m(i, i) = diag;
  }
  return {std::move(m)};
}

Eigen::VectorXd Spectrum::quasi_stationary() const {
  const Eigen::VectorXd psi = perron();
  return psi / psi.sum();
}

Spectrum spectrum(const LaplaceMatrix& lap, const SpectralOptions& opts) {
  const Eigen::Index n = lap.size();
  if (static_cast<std::size_t>(n) > opts.max_size)
    throw Error(Errc::CapExceeded, "Laplace matrix of size " + std::to_string(n) + " exceeds cap " +
                                       std::to_string(opts.max_size));
  if (n == 0) throw Error(Errc::InvalidArgument, "empty Laplace matrix");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(-lap.values);
  if (solver.info() != Eigen::Success) throw Error(Errc::NumericalBreakdown, "symmetric eigensolver failed");

  Spectrum s;
  s.eigenvalues = solver.eigenvalues();
  s.eigenvectors = solver.eigenvectors();

  const double scale = std::max(1.0, lap.values.cwiseAbs().rowwise().sum().maxCoeff());
  if (s.eigenvalues[0] <= opts.pd_tolerance * scale)
    throw Error(Errc::NotPositiveDefinite,
                "smallest eigenvalue of -Delta is " + std::to_string(s.eigenvalues[0]));
  s.perron_degenerate = n > 1 && s.eigenvalues[1] - s.eigenvalues[0] <= opts.degeneracy_tolerance;

  auto psi = s.eigenvectors.col(0);
  Eigen::Index imax = 0;
  psi.cwiseAbs().maxCoeff(&imax);
  if (psi[imax] < 0.0) psi = -psi;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (psi[i] < -1e-12)
      throw Error(Errc::NumericalBreakdown, "Perron vector has a negative entry " + std::to_string(psi[i]));
    if (psi[i] < 0.0) psi[i] = 0.0;
  }

  s.overlaps = s.eigenvectors.colwise().sum().array().square().transpose();
  return s;
}

double survival_norm2(const Spectrum& spec, double t) {
  double total = 0.0;
  for (Eigen::Index k = spec.size(); k-- > 0;) total += std::exp(-2.0 * spec.eigenvalues[k] * t) * spec.overlaps[k];
  return total;
}

Eigen::VectorXd survival_vector(const Spectrum& spec, double t) {
  const Eigen::VectorXd coeff = (spec.eigenvectors.transpose() * Eigen::VectorXd::Ones(spec.size())).array() *
                                (-spec.eigenvalues.array() * t).exp();
  Eigen::VectorXd z = spec.eigenvectors * coeff;
  return z.cwiseMax(0.0).cwiseMin(1.0);
}

SurvivalCurve survival(const Spectrum& spec, std::span<const double> times) {
  SurvivalCurve curve;
  curve.times.assign(times.begin(), times.end());
  for (double t : times) {
    if (!(t >= 0.0)) throw Error(Errc::InvalidArgument, "survival times must be >= 0");
    curve.z.push_back(survival_vector(spec, t));
    curve.znorm2.push_back(survival_norm2(spec, t));
  }
  return curve;
}

Eigen::VectorXd survival_ode_oracle(const LaplaceMatrix& lap, double t) {
  if (!(t >= 0.0)) throw Error(Errc::InvalidArgument, "time must be >= 0");
  const Eigen::MatrixXd& a = lap.values;
  Eigen::VectorXd z = Eigen::VectorXd::Ones(lap.size());
  if (t == 0.0) return z;

  const double norm_inf = a.cwiseAbs().rowwise().sum().maxCoeff();
  const double h_max = 0.01 / std::max(norm_inf, 1e-300);
  const auto steps = static_cast<long long>(std::ceil(t / h_max));
  const double h = t / static_cast<double>(steps);
  for (long long s = 0; s < steps; ++s) {
    const Eigen::VectorXd k1 = a * z;
    const Eigen::VectorXd k2 = a * (z + 0.5 * h * k1);
    const Eigen::VectorXd k3 = a * (z + 0.5 * h * k2);
    const Eigen::VectorXd k4 = a * (z + h * k3);
    z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return z;
}

BoxEigenpair box_eigenpair(std::span<const std::size_t> dims, std::span<const Boundary> boundary) {
  if (dims.empty()) throw Error(Errc::InvalidArgument, "box needs at least one axis");
  if (boundary.size() != 1 && boundary.size() != dims.size())
    throw Error(Errc::InvalidArgument, "boundary list must have one tag per axis or a single tag");

  constexpr double pi = std::numbers::pi;
  BoxEigenpair out;
  Eigen::VectorXd psi = Eigen::VectorXd::Ones(1);
  for (std::size_t k = 0; k < dims.size(); ++k) {
    const std::size_t n = dims[k];
    if (n == 0) throw Error(Errc::InvalidArgument, "box side lengths must be >= 1");
    const Boundary b = boundary.size() == 1 ? boundary[0] : boundary[k];
    const double nn = static_cast<double>(n);
    Eigen::VectorXd axis(static_cast<Eigen::Index>(n));
    if (b == Boundary::Open) {
      out.lambda += 2.0 * (1.0 - std::cos(pi / (nn + 1.0)));
      for (std::size_t i = 1; i <= n; ++i)
        axis[static_cast<Eigen::Index>(i - 1)] = std::sqrt(2.0 / (nn + 1.0)) * std::sin(pi * double(i) / (nn + 1.0));
    } else {
      out.lambda += 2.0 * (1.0 - std::cos(pi / (2.0 * nn + 1.0)));
      for (std::size_t i = 1; i <= n; ++i)
        axis[static_cast<Eigen::Index>(i - 1)] =
            std::sqrt(4.0 / (2.0 * nn + 1.0)) * std::sin(pi * double(n + 1 - i) / (2.0 * nn + 1.0));
    }
    // Row-major: earlier axes vary slowest, so psi_new = psi_old (x) axis.
    Eigen::VectorXd next(psi.size() * axis.size());
    for (Eigen::Index a = 0; a < psi.size(); ++a) next.segment(a * axis.size(), axis.size()) = psi[a] * axis;
    psi = std::move(next);
  }
  out.psi = std::move(psi);
  return out;
}

Eigen::MatrixXd kron_sum(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != a.cols() || b.rows() != b.cols())
    throw Error(Errc::InvalidArgument, "Kronecker sum needs square matrices");
  const Eigen::Index p = a.rows();
  const Eigen::Index q = b.rows();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(p * q, p * q);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      if (a(i, j) != 0.0) out.block(i * q, j * q, q, q).diagonal().array() += a(i, j);
    }
    out.block(i * q, i * q, q, q) += b;
  }
  return out;
}

}  // namespace resmix
