#include "nphase/maxent.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace nphase::maxent {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Dual {
  double value;
  double log_z;
  Eigen::VectorXd weights;  // normalized density on the grid
};

// log Z(lambda) - lambda . mu, with the max-shift against overflow
Dual evaluate(const Eigen::MatrixXd& f, const Eigen::VectorXd& lambda, const Eigen::VectorXd& mu, double h) {
  const Eigen::VectorXd s = f * lambda;
  const double top = s.maxCoeff();
  Eigen::VectorXd w = (s.array() - top).exp();
  const double z = w.sum() * h;
  w /= z;
  const double log_z = top + std::log(z);
  return {log_z - lambda.dot(mu), log_z, std::move(w)};
}

}  // namespace

double PhaseDistribution::max_residual() const {
  double r = 0.0;
  for (double v : residuals) r = std::max(r, std::abs(v));
  return r;
}

double PhaseDistribution::entropy() const {
  const double h = kTwoPi / static_cast<double>(density.size());
  double s = 0.0;
  for (double p : density)
    if (p > 0.0) s -= p * std::log(p);
  return s * h;
}

double PhaseDistribution::model_density(double phi) const {
  double s = -log_z;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double kk = static_cast<double>(k + 1);
    s += a[k] * std::cos(kk * phi) + b[k] * std::sin(kk * phi);
  }
  return std::exp(s);
}

PhaseDistribution reconstruct_phase_dist(std::span<const cplx> moments, const MaxentOptions& opts) {
  if (opts.n_phi < 8) throw std::invalid_argument("maxent: n_phi must be >= 8");
  const int K = static_cast<int>(moments.size());
  if (2 * K >= opts.n_phi) throw std::invalid_argument("maxent: grid too coarse for the moment order");
  if (!(opts.tol > 0.0) || opts.max_iter < 1) throw std::invalid_argument("maxent: tol must be > 0 and max_iter >= 1");

  PhaseDistribution out;
  std::vector<cplx> target(moments.begin(), moments.end());
  for (int k = 0; k < K; ++k) {
    auto& z = target[static_cast<std::size_t>(k)];
    const double mod = std::abs(z);
    if (!std::isfinite(mod)) throw InfeasibleError("maxent: non-finite moment");
    if (mod > 1.0 + 1e-9) throw InfeasibleError("maxent: |Psi_" + std::to_string(k + 1) + "| = " + std::to_string(mod) + " exceeds 1");
    if (mod >= 1.0) {
      z *= (1.0 - 1e-9) / mod;
      out.shrunk = true;
    }
  }

  const int n = opts.n_phi;
  const double h = kTwoPi / n;
  out.grid.resize(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) out.grid[static_cast<std::size_t>(j)] = kTwoPi * j / n;

  const Eigen::Index p = 2 * K;
  Eigen::MatrixXd f(n, p);
  Eigen::VectorXd mu(p);
  for (int k = 0; k < K; ++k) {
    for (int j = 0; j < n; ++j) {
      const double ph = (k + 1.0) * out.grid[static_cast<std::size_t>(j)];
      f(j, 2 * k) = std::cos(ph);
      f(j, 2 * k + 1) = std::sin(ph);
    }
    mu(2 * k) = target[static_cast<std::size_t>(k)].real();
    mu(2 * k + 1) = target[static_cast<std::size_t>(k)].imag();
  }

  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(p);
  Dual cur = evaluate(f, lambda, mu, h);
  Eigen::VectorXd grad = p > 0 ? Eigen::VectorXd(f.transpose() * cur.weights * h - mu) : Eigen::VectorXd();
  double min_eig = std::numeric_limits<double>::infinity();
  int it = 0;
  while (p > 0 && grad.cwiseAbs().maxCoeff() >= opts.tol) {
    if (it == opts.max_iter)
      throw ConvergenceError("maxent: no convergence after " + std::to_string(opts.max_iter) + " Newton iterations",
                             grad.cwiseAbs().maxCoeff());
    const Eigen::VectorXd mean = f.transpose() * cur.weights * h;
    const Eigen::MatrixXd centered = f.rowwise() - mean.transpose();
    const Eigen::MatrixXd hess = centered.transpose() * cur.weights.asDiagonal() * centered * h;
    Eigen::LLT<Eigen::MatrixXd> llt(hess);
    if (llt.info() != Eigen::Success) throw ConvergenceError("maxent: Hessian not positive definite", grad.cwiseAbs().maxCoeff());
    min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(hess).eigenvalues().minCoeff());
    const Eigen::VectorXd step = -llt.solve(grad);

    double t = 1.0;
    Dual next = evaluate(f, lambda + step, mu, h);
    while (!(next.value <= cur.value + 1e-14 * std::abs(cur.value)) && t > 1e-12) {
      t *= 0.5;
      next = evaluate(f, lambda + t * step, mu, h);
    }
    if (t <= 1e-12) throw ConvergenceError("maxent: line search failed", grad.cwiseAbs().maxCoeff());
    lambda += t * step;
    cur = std::move(next);
    grad = f.transpose() * cur.weights * h - mu;
    ++it;
  }

  if (p > 0) {
    const Eigen::VectorXd mean = f.transpose() * cur.weights * h;
    const Eigen::MatrixXd centered = f.rowwise() - mean.transpose();
    const Eigen::MatrixXd hess = centered.transpose() * cur.weights.asDiagonal() * centered * h;
    min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(hess).eigenvalues().minCoeff());
  }
  out.iterations = it;
  out.log_z = cur.log_z;
  out.min_hessian_eigenvalue = p > 0 ? min_eig : 0.0;
  out.density.assign(cur.weights.data(), cur.weights.data() + n);
  for (int k = 0; k < K; ++k) {
    out.a.push_back(lambda(2 * k));
    out.b.push_back(lambda(2 * k + 1));
  }
  out.residuals.assign(grad.data(), grad.data() + grad.size());
  return out;
}

}  // namespace nphase::maxent
