#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "subtok/embedding.hpp"

namespace subtok {

enum class TsneInit { Pca, Random };

struct TsneOptions {
  double perplexity = 20.0;
  std::size_t iterations = 1000;
  std::size_t exaggeration_iterations = 250;
  double exaggeration = 12.0;
  double learning_rate = 200.0;
  double momentum_initial = 0.5;
  double momentum_final = 0.8;
  double min_gain = 0.01;
  TsneInit init = TsneInit::Pca;
  double init_scale = 1e-4;  // standard deviation of the initial layout
  std::uint64_t seed = 42;
};

// Perplexity is capped at (n - 2) / 3 for small point sets.
inline double effective_perplexity(double perplexity, std::size_t n) {
  return std::min(perplexity, (static_cast<double>(n) - 2.0) / 3.0);
}

inline Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& x) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) d(i, j) = d(j, i) = (x.row(i) - x.row(j)).squaredNorm();
  return d;
}

struct ConditionalAffinities {
  Eigen::MatrixXd p;           // row i holds p(j | i); zero diagonal
  std::vector<double> beta;    // precision 1 / (2 sigma_i^2) per point
  std::vector<double> entropy_bits;
};

namespace detail {

// p(j|i) for a given precision; distances are shifted by the row minimum,
// which leaves the normalized distribution unchanged.
inline double conditional_row(const Eigen::MatrixXd& d, Eigen::Index i, double beta, double dmin,
                              Eigen::Ref<Eigen::RowVectorXd> row) {
  double z = 0.0;
  for (Eigen::Index j = 0; j < d.cols(); ++j) {
    row(j) = j == i ? 0.0 : std::exp(-beta * (d(i, j) - dmin));
    z += row(j);
  }
  row /= z;
  double h = 0.0;
  for (Eigen::Index j = 0; j < d.cols(); ++j)
    if (row(j) > 0.0) h -= row(j) * std::log2(row(j));
  return h;
}

}  // namespace detail

// Finds each point's Gaussian precision by bisection so that the conditional
// distribution has perplexity 2^H equal to `perplexity`.
inline ConditionalAffinities conditional_affinities(const Eigen::MatrixXd& sq_dist, double perplexity,
                                                    double entropy_tol = 1e-10, int max_steps = 200) {
  const Eigen::Index n = sq_dist.rows();
  if (!(perplexity >= 1.0) || perplexity > static_cast<double>(n - 1))
    throw std::invalid_argument("perplexity must lie in [1, n-1]");
  const double target = std::log2(perplexity);
  ConditionalAffinities out;
  out.p = Eigen::MatrixXd::Zero(n, n);
  out.beta.resize(static_cast<std::size_t>(n));
  out.entropy_bits.resize(static_cast<std::size_t>(n));
  Eigen::RowVectorXd row(n);

  for (Eigen::Index i = 0; i < n; ++i) {
    double dmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) dmin = std::min(dmin, sq_dist(i, j));
    double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
    double h = detail::conditional_row(sq_dist, i, beta, dmin, row);
    for (int step = 0; step < max_steps && std::abs(h - target) > entropy_tol; ++step) {
      if (h > target) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (lo + hi);
      } else {
        hi = beta;
        beta = 0.5 * (lo + hi);
      }
      h = detail::conditional_row(sq_dist, i, beta, dmin, row);
    }
    out.p.row(i) = row;
    out.beta[static_cast<std::size_t>(i)] = beta;
    out.entropy_bits[static_cast<std::size_t>(i)] = h;
  }
  return out;
}

// Symmetrized joint affinities (p(j|i) + p(i|j)) / 2n, floored at machine epsilon.
inline Eigen::MatrixXd joint_affinities(const Eigen::MatrixXd& conditional) {
  const double n = static_cast<double>(conditional.rows());
  Eigen::MatrixXd p = (conditional + conditional.transpose()) / (2.0 * n);
  p = p.cwiseMax(std::numeric_limits<double>::epsilon());
  p.diagonal().setZero();
  return p;
}

namespace detail {

// Student-t kernel numerators and their sum over off-diagonal pairs.
inline double student_kernel(const Eigen::MatrixXd& y, Eigen::MatrixXd& num) {
  const Eigen::Index n = y.rows();
  num.resize(n, n);
  double z = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    num(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = 1.0 / (1.0 + (y.row(i) - y.row(j)).squaredNorm());
      num(i, j) = num(j, i) = v;
      z += 2.0 * v;
    }
  }
  return z;
}

}  // namespace detail

// KL(P || Q) of the layout `y` against joint affinities `p`.
inline double tsne_kl(const Eigen::MatrixXd& p, const Eigen::MatrixXd& y) {
  Eigen::MatrixXd num;
  const double z = detail::student_kernel(y, num);
  const double eps = std::numeric_limits<double>::epsilon();
  double kl = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index j = 0; j < p.cols(); ++j)
      if (i != j) kl += p(i, j) * std::log(p(i, j) / std::max(num(i, j) / z, eps));
  return kl;
}

// Exact t-SNE to two dimensions. Gradient descent with momentum and
// per-coordinate adaptive gains; P is exaggerated for the first
// `exaggeration_iterations` iterations.
inline EmbeddingResult tsne_2d(const Eigen::MatrixXd& x, const TsneOptions& opt = {}) {
  const Eigen::Index n = x.rows();
  if (n < 4) throw std::invalid_argument("too few points for t-SNE");
  EmbeddingResult r;
  r.method = EmbeddingMethod::Tsne;
  r.seed = opt.seed;
  const double perp = effective_perplexity(opt.perplexity, static_cast<std::size_t>(n));
  r.effective_perplexity = perp;

  const Eigen::MatrixXd p = joint_affinities(conditional_affinities(squared_distances(x), perp).p);

  Eigen::MatrixXd y(n, 2);
  bool random_init = opt.init == TsneInit::Random;
  if (!random_init) {
    try {
      const auto pca = pca_2d(x);
      for (Eigen::Index i = 0; i < n; ++i) {
        y(i, 0) = pca.coordinates[static_cast<std::size_t>(i)][0];
        y(i, 1) = pca.coordinates[static_cast<std::size_t>(i)][1];
      }
      const double mean0 = y.col(0).mean();
      const double sd0 = std::sqrt((y.col(0).array() - mean0).square().sum() / static_cast<double>(n));
      if (sd0 > 0.0) {
        y *= opt.init_scale / sd0;
      } else {
        random_init = true;
      }
    } catch (const std::invalid_argument&) {
      random_init = true;
    }
    if (random_init) r.warnings.push_back("PCA initialization degenerate; used random initialization");
  }
  if (random_init) {
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> normal(0.0, opt.init_scale);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index k = 0; k < 2; ++k) y(i, k) = normal(rng);
  }

  Eigen::MatrixXd update = Eigen::MatrixXd::Zero(n, 2);
  Eigen::MatrixXd gains = Eigen::MatrixXd::Ones(n, 2);
  Eigen::MatrixXd grad(n, 2);
  Eigen::MatrixXd num;
  for (std::size_t it = 0; it < opt.iterations; ++it) {
    const bool early = it < opt.exaggeration_iterations;
    const double exag = early ? opt.exaggeration : 1.0;
    const double momentum = early ? opt.momentum_initial : opt.momentum_final;
    if (it == opt.exaggeration_iterations) r.kl_after_exaggeration = tsne_kl(p, y);

    const double z = detail::student_kernel(y, num);
    grad.setZero();
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i == j) continue;
        const double w = (exag * p(i, j) - num(i, j) / z) * num(i, j);
        grad.row(i) += 4.0 * w * (y.row(i) - y.row(j));
      }

    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index k = 0; k < 2; ++k) {
        double& g = gains(i, k);
        g = (update(i, k) * grad(i, k) < 0.0) ? g + 0.2 : g * 0.8;
        g = std::max(g, opt.min_gain);
        update(i, k) = momentum * update(i, k) - opt.learning_rate * g * grad(i, k);
      }
    y += update;
  }
  if (!r.kl_after_exaggeration) r.kl_after_exaggeration = tsne_kl(p, y);
  r.final_kl = tsne_kl(p, y);

  r.coordinates.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) r.coordinates[static_cast<std::size_t>(i)] = {y(i, 0), y(i, 1)};
  return r;
}

}  // namespace subtok
