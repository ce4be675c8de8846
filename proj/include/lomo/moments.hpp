#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>

namespace lomo {

// Running mean and centered scatter matrix of a vector population.
// Partials combine with merge() (Chan et al. pairwise update), so
// accumulation can be split across threads or files and reduced.
class GaussianMoments {
 public:
  GaussianMoments() = default;
  explicit GaussianMoments(Eigen::Index dim)
      : mean_(Eigen::VectorXd::Zero(dim)), scatter_(Eigen::MatrixXd::Zero(dim, dim)) {}

  // Builds moments directly from a mean and an (n-1)-normalized covariance.
  static GaussianMoments from_parameters(const Eigen::VectorXd& mean,
                                         const Eigen::MatrixXd& covariance,
                                         std::int64_t count);

  void add(std::span<const float> x);
  void add(const Eigen::VectorXd& x);
  // Adds a block of rows (one observation per row) in one update.
  void add_block(const Eigen::MatrixXd& rows);
  void merge(const GaussianMoments& other);

  std::int64_t count() const { return count_; }
  Eigen::Index dim() const { return mean_.size(); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& scatter() const { return scatter_; }

  // Unbiased (1/(n-1)) covariance, symmetrized. Requires count() >= 2.
  Eigen::MatrixXd covariance() const;

 private:
  std::int64_t count_ = 0;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd scatter_;
};

}  // namespace lomo
