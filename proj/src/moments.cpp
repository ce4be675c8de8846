#include "lomo/moments.hpp"

#include <stdexcept>

namespace lomo {

GaussianMoments GaussianMoments::from_parameters(const Eigen::VectorXd& mean,
                                                 const Eigen::MatrixXd& covariance,
                                                 std::int64_t count) {
  if (count < 2) throw std::invalid_argument("moment count must be >= 2");
  if (covariance.rows() != mean.size() || covariance.cols() != mean.size())
    throw std::invalid_argument("covariance shape does not match mean");
  GaussianMoments m(mean.size());
  m.count_ = count;
  m.mean_ = mean;
  m.scatter_ = covariance * static_cast<double>(count - 1);
  return m;
}

void GaussianMoments::add(std::span<const float> x) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) v[static_cast<Eigen::Index>(i)] = x[i];
  add(v);
}

void GaussianMoments::add(const Eigen::VectorXd& x) {
  if (count_ == 0 && mean_.size() == 0) *this = GaussianMoments(x.size());
  if (x.size() != mean_.size()) throw std::invalid_argument("vector dimension mismatch");
  ++count_;
  const Eigen::VectorXd delta = x - mean_;
  mean_ += delta / static_cast<double>(count_);
  scatter_.noalias() += delta * (x - mean_).transpose();
}

void GaussianMoments::add_block(const Eigen::MatrixXd& rows) {
  if (rows.rows() == 0) return;
  GaussianMoments block(rows.cols());
  block.count_ = rows.rows();
  block.mean_ = rows.colwise().mean().transpose();
  const Eigen::MatrixXd centered = rows.rowwise() - block.mean_.transpose();
  block.scatter_.noalias() = centered.transpose() * centered;
  merge(block);
}

void GaussianMoments::merge(const GaussianMoments& other) {
  if (other.count_ == 0) return;
  if (count_ == 0) {
    *this = other;
    return;
  }
  if (other.dim() != dim()) throw std::invalid_argument("moment dimension mismatch");
  const double na = static_cast<double>(count_);
  const double nb = static_cast<double>(other.count_);
  const double n = na + nb;
  const Eigen::VectorXd delta = other.mean_ - mean_;
  mean_ += delta * (nb / n);
  scatter_ += other.scatter_ + (delta * delta.transpose()) * (na * nb / n);
  count_ += other.count_;
}

Eigen::MatrixXd GaussianMoments::covariance() const {
  if (count_ < 2) throw std::domain_error("covariance needs at least 2 observations");
  Eigen::MatrixXd c = scatter_ / static_cast<double>(count_ - 1);
  return 0.5 * (c + c.transpose());
}

}  // namespace lomo
