#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"
#include "lomo/hsd.hpp"
#include "lomo/moments.hpp"

namespace lomo {

// Moments of the rows of `observations`. Throws std::domain_error for fewer
// than 2 rows.
GaussianMoments fit_gaussian(const Eigen::MatrixXd& observations);

inline constexpr double kFrechetShrinkage = 1e-6;

// ||mu_a - mu_b||^2 + Tr(Sa + Sb - 2 (Sa^1/2 Sb Sa^1/2)^1/2), with
// `shrinkage` * I added to both covariances and negative eigenvalues
// clamped to zero.
double frechet_distance(const GaussianMoments& a, const GaussianMoments& b,
                        double shrinkage = kFrechetShrinkage);

// Symmetric PSD square root by eigendecomposition.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m);

struct MirReport {
  std::vector<double> per_layer_fid;
  double mir = 0.0;
};

// Per layer, the Frechet distance between the pooled textual and pooled
// visual token populations; mir is their mean.
MirReport mir(const HiddenStateDump& dump);

// 1 - cos(u, v), clamped to [0, 2]. Throws std::domain_error on a zero vector.
double cosine_distance(const Eigen::VectorXd& u, const Eigen::VectorXd& v);

struct PairwiseReport {
  std::size_t layer = 1;
  std::vector<std::string> ids;
  std::vector<double> distances;
  double mean = 0.0;
};

// Per sample, cosine distance between the mean textual and mean visual token
// vectors at `layer` (0-based index into the dump's layer blocks).
PairwiseReport pairwise_cross_modal_distance(const HiddenStateDump& dump, std::size_t layer = 1);

struct Histogram {
  std::vector<double> edges;  // bins + 1 entries
  std::vector<std::size_t> counts;
};

// Equal-count bins over the sorted values (quartiles by default).
Histogram equal_count_histogram(std::vector<double> values, std::size_t bins = 4);

// Probabilities over a finite answer vocabulary.
class AnswerDistribution {
 public:
  // Throws std::invalid_argument unless entries are >= 0 and sum to 1
  // within 1e-9.
  explicit AnswerDistribution(std::vector<double> p);

  std::size_t size() const { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }
  const std::vector<double>& values() const { return p_; }

 private:
  std::vector<double> p_;
};

struct Decomposition {
  double loss_lomo = 0.0;  // -log p_tx(a)
  double sft_term = 0.0;   // -log p_x(a)
  double align_term = 0.0; // log p_x(a) - log p_tx(a)
  double split_residual = 0.0;
  double expected_cross_entropy = 0.0;
  double entropy_term = 0.0;
  double kl = 0.0;  // nats
  double kl_residual = 0.0;
};

// Throws std::domain_error when p_x(a) or p_tx(a) is zero or p_tx misses
// support of p_x; std::invalid_argument on size mismatch or bad index.
Decomposition decomposition_check(const AnswerDistribution& p_x, const AnswerDistribution& p_tx,
                                  std::size_t answer);

nlohmann::ordered_json to_json(const MirReport& r);
nlohmann::ordered_json to_json(const PairwiseReport& r, const Histogram& h);
nlohmann::ordered_json to_json(const Decomposition& d);

}  // namespace lomo
