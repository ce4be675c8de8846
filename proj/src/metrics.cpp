#include "lomo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>


namespace lomo {

GaussianMoments fit_gaussian(const Eigen::MatrixXd& observations) {
  if (observations.rows() < 2) throw std::domain_error("need at least 2 vectors to fit moments");
  GaussianMoments m(observations.cols());
  m.add_block(observations);
  return m;
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition did not converge");
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

double frechet_distance(const GaussianMoments& a, const GaussianMoments& b, double shrinkage) {
  if (a.dim() != b.dim()) throw std::invalid_argument("moment dimensions differ");
  const auto n = a.dim();
  const Eigen::MatrixXd eps = shrinkage * Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd sa = a.covariance() + eps;
  const Eigen::MatrixXd sb = b.covariance() + eps;
  const Eigen::MatrixXd ra = psd_sqrt(sa);
  const Eigen::MatrixXd cross = psd_sqrt(ra * sb * ra);
  const double mean_term = (a.mean() - b.mean()).squaredNorm();
  // The shrinkage cancels for equal covariances but leaves rounding noise.
  return std::max(0.0, mean_term + sa.trace() + sb.trace() - 2.0 * cross.trace());
}

MirReport mir(const HiddenStateDump& dump) {
  dump.validate();
  const int dim = static_cast<int>(dump.hidden_dim);
  MirReport report;
  for (std::uint32_t l = 0; l < dump.n_layers; ++l) {
    GaussianMoments text(dim), visual(dim);
    std::vector<std::uint32_t> text_rows, visual_rows;
    for (const auto& s : dump.samples) {
      text_rows.clear();
      visual_rows.clear();
      for (std::uint32_t t = 0; t < s.n_tokens(); ++t)
        (s.roles[t] == TokenRole::textual ? text_rows : visual_rows).push_back(t);
      const auto block = s.layer(l, dump.hidden_dim);
      if (!text_rows.empty()) {
        GaussianMoments part(dim);
        part.add_block(Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic,
                                                      Eigen::RowMajor>>(block.data(),
                                                                        s.n_tokens(), dim)
                           (text_rows, Eigen::all)
                           .cast<double>());
        text.merge(part);
      }
      if (!visual_rows.empty()) {
        GaussianMoments part(dim);
        part.add_block(Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic,
                                                      Eigen::RowMajor>>(block.data(),
                                                                        s.n_tokens(), dim)
                           (visual_rows, Eigen::all)
                           .cast<double>());
        visual.merge(part);
      }
    }
    if (text.count() < 2 || visual.count() < 2)
      throw std::domain_error("layer " + std::to_string(l) +
                              " has fewer than 2 tokens of one role");
    report.per_layer_fid.push_back(frechet_distance(text, visual));
  }
  if (!report.per_layer_fid.empty())
    report.mir = std::accumulate(report.per_layer_fid.begin(), report.per_layer_fid.end(), 0.0) /
                 static_cast<double>(report.per_layer_fid.size());
  return report;
}

double cosine_distance(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  if (u.size() != v.size()) throw std::invalid_argument("vector dimensions differ");
  const double nu = u.norm(), nv = v.norm();
  if (nu == 0.0 || nv == 0.0) throw std::domain_error("zero-norm mean vector");
  return std::clamp(1.0 - u.dot(v) / (nu * nv), 0.0, 2.0);
}

PairwiseReport pairwise_cross_modal_distance(const HiddenStateDump& dump, std::size_t layer) {
  dump.validate();
  if (layer >= dump.n_layers)
    throw std::out_of_range("layer " + std::to_string(layer) + " not in dump with " +
                            std::to_string(dump.n_layers) + " layers");
  const Eigen::Index dim = dump.hidden_dim;
  PairwiseReport report;
  report.layer = layer;
  for (const auto& s : dump.samples) {
    Eigen::VectorXd text = Eigen::VectorXd::Zero(dim), visual = Eigen::VectorXd::Zero(dim);
    std::size_t n_text = 0, n_visual = 0;
    const auto block = s.layer(layer, dump.hidden_dim);
    for (std::size_t t = 0; t < s.n_tokens(); ++t) {
      const Eigen::Map<const Eigen::VectorXf> row(block.data() + t * dim, dim);
      if (s.roles[t] == TokenRole::textual) {
        text += row.cast<double>();
        ++n_text;
      } else {
        visual += row.cast<double>();
        ++n_visual;
      }
    }
    if (n_text == 0 || n_visual == 0)
      throw std::domain_error("sample " + s.id + " lacks textual or visual tokens");
    text /= static_cast<double>(n_text);
    visual /= static_cast<double>(n_visual);
    report.ids.push_back(s.id);
    report.distances.push_back(cosine_distance(text, visual));
  }
  if (!report.distances.empty())
    report.mean = std::accumulate(report.distances.begin(), report.distances.end(), 0.0) /
                  static_cast<double>(report.distances.size());
  return report;
}

Histogram equal_count_histogram(std::vector<double> values, std::size_t bins) {
  if (bins == 0) throw std::invalid_argument("bins must be positive");
  Histogram h;
  if (values.empty()) return h;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  for (std::size_t i = 0; i < bins; ++i) {
    const std::size_t lo = i * n / bins, hi = (i + 1) * n / bins;
    h.edges.push_back(values[std::min(lo, n - 1)]);
    h.counts.push_back(hi - lo);
  }
  h.edges.push_back(values.back());
  return h;
}

AnswerDistribution::AnswerDistribution(std::vector<double> p) : p_(std::move(p)) {
  if (p_.empty()) throw std::invalid_argument("empty answer distribution");
  double sum = 0.0;
  for (double v : p_) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw std::invalid_argument("answer probabilities must be finite and >= 0");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("answer probabilities must sum to 1");
}

Decomposition decomposition_check(const AnswerDistribution& p_x, const AnswerDistribution& p_tx,
                                  std::size_t answer) {
  if (p_x.size() != p_tx.size()) throw std::invalid_argument("distributions differ in size");
  if (answer >= p_x.size()) throw std::invalid_argument("answer index out of range");
  if (p_x[answer] == 0.0 || p_tx[answer] == 0.0)
    throw std::domain_error("zero probability at the answer");

  // Each log is evaluated once and reused, so the split is exact.
  const double lp_x = std::log(p_x[answer]);
  const double lp_tx = std::log(p_tx[answer]);
  Decomposition d;
  d.loss_lomo = -lp_tx;
  d.sft_term = -lp_x;
  d.align_term = lp_x - lp_tx;
  d.split_residual = (d.loss_lomo - d.sft_term) - d.align_term;

  for (std::size_t i = 0; i < p_x.size(); ++i) {
    const double px = p_x[i];
    if (px == 0.0) continue;  // 0 log 0 = 0
    if (p_tx[i] == 0.0) throw std::domain_error("p_tx misses support of p_x");
    const double lx = std::log(px), ltx = std::log(p_tx[i]);
    d.expected_cross_entropy += px * -ltx;
    d.entropy_term += px * -lx;
    d.kl += px * (lx - ltx);
  }
  d.kl_residual = d.expected_cross_entropy - (d.entropy_term + d.kl);
  if (d.kl < 0.0) d.kl = 0.0;  // rounding below zero on (near) identical inputs
  return d;
}

nlohmann::ordered_json to_json(const MirReport& r) {
  return {{"mir", r.mir}, {"per_layer_fid", r.per_layer_fid}};
}

nlohmann::ordered_json to_json(const PairwiseReport& r, const Histogram& h) {
  nlohmann::ordered_json samples = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < r.ids.size(); ++i)
    samples.push_back({{"id", r.ids[i]}, {"distance", r.distances[i]}});
  return {{"layer", r.layer},
          {"pcd_mean", r.mean},
          {"pcd_histogram", {{"binning", "equal_count"}, {"edges", h.edges}, {"counts", h.counts}}},
          {"samples", samples}};
}

nlohmann::ordered_json to_json(const Decomposition& d) {
  return {{"loss_lomo", d.loss_lomo},
          {"sft_term", d.sft_term},
          {"align_term", d.align_term},
          {"split_residual", d.split_residual},
          {"expected_cross_entropy", d.expected_cross_entropy},
          {"entropy_term", d.entropy_term},
          {"kl", d.kl},
          {"kl_residual", d.kl_residual}};
}

}  // namespace lomo
