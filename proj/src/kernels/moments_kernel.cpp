#include <omp.h>

#include <stdexcept>
#include <vector>

#include "lomo/kernels.hpp"

namespace lomo::kernels {

namespace {

constexpr std::size_t kBlockRows = 256;

void check_rows(std::span<const float> data, int dim, std::span<const std::uint32_t> rows) {
  if (dim <= 0) throw std::invalid_argument("dimension must be positive");
  const std::size_t n_rows = data.size() / static_cast<std::size_t>(dim);
  for (auto r : rows)
    if (r >= n_rows) throw std::out_of_range("row index outside the data matrix");
}

GaussianMoments block_moments(std::span<const float> data, int dim,
                              std::span<const std::uint32_t> rows, std::size_t begin,
                              std::size_t end) {
  GaussianMoments acc(dim);
  Eigen::MatrixXd block;
  for (std::size_t b = begin; b < end; b += kBlockRows) {
    const std::size_t n = std::min(kBlockRows, end - b);
    block.resize(static_cast<Eigen::Index>(n), dim);
    for (std::size_t i = 0; i < n; ++i) {
      const float* src = data.data() + static_cast<std::size_t>(rows[b + i]) * dim;
      for (int d = 0; d < dim; ++d) block(static_cast<Eigen::Index>(i), d) = src[d];
    }
    acc.add_block(block);
  }
  return acc;
}

}  // namespace

GaussianMoments accumulate_moments(std::span<const float> data, int dim,
                                   std::span<const std::uint32_t> rows, Exec exec) {
  check_rows(data, dim, rows);
  if (exec == Exec::serial) {
    const auto n = static_cast<std::int64_t>(rows.size());
    if (n < 2) throw std::domain_error("need at least 2 vectors to fit moments");
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
    for (auto r : rows)
      for (int d = 0; d < dim; ++d) mean[d] += data[static_cast<std::size_t>(r) * dim + d];
    mean /= static_cast<double>(n);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
    for (auto r : rows)
      for (int i = 0; i < dim; ++i) {
        const double di = data[static_cast<std::size_t>(r) * dim + i] - mean[i];
        for (int j = 0; j < dim; ++j)
          cov(i, j) += di * (data[static_cast<std::size_t>(r) * dim + j] - mean[j]);
      }
    cov /= static_cast<double>(n - 1);
    return GaussianMoments::from_parameters(mean, cov, n);
  }

  const int threads = omp_get_max_threads();
  std::vector<GaussianMoments> partial(static_cast<std::size_t>(threads));
  const std::size_t total = rows.size();
#pragma omp parallel num_threads(threads)
  {
    const int t = omp_get_thread_num();
    const int nt = omp_get_num_threads();
    const std::size_t begin = total * t / nt;
    const std::size_t end = total * (t + 1) / nt;
    partial[t] = block_moments(data, dim, rows, begin, end);
  }
  GaussianMoments result(dim);
  for (const auto& p : partial) result.merge(p);
  return result;
}

}  // namespace lomo::kernels
