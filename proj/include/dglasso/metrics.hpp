#ifndef DGLASSO_METRICS_HPP
#define DGLASSO_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "dglasso/core.hpp"
#include "dglasso/lgssm.hpp"
#include "dglasso/solver.hpp"

namespace dglasso {

/// Edge-detection scores between a ground-truth support and an estimate.
/// `auc` sweeps the detection threshold over the estimated magnitudes; when
/// the ground truth has only one class the AUC is undefined and reported as
/// NaN with `auc_defined = false`.
struct EdgeScores {
  double auc = std::numeric_limits<double>::quiet_NaN();
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double specificity = 0.0;
  double accuracy = 0.0;
  double threshold = 1e-10;
  bool auc_defined = false;
};

/// Metric bundle for one fit, mirroring the benchmark table columns.
struct MetricsReport {
  double rmse_A = 0.0;
  double rmse_P = 0.0;
  double rmse_Q = 0.0;
  EdgeScores edges_A;
  EdgeScores edges_P;
  double cnmse_filter = 0.0;
  double cnmse_smooth = 0.0;
  double cnmse_pred = 0.0;
  double test_negloglik = 0.0;
};

/// Relative mean square error ||M* - M^||_F^2 / ||M*||_F^2 (squared ratio).
template <typename Scalar>
double rmse(const Matrix<Scalar>& m_star, const Matrix<Scalar>& m_hat) {
  if (m_star.rows() != m_hat.rows() || m_star.cols() != m_hat.cols())
    throw DimensionMismatch("rmse: shapes differ");
  const double denom = static_cast<double>(m_star.squaredNorm());
  if (denom == 0.0) throw ZeroReference("rmse: reference matrix is zero");
  return static_cast<double>((m_star - m_hat).squaredNorm()) / denom;
}

/// Confusion-matrix scores of supp(|M^| > threshold) against
/// supp(|M*| > threshold), plus the threshold-sweep AUC computed by rank
/// averaging (Mann-Whitney), which handles ties exactly.
template <typename Scalar>
EdgeScores edge_scores(const Matrix<Scalar>& m_star,
                       const Matrix<Scalar>& m_hat, double threshold = 1e-10,
                       bool include_diagonal = true) {
  if (m_star.rows() != m_hat.rows() || m_star.cols() != m_hat.cols())
    throw DimensionMismatch("edge_scores: shapes differ");

  std::vector<double> score;
  std::vector<bool> label;
  for (Index j = 0; j < m_star.cols(); ++j)
    for (Index i = 0; i < m_star.rows(); ++i) {
      if (!include_diagonal && i == j) continue;
      label.push_back(std::abs(static_cast<double>(m_star(i, j))) > threshold);
      score.push_back(std::abs(static_cast<double>(m_hat(i, j))));
    }

  long tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < score.size(); ++i) {
    const bool predicted = score[i] > threshold;
    if (predicted && label[i]) ++tp;
    else if (predicted && !label[i]) ++fp;
    else if (!predicted && !label[i]) ++tn;
    else ++fn;
  }

  EdgeScores out;
  out.threshold = threshold;
  out.precision = tp + fp > 0 ? double(tp) / double(tp + fp) : 0.0;
  out.recall = tp + fn > 0 ? double(tp) / double(tp + fn) : 0.0;
  out.specificity = tn + fp > 0 ? double(tn) / double(tn + fp) : 0.0;
  out.accuracy = score.empty() ? 0.0 : double(tp + tn) / double(score.size());
  out.f1 = (2 * tp + fp + fn) > 0 ? double(2 * tp) / double(2 * tp + fp + fn)
                                  : 0.0;

  const long n_pos = tp + fn;
  const long n_neg = tn + fp;
  if (n_pos > 0 && n_neg > 0) {
    // Average ranks of the positive-class scores.
    std::vector<std::size_t> order(score.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return score[a] < score[b];
    });
    double rank_pos_sum = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
      std::size_t j = i;
      while (j + 1 < order.size() && score[order[j + 1]] == score[order[i]]) ++j;
      const double avg_rank = 0.5 * double(i + 1 + j + 1);
      for (std::size_t r = i; r <= j; ++r)
        if (label[order[r]]) rank_pos_sum += avg_rank;
      i = j + 1;
    }
    out.auc = (rank_pos_sum - 0.5 * double(n_pos) * double(n_pos + 1)) /
              (double(n_pos) * double(n_neg));
    out.auc_defined = true;
  }
  return out;
}

/// Cumulative normalized MSE: sum_k ||ref_k - est_k||^2 / sum_k ||ref_k||^2.
template <typename Scalar>
double cnmse(const std::vector<Vector<Scalar>>& ref,
             const std::vector<Vector<Scalar>>& est) {
  if (ref.size() != est.size())
    throw DimensionMismatch("cnmse: sequence lengths differ");
  double num = 0.0, denom = 0.0;
  for (std::size_t k = 0; k < ref.size(); ++k) {
    if (ref[k].size() != est[k].size())
      throw DimensionMismatch("cnmse: vector sizes differ");
    num += static_cast<double>((ref[k] - est[k]).squaredNorm());
    denom += static_cast<double>(ref[k].squaredNorm());
  }
  if (denom == 0.0) throw ZeroReference("cnmse: reference sequence is zero");
  return num / denom;
}

/// Full evaluation of a fit on an unseen test record: matrix-recovery RMSE,
/// edge detection on A and P, and the cNMSE of the filtered, smoothed and
/// predictive means produced by running the filter/smoother under the
/// ground-truth parameters versus the estimated ones. Edge scores follow the
/// benchmark-table convention and count the diagonal for both matrices.
template <typename Scalar>
MetricsReport evaluate(const GroundTruth<Scalar>& gt,
                       const FitResult<Scalar>& fitted,
                       const FixedParams<Scalar>& fixed,
                       const TimeSeries<Scalar>& test) {
  MetricsReport report;
  report.rmse_A = rmse(gt.A_star, fitted.A_hat);
  report.rmse_P = rmse(gt.P_star, fitted.P_hat);
  report.rmse_Q = rmse(gt.Q_star, fitted.Q_hat);
  report.edges_A = edge_scores(gt.A_star, fitted.A_hat);
  report.edges_P = edge_scores(gt.P_star, fitted.P_hat);

  const FilterOutput<Scalar> f_star =
      kalman_filter(fixed.bind(gt.A_star, gt.P_star), test);
  const SmootherOutput<Scalar> s_star =
      rts_smoother(fixed.bind(gt.A_star, gt.P_star), f_star);
  const FilterOutput<Scalar> f_hat =
      kalman_filter(fixed.bind(fitted.A_hat, fitted.P_hat), test);
  const SmootherOutput<Scalar> s_hat =
      rts_smoother(fixed.bind(fitted.A_hat, fitted.P_hat), f_hat);

  const Index K = test.length();
  std::vector<Vector<Scalar>> mu_star, mu_hat, mus_star, mus_hat;
  for (Index k = 1; k <= K; ++k) {
    mu_star.push_back(f_star.filtered[static_cast<std::size_t>(k)].mean);
    mu_hat.push_back(f_hat.filtered[static_cast<std::size_t>(k)].mean);
    mus_star.push_back(s_star.smoothed[static_cast<std::size_t>(k)].mean);
    mus_hat.push_back(s_hat.smoothed[static_cast<std::size_t>(k)].mean);
  }
  report.cnmse_filter = cnmse(mu_star, mu_hat);
  report.cnmse_smooth = cnmse(mus_star, mus_hat);
  report.cnmse_pred = cnmse(f_star.innovation_means, f_hat.innovation_means);
  report.test_negloglik = static_cast<double>(f_hat.neg_loglik);
  return report;
}

}  // namespace dglasso

#endif  // DGLASSO_METRICS_HPP
