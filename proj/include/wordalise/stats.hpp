#pragma once

// Cohort statistics behind the normative models: population mean and standard
// deviation, z-scores, percentile/rank, and signed question contributions.
// Everything here is a free function over Eigen dense expressions, templated on
// the scalar type.

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "wordalise/error.hpp"

namespace wordalise::stats {

template <typename Scalar>
struct MetricStats {
  std::string metric;
  Scalar mean{0};
  Scalar std{0};  // population definition (divide by n)
  Eigen::Index n{0};

  bool degenerate() const { return !(std > Scalar(0)); }
};

template <typename Scalar>
struct PercentileRank {
  Scalar percentile{0};  // fraction of the cohort <= x
  Eigen::Index rank{0};  // 1 + number of strictly greater values
};

enum class Sign { positive, negative };

/// Signed contribution (weight * answer) of every question to one category.
template <typename Scalar>
struct ContributionVector {
  std::string category;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> contributions;

  Scalar total() const { return contributions.sum(); }
};

struct AnswerScale {
  int min = 1;
  int max = 5;

  int size() const { return max - min + 1; }
};

/// Two-pass mean and population standard deviation.
///
/// A zero standard deviation is not an error here; the metric is flagged
/// degenerate and z_score() refuses it.
template <typename Derived>
MetricStats<typename Derived::Scalar> compute_metric_stats(const Eigen::DenseBase<Derived>& values,
                                                           std::string metric = {}) {
  using Scalar = typename Derived::Scalar;
  if (values.size() == 0) throw Error(Errc::EmptyInput, "no values for metric '" + metric + "'");
  const auto a = values.derived().array();
  MetricStats<Scalar> s;
  s.metric = std::move(metric);
  s.n = values.size();
  s.mean = a.mean();
  s.std = std::sqrt((a - s.mean).square().mean());
  return s;
}

template <typename Scalar>
void require_non_degenerate(const MetricStats<Scalar>& stats) {
  if (stats.degenerate()) {
    throw Error(Errc::DegenerateMetric, "metric '" + stats.metric + "' has zero standard deviation");
  }
}

template <typename Scalar>
Scalar z_score(Scalar x, const MetricStats<Scalar>& stats) {
  require_non_degenerate(stats);
  return (x - stats.mean) / stats.std;
}

/// Vectorised z-scores for a whole cohort column.
template <typename Derived>
Eigen::Array<typename Derived::Scalar, Eigen::Dynamic, 1> z_scores(
    const Eigen::DenseBase<Derived>& values, const MetricStats<typename Derived::Scalar>& stats) {
  require_non_degenerate(stats);
  return (values.derived().array() - stats.mean) / stats.std;
}

template <typename Derived>
PercentileRank<typename Derived::Scalar> percentile_and_rank(typename Derived::Scalar x,
                                                             const Eigen::DenseBase<Derived>& cohort) {
  using Scalar = typename Derived::Scalar;
  if (cohort.size() == 0) throw Error(Errc::EmptyCohort, "percentile of an empty cohort");
  const auto a = cohort.derived().array();
  const Eigen::Index at_or_below = (a <= x).count();
  const Eigen::Index above = (a > x).count();
  return {Scalar(at_or_below) / Scalar(cohort.size()), above + 1};
}

template <typename DerivedA, typename DerivedW>
void check_answers(const Eigen::MatrixBase<DerivedA>& answers, const Eigen::MatrixBase<DerivedW>& weights,
                   AnswerScale scale) {
  if (answers.size() != weights.size()) {
    throw Error(Errc::LengthMismatch, std::to_string(answers.size()) + " answers vs " +
                                          std::to_string(weights.size()) + " weights");
  }
  for (Eigen::Index i = 0; i < answers.size(); ++i) {
    const auto a = answers(i);
    if (a < scale.min || a > scale.max || a != std::round(double(a))) {
      throw Error(Errc::OutOfRangeAnswer, "answer " + std::to_string(i) + " is outside " +
                                              std::to_string(scale.min) + ".." + std::to_string(scale.max));
    }
    const auto w = weights(i);
    if (w != 1 && w != -1) throw Error(Errc::BadWeight, "weight " + std::to_string(i) + " is not +1 or -1");
  }
}

/// Sum over questions of weight * answer, with +-1 weights and answers on `scale`.
template <typename DerivedA, typename DerivedW>
typename DerivedA::Scalar weighted_category_score(const Eigen::MatrixBase<DerivedA>& answers,
                                                  const Eigen::MatrixBase<DerivedW>& weights,
                                                  AnswerScale scale = {}) {
  check_answers(answers, weights, scale);
  return answers.dot(weights.template cast<typename DerivedA::Scalar>());
}

/// Per-question weight * value. No range checks: also used for loading-weighted
/// mean answers where neither side is integral.
template <typename DerivedV, typename DerivedW>
ContributionVector<typename DerivedV::Scalar> contributions(std::string category,
                                                            const Eigen::MatrixBase<DerivedV>& values,
                                                            const Eigen::MatrixBase<DerivedW>& weights) {
  using Scalar = typename DerivedV::Scalar;
  if (values.size() != weights.size()) {
    throw Error(Errc::LengthMismatch, "category '" + category + "': values and weights differ in length");
  }
  return {std::move(category), values.cwiseProduct(weights.template cast<Scalar>())};
}

/// Index of the largest (positive) or smallest (negative) contribution; ties go to
/// the lowest index.
template <typename Scalar>
Eigen::Index top_contributor(const ContributionVector<Scalar>& cv, Sign sign) {
  const auto& c = cv.contributions;
  if (c.size() == 0) throw Error(Errc::EmptyContributions, "category '" + cv.category + "'");
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < c.size(); ++i) {
    if (sign == Sign::positive ? c(i) > c(best) : c(i) < c(best)) best = i;
  }
  return best;
}

}  // namespace wordalise::stats
