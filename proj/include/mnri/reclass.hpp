#pragma once

#include "mnri/glm.hpp"

#include <Eigen/Dense>

#include <optional>

namespace mnri::reclass {

using Eigen::VectorXd;

/// 1 for u > 0, 1/2 at u == 0 (exact), 0 for u < 0.
double extended_indicator(double u);

/// Everything the reclassification statistics need, evaluated on one sample.
/// `delta` is the risk-score change (expanded minus base linear predictor),
/// `residual` the base-model score residual and the probabilities are the
/// nested fitted event probabilities on the evaluation sample.
struct ScoreChange {
  VectorXd y;
  VectorXd delta;
  VectorXd residual;
  VectorXd prob_base;
  VectorXd prob_expanded;

  Eigen::Index n() const noexcept { return y.size(); }
  double event_rate() const;
};

ScoreChange score_change(const glm::NestedFits& fits);

/// Coefficients from independent training and test fits; the statistic is
/// evaluated on the test data.
struct TrainTestPair {
  glm::NestedFits train_fits;
  glm::NestedFits test_fits;

  const glm::Dataset& test_data() const { return *test_fits.data; }
};

TrainTestPair make_train_test(const glm::Dataset& train, const glm::Dataset& test, glm::Link link);

/// Training-fit risk-score change on the test covariates, test-fit base
/// residuals and test outcomes.
ScoreChange score_change(const TrainTestPair& pair);

// All statistics are on the half-NRI scale: [n ybar (1 - ybar)]^-1 sum(...).
double nri_hard(const ScoreChange& sc);
double nri_smooth(const ScoreChange& sc);
double mnri_hard(const ScoreChange& sc);
double mnri_smooth(const ScoreChange& sc);

double nri_hard(const glm::NestedFits& fits);
double nri_smooth(const glm::NestedFits& fits);
double mnri_hard(const glm::NestedFits& fits);
double mnri_smooth(const glm::NestedFits& fits);
double mnri_train_test(const TrainTestPair& pair);

struct MadSummary {
  double mad = 0.0;
  double scaled_mad = 0.0;  // [2 ybar (1 - ybar)]^-1 mad
};

MadSummary mad_probabilities(const ScoreChange& sc);
MadSummary mad_probabilities(const glm::NestedFits& fits);

/// [n ybar (1 - ybar)]^-1 sum (y_i - Gexp_i)(I_i - 1/2). For logit,
/// mnri_hard == scaled_mad + cross_term exactly.
double mad_cross_term(const ScoreChange& sc);

struct SignDecomposition {
  double sign_inner = 0.0;  // s'r
  long sign_norm = 0;       // s's
  double regression_form = 0.0;
};

/// Throws AllTies when every delta is exactly zero.
SignDecomposition sign_decomposition(const ScoreChange& sc);
SignDecomposition sign_decomposition(const glm::NestedFits& fits);

long count_ties(const ScoreChange& sc);

struct ReclassReport {
  double nri_hard = 0.0;
  double nri_smooth = 0.0;
  double mnri_hard = 0.0;
  double mnri_smooth = 0.0;
  double mad = 0.0;
  double scaled_mad = 0.0;
  double cross_term = 0.0;
  double sign_inner = 0.0;
  long sign_norm = 0;
  std::optional<double> regression_form;
  long ties = 0;

  bool operator==(const ReclassReport&) const = default;
};

ReclassReport make_report(const ScoreChange& sc);

/// Single-observation change score with known base model and event rate:
/// [pi0 (1 - pi0)]^-1 r (I(delta > 0) - 1/2).
double change_score_single(double residual, double delta, double pi0);

}  // namespace mnri::reclass
