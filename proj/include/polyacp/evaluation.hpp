#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "polyacp/model_state.hpp"
#include "polyacp/tensor.hpp"

namespace polyacp {

// sigma(beta_l . u~_m) for every entity of the head's mode.
std::vector<double> score_entities(const ModelState& state, std::size_t mode, std::size_t task);

// Unsupervised suspiciousness sqrt(sum_r lambda_r^2 u_r^2).
std::vector<double> lambda_weighted_norms(const ModelState& state, std::size_t mode);

// Rank-statistic AUC; ties count one half. truth entries are nonzero for
// positives.
double roc_auc(std::span<const double> scores, std::span<const int> truth);

struct Metrics {
  double auc = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double threshold = 0.5;
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t true_negative = 0;
  std::size_t false_negative = 0;
  // No predicted positives; precision reported as 0.
  bool precision_undefined = false;

  std::size_t positives() const { return true_positive + false_negative; }
  std::size_t negatives() const { return true_negative + false_positive; }
};

// Predicted positive iff score >= threshold.
Metrics classification_metrics(std::span<const double> scores, std::span<const int> truth,
                               double threshold = 0.5);

struct Dispersion {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

// Five-number summary with linearly interpolated quartiles.
Dispersion dispersion_report(std::span<const double> samples);

struct ScoreRow {
  std::string mode;
  std::string entity;
  std::string task;
  double score = 0.0;
};

// Rows sorted by descending score (stable on entity order).
std::vector<ScoreRow> score_rows(const ModelState& state, const TensorScheme& scheme,
                                 std::size_t mode, std::size_t task);
void write_scores(std::span<const ScoreRow> rows, std::ostream& out);
std::vector<ScoreRow> read_scores(std::istream& in);

void write_metrics(const Metrics& metrics, std::ostream& out);

}  // namespace polyacp
