#include "polyacp/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "polyacp/augmentation.hpp"
#include "polyacp/error.hpp"
#include "polyacp/io.hpp"

namespace polyacp {

std::vector<double> score_entities(const ModelState& state, std::size_t mode, std::size_t task) {
  const auto* head = state.head_for_mode(mode);
  if (head == nullptr) throw Error("mode " + std::to_string(mode) + " has no trained head");
  if (task >= head->tasks.size()) throw Error("mode " + std::to_string(mode) + " has no head for task " + std::to_string(task));
  const Vector& beta = head->tasks[task].beta;
  const auto& u = state.factors[mode];
  std::vector<double> scores(static_cast<std::size_t>(u.rows()));
  for (Eigen::Index m = 0; m < u.rows(); ++m) {
    scores[static_cast<std::size_t>(m)] = logistic(beta[0] + u.row(m).dot(beta.tail(u.cols())));
  }
  return scores;
}

std::vector<double> lambda_weighted_norms(const ModelState& state, std::size_t mode) {
  const auto& u = state.factors.at(mode);
  const Eigen::ArrayXd weights = state.lambda.array().square();
  std::vector<double> out(static_cast<std::size_t>(u.rows()));
  for (Eigen::Index m = 0; m < u.rows(); ++m) {
    out[static_cast<std::size_t>(m)] = std::sqrt((u.row(m).array().square().transpose() * weights).sum());
  }
  return out;
}

double roc_auc(std::span<const double> scores, std::span<const int> truth) {
  if (scores.size() != truth.size()) throw Error("scores and truth differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    // Average 1-based rank of the tied run [i, j).
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (truth[order[k]] != 0) {
        positive_rank_sum += rank;
        ++positives;
      }
    }
    i = j;
  }
  const std::size_t negatives = scores.size() - positives;
  if (positives == 0 || negatives == 0) throw Error("AUC needs at least one positive and one negative");
  const double p = static_cast<double>(positives);
  return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(negatives));
}

Metrics classification_metrics(std::span<const double> scores, std::span<const int> truth, double threshold) {
  if (!std::isfinite(threshold)) throw Error("threshold must be finite");
  Metrics m;
  m.threshold = threshold;
  m.auc = roc_auc(scores, truth);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    const bool actual = truth[i] != 0;
    if (predicted && actual) ++m.true_positive;
    if (predicted && !actual) ++m.false_positive;
    if (!predicted && actual) ++m.false_negative;
    if (!predicted && !actual) ++m.true_negative;
  }
  const auto predicted_positive = m.true_positive + m.false_positive;
  m.precision_undefined = predicted_positive == 0;
  m.precision = m.precision_undefined ? 0.0 : static_cast<double>(m.true_positive) / static_cast<double>(predicted_positive);
  m.recall = static_cast<double>(m.true_positive) / static_cast<double>(m.positives());
  m.f1 = (m.precision > 0 && m.recall > 0) ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

Dispersion dispersion_report(std::span<const double> samples) {
  if (samples.size() < 2) throw Error("a dispersion summary needs at least two samples");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  };
  return {sorted.front(), quantile(0.25), quantile(0.5), quantile(0.75), sorted.back()};
}

std::vector<ScoreRow> score_rows(const ModelState& state, const TensorScheme& scheme, std::size_t mode,
                                 std::size_t task) {
  const auto scores = score_entities(state, mode, task);
  const auto* head = state.head_for_mode(mode);
  std::vector<ScoreRow> rows;
  rows.reserve(scores.size());
  for (std::size_t m = 0; m < scores.size(); ++m) {
    rows.push_back({scheme.modes[mode].name, scheme.entities[mode].id(static_cast<EntityIndex>(m)),
                    head->tasks[task].name, scores[m]});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const ScoreRow& a, const ScoreRow& b) { return a.score > b.score; });
  return rows;
}

void write_scores(std::span<const ScoreRow> rows, std::ostream& out) {
  out << "mode,entity,task,score\n";
  out.precision(17);
  for (const auto& row : rows) out << row.mode << ',' << row.entity << ',' << row.task << ',' << row.score << '\n';
}

std::vector<ScoreRow> read_scores(std::istream& in) {
  std::string line;
  if (!io::read_line(in, line)) throw IngestError("score input is empty (no header row)");
  const char delimiter = io::detect_delimiter(line);
  std::vector<ScoreRow> rows;
  std::size_t line_number = 1;
  while (io::read_line(in, line)) {
    ++line_number;
    if (io::trim(line).empty()) continue;
    const auto fields = io::split(line, delimiter);
    if (fields.size() < 4) throw IngestError("score line " + std::to_string(line_number) + ": expected 4 columns");
    double score = 0.0;
    try {
      std::size_t used = 0;
      score = std::stod(fields[3], &used);
      if (used != fields[3].size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw IngestError("score line " + std::to_string(line_number) + ": invalid score '" + fields[3] + "'");
    }
    rows.push_back({fields[0], fields[1], fields[2], score});
  }
  return rows;
}

void write_metrics(const Metrics& m, std::ostream& out) {
  out.precision(10);
  out << "auc = " << m.auc << '\n'
      << "precision = " << m.precision << '\n'
      << "recall = " << m.recall << '\n'
      << "f1 = " << m.f1 << '\n'
      << "threshold = " << m.threshold << '\n'
      << "positives = " << m.positives() << '\n'
      << "negatives = " << m.negatives() << '\n'
      << "true_positive = " << m.true_positive << '\n'
      << "false_positive = " << m.false_positive << '\n'
      << "true_negative = " << m.true_negative << '\n'
      << "false_negative = " << m.false_negative << '\n'
      << "precision_undefined = " << (m.precision_undefined ? "true" : "false") << '\n';
}

}  // namespace polyacp
