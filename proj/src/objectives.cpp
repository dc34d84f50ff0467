#include "polyacp/objectives.hpp"

#include <cmath>
#include <vector>

#include "polyacp/augmentation.hpp"
#include "polyacp/error.hpp"

namespace polyacp {

namespace {

double log_logistic(double x) {
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

const SupervisedMode& require_head(const ModelState& state, std::size_t mode) {
  const auto* head = state.head_for_mode(mode);
  if (head == nullptr) throw Error("mode " + std::to_string(mode) + " has no supervised head");
  return *head;
}

}  // namespace

double sign_of(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

CellExpectations cell_expectations(const ModelState& state, const MiniBatch& batch, LabelMode mode) {
  CellExpectations out;
  const std::size_t n = batch.size();
  out.kappa.resize(n);
  out.omega.resize(n);
  out.curvature.resize(n);
  std::vector<double> a(state.rank());
  for (std::size_t i = 0; i < n; ++i) {
    const double phi = cell_products(state, batch.cell(i), a);
    out.kappa[i] = mode == LabelMode::observed ? kappa(batch.labels[i]) : expected_kappa(phi);
    out.omega[i] = omega_hat(phi);
    out.curvature[i] = curvature_weight(phi);
  }
  return out;
}

HeadExpectations head_expectations(const ModelState& state, const LabelSet& labels) {
  const auto& head = require_head(state, labels.mode());
  HeadExpectations out;
  out.mode = labels.mode();
  out.task_count = labels.task_count();
  out.nu.assign(labels.entity_count() * labels.task_count(), 0.0);
  out.curvature.assign(labels.entity_count() * labels.task_count(), 0.0);
  const auto& u = state.factors[labels.mode()];
  for (std::size_t l = 0; l < labels.task_count(); ++l) {
    const Vector& beta = head.tasks[l].beta;
    for (const auto m : labels.labeled(l)) {
      const double psi = beta[0] + u.row(m).dot(beta.tail(u.cols()));
      const std::size_t slot = static_cast<std::size_t>(m) * out.task_count + l;
      out.nu[slot] = nu_hat(psi);
      out.curvature[slot] = curvature_weight(psi);
    }
  }
  return out;
}

ObjectiveValue log_post_lambda(const ModelState& state, const MiniBatch& batch,
                               const CellExpectations& expectations) {
  ObjectiveValue out;
  std::vector<double> a(state.rank());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double phi = cell_products(state, batch.cell(i), a);
    out.likelihood += expectations.kappa[i] * phi - 0.5 * expectations.omega[i] * phi * phi;
  }
  out.likelihood *= batch.weight;
  out.prior = -0.5 * (state.lambda.array().square() / state.tau.array()).sum();
  return out;
}

ObjectiveValue log_post_lambda(const ModelState& state, const MiniBatch& batch) {
  return log_post_lambda(state, batch, cell_expectations(state, batch));
}

ObjectiveValue log_post_beta(const ModelState& state, const LabelSet& labels, std::size_t task,
                             const HeadExpectations& expectations) {
  const auto& head = require_head(state, labels.mode());
  if (labels.labeled(task).empty()) throw Error("task has no labeled entities");
  const auto& u = state.factors[labels.mode()];
  const Vector& beta = head.tasks[task].beta;

  ObjectiveValue out;
  for (const auto m : labels.labeled(task)) {
    const double psi = beta[0] + u.row(m).dot(beta.tail(u.cols()));
    const double z = labels.label(m, task);
    out.supervision += 0.5 * z * psi - 0.5 * expectations.nu_at(m, task) * psi * psi;
  }
  out.prior = -0.5 * (beta.array().square() / head.tasks[task].rho2.array()).sum();
  for (std::size_t j = 0; j < head.tasks.size(); ++j) {
    if (j == task) continue;
    const double qlj = head.q(static_cast<Eigen::Index>(task), static_cast<Eigen::Index>(j));
    const Vector& other = head.tasks[j].beta;
    double dot = 0.0;
    for (Eigen::Index r = 0; r < beta.size(); ++r) dot += beta[r] * sign_of(other[r]);
    out.multi_target -= qlj * dot;
  }
  return out;
}

ObjectiveValue log_post_beta(const ModelState& state, const LabelSet& labels, std::size_t task) {
  return log_post_beta(state, labels, task, head_expectations(state, labels));
}

ObjectiveValue log_post_factor(const ModelState& state, std::size_t mode, EntityIndex entity,
                               const MiniBatch& batch, const CellExpectations& expectations,
                               const LabelSet* labels, const HeadExpectations* head) {
  ObjectiveValue out;
  std::vector<double> a(state.rank());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto cell = batch.cell(i);
    if (cell[mode] != entity) continue;
    const double phi = cell_products(state, cell, a);
    out.likelihood += expectations.kappa[i] * phi - 0.5 * expectations.omega[i] * phi * phi;
  }
  out.likelihood *= batch.weight;
  const auto u = state.factors[mode].row(entity);
  out.prior = -0.5 * (u.array().square() / state.factor_vars[mode].row(entity).array()).sum();

  if (labels != nullptr && head != nullptr && labels->mode() == mode) {
    const auto& heads = require_head(state, mode);
    for (std::size_t l = 0; l < labels->task_count(); ++l) {
      const int z = labels->label(entity, l);
      if (z == 0) continue;
      const Vector& beta = heads.tasks[l].beta;
      const double s = u.dot(beta.tail(u.size()));
      const double shifted = beta[0] + s;
      out.supervision += 0.5 * z * s - 0.5 * head->nu_at(entity, l) * shifted * shifted;
    }
  }
  return out;
}

ObjectiveValue log_post_factor(const ModelState& state, std::size_t mode, EntityIndex entity,
                               const MiniBatch& batch, const LabelSet* labels) {
  const auto cells = cell_expectations(state, batch);
  if (labels != nullptr && labels->mode() == mode && state.supervised(mode)) {
    const auto head = head_expectations(state, *labels);
    return log_post_factor(state, mode, entity, batch, cells, labels, &head);
  }
  return log_post_factor(state, mode, entity, batch, cells, nullptr, nullptr);
}

double mean_log_likelihood(const ModelState& state, const MiniBatch& cells) {
  if (cells.size() == 0) return 0.0;
  std::vector<double> a(state.rank());
  double total = 0.0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const double phi = cell_products(state, cells.cell(i), a);
    total += log_logistic(cells.labels[i] ? phi : -phi);
  }
  return total / static_cast<double>(cells.size());
}

}  // namespace polyacp
