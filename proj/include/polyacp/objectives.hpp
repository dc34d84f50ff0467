#pragma once

#include <span>
#include <vector>

#include "polyacp/labels.hpp"
#include "polyacp/model_state.hpp"
#include "polyacp/tensor.hpp"

namespace polyacp {

struct ObjectiveValue {
  double likelihood = 0.0;
  double prior = 0.0;
  double supervision = 0.0;
  double multi_target = 0.0;

  double value() const { return likelihood + prior + supervision + multi_target; }
};

// Per-cell quantities held fixed while a parameter block is optimized.
struct CellExpectations {
  std::vector<double> kappa;
  std::vector<double> omega;
  std::vector<double> curvature;  // N_ii
};

CellExpectations cell_expectations(const ModelState& state, const MiniBatch& batch,
                                   LabelMode mode = LabelMode::observed);

// Per-(task, entity) nu-hat and curvature O for one supervised mode. Dense
// over the mode's entities; unlabeled entries stay 0.
struct HeadExpectations {
  std::size_t mode = 0;
  std::size_t task_count = 0;
  std::vector<double> nu;
  std::vector<double> curvature;

  double nu_at(EntityIndex entity, std::size_t task) const {
    return nu[static_cast<std::size_t>(entity) * task_count + task];
  }
  double curvature_at(EntityIndex entity, std::size_t task) const {
    return curvature[static_cast<std::size_t>(entity) * task_count + task];
  }
};

HeadExpectations head_expectations(const ModelState& state, const LabelSet& labels);

// Sign with Sign(0) = 0.
double sign_of(double x);

// sum_i [kappa_i phi_i - omega_i phi_i^2 / 2] - sum_r lambda_r^2 / (2 tau_r).
ObjectiveValue log_post_lambda(const ModelState& state, const MiniBatch& batch,
                               const CellExpectations& expectations);
ObjectiveValue log_post_lambda(const ModelState& state, const MiniBatch& batch);

// Head objective for one task, including the sign-coupled multi-target term.
ObjectiveValue log_post_beta(const ModelState& state, const LabelSet& labels, std::size_t task,
                             const HeadExpectations& expectations);
ObjectiveValue log_post_beta(const ModelState& state, const LabelSet& labels, std::size_t task);

// Factor objective for entity `entity` of `mode`. Supervision terms appear
// only when `labels` covers this mode and the entity is labeled.
ObjectiveValue log_post_factor(const ModelState& state, std::size_t mode, EntityIndex entity,
                               const MiniBatch& batch, const CellExpectations& expectations,
                               const LabelSet* labels, const HeadExpectations* head);
ObjectiveValue log_post_factor(const ModelState& state, std::size_t mode, EntityIndex entity,
                               const MiniBatch& batch, const LabelSet* labels);

// Mean Bernoulli log-likelihood log sigma((2y - 1) phi) over `cells`.
double mean_log_likelihood(const ModelState& state, const MiniBatch& cells);

}  // namespace polyacp
