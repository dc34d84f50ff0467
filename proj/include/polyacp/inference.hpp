#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "polyacp/labels.hpp"
#include "polyacp/model_state.hpp"
#include "polyacp/objectives.hpp"
#include "polyacp/tensor.hpp"

namespace polyacp {

// How a partial Fisher block is made positive definite. `prior` adds the
// prior precision (natgrad1), `self_diagonal` adds the block's own diagonal
// (natgrad2), `none` returns the data term alone.
enum class Conditioning { prior, self_diagonal, none };

inline constexpr double kDiagonalFloor = 1e-8;

struct FisherBlock {
  Matrix matrix;
  Conditioning conditioning = Conditioning::prior;

  // Direct symmetric solve of matrix * x = rhs.
  Vector solve(const Vector& rhs) const;
};

Conditioning conditioning_for(Optimizer optimizer);

// gamma_t = (tau_p + t)^-theta.
double learning_rate(std::int64_t t, double tau_p, double theta);

Vector grad_lambda(const ModelState& state, const MiniBatch& batch, const CellExpectations& cells);
FisherBlock fisher_lambda(const ModelState& state, const MiniBatch& batch,
                          const CellExpectations& cells, Conditioning conditioning);
// A^T diag(omega) A + diag(tau)^-1: the exact negative Hessian of the frozen
// lambda objective.
FisherBlock hessian_lambda(const ModelState& state, const MiniBatch& batch,
                           const CellExpectations& cells);

Vector grad_beta(const ModelState& state, const LabelSet& labels, std::size_t task,
                 const HeadExpectations& head);
FisherBlock fisher_beta(const ModelState& state, const LabelSet& labels, std::size_t task,
                        const HeadExpectations& head, Conditioning conditioning);
FisherBlock hessian_beta(const ModelState& state, const LabelSet& labels, std::size_t task,
                         const HeadExpectations& head);

Vector grad_factor(const ModelState& state, std::size_t mode, EntityIndex entity,
                   const MiniBatch& batch, const CellExpectations& cells, const LabelSet* labels,
                   const HeadExpectations* head);
FisherBlock fisher_factor(const ModelState& state, std::size_t mode, EntityIndex entity,
                          const MiniBatch& batch, const CellExpectations& cells,
                          const LabelSet* labels, const HeadExpectations* head,
                          Conditioning conditioning);
FisherBlock hessian_factor(const ModelState& state, std::size_t mode, EntityIndex entity,
                           const MiniBatch& batch, const CellExpectations& cells,
                           const LabelSet* labels, const HeadExpectations* head);

// Sequential multiplicative-gamma-process update of delta (r = 1..R, each
// using the already-updated delta_l for l < r), then tau = cumprod(delta).
void update_delta(ModelState& state);

// mu^2 = u^2 / (2 a_c + 3) + 2b / (2 a_c + 3), b = b1 on supervised modes and
// b2 elsewhere; rho^2 likewise with b2.
void update_variances(ModelState& state, const Hyperparams& hyper);
void update_factor_variance(ModelState& state, std::size_t mode, EntityIndex entity,
                            const Hyperparams& hyper);
void update_head_variance(ModelState& state, std::size_t mode, std::size_t task,
                          const Hyperparams& hyper);

struct StepOptions {
  // Replaces gamma_t when set.
  std::optional<double> gamma;
  int workers = 1;
};

// One pass of the fitting loop body on `batch`: per-cell expectations, then
// for each mode (heads, factors of entities in the batch, their variances),
// then lambda, then delta/tau. Increments state.t.
void step(ModelState& state, const MiniBatch& batch, std::span<const LabelSet> labels,
          const Hyperparams& hyper, const StepOptions& options = {});

struct IterationRecord {
  std::int64_t t = 0;
  double gamma = 0.0;
  std::optional<double> objective;
  std::vector<double> validation_auc;  // per task of the first supervised mode; empty if not run
  std::size_t shrunk = 0;              // |lambda_r| < 0.1 max |lambda|
  Vector lambda_abs;
  double seconds = 0.0;
};

struct FitReport {
  std::vector<IterationRecord> iterations;
  ModelState state;
  std::map<std::string, std::string> config;
  std::size_t negatives_skipped = 0;
  bool stopped_early = false;
};

struct FitOptions {
  // Held-out labels; validation AUC is the per-task AUC of the head scores.
  std::vector<LabelSet> validation;
  // Called after every iteration; returning false stops the fit.
  std::function<bool(const IterationRecord&, const ModelState&)> on_iteration;
};

// Runs init_state (unless `resume` is given) and then `hyper.max_iters`
// iterations of `step`.
FitReport fit(const ObservedTensor& tensor, std::span<const LabelSet> labels,
              const Hyperparams& hyper, const FitOptions& options = {},
              std::optional<ModelState> resume = std::nullopt);

// Count of |lambda_r| below 0.1 max |lambda|.
std::size_t shrunk_components(const Vector& lambda);

void write_report(const FitReport& report, std::ostream& out);

}  // namespace polyacp
