#include "polyacp/inference.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <ostream>
#include <thread>

#include <Eigen/Cholesky>

#include "polyacp/augmentation.hpp"
#include "polyacp/config.hpp"
#include "polyacp/error.hpp"
#include "polyacp/evaluation.hpp"

namespace polyacp {

namespace {

// Gradient of a block objective together with the data parts of its Fisher
// block (curvature weights N/O) and of its exact Hessian (PG weights omega/nu).
struct BlockTerms {
  Vector grad;
  Matrix fisher_data;
  Matrix hessian_data;
  Vector prior_precision;
};

void reset_terms(BlockTerms& terms, Eigen::Index size, bool hessian) {
  const Eigen::Index h = hessian ? size : 0;
  terms.grad.setZero(size);
  terms.fisher_data.setZero(size, size);
  terms.hessian_data.setZero(h, h);
  terms.prior_precision.setZero(size);
}

BlockTerms make_terms(Eigen::Index size, bool hessian) {
  BlockTerms terms;
  reset_terms(terms, size, hessian);
  return terms;
}

// Solves a x = b in place by Cholesky on the lower triangle of `a`. Returns
// false (a partly overwritten) when a is not numerically positive definite.
bool cholesky_solve(Matrix& a, Vector& b) {
  const Eigen::Index n = a.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = a(j, j);
    for (Eigen::Index k = 0; k < j; ++k) d -= a(j, k) * a(j, k);
    if (!(d > 0.0)) return false;
    const double l = std::sqrt(d);
    a(j, j) = l;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double v = a(i, j);
      for (Eigen::Index k = 0; k < j; ++k) v -= a(i, k) * a(j, k);
      a(i, j) = v / l;
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    double v = b[i];
    for (Eigen::Index k = 0; k < i; ++k) v -= a(i, k) * b[k];
    b[i] = v / a(i, i);
  }
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    double v = b[i];
    for (Eigen::Index k = i + 1; k < n; ++k) v -= a(k, i) * b[k];
    b[i] = v / a(i, i);
  }
  return true;
}

// Scratch space reused by one thread across the factor updates of a step.
struct Workspace {
  BlockTerms terms;
  Vector c;
  Vector beta_hat;
  Vector update;
  Matrix factor;
};

// Lower triangle of m += w v v^T.
void add_outer(Matrix& m, const double* v, double w) {
  const Eigen::Index n = m.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    const double wv = w * v[j];
    double* col = m.data() + j * n;
    for (Eigen::Index i = j; i < n; ++i) col[i] += wv * v[i];
  }
}

void symmetrize(Matrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = j + 1; i < m.rows(); ++i) m(j, i) = m(i, j);
  }
}

void add_conditioning(Matrix& m, const Vector& prior_precision, Conditioning conditioning) {
  switch (conditioning) {
    case Conditioning::prior:
      m.diagonal() += prior_precision;
      break;
    case Conditioning::self_diagonal:
      for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, r) += std::max(m(r, r), kDiagonalFloor);
      break;
    case Conditioning::none:
      break;
  }
  if (!m.allFinite()) throw NumericalError("Fisher block has non-finite entries");
}

FisherBlock condition(const Matrix& data, const Vector& prior_precision, Conditioning conditioning) {
  FisherBlock block{data, conditioning};
  add_conditioning(block.matrix, prior_precision, conditioning);
  return block;
}

FisherBlock exact_hessian(const BlockTerms& terms) {
  FisherBlock block{terms.hessian_data, Conditioning::prior};
  block.matrix.diagonal() += terms.prior_precision;
  if (!block.matrix.allFinite()) throw NumericalError("Hessian block has non-finite entries");
  return block;
}

BlockTerms lambda_terms(const ModelState& state, const MiniBatch& batch, const CellExpectations& cells,
                        bool hessian) {
  const auto rank = static_cast<Eigen::Index>(state.rank());
  BlockTerms terms = make_terms(rank, hessian);
  Vector a(rank);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double phi = cell_products(state, batch.cell(i), {a.data(), state.rank()});
    terms.grad.noalias() += batch.weight * (cells.kappa[i] - cells.omega[i] * phi) * a;
    add_outer(terms.fisher_data, a.data(), batch.weight * cells.curvature[i]);
    if (hessian) add_outer(terms.hessian_data, a.data(), batch.weight * cells.omega[i]);
  }
  symmetrize(terms.fisher_data);
  symmetrize(terms.hessian_data);
  terms.prior_precision = state.tau.cwiseInverse();
  terms.grad -= state.lambda.cwiseProduct(terms.prior_precision);
  return terms;
}

const SupervisedMode& require_head(const ModelState& state, std::size_t mode) {
  const auto* head = state.head_for_mode(mode);
  if (head == nullptr) throw Error("mode " + std::to_string(mode) + " has no supervised head");
  return *head;
}

BlockTerms beta_terms(const ModelState& state, const LabelSet& labels, std::size_t task,
                      const HeadExpectations& head_exp) {
  const auto& head = require_head(state, labels.mode());
  if (task >= head.tasks.size()) throw Error("task index out of range");
  if (labels.labeled(task).empty()) throw Error("task '" + head.tasks[task].name + "' has no labeled entities");
  const auto rank = static_cast<Eigen::Index>(state.rank());
  const auto& u = state.factors[labels.mode()];
  const Vector& beta = head.tasks[task].beta;

  BlockTerms terms = make_terms(rank + 1, true);
  Vector u_tilde(rank + 1);
  u_tilde[0] = 1.0;
  for (const auto m : labels.labeled(task)) {
    u_tilde.tail(rank) = u.row(m).transpose();
    const double psi = beta.dot(u_tilde);
    const double nu = head_exp.nu_at(m, task);
    terms.grad.noalias() += (0.5 * labels.label(m, task) - nu * psi) * u_tilde;
    add_outer(terms.fisher_data, u_tilde.data(), head_exp.curvature_at(m, task));
    add_outer(terms.hessian_data, u_tilde.data(), nu);
  }
  symmetrize(terms.fisher_data);
  symmetrize(terms.hessian_data);
  terms.prior_precision = head.tasks[task].rho2.cwiseInverse();
  terms.grad -= beta.cwiseProduct(terms.prior_precision);
  for (std::size_t j = 0; j < head.tasks.size(); ++j) {
    if (j == task) continue;
    const double qlj = head.q(static_cast<Eigen::Index>(task), static_cast<Eigen::Index>(j));
    terms.grad -= qlj * head.tasks[j].beta.unaryExpr([](double x) { return sign_of(x); });
  }
  return terms;
}

// Factor terms for `entity` of `mode` over the batch cells listed in `positions`.
void factor_terms(BlockTerms& terms, Workspace& ws, const ModelState& state, std::size_t mode,
                  EntityIndex entity, const MiniBatch& batch, std::span<const std::size_t> positions,
                  const CellExpectations& cells, const LabelSet* labels, const HeadExpectations* head_exp,
                  bool hessian) {
  const auto rank = static_cast<Eigen::Index>(state.rank());
  const auto u = state.factors[mode].row(entity).transpose();
  reset_terms(terms, rank, hessian);
  Vector& c = ws.c;
  c.resize(rank);
  for (const auto i : positions) {
    cell_complement(state, batch.cell(i), mode, {c.data(), state.rank()});
    const double phi = c.dot(u);
    terms.grad.noalias() += batch.weight * (cells.kappa[i] - cells.omega[i] * phi) * c;
    add_outer(terms.fisher_data, c.data(), batch.weight * cells.curvature[i]);
    if (hessian) add_outer(terms.hessian_data, c.data(), batch.weight * cells.omega[i]);
  }
  if (labels != nullptr && head_exp != nullptr && labels->mode() == mode) {
    const auto& head = require_head(state, mode);
    for (std::size_t l = 0; l < labels->task_count(); ++l) {
      const int z = labels->label(entity, l);
      if (z == 0) continue;
      const Vector& beta = head.tasks[l].beta;
      Vector& beta_hat = ws.beta_hat;
      beta_hat = beta.tail(rank);
      const double nu = head_exp->nu_at(entity, l);
      const double shifted = beta[0] + u.dot(beta_hat);
      terms.grad.noalias() += (0.5 * z - nu * shifted) * beta_hat;
      // Outer product beta_hat O beta_hat^T: the block is R x R.
      add_outer(terms.fisher_data, beta_hat.data(), head_exp->curvature_at(entity, l));
      if (hessian) add_outer(terms.hessian_data, beta_hat.data(), nu);
    }
  }
  symmetrize(terms.fisher_data);
  symmetrize(terms.hessian_data);
  terms.prior_precision = state.factor_vars[mode].row(entity).transpose().cwiseInverse();
  terms.grad -= u.cwiseProduct(terms.prior_precision);
}

BlockTerms factor_terms(const ModelState& state, std::size_t mode, EntityIndex entity,
                        const MiniBatch& batch, std::span<const std::size_t> positions,
                        const CellExpectations& cells, const LabelSet* labels,
                        const HeadExpectations* head_exp, bool hessian) {
  BlockTerms terms;
  Workspace ws;
  factor_terms(terms, ws, state, mode, entity, batch, positions, cells, labels, head_exp, hessian);
  return terms;
}

std::vector<std::size_t> cells_of(const MiniBatch& batch, std::size_t mode, EntityIndex entity) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch.cell(i)[mode] == entity) out.push_back(i);
  }
  return out;
}

void check_entity(const ModelState& state, std::size_t mode, EntityIndex entity) {
  if (mode >= state.mode_count()) throw Error("mode index out of range");
  if (entity >= static_cast<std::size_t>(state.factors[mode].rows())) throw Error("entity index out of range");
}

template <class Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  const std::size_t chunk = (n + threads - 1) / threads;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        const std::size_t end = std::min(n, (w + 1) * chunk);
        for (std::size_t i = w * chunk; i < end; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& thread : pool) thread.join();
  for (const auto& error : errors) {
    if (error) std::rethrow_exception(error);
  }
}

Vector direction(const BlockTerms& terms, Optimizer optimizer) {
  if (optimizer == Optimizer::sgd) return terms.grad;
  return condition(terms.fisher_data, terms.prior_precision, conditioning_for(optimizer)).solve(terms.grad);
}

// direction() on workspace storage; conditions terms.fisher_data in place.
void direction(Workspace& ws, Optimizer optimizer) {
  auto& terms = ws.terms;
  if (optimizer == Optimizer::sgd) {
    ws.update = terms.grad;
    return;
  }
  add_conditioning(terms.fisher_data, terms.prior_precision, conditioning_for(optimizer));
  ws.factor = terms.fisher_data;
  ws.update = terms.grad;
  if (!cholesky_solve(ws.factor, ws.update)) {
    ws.update = FisherBlock{terms.fisher_data, conditioning_for(optimizer)}.solve(terms.grad);
  }
}

const LabelSet* labels_for_mode(std::span<const LabelSet> labels, std::size_t mode) {
  for (const auto& set : labels) {
    if (set.mode() == mode) return &set;
  }
  return nullptr;
}

}  // namespace

Vector FisherBlock::solve(const Vector& rhs) const {
  Matrix factor = matrix;
  Vector x = rhs;
  if (cholesky_solve(factor, x)) return x;
  const Eigen::LDLT<Matrix> ldlt(matrix);
  if (ldlt.info() != Eigen::Success) throw NumericalError("Fisher block factorization failed");
  return ldlt.solve(rhs);
}

Conditioning conditioning_for(Optimizer optimizer) {
  switch (optimizer) {
    case Optimizer::natgrad1: return Conditioning::prior;
    case Optimizer::natgrad2: return Conditioning::self_diagonal;
    case Optimizer::sgd: return Conditioning::none;
  }
  return Conditioning::prior;
}

double learning_rate(std::int64_t t, double tau_p, double theta) {
  const double base = tau_p + static_cast<double>(t);
  if (!(base > 0)) throw Error("learning rate needs tau_p + t > 0");
  return std::pow(base, -theta);
}

Vector grad_lambda(const ModelState& state, const MiniBatch& batch, const CellExpectations& cells) {
  return lambda_terms(state, batch, cells, false).grad;
}

FisherBlock fisher_lambda(const ModelState& state, const MiniBatch& batch,
                          const CellExpectations& cells, Conditioning conditioning) {
  const auto terms = lambda_terms(state, batch, cells, false);
  return condition(terms.fisher_data, terms.prior_precision, conditioning);
}

FisherBlock hessian_lambda(const ModelState& state, const MiniBatch& batch,
                           const CellExpectations& cells) {
  return exact_hessian(lambda_terms(state, batch, cells, true));
}

Vector grad_beta(const ModelState& state, const LabelSet& labels, std::size_t task,
                 const HeadExpectations& head) {
  return beta_terms(state, labels, task, head).grad;
}

FisherBlock fisher_beta(const ModelState& state, const LabelSet& labels, std::size_t task,
                        const HeadExpectations& head, Conditioning conditioning) {
  const auto terms = beta_terms(state, labels, task, head);
  return condition(terms.fisher_data, terms.prior_precision, conditioning);
}

FisherBlock hessian_beta(const ModelState& state, const LabelSet& labels, std::size_t task,
                         const HeadExpectations& head) {
  return exact_hessian(beta_terms(state, labels, task, head));
}

Vector grad_factor(const ModelState& state, std::size_t mode, EntityIndex entity,
                   const MiniBatch& batch, const CellExpectations& cells, const LabelSet* labels,
                   const HeadExpectations* head) {
  check_entity(state, mode, entity);
  const auto positions = cells_of(batch, mode, entity);
  return factor_terms(state, mode, entity, batch, positions, cells, labels, head, false).grad;
}

FisherBlock fisher_factor(const ModelState& state, std::size_t mode, EntityIndex entity,
                          const MiniBatch& batch, const CellExpectations& cells,
                          const LabelSet* labels, const HeadExpectations* head,
                          Conditioning conditioning) {
  check_entity(state, mode, entity);
  const auto positions = cells_of(batch, mode, entity);
  const auto terms = factor_terms(state, mode, entity, batch, positions, cells, labels, head, false);
  return condition(terms.fisher_data, terms.prior_precision, conditioning);
}

FisherBlock hessian_factor(const ModelState& state, std::size_t mode, EntityIndex entity,
                           const MiniBatch& batch, const CellExpectations& cells,
                           const LabelSet* labels, const HeadExpectations* head) {
  check_entity(state, mode, entity);
  const auto positions = cells_of(batch, mode, entity);
  return exact_hessian(factor_terms(state, mode, entity, batch, positions, cells, labels, head, true));
}

void update_delta(ModelState& state) {
  const auto rank = static_cast<Eigen::Index>(state.rank());
  for (Eigen::Index r = 0; r < rank; ++r) {
    double sum = 0.0;
    for (Eigen::Index h = r; h < rank; ++h) {
      double product = 1.0;
      for (Eigen::Index l = 0; l <= h; ++l) {
        if (l != r) product /= state.delta[l];
      }
      sum += 0.5 * state.lambda[h] * state.lambda[h] * product;
    }
    const double shape = 0.5 * static_cast<double>(rank - r) + state.shape[r] + 1.0;
    state.delta[r] = (1.0 + sum) / shape;
  }
  state.tau = compute_tau(state.delta);
}

void update_factor_variance(ModelState& state, std::size_t mode, EntityIndex entity,
                            const Hyperparams& hyper) {
  const double denom = 2.0 * hyper.a_c + 3.0;
  const double floor = variance_floor(hyper.a_c, state.supervised(mode) ? hyper.b1 : hyper.b2);
  state.factor_vars[mode].row(entity) = state.factors[mode].row(entity).array().square() / denom + floor;
}

void update_head_variance(ModelState& state, std::size_t mode, std::size_t task,
                          const Hyperparams& hyper) {
  auto* head = state.head_for_mode(mode);
  if (head == nullptr || task >= head->tasks.size()) throw Error("no head for this mode and task");
  auto& t = head->tasks[task];
  t.rho2 = t.beta.array().square() / (2.0 * hyper.a_c + 3.0) + variance_floor(hyper.a_c, hyper.b2);
}

void update_variances(ModelState& state, const Hyperparams& hyper) {
  for (std::size_t k = 0; k < state.mode_count(); ++k) {
    for (Eigen::Index n = 0; n < state.factors[k].rows(); ++n) {
      update_factor_variance(state, k, static_cast<EntityIndex>(n), hyper);
    }
  }
  for (const auto& head : state.heads) {
    for (std::size_t l = 0; l < head.tasks.size(); ++l) update_head_variance(state, head.mode, l, hyper);
  }
}

void step(ModelState& state, const MiniBatch& batch, std::span<const LabelSet> labels,
          const Hyperparams& hyper, const StepOptions& options) {
  if (batch.t != state.t) throw Error("mini-batch iteration does not match the model iteration");
  if (batch.mode_count != state.mode_count()) throw Error("mini-batch arity does not match the model");
  const double gamma = options.gamma.value_or(learning_rate(state.t, hyper.tau_p, hyper.theta));

  CellExpectations cells;
  cells.kappa.resize(batch.size());
  cells.omega.resize(batch.size());
  cells.curvature.resize(batch.size());
  // Per-cell expectations, held fixed for the whole iteration.
  parallel_for(batch.size(), options.workers, [&](std::size_t i) {
    thread_local std::vector<double> a;
    a.resize(state.rank());
    const double phi = cell_products(state, batch.cell(i), a);
    cells.kappa[i] = hyper.label_mode == LabelMode::observed ? kappa(batch.labels[i]) : expected_kappa(phi);
    cells.omega[i] = omega_hat(phi);
    cells.curvature[i] = curvature_weight(phi);
  });

  for (std::size_t k = 0; k < state.mode_count(); ++k) {
    const LabelSet* mode_labels = nullptr;
    std::optional<HeadExpectations> head_exp;
    if (state.supervised(k)) {
      mode_labels = labels_for_mode(labels, k);
      if (mode_labels == nullptr) throw Error("supervised mode " + std::to_string(k) + " has no labels");
      head_exp = head_expectations(state, *mode_labels);
      auto& head = *state.head_for_mode(k);
      for (std::size_t l = 0; l < head.tasks.size(); ++l) {
        const auto terms = beta_terms(state, *mode_labels, l, *head_exp);
        head.tasks[l].beta += gamma * direction(terms, hyper.optimizer);
        if (!head.tasks[l].beta.allFinite()) {
          throw NumericalError("non-finite update of beta[mode=" + std::to_string(k) + ", task=" +
                               head.tasks[l].name + "]");
        }
        update_head_variance(state, k, l, hyper);
      }
    }

    // Group batch positions by entity, positions ascending within a group.
    std::vector<std::uint64_t> keys(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) keys[i] = (std::uint64_t{batch.cell(i)[k]} << 32) | i;
    std::sort(keys.begin(), keys.end());
    std::vector<std::size_t> order(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) order[i] = static_cast<std::size_t>(keys[i] & 0xffffffffu);
    std::vector<std::size_t> group_start;
    for (std::size_t i = 0; i < order.size(); ++i) {
      if (i == 0 || batch.cell(order[i])[k] != batch.cell(order[i - 1])[k]) group_start.push_back(i);
    }
    group_start.push_back(order.size());

    const HeadExpectations* head_ptr = head_exp ? &*head_exp : nullptr;
    parallel_for(group_start.size() - 1, options.workers, [&](std::size_t g) {
      const std::span<const std::size_t> positions(order.data() + group_start[g],
                                                   group_start[g + 1] - group_start[g]);
      const EntityIndex entity = batch.cell(positions.front())[k];
      thread_local Workspace ws;
      factor_terms(ws.terms, ws, state, k, entity, batch, positions, cells, mode_labels, head_ptr, false);
      direction(ws, hyper.optimizer);
      auto row = state.factors[k].row(entity);
      row += gamma * ws.update.transpose();
      if (!row.allFinite()) {
        throw NumericalError("non-finite update of factor[mode=" + std::to_string(k) +
                             ", entity=" + std::to_string(entity) + "]");
      }
      update_factor_variance(state, k, entity, hyper);
    });
  }

  const auto terms = lambda_terms(state, batch, cells, false);
  state.lambda += gamma * direction(terms, hyper.optimizer);
  if (!state.lambda.allFinite()) throw NumericalError("non-finite update of lambda");
  update_delta(state);
  ++state.t;
}

std::size_t shrunk_components(const Vector& lambda) {
  if (lambda.size() == 0) return 0;
  const double cutoff = 0.1 * lambda.cwiseAbs().maxCoeff();
  std::size_t count = 0;
  for (Eigen::Index r = 0; r < lambda.size(); ++r) {
    if (std::abs(lambda[r]) < cutoff) ++count;
  }
  return count;
}

namespace {

std::vector<double> validation_auc(const ModelState& state, const LabelSet& validation) {
  std::vector<double> out;
  for (std::size_t l = 0; l < validation.task_count(); ++l) {
    const auto scores = score_entities(state, validation.mode(), l);
    std::vector<double> s;
    std::vector<int> truth;
    for (const auto m : validation.labeled(l)) {
      s.push_back(scores[m]);
      truth.push_back(validation.label(m, l) > 0 ? 1 : 0);
    }
    out.push_back(roc_auc(s, truth));
  }
  return out;
}

}  // namespace

FitReport fit(const ObservedTensor& tensor, std::span<const LabelSet> labels,
              const Hyperparams& hyper, const FitOptions& options,
              std::optional<ModelState> resume) {
  hyper.validate();
  if (tensor.empty()) throw Error("cannot fit an empty tensor");
  FitReport report;
  report.config = describe(hyper);

  if (resume) {
    report.state = std::move(*resume);
    if (static_cast<int>(report.state.rank()) != hyper.rank) throw Error("resumed state has a different rank");
  } else {
    auto rng = make_rng(hyper.seed, Stream::init);
    const auto cards = tensor.scheme().cardinalities();
    report.state = init_state(cards, labels, hyper, rng);
  }
  ModelState& state = report.state;

  MiniBatch monitor;
  if (hyper.monitor_every > 0) {
    monitor.mode_count = tensor.mode_count();
    for (std::size_t i = 0; i < tensor.size(); ++i) monitor.push(tensor.cell(i), 1);
    auto rng = make_rng(hyper.seed, Stream::monitor);
    const auto negatives = sample_negatives(
        tensor, static_cast<std::size_t>(std::llround(static_cast<double>(tensor.size()) * hyper.neg_ratio)), rng);
    monitor.indices.insert(monitor.indices.end(), negatives.indices.begin(), negatives.indices.end());
    monitor.labels.insert(monitor.labels.end(), negatives.labels.begin(), negatives.labels.end());
  }

  const LabelSet* validation = options.validation.empty() ? nullptr : &options.validation.front();
  double best = -1.0;
  int stale = 0;
  const std::int64_t end = state.t + hyper.max_iters;
  StepOptions step_options;
  step_options.workers = hyper.workers;
  while (state.t < end) {
    const auto started = std::chrono::steady_clock::now();
    const std::int64_t t = state.t;
    auto rng = make_rng(hyper.seed, Stream::batch, static_cast<std::uint64_t>(t));
    auto batch = sample_minibatch(tensor, hyper.batch_size, hyper.neg_ratio, rng, t);
    if (hyper.scale_batch) batch.weight = static_cast<double>(tensor.size()) / static_cast<double>(hyper.batch_size);
    report.negatives_skipped += batch.negatives_skipped;

    IterationRecord record;
    record.t = t;
    record.gamma = learning_rate(t, hyper.tau_p, hyper.theta);
    step(state, batch, labels, hyper, step_options);

    if (hyper.monitor_every > 0 && (t + 1) % hyper.monitor_every == 0) {
      record.objective = mean_log_likelihood(state, monitor);
    }
    bool checked = false;
    if (validation != nullptr && hyper.eval_every > 0 && (t + 1) % hyper.eval_every == 0) {
      record.validation_auc = validation_auc(state, *validation);
      checked = true;
    }
    record.lambda_abs = state.lambda.cwiseAbs();
    record.shrunk = shrunk_components(state.lambda);
    record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    report.iterations.push_back(record);

    const bool keep_going = !options.on_iteration || options.on_iteration(record, state);
    if (checked && hyper.patience > 0) {
      const double mean = std::accumulate(record.validation_auc.begin(), record.validation_auc.end(), 0.0) /
                          static_cast<double>(record.validation_auc.size());
      if (mean > best + hyper.min_delta) {
        best = mean;
        stale = 0;
      } else if (++stale >= hyper.patience) {
        report.stopped_early = true;
        break;
      }
    }
    if (!keep_going) break;
  }
  return report;
}

void write_report(const FitReport& report, std::ostream& out) {
  for (const auto& [key, value] : report.config) out << "# " << key << " = " << value << '\n';
  std::size_t tasks = 0;
  for (const auto& record : report.iterations) tasks = std::max(tasks, record.validation_auc.size());
  out << "t\tgamma\tobjective";
  for (std::size_t l = 0; l < tasks; ++l) out << "\tauc_" << l;
  out << "\tshrunk\tseconds\n";
  out.precision(10);
  for (const auto& record : report.iterations) {
    out << record.t << '\t' << record.gamma << '\t';
    if (record.objective) {
      out << *record.objective;
    } else {
      out << "nan";
    }
    for (std::size_t l = 0; l < tasks; ++l) {
      out << '\t';
      if (l < record.validation_auc.size()) {
        out << record.validation_auc[l];
      } else {
        out << "nan";
      }
    }
    out << '\t' << record.shrunk << '\t' << record.seconds << '\n';
  }
}

}  // namespace polyacp
