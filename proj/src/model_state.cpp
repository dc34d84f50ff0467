#include "polyacp/model_state.hpp"

#include <algorithm>
#include <cmath>

#include "polyacp/error.hpp"

namespace polyacp {

std::string_view to_string(Optimizer optimizer) {
  switch (optimizer) {
    case Optimizer::sgd: return "sgd";
    case Optimizer::natgrad1: return "natgrad1";
    case Optimizer::natgrad2: return "natgrad2";
  }
  return "natgrad1";
}

Optimizer parse_optimizer(std::string_view text) {
  if (text == "sgd") return Optimizer::sgd;
  if (text == "natgrad1") return Optimizer::natgrad1;
  if (text == "natgrad2") return Optimizer::natgrad2;
  throw ConfigError("unknown optimizer '" + std::string(text) + "' (expected sgd, natgrad1 or natgrad2)");
}

std::string_view to_string(LabelMode mode) {
  return mode == LabelMode::observed ? "observed" : "expected";
}

LabelMode parse_label_mode(std::string_view text) {
  if (text == "observed") return LabelMode::observed;
  if (text == "expected") return LabelMode::expected;
  throw ConfigError("unknown label mode '" + std::string(text) + "' (expected observed or expected)");
}

void Hyperparams::validate() const {
  if (rank < 1) throw ConfigError("rank must be at least 1");
  if (!(a_c > 0 && b1 > 0 && b2 > 0)) throw ConfigError("a_c, b1 and b2 must be positive");
  if (!(tau_p >= 0)) throw ConfigError("tau_p must be non-negative");
  if (!(theta > 0.5 && theta <= 1.0)) throw ConfigError("theta must lie in (0.5, 1]");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (!(neg_ratio >= 0)) throw ConfigError("neg_ratio must be non-negative");
  if (max_iters < 0) throw ConfigError("max_iters must be non-negative");
  if (!(init_scale > 0)) throw ConfigError("init_scale must be positive");
  if (workers < 1) throw ConfigError("workers must be at least 1");
  if (monitor_every < 0 || eval_every < 0 || patience < 0) {
    throw ConfigError("monitor_every, eval_every and patience must be non-negative");
  }
}

const SupervisedMode* ModelState::head_for_mode(std::size_t mode) const {
  for (const auto& head : heads) {
    if (head.mode == mode) return &head;
  }
  return nullptr;
}

SupervisedMode* ModelState::head_for_mode(std::size_t mode) {
  for (auto& head : heads) {
    if (head.mode == mode) return &head;
  }
  return nullptr;
}

Vector shape_schedule(int rank) {
  Vector a(rank);
  for (int r = 0; r < rank; ++r) a[r] = 1.0 + static_cast<double>(r) / rank;
  return a;
}

Vector compute_tau(const Vector& delta) {
  Vector tau(delta.size());
  double product = 1.0;
  for (Eigen::Index r = 0; r < delta.size(); ++r) {
    product *= delta[r];
    tau[r] = product;
  }
  return tau;
}

Matrix compute_q(const LabelSet& labels) {
  const std::size_t tasks = labels.task_count();
  Matrix q = Matrix::Zero(static_cast<Eigen::Index>(tasks), static_cast<Eigen::Index>(tasks));
  for (std::size_t l = 0; l < tasks; ++l) {
    for (std::size_t j = l + 1; j < tasks; ++j) {
      double dot = 0.0;
      std::size_t common = 0;
      for (const auto entity : labels.labeled(l)) {
        const int zj = labels.label(entity, j);
        if (zj == 0) continue;
        dot += labels.label(entity, l) * zj;
        ++common;
      }
      if (common == 0) {
        throw Error("tasks '" + labels.task_names()[l] + "' and '" + labels.task_names()[j] +
                    "' share no labeled entities; supply the Q matrix explicitly");
      }
      // With +/-1 labels both norms are sqrt(common).
      const double value = std::clamp(1.0 - dot / static_cast<double>(common), 0.0, 2.0);
      q(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(j)) = value;
      q(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l)) = value;
    }
  }
  return q;
}

double variance_floor(double a_c, double b) { return 2.0 * b / (2.0 * a_c + 3.0); }

ModelState init_state(std::span<const std::size_t> cardinalities, std::span<const LabelSet> labels,
                      const Hyperparams& hyper, Rng& rng,
                      const std::map<std::size_t, Matrix>& q_overrides) {
  hyper.validate();
  if (cardinalities.size() < 2) throw Error("a tensor needs at least two modes");
  const int rank = hyper.rank;
  std::normal_distribution<double> standard(0.0, 1.0);

  ModelState state;
  state.shape = shape_schedule(rank);
  state.lambda.resize(rank);
  for (int r = 0; r < rank; ++r) state.lambda[r] = standard(rng);
  if (hyper.init_positive) state.lambda = state.lambda.cwiseAbs();
  state.delta = Vector::Ones(rank);
  state.tau = compute_tau(state.delta);

  std::vector<bool> supervised(cardinalities.size(), false);
  for (const auto& set : labels) {
    if (set.mode() >= cardinalities.size()) throw Error("label set refers to a missing mode");
    if (set.entity_count() != cardinalities[set.mode()]) {
      throw Error("label set does not match the mode cardinality");
    }
    if (supervised[set.mode()]) throw Error("more than one label set for the same mode");
    supervised[set.mode()] = true;
  }

  for (std::size_t k = 0; k < cardinalities.size(); ++k) {
    const auto rows = static_cast<Eigen::Index>(cardinalities[k]);
    if (rows == 0) throw Error("mode cardinalities must be at least 1");
    RowMatrix u(rows, rank);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (int r = 0; r < rank; ++r) u(i, r) = hyper.init_scale * standard(rng);
      if (hyper.init_positive) u.row(i) = u.row(i).cwiseAbs();
    }
    state.factors.push_back(std::move(u));
    const double floor = variance_floor(hyper.a_c, supervised[k] ? hyper.b1 : hyper.b2);
    state.factor_vars.push_back(RowMatrix::Constant(rows, rank, floor));
  }

  std::vector<const LabelSet*> ordered;
  for (const auto& set : labels) ordered.push_back(&set);
  std::sort(ordered.begin(), ordered.end(),
            [](const LabelSet* a, const LabelSet* b) { return a->mode() < b->mode(); });
  for (const auto* set : ordered) {
    set->validate();
    SupervisedMode head;
    head.mode = set->mode();
    for (const auto& name : set->task_names()) {
      TaskHead task;
      task.name = name;
      task.beta.resize(rank + 1);
      for (int r = 0; r <= rank; ++r) task.beta[r] = hyper.init_scale * standard(rng);
      task.rho2 = Vector::Constant(rank + 1, variance_floor(hyper.a_c, hyper.b2));
      head.tasks.push_back(std::move(task));
    }
    const auto override_it = q_overrides.find(set->mode());
    if (override_it != q_overrides.end()) {
      const auto tasks = static_cast<Eigen::Index>(set->task_count());
      if (override_it->second.rows() != tasks || override_it->second.cols() != tasks) {
        throw Error("Q override has the wrong shape");
      }
      head.q = override_it->second;
    } else {
      head.q = compute_q(*set);
    }
    state.heads.push_back(std::move(head));
  }
  return state;
}

}  // namespace polyacp
