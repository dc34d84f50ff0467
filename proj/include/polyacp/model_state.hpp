#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "polyacp/labels.hpp"
#include "polyacp/rng.hpp"
#include "polyacp/types.hpp"

namespace polyacp {

enum class Optimizer { sgd, natgrad1, natgrad2 };
// How E[kappa] enters the gradients: realized labels, or the model
// expectation sigma(phi) - 1/2.
enum class LabelMode { observed, expected };

std::string_view to_string(Optimizer optimizer);
Optimizer parse_optimizer(std::string_view text);
std::string_view to_string(LabelMode mode);
LabelMode parse_label_mode(std::string_view text);

struct Hyperparams {
  int rank = 8;
  double a_c = 1.0;
  double b1 = 0.4;  // factor variance scale, supervised modes
  double b2 = 3.0;  // factor variance scale, unsupervised modes and heads
  double tau_p = 256.0;
  double theta = 0.61;
  std::size_t batch_size = 1024;
  double neg_ratio = 1.0;
  // Weight batch likelihood terms by N / batch_size (population estimate).
  bool scale_batch = false;
  std::int64_t max_iters = 1000;
  Optimizer optimizer = Optimizer::natgrad1;
  std::uint64_t seed = 0;
  double init_scale = 0.1;
  // Half-normal draws for lambda and the factors (heads stay symmetric).
  bool init_positive = false;
  LabelMode label_mode = LabelMode::observed;
  int workers = 1;
  // Full-data objective is recorded every `monitor_every` iterations (0: never).
  std::int64_t monitor_every = 1;
  // Validation AUC is computed every `eval_every` iterations (0: never).
  std::int64_t eval_every = 10;
  // Early stopping (0 disables): checks without min_delta improvement.
  int patience = 0;
  double min_delta = 1e-4;

  void validate() const;
};

struct TaskHead {
  std::string name;
  Vector beta;  // length R + 1, bias first
  Vector rho2;  // prior variances, length R + 1
};

struct SupervisedMode {
  std::size_t mode = 0;
  std::vector<TaskHead> tasks;
  Matrix q;  // L x L reverse-cosine task matrix, frozen after init
};

struct ModelState {
  Vector lambda;
  Vector delta;
  Vector tau;
  Vector shape;  // a_r schedule
  std::vector<RowMatrix> factors;      // n_k x R per mode
  std::vector<RowMatrix> factor_vars;  // mu^2, n_k x R per mode
  std::vector<SupervisedMode> heads;
  std::int64_t t = 0;

  std::size_t rank() const { return static_cast<std::size_t>(lambda.size()); }
  std::size_t mode_count() const { return factors.size(); }
  const SupervisedMode* head_for_mode(std::size_t mode) const;
  SupervisedMode* head_for_mode(std::size_t mode);
  bool supervised(std::size_t mode) const { return head_for_mode(mode) != nullptr; }
};

// a_1 = 1, a_r = 1 + (r - 1) / R.
Vector shape_schedule(int rank);

// Cumulative product of delta.
Vector compute_tau(const Vector& delta);

// Q_lj = 1 - cos(z_l, z_j) over the entities labeled in both tasks.
Matrix compute_q(const LabelSet& labels);

// Prior-mode-like variance 2b / (2 a_c + 3).
double variance_floor(double a_c, double b);

ModelState init_state(std::span<const std::size_t> cardinalities, std::span<const LabelSet> labels,
                      const Hyperparams& hyper, Rng& rng,
                      const std::map<std::size_t, Matrix>& q_overrides = {});

}  // namespace polyacp
