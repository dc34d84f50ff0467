#pragma once

#include <cstring>
#include <random>
#include <vector>

#include "polyacp/labels.hpp"
#include "polyacp/model_state.hpp"
#include "polyacp/tensor.hpp"

namespace polyacp::testing {

inline TensorScheme make_scheme(const std::vector<std::size_t>& cards) {
  TensorScheme scheme;
  for (std::size_t k = 0; k < cards.size(); ++k) {
    scheme.modes.push_back({"m" + std::to_string(k), ModeKind::categorical});
    EntityMap map;
    for (std::size_t i = 0; i < cards[k]; ++i) map.intern("e" + std::to_string(i));
    scheme.entities.push_back(std::move(map));
  }
  return scheme;
}

// Random state with O(1) factors so every term of every objective is active.
inline ModelState random_state(const std::vector<std::size_t>& cards, const std::vector<LabelSet>& labels,
                               int rank, std::mt19937_64& rng) {
  Hyperparams hyper;
  hyper.rank = rank;
  ModelState state = init_state(cards, labels, hyper, rng);
  std::normal_distribution<double> normal(0.0, 0.7);
  std::uniform_real_distribution<double> positive(0.3, 2.0);
  for (auto& v : state.lambda) v = normal(rng) * 1.5;
  for (auto& v : state.delta) v = positive(rng);
  state.tau = compute_tau(state.delta);
  for (auto& f : state.factors) {
    for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = normal(rng);
  }
  for (auto& f : state.factor_vars) {
    for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = positive(rng);
  }
  for (auto& head : state.heads) {
    for (auto& task : head.tasks) {
      for (auto& v : task.beta) v = normal(rng);
      for (auto& v : task.rho2) v = positive(rng);
    }
  }
  return state;
}

// Uniform random cells with random labels; an entity of mode 0 may repeat.
inline MiniBatch random_batch(const std::vector<std::size_t>& cards, std::size_t size, std::mt19937_64& rng) {
  MiniBatch batch;
  batch.mode_count = cards.size();
  std::vector<EntityIndex> cell(cards.size());
  std::bernoulli_distribution coin(0.5);
  for (std::size_t i = 0; i < size; ++i) {
    for (std::size_t k = 0; k < cards.size(); ++k) {
      cell[k] = std::uniform_int_distribution<EntityIndex>(0, static_cast<EntityIndex>(cards[k] - 1))(rng);
    }
    batch.push(cell, coin(rng) ? 1 : 0);
  }
  return batch;
}

// Two-task labels on mode 0 covering every other entity, with both classes per task.
inline LabelSet random_labels(std::size_t entities, std::mt19937_64& rng, std::size_t tasks = 2) {
  std::vector<std::string> names;
  for (std::size_t l = 0; l < tasks; ++l) names.push_back("task" + std::to_string(l));
  LabelSet labels(0, entities, names);
  std::bernoulli_distribution coin(0.5);
  for (std::size_t e = 0; e < entities; e += 2) {
    for (std::size_t l = 0; l < tasks; ++l) {
      const int z = e < 2 ? 1 : e < 4 ? -1 : (coin(rng) ? 1 : -1);
      labels.set(static_cast<EntityIndex>(e), l, z);
    }
  }
  return labels;
}

inline bool same_bits(const double* a, const double* b, std::size_t n) {
  return std::memcmp(a, b, n * sizeof(double)) == 0;
}

template <class M>
bool same_bits(const M& a, const M& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         same_bits(a.data(), b.data(), static_cast<std::size_t>(a.size()));
}

inline bool same_state(const ModelState& a, const ModelState& b) {
  if (a.t != b.t || !same_bits(a.lambda, b.lambda) || !same_bits(a.delta, b.delta) || !same_bits(a.tau, b.tau) ||
      !same_bits(a.shape, b.shape) || a.factors.size() != b.factors.size() || a.heads.size() != b.heads.size()) {
    return false;
  }
  for (std::size_t k = 0; k < a.factors.size(); ++k) {
    if (!same_bits(a.factors[k], b.factors[k]) || !same_bits(a.factor_vars[k], b.factor_vars[k])) return false;
  }
  for (std::size_t h = 0; h < a.heads.size(); ++h) {
    const auto& x = a.heads[h];
    const auto& y = b.heads[h];
    if (x.mode != y.mode || x.tasks.size() != y.tasks.size() || !same_bits(x.q, y.q)) return false;
    for (std::size_t l = 0; l < x.tasks.size(); ++l) {
      if (x.tasks[l].name != y.tasks[l].name || !same_bits(x.tasks[l].beta, y.tasks[l].beta) ||
          !same_bits(x.tasks[l].rho2, y.tasks[l].rho2)) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace polyacp::testing
