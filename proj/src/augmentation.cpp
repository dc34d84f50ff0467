#include "polyacp/augmentation.hpp"

#include <cmath>

#include "polyacp/error.hpp"

namespace polyacp {

namespace {
constexpr double kSeriesCutoff = 1e-6;
}

double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double omega_hat(double phi) {
  if (std::abs(phi) < kSeriesCutoff) return 0.25 - phi * phi / 48.0;
  return std::tanh(0.5 * phi) / (2.0 * phi);
}

double curvature_weight(double x) { return logistic(x) * logistic(-x); }

double expected_kappa(double phi) { return 0.5 * logistic(phi) - 0.5 * logistic(-phi); }

double cell_products(const ModelState& state, std::span<const EntityIndex> indices,
                     std::span<double> out) {
  const std::size_t rank = state.rank();
  for (std::size_t r = 0; r < rank; ++r) out[r] = 1.0;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const double* row = state.factors[k].row(indices[k]).data();
    for (std::size_t r = 0; r < rank; ++r) out[r] *= row[r];
  }
  double phi = 0.0;
  for (std::size_t r = 0; r < rank; ++r) phi += state.lambda[static_cast<Eigen::Index>(r)] * out[r];
  return phi;
}

void cell_complement(const ModelState& state, std::span<const EntityIndex> indices, std::size_t mode,
                     std::span<double> out) {
  const std::size_t rank = state.rank();
  for (std::size_t r = 0; r < rank; ++r) out[r] = state.lambda[static_cast<Eigen::Index>(r)];
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (k == mode) continue;
    const double* row = state.factors[k].row(indices[k]).data();
    for (std::size_t r = 0; r < rank; ++r) out[r] *= row[r];
  }
}

CellLinearization linearize_cell(const ModelState& state, std::span<const EntityIndex> indices) {
  if (indices.size() != state.mode_count()) throw Error("cell arity does not match the model");
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= static_cast<std::size_t>(state.factors[k].rows())) {
      throw Error("cell index out of range");
    }
  }
  const auto rank = static_cast<Eigen::Index>(state.rank());
  CellLinearization out;
  out.a.resize(rank);
  out.phi = cell_products(state, indices, {out.a.data(), state.rank()});
  out.c.resize(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    out.c[k].resize(rank);
    cell_complement(state, indices, k, {out.c[k].data(), state.rank()});
  }
  return out;
}

HeadLinearization linearize_head(const ModelState& state, std::size_t mode, std::size_t task,
                                 EntityIndex entity) {
  const auto* head = state.head_for_mode(mode);
  if (head == nullptr || task >= head->tasks.size()) throw Error("no head for this mode and task");
  const auto rank = static_cast<Eigen::Index>(state.rank());
  HeadLinearization out;
  out.u_tilde.resize(rank + 1);
  out.u_tilde[0] = 1.0;
  out.u_tilde.tail(rank) = state.factors[mode].row(entity).transpose();
  out.psi = head->tasks[task].beta.dot(out.u_tilde);
  return out;
}

}  // namespace polyacp
