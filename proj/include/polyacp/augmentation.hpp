#pragma once

#include <span>
#include <vector>

#include "polyacp/model_state.hpp"
#include "polyacp/types.hpp"

namespace polyacp {

// Numerically stable logistic function.
double logistic(double x);

// E[omega] of a PG(1, phi) variable: tanh(phi/2) / (2 phi), with the series
// 1/4 - phi^2/48 near zero.
double omega_hat(double phi);
inline double nu_hat(double psi) { return omega_hat(psi); }

// 1 / (e^{-x/2} + e^{x/2})^2, evaluated as sigma(x) (1 - sigma(x)).
double curvature_weight(double x);

inline double kappa(int y) { return static_cast<double>(y) - 0.5; }

// Model expectation of kappa: 0.5 sigma(phi) - 0.5 sigma(-phi).
double expected_kappa(double phi);

struct CellLinearization {
  Vector a;               // A_r = prod_k u^(k)_{i_k r}
  double phi = 0.0;       // lambda . A
  std::vector<Vector> c;  // per mode: lambda_r prod_{k' != k} u^(k')_{i_k' r}
};

CellLinearization linearize_cell(const ModelState& state, std::span<const EntityIndex> indices);

struct HeadLinearization {
  Vector u_tilde;  // factor row with a leading 1
  double psi = 0.0;
};

HeadLinearization linearize_head(const ModelState& state, std::size_t mode, std::size_t task,
                                 EntityIndex entity);

// Writes A for one cell into `out` (length R). Returns phi.
double cell_products(const ModelState& state, std::span<const EntityIndex> indices,
                     std::span<double> out);

// Writes C^(k) for one cell into `out` (length R); no division, so zero
// factor entries are handled exactly.
void cell_complement(const ModelState& state, std::span<const EntityIndex> indices, std::size_t mode,
                     std::span<double> out);

}  // namespace polyacp
