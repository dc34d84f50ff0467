// Acceptance suite: prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails. Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "polyacp/augmentation.hpp"
#include "polyacp/checkpoint.hpp"
#include "polyacp/error.hpp"
#include "polyacp/evaluation.hpp"
#include "polyacp/inference.hpp"
#include "polyacp/objectives.hpp"
#include "polyacp/synthetic.hpp"
#include "support.hpp"

using namespace polyacp;
namespace pt = polyacp::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

template <class... Args>
std::string fmt(const char* format, Args... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double rel_error(const Vector& a, const Vector& b) {
  const double scale = std::max({a.norm(), b.norm(), 1e-12});
  return (a - b).norm() / scale;
}

template <class F>
Vector central_difference(Vector& x, F&& f, double h = 1e-5) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = f();
    x[i] = saved - h;
    const double down = f();
    x[i] = saved;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

// ---------------------------------------------------------------- 1
Outcome gradient_correctness() {
  const std::vector<std::size_t> cards{8, 6, 5};
  double worst_lambda = 0, worst_beta = 0, worst_sup = 0, worst_unsup = 0;
  for (int trial = 0; trial < 10; ++trial) {
    std::mt19937_64 rng(1000 + trial);
    std::vector<LabelSet> labels{pt::random_labels(cards[0], rng)};
    auto state = pt::random_state(cards, labels, 4, rng);
    const auto batch = pt::random_batch(cards, 40, rng);
    const auto cells = cell_expectations(state, batch);
    const auto head = head_expectations(state, labels[0]);

    const Vector gl = grad_lambda(state, batch, cells);
    const Vector fl = central_difference(state.lambda, [&] { return log_post_lambda(state, batch, cells).value(); });
    worst_lambda = std::max(worst_lambda, rel_error(gl, fl));

    for (std::size_t l = 0; l < labels[0].task_count(); ++l) {
      const Vector gb = grad_beta(state, labels[0], l, head);
      Vector& beta = state.heads[0].tasks[l].beta;
      const Vector fb = central_difference(beta, [&] { return log_post_beta(state, labels[0], l, head).value(); });
      worst_beta = std::max(worst_beta, rel_error(gb, fb));
    }

    // Supervised: a labeled entity of mode 0 that also appears in the batch.
    const EntityIndex sup = batch.cell(0)[0] % 2 == 0 ? batch.cell(0)[0] : 0;
    const auto factor_fd = [&](std::size_t mode, EntityIndex e, const LabelSet* ls, const HeadExpectations* he) {
      const Vector g = grad_factor(state, mode, e, batch, cells, ls, he);
      Vector row = state.factors[mode].row(e).transpose();
      const Vector fd = central_difference(row, [&] {
        state.factors[mode].row(e) = row.transpose();
        return log_post_factor(state, mode, e, batch, cells, ls, he).value();
      });
      state.factors[mode].row(e) = row.transpose();
      return rel_error(g, fd);
    };
    worst_sup = std::max(worst_sup, factor_fd(0, sup, &labels[0], &head));
    worst_unsup = std::max(worst_unsup, factor_fd(1, batch.cell(1)[1], nullptr, nullptr));
  }
  const double worst = std::max({worst_lambda, worst_beta, worst_sup, worst_unsup});
  return {worst <= 1e-5, fmt("max rel err lambda %.2e beta %.2e", worst_lambda, worst_beta) +
                             fmt(" factor(sup) %.2e factor(unsup) %.2e", worst_sup, worst_unsup)};
}

// ---------------------------------------------------------------- 2
Outcome curvature_identity() {
  double worst_curv = 0;
  for (int i = -3000; i <= 3000; ++i) {
    const double x = i * 0.01;
    const double s = 1.0 / (1.0 + std::exp(-x));
    const double cosh_form = 1.0 / std::pow(std::exp(-x / 2) + std::exp(x / 2), 2);
    worst_curv = std::max({worst_curv, std::abs(curvature_weight(x) - s * (1 - s)),
                           std::abs(curvature_weight(x) - cosh_form)});
  }
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> phi_dist(-20, 20);
  double worst_pg = 0;
  for (int i = 0; i < 10000; ++i) {
    const double phi = phi_dist(rng);
    const int y = i % 2;
    const double lhs = std::exp(phi * y) / (1 + std::exp(phi));
    const double rhs = std::exp(kappa(y) * phi) / 2 / std::cosh(phi / 2);
    worst_pg = std::max(worst_pg, std::abs(lhs - rhs) / std::max(lhs, 1e-300));
  }
  return {worst_curv <= 1e-12 && worst_pg <= 1e-12,
          fmt("curvature max abs err %.2e, PG identity max rel err %.2e", worst_curv, worst_pg)};
}

// ---------------------------------------------------------------- 3
Outcome newton_oracle() {
  const std::vector<std::size_t> cards{8, 6, 5};
  double worst_lambda = 0, worst_beta = 0, worst_factor = 0;
  for (int trial = 0; trial < 10; ++trial) {
    std::mt19937_64 rng(2000 + trial);
    std::vector<LabelSet> labels{pt::random_labels(cards[0], rng)};
    auto state = pt::random_state(cards, labels, 4, rng);
    const auto batch = pt::random_batch(cards, 60, rng);
    const auto cells = cell_expectations(state, batch);
    const auto head = head_expectations(state, labels[0]);

    state.lambda += hessian_lambda(state, batch, cells).solve(grad_lambda(state, batch, cells));
    worst_lambda = std::max(worst_lambda, grad_lambda(state, batch, cells).norm());

    Vector& beta = state.heads[0].tasks[0].beta;
    beta += hessian_beta(state, labels[0], 0, head).solve(grad_beta(state, labels[0], 0, head));
    worst_beta = std::max(worst_beta, grad_beta(state, labels[0], 0, head).norm());

    for (std::size_t mode = 0; mode < cards.size(); ++mode) {
      const EntityIndex e = batch.cell(0)[mode];
      const LabelSet* ls = mode == 0 ? &labels[0] : nullptr;
      const HeadExpectations* he = mode == 0 ? &head : nullptr;
      const Vector step = hessian_factor(state, mode, e, batch, cells, ls, he)
                              .solve(grad_factor(state, mode, e, batch, cells, ls, he));
      state.factors[mode].row(e) += step.transpose();
      worst_factor = std::max(worst_factor, grad_factor(state, mode, e, batch, cells, ls, he).norm());
    }
  }
  const double worst = std::max({worst_lambda, worst_beta, worst_factor});
  return {worst < 1e-8, fmt("post-step |grad| lambda %.2e beta %.2e factor %.2e", worst_lambda, worst_beta, worst_factor)};
}

// ---------------------------------------------------------------- 4
Vector literal_delta(const Vector& lambda, Vector delta) {
  const int R = static_cast<int>(lambda.size());
  for (int r = 1; r <= R; ++r) {
    const double a_r = 1.0 + static_cast<double>(r - 1) / R;
    double sum = 0;
    for (int h = r; h <= R; ++h) {
      double prod = 1;
      for (int l = 1; l <= h; ++l) {
        if (l != r) prod *= 1.0 / delta[l - 1];
      }
      sum += lambda[h - 1] * lambda[h - 1] / 2.0 * prod;
    }
    delta[r - 1] = (1.0 + sum) / (0.5 * (R - r + 1) + a_r + 1.0);
  }
  return delta;
}

Outcome delta_oracle() {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> rank_dist(1, 5);
  std::normal_distribution<double> normal(0, 1.5);
  std::uniform_real_distribution<double> positive(0.2, 3);
  double worst = 0;
  bool tau_ok = true;
  for (int i = 0; i < 100; ++i) {
    const int R = rank_dist(rng);
    ModelState state;
    state.lambda.resize(R);
    state.delta.resize(R);
    for (int r = 0; r < R; ++r) {
      state.lambda[r] = normal(rng);
      state.delta[r] = positive(rng);
    }
    state.shape = shape_schedule(R);
    state.tau = compute_tau(state.delta);
    const Vector expected = literal_delta(state.lambda, state.delta);
    update_delta(state);
    for (int r = 0; r < R; ++r) worst = std::max(worst, std::abs(state.delta[r] - expected[r]) / std::abs(expected[r]));
    double prod = 1;
    for (int r = 0; r < R; ++r) {
      prod *= state.delta[r];
      tau_ok = tau_ok && state.tau[r] == prod;
    }
  }
  return {worst <= 1e-12 && tau_ok, fmt("max rel err %.2e over 100 instances", worst) + (tau_ok ? "" : ", tau mismatch")};
}

// ---------------------------------------------------------------- shared planted-core runs
constexpr int kSeeds = 5;

Hyperparams planted_hyper(std::uint64_t seed, Optimizer optimizer, std::int64_t iters) {
  Hyperparams hyper;
  hyper.rank = 5;
  hyper.optimizer = optimizer;
  hyper.max_iters = iters;
  hyper.seed = seed;
  hyper.monitor_every = 0;
  hyper.eval_every = 0;
  hyper.scale_batch = true;
  hyper.init_positive = true;
  hyper.init_scale = 0.3;
  hyper.b2 = 0.4;
  return hyper;
}

PlantedCoreScenario planted_scenario() {
  PlantedCoreScenario scenario;
  scenario.core_products = 30;
  return scenario;
}

SyntheticDataset planted_data(std::uint64_t seed, std::optional<double> overlap = std::nullopt,
                              double label_fraction = 0.3) {
  auto scenario = planted_scenario();
  scenario.task_overlap = overlap;
  scenario.label_fraction = label_fraction;
  auto rng = make_rng(seed, Stream::synthetic);
  return generate(planted_core_config(scenario), rng);
}

double heldout_auc(const SyntheticDataset& data, const std::vector<double>& scores, std::size_t task) {
  std::vector<double> s;
  std::vector<int> truth;
  for (const auto e : heldout_entities(data)) {
    s.push_back(scores[e]);
    truth.push_back(data.truth[task][e] > 0 ? 1 : 0);
  }
  return roc_auc(s, truth);
}

LabelSet single_task(const LabelSet& labels, std::size_t task) {
  LabelSet out(labels.mode(), labels.entity_count(), {labels.task_names()[task]});
  for (const auto e : labels.labeled(task)) out.set(e, 0, labels.label(e, task));
  return out;
}

struct PlantedRun {
  double semi_auc = 0;
  double unsup_auc = 0;
  Vector lambda;
};

std::vector<PlantedRun>& planted_runs() {
  static std::vector<PlantedRun> runs;
  if (!runs.empty()) return runs;
  for (int s = 0; s < kSeeds; ++s) {
    const auto data = planted_data(100 + s);
    std::vector<LabelSet> labels{data.labels};
    const auto semi = fit(data.tensor, labels, planted_hyper(s, Optimizer::natgrad1, 1000));
    const auto unsup = fit(data.tensor, {}, planted_hyper(s, Optimizer::natgrad1, 1000));
    PlantedRun run;
    run.semi_auc = heldout_auc(data, score_entities(semi.state, 0, 0), 0);
    run.unsup_auc = heldout_auc(data, lambda_weighted_norms(unsup.state, 0), 0);
    run.lambda = semi.state.lambda;
    runs.push_back(run);
  }
  return runs;
}

std::string list(const std::vector<double>& v) {
  std::ostringstream out;
  out.precision(3);
  for (std::size_t i = 0; i < v.size(); ++i) out << (i ? " " : "") << v[i];
  return out.str();
}

// ---------------------------------------------------------------- 5
Outcome planted_recovery() {
  std::vector<double> aucs;
  for (const auto& run : planted_runs()) aucs.push_back(run.semi_auc);
  const double m = mean(aucs);
  return {m >= 0.85, fmt("mean held-out AUC %.4f (>= 0.85); per seed: ", m) + list(aucs)};
}

// ---------------------------------------------------------------- 6
Outcome semi_supervised_gain() {
  std::vector<double> semi, unsup;
  for (const auto& run : planted_runs()) {
    semi.push_back(run.semi_auc);
    unsup.push_back(run.unsup_auc);
  }
  const double gain = mean(semi) - mean(unsup);
  return {gain >= 0.05, fmt("semi %.4f vs unsupervised baseline %.4f, gain %.4f (>= 0.05)", mean(semi), mean(unsup), gain)};
}

// ---------------------------------------------------------------- 7
Outcome early_iteration_advantage() {
  // A diverged run has no usable scores and counts as chance.
  const auto run = [](const SyntheticDataset& data, int seed, Optimizer optimizer, int& diverged) {
    std::vector<LabelSet> labels{data.labels};
    try {
      return heldout_auc(data, score_entities(fit(data.tensor, labels, planted_hyper(seed, optimizer, 200)).state, 0, 0), 0);
    } catch (const NumericalError&) {
      ++diverged;
      return 0.5;
    }
  };
  std::vector<double> nat, sgd;
  int nat_diverged = 0, sgd_diverged = 0;
  for (int s = 0; s < kSeeds; ++s) {
    const auto data = planted_data(100 + s);
    nat.push_back(run(data, s, Optimizer::natgrad1, nat_diverged));
    sgd.push_back(run(data, s, Optimizer::sgd, sgd_diverged));
  }
  return {mean(nat) >= mean(sgd),
          fmt("200 iterations: natgrad1 %.4f vs sgd %.4f; diverged runs (scored 0.5): natgrad1 %d/5, sgd %d/5", mean(nat),
              mean(sgd), nat_diverged, sgd_diverged)};
}

// ---------------------------------------------------------------- 8
Outcome rank_shrinkage() {
  int good = 0;
  std::ostringstream detail;
  detail.precision(3);
  for (const auto& run : planted_runs()) {
    Vector a = run.lambda.cwiseAbs();
    std::vector<double> sorted(a.data(), a.data() + a.size());
    std::sort(sorted.begin(), sorted.end());
    const double top = sorted.back();
    const bool ok = sorted[0] < 0.1 * top && sorted[1] < 0.1 * top && sorted[2] < 0.1 * top;
    good += ok ? 1 : 0;
    detail << " [";
    for (std::size_t i = 0; i < sorted.size(); ++i) detail << (i ? " " : "") << sorted[i] / top;
    detail << "]";
  }
  return {good >= 4, std::to_string(good) + "/5 seeds with 3 smallest |lambda| < 0.1 max; |lambda|/max:" + detail.str()};
}

// ---------------------------------------------------------------- 9
Outcome multi_target() {
  std::vector<double> joint, single;
  for (int s = 0; s < kSeeds; ++s) {
    const auto data = planted_data(200 + s, 0.7, 0.8);
    std::vector<LabelSet> both{data.labels};
    const auto state = fit(data.tensor, both, planted_hyper(s, Optimizer::natgrad1, 1000)).state;
    for (std::size_t l = 0; l < 2; ++l) {
      joint.push_back(heldout_auc(data, score_entities(state, 0, l), l));
      std::vector<LabelSet> one{single_task(data.labels, l)};
      const auto alone = fit(data.tensor, one, planted_hyper(s, Optimizer::natgrad1, 1000)).state;
      single.push_back(heldout_auc(data, score_entities(alone, 0, 0), l));
    }
  }
  const double margin = mean(joint) - mean(single);
  return {margin >= 0, fmt("joint %.4f vs single-target %.4f, margin %.4f (>= 0); joint: ", mean(joint), mean(single), margin) +
                           list(joint) + "; single: " + list(single)};
}

// ---------------------------------------------------------------- 10
Outcome scalability() {
  const std::vector<std::size_t> sizes{10000, 30000, 100000, 300000, 1000000};
  const std::vector<std::size_t> cards{20000, 10000, 5, 100};
  std::vector<double> xs, ys;
  std::ostringstream detail;
  detail.precision(3);
  for (const auto n : sizes) {
    ObservedTensor tensor(pt::make_scheme(cards));
    std::mt19937_64 rng(n);
    std::vector<EntityIndex> cell(cards.size());
    while (tensor.size() < n) {
      for (std::size_t k = 0; k < cards.size(); ++k) {
        cell[k] = std::uniform_int_distribution<EntityIndex>(0, static_cast<EntityIndex>(cards[k] - 1))(rng);
      }
      tensor.insert(cell);
    }
    Hyperparams hyper;
    hyper.rank = 5;
    hyper.max_iters = 500;
    hyper.monitor_every = 1;
    const auto started = std::chrono::steady_clock::now();
    fit(tensor, {}, hyper);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    xs.push_back(std::log(static_cast<double>(n)));
    ys.push_back(std::log(seconds));
    detail << " " << n << ":" << seconds << "s";
  }
  const double mx = mean(xs), my = mean(ys);
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  const double slope = sxy / sxx;
  return {std::abs(slope - 1.0) <= 0.2, fmt("log-log slope %.3f (1.0 +/- 0.2);", slope) + detail.str()};
}

// ---------------------------------------------------------------- 11
Outcome determinism() {
  PlantedCoreScenario scenario;
  scenario.reviewers = 120;
  scenario.products = 80;
  scenario.background_tuples = 3000;
  scenario.core_reviewers = 10;
  scenario.core_products = 8;
  auto rng = make_rng(5, Stream::synthetic);
  const auto data = generate(planted_core_config(scenario), rng);
  std::vector<LabelSet> labels{data.labels};
  auto hyper = planted_hyper(9, Optimizer::natgrad1, 200);
  hyper.batch_size = 256;

  const auto first = fit(data.tensor, labels, hyper);
  const auto second = fit(data.tensor, labels, hyper);
  const bool reproducible = pt::same_state(first.state, second.state);

  Checkpoint checkpoint{hyper, first.state, data.tensor.scheme(), 200};
  const auto bytes = serialize_checkpoint(checkpoint);
  const auto loaded = deserialize_checkpoint(bytes);
  const bool round_trip = pt::same_state(loaded.state, first.state) && serialize_checkpoint(loaded) == bytes;

  auto half = hyper;
  half.max_iters = 100;
  const auto part = fit(data.tensor, labels, half);
  const auto restored = deserialize_checkpoint(serialize_checkpoint({half, part.state, data.tensor.scheme(), 100}));
  const auto resumed = fit(data.tensor, labels, restored.hyper, {}, restored.state);
  const bool resume_ok = pt::same_state(resumed.state, first.state);

  const auto yn = [](bool b) { return b ? "yes" : "no"; };
  return {reproducible && round_trip && resume_ok, std::string("reproducible ") + yn(reproducible) +
                                                        ", checkpoint bit-exact " + yn(round_trip) +
                                                        ", resume == straight-through " + yn(resume_ok)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, gradient_correctness}, {2, curvature_identity}, {3, newton_oracle},
      {4, delta_oracle},         {5, planted_recovery},   {6, semi_supervised_gain},
      {7, early_iteration_advantage}, {8, rank_shrinkage}, {9, multi_target},
      {10, scalability},         {11, determinism}};
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::stoi(argv[i]));

  int failures = 0;
  for (const auto& [id, run] : criteria) {
    if (!selected.empty() && !selected.count(id)) continue;
    const auto started = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    std::printf("criterion %2d: %s  %s  (%.1fs)\n", id, outcome.pass ? "PASS" : "FAIL", outcome.detail.c_str(), seconds);
    std::fflush(stdout);
    failures += outcome.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
