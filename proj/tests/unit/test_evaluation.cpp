#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "polyacp/evaluation.hpp"
#include "polyacp/rng.hpp"
#include "../support.hpp"

using namespace polyacp;

namespace {

double pairwise_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double hits = 0;
  double pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[i] != 1 || y[j] != 0) continue;
      pairs += 1;
      hits += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
    }
  }
  return hits / pairs;
}

// Quartile by linear interpolation between closest ranks of the sorted sample.
double sorted_quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

TEST_CASE("roc auc") {
  const std::vector<double> perfect{0.9, 0.8, 0.1};
  const std::vector<int> truth{1, 0, 0};
  CHECK(roc_auc(perfect, truth) == 1.0);
  const std::vector<double> tied{0.5, 0.5};
  const std::vector<int> one_each{1, 0};
  CHECK(roc_auc(tied, one_each) == 0.5);
  const std::vector<double> reversed{0.1, 0.8, 0.9};
  CHECK(roc_auc(reversed, truth) == 0.0);
}

TEST_CASE("roc auc matches the pairwise count") {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> s(200);
    std::vector<int> y(200);
    std::uniform_int_distribution<int> level(0, 9);
    for (std::size_t i = 0; i < s.size(); ++i) {
      y[i] = (gen() % 3 == 0) ? 1 : 0;
      // Coarse levels force many ties.
      s[i] = level(gen) / 10.0 + (y[i] ? 0.15 : 0.0);
    }
    y[0] = 1;
    y[1] = 0;
    CHECK(roc_auc(s, y) == doctest::Approx(pairwise_auc(s, y)).epsilon(1e-14));
  }
}

TEST_CASE("roc auc needs both classes") {
  const std::vector<double> s{0.2, 0.4};
  const std::vector<int> y{1, 1};
  CHECK_THROWS(roc_auc(s, y));
  const std::vector<int> short_truth{1};
  CHECK_THROWS(roc_auc(s, short_truth));
}

TEST_CASE("classification metrics") {
  const std::vector<double> s{0.9, 0.7, 0.2, 0.1};
  const std::vector<int> y{1, 1, 0, 0};
  const auto m = classification_metrics(s, y, 0.5);
  CHECK(m.precision == 1);
  CHECK(m.recall == 1);
  CHECK(m.f1 == 1);
  CHECK(m.auc == 1);

  const auto none = classification_metrics(s, y, 0.95);
  CHECK(none.recall == 0);
  CHECK(none.precision == 0);
  CHECK(none.precision_undefined);
  CHECK(none.f1 == 0);

  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> scores(50);
    std::vector<int> truth(50);
    for (std::size_t i = 0; i < scores.size(); ++i) {
      scores[i] = u(gen);
      truth[i] = u(gen) < 0.4 ? 1 : 0;
    }
    truth[0] = 1;
    truth[1] = 0;
    scores[0] = 0.99;
    const auto got = classification_metrics(scores, truth, 0.5);
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const bool predicted = scores[i] >= 0.5;
      tp += predicted && truth[i];
      fp += predicted && !truth[i];
      fn += !predicted && truth[i];
    }
    const double p = tp / (tp + fp);
    const double r = tp / (tp + fn);
    CHECK(got.precision == doctest::Approx(p));
    CHECK(got.recall == doctest::Approx(r));
    CHECK(got.f1 == doctest::Approx(2 * p * r / (p + r)));
  }
}

TEST_CASE("dispersion") {
  const std::vector<double> two{0.8, 0.9};
  const auto d = dispersion_report(two);
  CHECK(d.min == 0.8);
  CHECK(d.median == doctest::Approx(0.85));
  CHECK(d.max == 0.9);

  const std::vector<double> flat(7, 0.42);
  const auto f = dispersion_report(flat);
  CHECK(f.min == f.max);
  CHECK(f.q1 == f.q3);
  CHECK(f.median == 0.42);

  std::mt19937_64 gen(21);
  std::normal_distribution<double> normal(0.8, 0.1);
  std::vector<double> eleven(11);
  for (auto& v : eleven) v = normal(gen);
  const auto r = dispersion_report(eleven);
  CHECK(r.min == sorted_quantile(eleven, 0));
  CHECK(r.q1 == doctest::Approx(sorted_quantile(eleven, 0.25)));
  CHECK(r.median == doctest::Approx(sorted_quantile(eleven, 0.5)));
  CHECK(r.q3 == doctest::Approx(sorted_quantile(eleven, 0.75)));
  CHECK(r.max == sorted_quantile(eleven, 1));

  CHECK_THROWS(dispersion_report(std::vector<double>{}));
}

TEST_CASE("entity scores") {
  LabelSet labels(0, 4, {"a"});
  labels.set(0, 0, 1);
  labels.set(1, 0, -1);
  const std::vector<LabelSet> sets{labels};
  Hyperparams hyper;
  hyper.rank = 2;
  auto rng = make_rng(0, Stream::init);
  auto state = init_state(std::vector<std::size_t>{4, 3}, sets, hyper, rng);
  state.heads[0].tasks[0].beta.setZero();
  for (double s : score_entities(state, 0, 0)) CHECK(s == 0.5);

  state.heads[0].tasks[0].beta = Vector{{0, 1, 0}};
  state.factors[0].col(0) = Vector{{2, -1, 0.5, 3}};
  const auto scores = score_entities(state, 0, 0);
  CHECK(scores[0] == doctest::Approx(0.8808).epsilon(1e-4));
  CHECK(scores[3] > scores[0]);
  CHECK(scores[0] > scores[2]);
  CHECK(scores[2] > scores[1]);

  CHECK_THROWS(score_entities(state, 1, 0));
  CHECK_THROWS(score_entities(state, 0, 3));

  state.lambda = Vector{{2, 0}};
  const auto norms = lambda_weighted_norms(state, 0);
  CHECK(norms[3] == doctest::Approx(6));
}

TEST_CASE("score files round-trip") {
  const std::vector<ScoreRow> rows{{"reviewer", "r1", "abuse", 0.25}, {"reviewer", "r2", "abuse", 1.0 / 3}};
  std::ostringstream out;
  write_scores(rows, out);
  std::istringstream in(out.str());
  const auto back = read_scores(in);
  REQUIRE(back.size() == 2);
  CHECK(back[1].entity == "r2");
  CHECK(back[1].score == 1.0 / 3);

  std::istringstream bad("mode,entity,task,score\nreviewer,r1,abuse,high\n");
  CHECK_THROWS(read_scores(bad));
}
