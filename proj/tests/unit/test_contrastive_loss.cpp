#include <cmath>
#include <numbers>
#include <numeric>

#include "doctest.h"
#include "ssce/contrastive_loss.hpp"
#include "ssce/error.hpp"
#include "ssce/gradcheck.hpp"
#include "ssce/rng.hpp"
#include "support/loss_oracle.hpp"

using namespace ssce;
using ssce::testing::close_rel;
using ssce::testing::loss_oracle;

namespace {

ContrastiveBatch four_points(std::vector<double> weights) {
  const double pi = std::numbers::pi;
  const double angles[] = {0.0, pi / 5, pi / 2, 5 * pi / 6};
  ContrastiveBatch b;
  b.embeddings.resize(4, 2);
  for (int i = 0; i < 4; ++i) {
    b.embeddings(i, 0) = std::cos(angles[i]);
    b.embeddings(i, 1) = std::sin(angles[i]);
  }
  b.labels = {0, 0, 1, 1};
  b.weights = std::move(weights);
  b.temperature = 0.5;
  return b;
}

ContrastiveBatch permuted(const ContrastiveBatch& b, const std::vector<std::size_t>& perm) {
  ContrastiveBatch out = b;
  for (std::size_t k = 0; k < perm.size(); ++k) {
    out.embeddings.row(static_cast<Eigen::Index>(k)) = b.embeddings.row(static_cast<Eigen::Index>(perm[k]));
    out.labels[k] = b.labels[perm[k]];
    out.weights[k] = b.weights[perm[k]];
  }
  return out;
}

}  // namespace

TEST_CASE("four-point fixture against reference values") {
  const auto uniform = four_points({1, 1, 1, 1});
  CHECK(close_rel(ssc_loss(uniform).value, 0.47588388219659606718, 1e-12));
  CHECK(close_rel(ssc_e_loss(uniform).value, 0.47588388219659606718, 1e-12));

  const auto weighted = four_points({1, 0.5, 1, 0.2});
  CHECK(close_rel(ssc_loss(weighted).value, 0.5425741403289859855, 1e-12));
  CHECK(close_rel(ssc_e_loss(weighted).value, 0.45407932402102023541, 1e-12));
  CHECK(ssc_loss(weighted).anchor_count == 4);
}

TEST_CASE("build_positive_index") {
  const auto p = build_positive_index({2, 0, 2, 2, 1});
  CHECK(p[0] == std::vector<std::size_t>{2, 3});
  CHECK(p[1].empty());
  CHECK(p[3] == std::vector<std::size_t>{0, 2});
  CHECK(p[4].empty());
}

TEST_CASE("anchors without positives drop out") {
  auto b = four_points({1, 1, 1, 1});
  b.labels = {0, 0, 1, 2};
  const auto r = ssc_loss(b);
  CHECK(r.anchor_count == 2);
  CHECK(close_rel(r.value, loss_oracle(b, LossVariant::Ssc), 1e-12));
  // Unpaired rows still receive gradient through the denominators.
  CHECK(r.grad.row(3).norm() > 0.0);

  b.labels = {0, 1, 2, 3};
  CHECK_THROWS_AS(ssc_loss(b), Error);
}

TEST_CASE("validation errors") {
  auto b = four_points({1, 1, 1, 1});
  SUBCASE("weights") {
    b.weights[1] = -0.1;
    CHECK_THROWS_AS(ssc_loss(b), Error);
    b.weights[1] = NAN;
    CHECK_THROWS_AS(ssc_e_loss(b), Error);
  }
  SUBCASE("shape") {
    b.labels.pop_back();
    CHECK_THROWS_AS(ssc_loss(b), Error);
  }
  SUBCASE("temperature") {
    b.temperature = 0.0;
    CHECK_THROWS_AS(ssc_loss(b), Error);
  }
  SUBCASE("unit norm") {
    b.embeddings(0, 0) = 2.0;
    CHECK_THROWS_WITH_AS(ssc_loss(b), doctest::Contains("unit-norm"), Error);
    CHECK_NOTHROW(contrastive_loss(b, LossVariant::Ssc, NormCheck::Skip));
  }
  SUBCASE("single entry") {
    ContrastiveBatch one;
    one.embeddings = Matrix::Ones(1, 1);
    one.labels = {0};
    one.weights = {1};
    CHECK_THROWS_AS(ssc_loss(one), Error);
  }
  SUBCASE("all weight on anchors without positives") {
    b.weights = {0, 0, 0, 0};
    CHECK_THROWS_AS(ssc_loss(b), Error);
  }
}

TEST_CASE("uniform weights reduce SSC-E to SSC") {
  Rng rng(101);
  for (int t = 0; t < 300; ++t) {
    ContrastiveBatch b = random_batch(rng);
    const double c = t % 3 == 0 ? 1.0 : rng.uniform(0.1, 3.0);
    std::fill(b.weights.begin(), b.weights.end(), c);
    const auto a = ssc_loss(b);
    const auto e = ssc_e_loss(b);
    CHECK(close_rel(a.value, e.value, 1e-12));
    CHECK((a.grad - e.grad).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + a.grad.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("both variants match the naive oracle") {
  Rng rng(202);
  for (int t = 0; t < 300; ++t) {
    const ContrastiveBatch b = random_batch(rng);
    CHECK(close_rel(ssc_loss(b).value, loss_oracle(b, LossVariant::Ssc), 1e-9));
    CHECK(close_rel(ssc_e_loss(b).value, loss_oracle(b, LossVariant::SscE), 1e-9));
  }
}

TEST_CASE("analytic gradient matches central differences") {
  Rng rng(303);
  for (int t = 0; t < 40; ++t) {
    const ContrastiveBatch b = random_batch(rng);
    CHECK(grad_check(b, LossVariant::Ssc, 1e-5).max_rel_error < 1e-4);
    CHECK(grad_check(b, LossVariant::SscE, 1e-5).max_rel_error < 1e-4);
  }
  const auto b = four_points({1, 1, 1, 1});
  CHECK_THROWS_AS(grad_check(b, LossVariant::Ssc, 1e-2), Error);
  CHECK_THROWS_AS(grad_check(b, LossVariant::Ssc, 1e-9), Error);
}

TEST_CASE("gradient_rel_error") {
  CHECK(gradient_rel_error(0.0, 0.0) == 0.0);
  CHECK(gradient_rel_error(1e-12, 0.0) == doctest::Approx(1e-4));
  CHECK(gradient_rel_error(2.0, 1.0) == 0.5);
}

TEST_CASE("loss is invariant under batch permutation") {
  Rng rng(404);
  for (int t = 0; t < 100; ++t) {
    const ContrastiveBatch b = random_batch(rng);
    std::vector<std::size_t> perm(b.size());
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
    const ContrastiveBatch p = permuted(b, perm);
    for (auto v : {LossVariant::Ssc, LossVariant::SscE}) {
      const auto a = contrastive_loss(b, v);
      const auto q = contrastive_loss(p, v);
      CHECK(close_rel(a.value, q.value, 1e-12));
      for (std::size_t k = 0; k < perm.size(); ++k) {
        const auto diff = (q.grad.row(static_cast<Eigen::Index>(k)) -
                           a.grad.row(static_cast<Eigen::Index>(perm[k])))
                              .cwiseAbs()
                              .maxCoeff();
        CHECK(diff <= 1e-12);
      }
    }
  }
}

TEST_CASE("zero-weight entries leave the anchor sum but stay in denominators") {
  Rng rng(505);
  int checked = 0;
  for (int t = 0; t < 200 && checked < 50; ++t) {
    ContrastiveBatch b = random_batch(rng, {.min_size = 4});
    const std::size_t k = rng.below(b.size());
    b.weights[k] = 0.0;
    ContrastiveBatch masked = b;
    masked.can_anchor.assign(b.size(), true);
    masked.can_anchor[k] = false;
    double ssc;
    try {
      ssc = ssc_loss(b).value;
    } catch (const Error&) {
      continue;
    }
    ++checked;
    // SSC: a zero-weight anchor contributes nothing, same as disabling it.
    CHECK(close_rel(ssc, ssc_loss(masked).value, 1e-12));
    // SSC-E: a zero weight also silences every pair it belongs to.
    CHECK(close_rel(ssc_e_loss(b).value, loss_oracle(b, LossVariant::SscE), 1e-9));
  }
  CHECK(checked >= 20);
}

TEST_CASE("large temperature sends fully positive batches to log(N-1)") {
  Rng rng(606);
  for (int t = 0; t < 50; ++t) {
    ContrastiveBatch b = random_batch(rng);
    std::fill(b.labels.begin(), b.labels.end(), 0);
    b.temperature = 1e3;
    const double expect = std::log(static_cast<double>(b.size() - 1));
    CHECK(std::abs(ssc_loss(b).value - expect) < 1e-3);
    CHECK(std::abs(ssc_e_loss(b).value - expect) < 1e-3);
  }
}

TEST_CASE("anchor mask removes only anchor terms") {
  auto b = four_points({1, 0.5, 1, 0.2});
  b.can_anchor = {true, false, true, true};
  CHECK(ssc_loss(b).anchor_count == 3);
  CHECK(close_rel(ssc_loss(b).value, loss_oracle(b, LossVariant::Ssc), 1e-12));
  CHECK(close_rel(ssc_e_loss(b).value, loss_oracle(b, LossVariant::SscE), 1e-12));
  CHECK(grad_check(b, LossVariant::SscE, 1e-5).max_rel_error < 1e-4);
}
