#include <cmath>

#include "doctest.h"
#include "ssce/contrastive_loss.hpp"
#include "ssce/encoder.hpp"
#include "ssce/error.hpp"
#include "ssce/gradcheck.hpp"
#include "ssce/rng.hpp"
#include "support/loss_oracle.hpp"

using namespace ssce;
using ssce::testing::close_rel;

namespace {

Matrix random_inputs(Rng& rng, Eigen::Index n, Eigen::Index d) {
  Matrix x(n, d);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) x(r, c) = rng.normal();
  }
  return x;
}

// Straight-line recomputation from the flat parameter layout:
// per layer W (out x in, row-major) then b; tanh between layers.
std::vector<double> naive_forward(const EncoderConfig& cfg, const Vector& p, const std::vector<double>& x) {
  std::vector<int> widths = cfg.hidden;
  widths.push_back(cfg.embedding_dim);
  std::vector<double> h = x;
  std::size_t off = 0;
  for (std::size_t l = 0; l < widths.size(); ++l) {
    const std::size_t in = h.size();
    const auto out = static_cast<std::size_t>(widths[l]);
    std::vector<double> a(out, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      double s = 0.0;
      for (std::size_t i = 0; i < in; ++i) s += p[static_cast<Eigen::Index>(off + o * in + i)] * h[i];
      a[o] = s + p[static_cast<Eigen::Index>(off + out * in + o)];
    }
    off += out * in + out;
    if (l + 1 < widths.size()) {
      for (double& v : a) v = std::tanh(v);
    }
    h = a;
  }
  double norm = 0.0;
  for (double v : h) norm += v * v;
  norm = std::sqrt(norm);
  for (double& v : h) v /= norm;
  return h;
}

}  // namespace

TEST_CASE("parameter count and layout") {
  const EncoderConfig cfg{8, {64, 64}, 16};
  CHECK(MlpEncoder::parameter_count(cfg) == 8 * 64 + 64 + 64 * 64 + 64 + 64 * 16 + 16);
  Rng rng(1);
  MlpEncoder enc(cfg, rng);
  CHECK(enc.parameter_count() == MlpEncoder::parameter_count(cfg));
  CHECK(enc.parameters().cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(8.0));
  CHECK_THROWS_AS(MlpEncoder(cfg, Vector::Zero(3)), Error);
  CHECK_THROWS_AS(MlpEncoder(EncoderConfig{0, {4}, 2}, rng), Error);
}

TEST_CASE("forward matches a straight-line recomputation") {
  Rng rng(2);
  const EncoderConfig cfg{5, {7, 4}, 3};
  const MlpEncoder enc(cfg, rng);
  const Matrix x = random_inputs(rng, 9, 5);
  const Matrix z = enc.embed(x);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    std::vector<double> row(x.row(r).data(), x.row(r).data() + x.cols());
    const auto expect = naive_forward(cfg, enc.parameters(), row);
    for (Eigen::Index c = 0; c < z.cols(); ++c) CHECK(std::abs(z(r, c) - expect[c]) <= 1e-12);
    CHECK(std::abs(z.row(r).norm() - 1.0) <= 1e-9);
  }
}

TEST_CASE("forward edge cases") {
  const EncoderConfig cfg{3, {4}, 2};
  SUBCASE("zero weights map every input to the normalized output bias") {
    Vector p = Vector::Zero(static_cast<Eigen::Index>(MlpEncoder::parameter_count(cfg)));
    const Eigen::Index last_bias = p.size() - 2;
    p[last_bias] = 3.0;
    p[last_bias + 1] = -4.0;
    const MlpEncoder enc(cfg, p);
    Rng rng(3);
    const Matrix z = enc.embed(random_inputs(rng, 5, 3));
    for (Eigen::Index r = 0; r < 5; ++r) {
      CHECK(z(r, 0) == doctest::Approx(0.6).epsilon(1e-15));
      CHECK(z(r, 1) == doctest::Approx(-0.8).epsilon(1e-15));
    }
  }
  SUBCASE("repeated input gives identical rows") {
    Rng rng(4);
    const MlpEncoder enc(cfg, rng);
    Matrix x(3, 3);
    x.rowwise() = random_inputs(rng, 1, 3).row(0);
    const Matrix z = enc.embed(x);
    CHECK(z.row(0) == z.row(1));
    CHECK(z.row(1) == z.row(2));
  }
  SUBCASE("dimension mismatch") {
    Rng rng(5);
    const MlpEncoder enc(cfg, rng);
    CHECK_THROWS_WITH_AS(enc.forward(Matrix::Zero(2, 4)), doctest::Contains("dimension"), Error);
  }
  SUBCASE("same seed gives identical parameters and outputs") {
    Rng a(6), b(6);
    const MlpEncoder ea(cfg, a), eb(cfg, b);
    CHECK(ea.parameters() == eb.parameters());
    Rng in(7);
    const Matrix x = random_inputs(in, 4, 3);
    CHECK(ea.embed(x) == eb.embed(x));
  }
}

TEST_CASE("backward") {
  Rng rng(8);
  const EncoderConfig cfg{4, {6, 5}, 3};
  MlpEncoder enc(cfg, rng);
  const Matrix x = random_inputs(rng, 6, 4);

  SUBCASE("zero upstream gradient") {
    const auto cache = enc.forward(x);
    CHECK(enc.backward(cache, Matrix::Zero(6, 3)).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("finite differences through a linear probe") {
    const Matrix probe = random_inputs(rng, 6, 3);
    const auto cache = enc.forward(x);
    const Vector g = enc.backward(cache, probe);
    Vector p = enc.parameters();
    const double eps = 1e-6;
    double worst = 0.0;
    for (Eigen::Index k = 0; k < p.size(); ++k) {
      const double saved = p[k];
      p[k] = saved + eps;
      const double plus = MlpEncoder(cfg, p).embed(x).cwiseProduct(probe).sum();
      p[k] = saved - eps;
      const double minus = MlpEncoder(cfg, p).embed(x).cwiseProduct(probe).sum();
      p[k] = saved;
      worst = std::max(worst, gradient_rel_error(g[k], (plus - minus) / (2 * eps)));
    }
    CHECK(worst < 1e-4);
  }

  SUBCASE("stale cache") {
    const auto cache = enc.forward(x);
    enc.mutable_parameters()[0] += 0.0;
    try {
      (void)enc.backward(cache, Matrix::Zero(6, 3));
      FAIL("expected StaleCache");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::StaleCache);
    }
    OptimizerState st{{}, 0.9, 0.1};
    const auto fresh = enc.forward(x);
    enc.sgd_step(Vector::Zero(static_cast<Eigen::Index>(enc.parameter_count())), st);
    CHECK_THROWS_AS((void)enc.backward(fresh, Matrix::Zero(6, 3)), Error);
  }

  SUBCASE("gradient shape mismatch") {
    const auto cache = enc.forward(x);
    CHECK_THROWS_AS((void)enc.backward(cache, Matrix::Zero(5, 3)), Error);
  }
}

TEST_CASE("normalization Jacobian output is tangential") {
  Rng rng(9);
  for (int t = 0; t < 200; ++t) {
    Vector u(6), g(6);
    for (int c = 0; c < 6; ++c) {
      u[c] = 5 * rng.normal();
      g[c] = rng.normal();
    }
    const double norm = u.norm();
    const Vector z = u / norm;
    const Vector back = normalization_backward(z, norm, g);
    CHECK(std::abs(back.dot(z)) <= 1e-8);
  }
}

TEST_CASE("end-to-end encoder gradient check") {
  CHECK(encoder_grad_check(7, 1e-5).max_rel_error < 1e-4);
  CHECK(encoder_grad_check(123, 1e-5).max_rel_error < 1e-4);
}

TEST_CASE("sgd_momentum_step") {
  SUBCASE("two steps with constant gradient") {
    Vector p = Vector::Constant(1, 1.0);
    OptimizerState st{{}, 0.9, 0.03};
    const Vector g = Vector::Constant(1, 0.5);
    sgd_momentum_step(p, g, st);
    sgd_momentum_step(p, g, st);
    CHECK(close_rel(p[0], 0.9565, 1e-15));
    CHECK(close_rel(st.velocity[0], 0.95, 1e-15));
  }
  SUBCASE("zero momentum is plain SGD") {
    Vector p(3);
    p << 1, 2, 3;
    Vector g(3);
    g << 0.5, -1, 2;
    OptimizerState st{{}, 0.0, 0.1};
    const Vector expect = p - 0.1 * g;
    sgd_momentum_step(p, g, st);
    CHECK((p - expect).cwiseAbs().maxCoeff() <= 1e-15);
  }
  SUBCASE("velocity decays by m without gradient") {
    Vector p = Vector::Zero(2);
    OptimizerState st{Vector::Constant(2, 1.0), 0.9, 0.01};
    double prev = st.velocity.norm();
    for (int k = 0; k < 10; ++k) {
      sgd_momentum_step(p, Vector::Zero(2), st);
      CHECK(st.velocity.norm() == doctest::Approx(0.9 * prev).epsilon(1e-14));
      prev = st.velocity.norm();
    }
  }
  SUBCASE("shape mismatch") {
    Vector p = Vector::Zero(2);
    OptimizerState st;
    CHECK_THROWS_AS(sgd_momentum_step(p, Vector::Zero(3), st), Error);
  }
}

TEST_CASE("update_prototypes") {
  Rng rng(10);
  PrototypeBank bank = random_prototypes(4, 5, rng);
  const Matrix before = bank.prototypes;

  SUBCASE("zero gradient") {
    OptimizerState st{{}, 0.9, 0.1};
    update_prototypes(bank, Matrix::Zero(4, 5), st);
    CHECK((bank.prototypes - before).cwiseAbs().maxCoeff() <= 1e-15);
  }
  SUBCASE("radial gradient keeps the direction") {
    OptimizerState st{{}, 0.0, 0.1};
    update_prototypes(bank, Matrix(0.5 * before), st);
    CHECK((bank.prototypes - before).cwiseAbs().maxCoeff() <= 1e-15);
  }
  SUBCASE("random gradient restores unit norm") {
    OptimizerState st{{}, 0.9, 0.5};
    for (int k = 0; k < 5; ++k) update_prototypes(bank, random_inputs(rng, 4, 5), st);
    for (Eigen::Index r = 0; r < 4; ++r) CHECK(std::abs(bank.prototypes.row(r).norm() - 1.0) <= 1e-9);
  }
  SUBCASE("shape mismatch") {
    OptimizerState st;
    CHECK_THROWS_AS(update_prototypes(bank, Matrix::Zero(3, 5), st), Error);
  }
}
