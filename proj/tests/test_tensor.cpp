#include <doctest.h>

#include <cmath>

#include "gransformer/common.hpp"
#include "gransformer/tensor.hpp"

using namespace gransformer;

namespace {

TensorPtr random_tensor(int rows, int cols, Rng& rng, bool requires_grad = false,
                        double scale = 1.0) {
  auto t = make_tensor(rows, cols, requires_grad);
  for (auto& v : t->data) v = static_cast<float>(rng.uniform(-scale, scale));
  return t;
}

}  // namespace

TEST_CASE("matmul against hand-computed products") {
  Tape tape;
  auto a = make_tensor(2, 3, {1, 2, 3, 4, 5, 6});
  auto b = make_tensor(3, 2, {7, 8, 9, 10, 11, 12});
  auto c = tape.matmul(a, b);
  CHECK(c->at(0, 0) == doctest::Approx(58).epsilon(1e-12));
  CHECK(c->at(0, 1) == doctest::Approx(64).epsilon(1e-12));
  CHECK(c->at(1, 0) == doctest::Approx(139).epsilon(1e-12));
  CHECK(c->at(1, 1) == doctest::Approx(154).epsilon(1e-12));

  auto eye = make_tensor(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  auto d = tape.matmul(eye, b);
  for (int i = 0; i < d->numel(); ++i) CHECK(d->data[i] == b->data[i]);
}

TEST_CASE("shape mismatches are rejected") {
  Tape tape;
  auto a = make_tensor(2, 3);
  auto b = make_tensor(2, 3);
  CHECK_THROWS_AS(tape.matmul(a, b), std::invalid_argument);
  auto c = make_tensor(3, 2);
  CHECK_THROWS_AS(tape.add(a, c), std::invalid_argument);
  CHECK_THROWS_AS(tape.mul(a, c), std::invalid_argument);
  CHECK_THROWS_AS(tape.add_rowwise(a, make_tensor(1, 2)), std::invalid_argument);
  CHECK_THROWS_AS(tape.slice_rows(a, 1, 5), std::invalid_argument);
  CHECK_THROWS_AS(tape.reshape(a, 4, 4), std::invalid_argument);
}

TEST_CASE("softmax rows sum to one and survive large inputs") {
  Tape tape;
  Rng rng(11);
  auto x = random_tensor(5, 7, rng, false, 3.0);
  auto p = tape.softmax_rows(x);
  for (int i = 0; i < p->rows; ++i) {
    double s = 0.0;
    for (int j = 0; j < p->cols; ++j) s += p->at(i, j);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
  }

  auto big = make_tensor(1, 2, {1000.0f, 0.0f});
  auto q = tape.softmax_rows(big);
  CHECK(std::abs(q->at(0, 0) - 1.0) < 1e-12);
  CHECK(std::abs(q->at(0, 1) - 0.0) < 1e-12);
}

TEST_CASE("relu subgradient at zero is zero") {
  Tape tape;
  auto x = make_tensor(1, 3, {-1.0f, 0.0f, 2.0f}, true);
  auto y = tape.sum(tape.relu(x));
  tape.backward(y);
  CHECK(x->grad[0] == 0.0f);
  CHECK(x->grad[1] == 0.0f);
  CHECK(x->grad[2] == 1.0f);
}

TEST_CASE("domain and contract errors") {
  Tape tape;
  auto x = make_tensor(1, 2, {-1.5f, 0.0f});
  CHECK_THROWS_AS(tape.log1p(x), numeric_error);
  auto z = make_tensor(1, 1, std::vector<float>{0.0f});
  CHECK_THROWS_AS(tape.log(z), numeric_error);
  auto huge = make_tensor(1, 1, std::vector<float>{200.0f});
  CHECK_THROWS_AS(tape.exp(tape.exp(huge)), numeric_error);

  auto v = make_tensor(2, 2, {1, 2, 3, 4}, true);
  Tape t2;
  auto w = t2.relu(v);
  CHECK_THROWS_AS(t2.backward(w), std::invalid_argument);

  Tape frozen(false);
  auto s = frozen.sum(v);
  CHECK_THROWS_AS(frozen.backward(s), std::invalid_argument);
}

TEST_CASE("gradient accumulation is additive across tapes and caller-zeroed") {
  auto x = make_tensor(1, 2, {0.5f, -0.25f}, true);
  auto run = [&x] {
    Tape tape;
    tape.backward(tape.sum(tape.mul(x, x)));
  };
  run();
  std::vector<float> once = x->grad;
  run();
  for (int i = 0; i < x->numel(); ++i) {
    CHECK(x->grad[i] == doctest::Approx(2.0f * once[i]).epsilon(1e-6));
  }
  x->zero_grad();
  for (float g : x->grad) CHECK(g == 0.0f);
}

// Central differences on a 32-bit forward pass resolve gradients to about
// 1e-4 only while the loss stays order-1 and the op chain is short, so each
// check below keeps its composition small instead of chaining everything.
TEST_CASE("gradient check covers every op") {
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    auto a = random_tensor(3, 4, rng, true, 0.4);
    auto b = random_tensor(4, 3, rng, true, 0.4);
    auto bias = random_tensor(1, 3, rng, true, 0.4);
    auto c = random_tensor(3, 3, rng, true, 0.4);
    a->name = "a";
    b->name = "b";
    bias->name = "bias";
    c->name = "c";
    std::vector<TensorPtr> abc = {a, b, bias, c};

    auto check = [&](const std::string& label,
                     const std::function<TensorPtr(Tape&)>& build) {
      // Center the loss at its unperturbed value: gradients are unchanged but
      // the scalar is stored near 0 where float rounding cannot swamp the
      // finite-difference quotient.
      Tape probe(false);
      const double base = build(probe)->data[0];
      auto centered = [&](Tape& t) { return t.affine(build(t), 1.0, -base); };
      auto res = grad_check(centered, abc, 1e-3, 1e-4);
      INFO("seed ", seed, " ", label, " worst ", res.worst);
      CHECK(res.pass);
    };

    // Finite differences straddle the relu kink if a pre-activation sits
    // within h of zero; shift the bias until the margin is comfortable.
    for (int tries = 0; tries < 50; ++tries) {
      Tape probe(false);
      auto m = probe.add_rowwise(probe.matmul(a, b), bias);
      float closest = 1e9f;
      for (float v : m->data) closest = std::min(closest, std::abs(v));
      if (closest > 5e-3f) break;
      for (auto& v : bias->data) v += 0.011f;
    }
    check("matmul+bias+relu", [&](Tape& t) {
      return t.sum(t.relu(t.add_rowwise(t.matmul(a, b), bias)));
    });
    check("mul+sigmoid", [&](Tape& t) {
      return t.sum(t.sigmoid(t.mul(t.matmul(a, b), c)));
    });
    check("softmax+log+clamp", [&](Tape& t) {
      auto sm = t.softmax_rows(t.matmul(a, b));
      return t.sum(t.mul(c, t.log(t.clamp(sm, 1e-6, 1.0 - 1e-7))));
    });
    check("log1p+exp+affine", [&](Tape& t) {
      auto s = t.sigmoid(t.matmul(a, b));
      auto l1 = t.log1p(t.affine(s, -0.5, 0.0));
      return t.sum(t.mul(t.exp(t.scale(s, 0.3)), l1));
    });
    check("add+transpose+slice+concat+reshape", [&](Tape& t) {
      auto m = t.add(t.matmul(a, b), c);
      auto cat = t.concat_cols({m, t.transpose(t.slice_rows(t.transpose(m), 0, 2))});
      return t.sum(t.mul(t.reshape(cat, 5, 3), t.reshape(cat, 5, 3)));
    });
  }
}

TEST_CASE("sigmoid chain matches the hand-built derivative product") {
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed * 31);
    auto w = make_tensor(1, 1, std::vector<float>{static_cast<float>(rng.uniform(-2, 2))}, true);
    Tape tape;
    auto s1 = tape.sigmoid(w);
    auto s2 = tape.sigmoid(s1);
    auto s3 = tape.sigmoid(s2);
    tape.backward(tape.sum(s3));
    double expect = 1.0;
    for (const auto& s : {s1, s2, s3}) {
      double v = s->data[0];
      expect *= v * (1.0 - v);
    }
    CHECK(std::abs(static_cast<double>(w->grad[0]) - expect) < 1e-6);
  }
}

TEST_CASE("analytic spot checks: sigmoid(0) and scaled backward") {
  auto w = make_tensor(1, 1, std::vector<float>{0.0f}, true);
  Tape tape;
  auto s = tape.sigmoid(w);
  CHECK(s->data[0] == 0.5f);
  tape.backward(tape.scale(s, 2.0));
  CHECK(w->grad[0] == doctest::Approx(0.5).epsilon(1e-7));
}

TEST_CASE("sum backward distributes ones") {
  auto x = make_tensor(2, 3, {1, 2, 3, 4, 5, 6}, true);
  Tape tape;
  tape.backward(tape.sum(x));
  for (float g : x->grad) CHECK(g == 1.0f);
}

TEST_CASE("clamp gates gradient outside the window") {
  auto x = make_tensor(1, 3, {-2.0f, 0.5f, 2.0f}, true);
  Tape tape;
  tape.backward(tape.sum(tape.clamp(x, -1.0, 1.0)));
  CHECK(x->grad[0] == 0.0f);
  CHECK(x->grad[1] == 1.0f);
  CHECK(x->grad[2] == 0.0f);
}

TEST_CASE("identical runs are bitwise identical") {
  auto run = [](std::vector<float>& values, std::vector<float>& grads) {
    Rng rng(99);
    auto a = random_tensor(4, 4, rng, true);
    auto b = random_tensor(4, 4, rng, true);
    Tape tape;
    auto out = tape.softmax_rows(tape.matmul(tape.sigmoid(a), b));
    auto loss = tape.sum(tape.mul(out, out));
    tape.backward(loss);
    values = out->data;
    values.push_back(loss->data[0]);
    grads = a->grad;
    grads.insert(grads.end(), b->grad.begin(), b->grad.end());
  };
  std::vector<float> v1, g1, v2, g2;
  run(v1, g1);
  run(v2, g2);
  CHECK(v1 == v2);
  CHECK(g1 == g2);
}

TEST_CASE("non-recording tape detaches outputs") {
  auto x = make_tensor(1, 2, {1.0f, 2.0f}, true);
  Tape tape(false);
  auto y = tape.relu(x);
  CHECK_FALSE(y->requires_grad);
  CHECK(tape.size() == 0);
}
