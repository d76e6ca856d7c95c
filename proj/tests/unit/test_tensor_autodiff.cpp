#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "../support/gradcheck.hpp"
#include "ldon/autodiff.hpp"
#include "ldon/error.hpp"
#include "ldon/nn.hpp"
#include "ldon/optim.hpp"
#include "ldon/rng.hpp"

using namespace ldon;
using ldon::testing::gradcheck;

namespace {

Tensor random_tensor(Shape shape, CounterRng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(shape_size(shape));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return Tensor(std::move(shape), std::move(v));
}

}  // namespace

TEST(Tensor, RejectsBadShapes) {
  EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5)), ShapeError);
  EXPECT_THROW(Tensor({2, 0}, {}), ShapeError);
  EXPECT_THROW(Tensor::zeros({1, 1, 1, 1, 1}), ShapeError);
  EXPECT_EQ(Tensor::zeros({2, 3, 4, 5}).size(), 120u);
  EXPECT_EQ(Tensor().rank(), 0u);
  EXPECT_EQ(Tensor().size(), 1u);
}

TEST(Tensor, CopiesShareStorageAndReshapeKeepsData) {
  Tensor a({2, 2}, {1, 2, 3, 4});
  Tensor b = a.reshaped({4});
  EXPECT_EQ(b.shape(), Shape{4});
  EXPECT_EQ(b.data().data(), a.data().data());
  EXPECT_THROW(a.reshaped({3}), ShapeError);
}

TEST(ForwardOp, MatmulIdentity) {
  Tape tape;
  CounterRng rng(1);
  Tensor a = random_tensor({3, 3}, rng);
  Tensor eye({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  Var out = matmul(tape.constant(eye), tape.constant(a));
  for (std::size_t i = 0; i < 9; ++i) EXPECT_EQ(out.value()[i], a[i]);
}

TEST(ForwardOp, SineOfZero) {
  Tape tape;
  Var out = sine(tape.constant(Tensor::zeros({2, 3})));
  for (double v : out.value().data()) EXPECT_EQ(v, 0.0);
}

TEST(ForwardOp, ConvConstantWindowSums) {
  Tape tape;
  Var out = conv2d(tape.constant(Tensor::full({1, 1, 4, 4}, 1.0)), tape.constant(Tensor::full({1, 1, 3, 3}, 1.0)));
  ASSERT_EQ(out.shape(), (Shape{1, 1, 4, 4}));
  const auto v = out.value().data();
  EXPECT_DOUBLE_EQ(v[0], 4.0);            // corner
  EXPECT_DOUBLE_EQ(v[1], 6.0);            // edge
  EXPECT_DOUBLE_EQ(v[1 * 4 + 1], 9.0);    // interior
  EXPECT_DOUBLE_EQ(v[2 * 4 + 2], 9.0);
  EXPECT_DOUBLE_EQ(v[3 * 4 + 3], 4.0);
}

TEST(ForwardOp, DeltaKernelIsIdentity) {
  CounterRng rng(2);
  Tensor x = random_tensor({2, 3, 5, 4}, rng);
  std::vector<double> k(3 * 3 * 3 * 3, 0.0);
  for (std::size_t c = 0; c < 3; ++c) k[((c * 3 + c) * 3 + 1) * 3 + 1] = 1.0;
  Tape tape;
  Var out = conv2d(tape.constant(x), tape.constant(Tensor({3, 3, 3, 3}, k)));
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(out.value()[i], x[i]);
}

TEST(ForwardOp, ShapeErrorNamesKindAndShapes) {
  Tape tape;
  Var a = tape.constant(Tensor::zeros({2, 3}));
  Var b = tape.constant(Tensor::zeros({2, 3}));
  try {
    matmul(a, b);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("matmul"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[2, 3]"), std::string::npos) << msg;
  }
  EXPECT_THROW(add(a, tape.constant(Tensor::zeros({4}))), ShapeError);
  EXPECT_THROW(conv2d(tape.constant(Tensor::zeros({1, 2, 4, 4})), tape.constant(Tensor::zeros({1, 3, 3, 3}))),
               ShapeError);
  EXPECT_THROW(conv2d(tape.constant(Tensor::zeros({1, 1, 4, 4})), tape.constant(Tensor::zeros({1, 1, 2, 2}))),
               ShapeError);
}

TEST(ForwardOp, NonFiniteInputRejected) {
  Tape tape;
  EXPECT_THROW(tape.variable(Tensor({2}, {1.0, std::numeric_limits<double>::quiet_NaN()})), NumericError);
  EXPECT_THROW(tape.constant(Tensor({1}, {std::numeric_limits<double>::infinity()})), NumericError);
}

TEST(ForwardOp, DispatcherMatchesTypedFunctions) {
  CounterRng rng(3);
  Tape tape;
  Var a = tape.constant(random_tensor({2, 3}, rng));
  Var b = tape.constant(random_tensor({3}, rng));
  Var m = tape.constant(random_tensor({3, 2}, rng));
  const std::vector<std::pair<Var, Var>> cases{
      {forward_op(OpKind::add, std::vector<Var>{a, b}), add(a, b)},
      {forward_op(OpKind::sub, std::vector<Var>{a, b}), sub(a, b)},
      {forward_op(OpKind::mul, std::vector<Var>{a, b}), mul(a, b)},
      {forward_op(OpKind::matmul, std::vector<Var>{a, m}), matmul(a, m)},
      {forward_op(OpKind::relu, std::vector<Var>{a}), relu(a)},
      {forward_op(OpKind::sigmoid, std::vector<Var>{a}), sigmoid(a)},
      {forward_op(OpKind::sine, std::vector<Var>{a}), sine(a)},
      {forward_op(OpKind::reduce_mean, std::vector<Var>{a}), reduce_mean(a)},
      {forward_op(OpKind::reshape, std::vector<Var>{a}, {Shape{3, 2}, {}}), reshape(a, {3, 2})},
      {forward_op(OpKind::permute, std::vector<Var>{a}, {{}, {1, 0}}), permute(a, {1, 0})},
  };
  for (const auto& [x, y] : cases) {
    ASSERT_EQ(x.shape(), y.shape());
    for (std::size_t i = 0; i < x.value().size(); ++i) EXPECT_EQ(x.value()[i], y.value()[i]);
  }
}

TEST(Backward, LinearCase) {
  Tape tape;
  Var w = tape.variable(Tensor({1}, {2.0}));
  Var x = tape.constant(Tensor({1}, {3.0}));
  Var loss = reduce_mean(mul(w, x));
  auto g = tape.backward(loss);
  EXPECT_DOUBLE_EQ(g[w][0], 3.0);
}

TEST(Backward, SigmoidAtZero) {
  Tape tape;
  Var x = tape.variable(Tensor::scalar(0.0));
  auto g = tape.backward(sigmoid(x));
  EXPECT_DOUBLE_EQ(g[x].item(), 0.25);
}

TEST(Backward, RejectsNonScalarLoss) {
  Tape tape;
  Var x = tape.variable(Tensor::zeros({2}));
  EXPECT_THROW(tape.backward(sine(x)), ShapeError);
}

TEST(Backward, UnreachedNodesGetZeroGradients) {
  Tape tape;
  Var x = tape.variable(Tensor({2}, {1.0, 2.0}));
  Var unused = tape.variable(Tensor({3}, {1.0, 2.0, 3.0}));
  Var side = sine(unused);
  auto g = tape.backward(reduce_mean(x));
  EXPECT_FALSE(g.reached(unused.id()));
  const Tensor zero = g[unused];
  for (double v : zero.data()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(g[side].shape(), Shape{3});
  EXPECT_EQ(g[x].shape(), Shape{2});
}

TEST(Backward, GradientBuffersMatchShapes) {
  CounterRng rng(4);
  Tape tape;
  Var x = tape.variable(random_tensor({2, 3}, rng));
  Var w = tape.variable(random_tensor({3, 4}, rng));
  Var h = sine(matmul(x, w));
  Var loss = reduce_mean(h);
  auto g = tape.backward(loss);
  for (std::size_t id = 0; id <= loss.id(); ++id) {
    if (g.reached(id)) EXPECT_EQ(g.at(id).shape(), tape.value(id).shape());
  }
}

TEST(Backward, TwoLayerSineNetworkMatchesFiniteDifferences) {
  CounterRng rng(5);
  std::vector<Tensor> inputs{random_tensor({4, 5}, rng), random_tensor({5, 6}, rng), random_tensor({6}, rng),
                             random_tensor({6, 2}, rng), random_tensor({2}, rng)};
  auto r = gradcheck(inputs, [](Tape&, const std::vector<Var>& v) {
    Var h = sine(dense(v[0], v[1], v[2]));
    Var out = sine(dense(h, v[3], v[4]));
    return reduce_mean(mul(out, out));
  });
  EXPECT_GT(r.checked, 50u);
  EXPECT_LT(r.max_rel_error, 1e-4);
}

struct OpCase {
  const char* name;
  std::vector<Shape> shapes;
  ldon::testing::LossBuilder build;
};

class GradcheckPerOp : public ::testing::TestWithParam<int> {};

const std::vector<OpCase>& op_cases() {
  static const std::vector<OpCase> cases{
      {"add_broadcast", {{3, 4}, {4}}, [](Tape&, const std::vector<Var>& v) { return reduce_mean(sine(add(v[0], v[1]))); }},
      {"sub_scalar", {{3, 2}, {}}, [](Tape&, const std::vector<Var>& v) { return reduce_mean(sine(sub(v[0], v[1]))); }},
      {"mul", {{2, 3}, {2, 3}}, [](Tape&, const std::vector<Var>& v) { return reduce_mean(mul(v[0], v[1])); }},
      {"matmul", {{3, 4}, {4, 2}}, [](Tape&, const std::vector<Var>& v) { return reduce_mean(sine(matmul(v[0], v[1]))); }},
      {"conv2d_bias",
       {{2, 2, 5, 4}, {3, 2, 3, 3}, {3}},
       [](Tape&, const std::vector<Var>& v) { return reduce_mean(sine(conv2d(v[0], v[1], v[2]))); }},
      {"conv2d_pointwise",
       {{2, 3, 4, 4}, {2, 3, 1, 1}},
       [](Tape&, const std::vector<Var>& v) { return reduce_mean(sine(conv2d(v[0], v[1]))); }},
      {"reshape", {{2, 6}}, [](Tape&, const std::vector<Var>& v) { return reduce_mean(sine(reshape(v[0], {3, 4}))); }},
      {"relu", {{4, 3}}, [](Tape&, const std::vector<Var>& v) { return reduce_mean(mul(relu(v[0]), v[0])); }},
      {"sigmoid", {{4, 3}}, [](Tape&, const std::vector<Var>& v) { return reduce_mean(sigmoid(v[0])); }},
      {"sine", {{4, 3}}, [](Tape&, const std::vector<Var>& v) { return reduce_mean(sine(v[0])); }},
      {"permute",
       {{2, 3, 4}, {4, 2, 3}},
       [](Tape&, const std::vector<Var>& v) { return reduce_mean(mul(permute(v[0], {2, 0, 1}), v[1])); }},
      {"channel_affine",
       {{2, 3, 2, 2}},
       [](Tape&, const std::vector<Var>& v) {
         const std::vector<double> s{0.5, -1.0, 2.0}, b{0.1, 0.2, 0.3};
         return reduce_mean(sine(channel_affine(v[0], s, b)));
       }},
  };
  return cases;
}

TEST_P(GradcheckPerOp, MatchesCentralDifferences) {
  const auto& c = op_cases()[static_cast<std::size_t>(GetParam())];
  CounterRng rng(100 + static_cast<std::uint64_t>(GetParam()));
  std::vector<Tensor> inputs;
  for (const auto& s : c.shapes) inputs.push_back(random_tensor(s, rng));
  auto r = gradcheck(inputs, c.build);
  EXPECT_GT(r.checked, 0u) << c.name;
  EXPECT_LT(r.max_rel_error, 1e-4) << c.name;
}

INSTANTIATE_TEST_SUITE_P(AllOps, GradcheckPerOp, ::testing::Range(0, 12));

TEST(Backward, Linearity) {
  CounterRng rng(6);
  const Tensor x0 = random_tensor({3, 4}, rng);
  const double a = 0.7, b = -1.3;
  auto grad_of = [&](int which) {
    Tape tape;
    Var x = tape.variable(x0);
    Var l1 = reduce_mean(sine(x));
    Var l2 = reduce_mean(mul(x, x));
    Var loss = which == 1 ? l1 : which == 2 ? l2 : add(scale(l1, a), scale(l2, b));
    return tape.backward(loss)[x];
  };
  const Tensor g1 = grad_of(1), g2 = grad_of(2), g = grad_of(0);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(g[i], a * g1[i] + b * g2[i], 1e-12);
}

TEST(Backward, Deterministic) {
  auto run = [] {
    CounterRng rng(7);
    Tape tape;
    Var x = tape.variable(random_tensor({4, 4}, rng));
    Var w = tape.variable(random_tensor({4, 3}, rng));
    Var loss = reduce_mean(sigmoid(matmul(x, w)));
    auto g = tape.backward(loss);
    std::vector<double> out{loss.value().item()};
    const Tensor gw = g[w];
    for (double v : gw.data()) out.push_back(v);
    return out;
  };
  EXPECT_EQ(run(), run());
}

TEST(Optimizer, ZeroGradientLeavesParamsAndAdvancesStep) {
  std::vector<Parameter> params{{"w", Tensor({2}, {1.5, -2.0})}};
  OptimizerState st;
  optimizer_step(params, {{"w", Tensor::zeros({2})}}, st);
  EXPECT_EQ(params[0].value[0], 1.5);
  EXPECT_EQ(params[0].value[1], -2.0);
  EXPECT_EQ(st.step, 1);
  optimizer_step(params, {{"w", Tensor::zeros({2})}}, st);
  EXPECT_EQ(st.step, 2);
}

TEST(Optimizer, FirstStepMovesByLearningRate) {
  for (double g : {0.37, -5.0}) {
    std::vector<Parameter> params{{"w", Tensor::scalar(1.0)}};
    OptimizerState st;
    st.config.learning_rate = 1e-3;
    optimizer_step(params, {{"w", Tensor::scalar(g)}}, st);
    EXPECT_NEAR(params[0].value.item(), 1.0 - 1e-3 * (g > 0 ? 1.0 : -1.0), 1e-9);
  }
}

TEST(Optimizer, IdenticalParamsGetIdenticalUpdates) {
  std::vector<Parameter> params{{"a", Tensor({3}, {0.1, 0.2, 0.3})}, {"b", Tensor({3}, {0.1, 0.2, 0.3})}};
  const Tensor g({3}, {1.0, -2.0, 0.5});
  OptimizerState st;
  for (int i = 0; i < 5; ++i) optimizer_step(params, {{"a", g}, {"b", g}}, st);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(params[0].value[i], params[1].value[i]);
}

TEST(Optimizer, MissingGradientNamesParameter) {
  std::vector<Parameter> params{{"encoder.w", Tensor::zeros({2})}};
  OptimizerState st;
  try {
    optimizer_step(params, {}, st);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("encoder.w"), std::string::npos);
  }
  EXPECT_EQ(st.step, 0);
  EXPECT_THROW(optimizer_step(params, {{"encoder.w", Tensor::zeros({3})}}, st), ShapeError);
}

TEST(Optimizer, MomentsMatchParameterShapes) {
  std::vector<Parameter> params{{"w", Tensor::zeros({2, 3})}};
  OptimizerState st;
  optimizer_step(params, {{"w", Tensor::full({2, 3}, 1.0)}}, st);
  EXPECT_EQ(st.first_moment.at("w").size(), 6u);
  EXPECT_EQ(st.second_moment.at("w").size(), 6u);
}

TEST(Optimizer, ReducesQuadraticLoss) {
  ParamStore store;
  store.add("x", Tensor({3}, {2.0, -1.0, 0.5}));
  OptimizerState st;
  st.config.learning_rate = 0.05;
  double first = 0.0, last = 0.0;
  for (int i = 0; i < 200; ++i) {
    last = train_step(store, st, [](Tape&, const BoundParams& p) { return reduce_mean(mul(p["x"], p["x"])); });
    if (i == 0) first = last;
  }
  EXPECT_LT(last, 1e-3 * first);
}

TEST(Nn, GlorotBoundsAndDeterminism) {
  CounterRng a(9), b(9);
  const Tensor w = glorot_uniform({30, 20}, 30, 20, a);
  const double limit = std::sqrt(6.0 / 50.0);
  for (double v : w.data()) {
    EXPECT_LE(std::abs(v), limit);
  }
  const Tensor w2 = glorot_uniform({30, 20}, 30, 20, b);
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_EQ(w[i], w2[i]);
}

TEST(Nn, ParamStoreRejectsDuplicatesAndShapeChanges) {
  ParamStore s;
  s.add("w", Tensor::zeros({2}));
  EXPECT_THROW(s.add("w", Tensor::zeros({2})), ShapeError);
  EXPECT_THROW(s.set("w", Tensor::zeros({3})), ShapeError);
  EXPECT_THROW(s.get("missing"), ShapeError);
  EXPECT_EQ(s.scalar_count(), 2u);
}

TEST(Nn, TrainStepRejectsOverflowingLoss) {
  ParamStore store;
  store.add("x", Tensor::scalar(1.0));
  OptimizerState st;
  EXPECT_THROW(train_step(store, st,
                          [](Tape& tape, const BoundParams& p) {
                            Var big = mul(p["x"], tape.constant(Tensor::scalar(std::numeric_limits<double>::max())));
                            return mul(big, big);
                          }),
               NumericError);
}
