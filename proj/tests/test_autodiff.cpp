#include "helpers.hpp"

using namespace mvtest;

namespace {

// Each case maps two parameters (a: r×c, b: c×r) to a scalar through one op.
struct OpCase {
  const char* name;
  std::function<Var(Var a, Var b, Tape&)> f;
};

std::vector<OpCase> op_cases() {
  auto w = [](Var v, Tape&) {  // fixed random weighting so d(sum)/dx is not constant
    std::mt19937_64 r(99);
    return ad::sum(ad::mul_const(v, random_tensor(v.rows(), v.cols(), r)));
  };
  return {
      {"matmul", [=](Var a, Var b, Tape& t) { return w(ad::matmul(a, b), t); }},
      {"add", [=](Var a, Var b, Tape& t) { return w(ad::add(a, ad::transpose(b)), t); }},
      {"sub", [=](Var a, Var b, Tape& t) { return w(ad::sub(a, ad::transpose(b)), t); }},
      {"mul", [=](Var a, Var b, Tape& t) { return w(ad::mul(a, ad::transpose(b)), t); }},
      {"add_row", [=](Var a, Var b, Tape& t) { return w(ad::add_row(a, ad::gather_rows(ad::transpose(b), {0})), t); }},
      {"scale_affine", [=](Var a, Var, Tape& t) { return w(ad::affine(ad::scale(a, -1.7), 0.3, 2.0), t); }},
      {"relu", [=](Var a, Var, Tape& t) { return w(ad::relu(a), t); }},
      {"sigmoid", [=](Var a, Var, Tape& t) { return w(ad::sigmoid(a), t); }},
      {"tanh", [=](Var a, Var, Tape& t) { return w(ad::tanh(a), t); }},
      {"log", [=](Var a, Var, Tape& t) { return w(ad::log(ad::affine(ad::mul(a, a), 1.0, 0.5)), t); }},
      {"sqrt", [=](Var a, Var, Tape& t) { return w(ad::sqrt(ad::affine(ad::mul(a, a), 1.0, 0.5)), t); }},
      {"clamp", [=](Var a, Var, Tape& t) { return w(ad::clamp(a, -0.5, 0.5), t); }},
      {"mean", [=](Var a, Var, Tape&) { return ad::mean(ad::mul(a, a)); }},
      {"mean_rows", [=](Var a, Var, Tape& t) { return w(ad::mean_rows(ad::mul(a, a)), t); }},
      {"gather_rows", [=](Var a, Var, Tape& t) { return w(ad::gather_rows(a, {1, 0, 1}), t); }},
      {"gather_cols", [=](Var a, Var, Tape& t) { return w(ad::gather_cols(a, {2, 0, 2}), t); }},
      {"concat", [=](Var a, Var b, Tape& t) { return w(ad::concat_cols({a, ad::transpose(b), a}), t); }},
      {"softmax", [=](Var a, Var, Tape& t) { return w(ad::softmax_rows(a), t); }},
      {"div_scalar", [=](Var a, Var b, Tape& t) {
         Var s = ad::affine(ad::sum(ad::mul(b, b)), 1.0, 1.0);
         return w(ad::div_scalar(a, s), t);
       }},
      {"propagate", [=](Var a, Var, Tape& t) {
         std::mt19937_64 r(5);
         Graph g = random_graph(a.rows(), 1, r);
         return w(ad::propagate(normalized_adjacency_sparse(g.adjacency), a), t);
       }},
      {"cross_entropy", [=](Var a, Var, Tape&) { return ad::softmax_cross_entropy(ad::gather_rows(a, {0}), 2); }},
  };
}

}  // namespace

TEST(Autodiff, EveryOpMatchesFiniteDifferences) {
  for (const OpCase& c : op_cases()) {
    for (int seed = 0; seed < 20; ++seed) {
      std::mt19937_64 rng(static_cast<unsigned long>(seed) * 7919 + 1);
      Parameter a("a", random_tensor(4, 3, rng));
      Parameter b("b", random_tensor(3, 4, rng));
      const GradCheck r = check_gradients({&a, &b}, [&](Tape& t) { return c.f(t.parameter(a), t.parameter(b), t); });
      EXPECT_LT(r.worst, 1e-4) << c.name << " seed " << seed << " at " << r.where;
    }
  }
}

TEST(Autodiff, CrossEntropyOfUniformLogitsIsLogC) {
  Tape t;
  Var z = t.constant(Tensor(1, 5, 0.3));
  EXPECT_NEAR(ad::softmax_cross_entropy(z, 1).value().item(), std::log(5.0), 1e-12);
}

TEST(Autodiff, ConstantsAndMasksReceiveNoGradient) {
  Parameter p("p", Tensor::from_rows({{1.0, 2.0}, {3.0, 4.0}}));
  Tape t;
  Var c = t.constant(Tensor::from_rows({{5.0, 6.0}, {7.0, 8.0}}));
  Var x = t.parameter(p);
  const std::vector<double> mask = {1.0, 0.0};
  Var y = ad::sum(ad::mask_rows(ad::mul(x, c), mask));
  EXPECT_FALSE(t.needs_grad(c.id()));
  EXPECT_TRUE(t.needs_grad(y.id()));
  t.backward(y);
  EXPECT_EQ(t.grad(c), Tensor(2, 2));
  EXPECT_EQ(p.grad, Tensor::from_rows({{5.0, 6.0}, {0.0, 0.0}}));
}

TEST(Autodiff, ConstantOnlyGraphNeedsNoGradient) {
  Tape t;
  Var y = ad::sum(ad::relu(t.constant(Tensor(2, 2, 1.0))));
  EXPECT_FALSE(t.needs_grad(y.id()));
  t.backward(y);
  EXPECT_EQ(t.last_backward_visits(), 0u);
}

TEST(Autodiff, DiamondAccumulatesBothPaths) {
  Parameter p("p", Tensor::scalar(3.0));
  Tape t;
  Var x = t.parameter(p);
  Var y = ad::add(ad::mul(x, x), ad::scale(x, 2.0));  // x² + 2x
  t.backward(y);
  EXPECT_DOUBLE_EQ(p.grad.item(), 8.0);
  EXPECT_EQ(t.last_backward_visits(), 4u);  // add, mul, scale and x, each once
}

TEST(Autodiff, ParameterGradientsAccumulateAcrossTapes) {
  Parameter p("p", Tensor::scalar(2.0));
  for (int i = 0; i < 3; ++i) {
    Tape t;
    Var x = t.parameter(p);
    t.backward(ad::mul(x, x));
  }
  EXPECT_DOUBLE_EQ(p.grad.item(), 12.0);
  p.zero_grad();
  EXPECT_DOUBLE_EQ(p.grad.item(), 0.0);
}

TEST(Autodiff, ContractViolations) {
  Tape t, u;
  Var a = t.constant(Tensor(2, 2));
  Var b = u.constant(Tensor(2, 2));
  EXPECT_THROW(ad::add(a, b), ContractError);
  EXPECT_THROW(t.backward(a), ContractError);
  EXPECT_THROW(t.backward(ad::sum(b)), ContractError);
  EXPECT_THROW(ad::add(a, t.constant(Tensor(2, 3))), ShapeError);
  EXPECT_THROW(ad::matmul(a, t.constant(Tensor(3, 1))), ShapeError);
  EXPECT_THROW(ad::softmax_cross_entropy(t.constant(Tensor(1, 3)), 3), ContractError);
  const std::vector<double> short_mask = {1.0};
  EXPECT_THROW(ad::mask_rows(a, short_mask), ShapeError);
}

TEST(Autodiff, ReluSubgradientAtZeroIsZero) {
  Parameter p("p", Tensor::from_rows({{0.0, 1.0, -1.0}}));
  Tape t;
  t.backward(ad::sum(ad::relu(t.parameter(p))));
  EXPECT_EQ(p.grad, Tensor::from_rows({{0.0, 1.0, 0.0}}));
}

TEST(Autodiff, ClampPassesGradientOnlyInside) {
  Parameter p("p", Tensor::from_rows({{-1.0, 0.25, 2.0}}));
  Tape t;
  t.backward(ad::sum(ad::clamp(t.parameter(p), 0.0, 1.0)));
  EXPECT_EQ(p.grad, Tensor::from_rows({{0.0, 1.0, 0.0}}));
}

TEST(Autodiff, SoftmaxRowsSumToOne) {
  std::mt19937_64 rng(3);
  Tape t;
  Var s = ad::softmax_rows(t.constant(random_tensor(5, 4, rng, 30.0)));
  for (std::size_t i = 0; i < 5; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < 4; ++j) sum += s.value()(i, j);
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}
