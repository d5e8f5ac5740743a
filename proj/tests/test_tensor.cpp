#include <doctest.h>

#include <array>
#include <cstring>
#include <vector>

#include "surfr/nn.hpp"
#include "surfr/rng.hpp"
#include "surfr/tape.hpp"
#include "surfr/tensor.hpp"

using namespace surfr;

namespace {

Parameter rand_param(std::vector<int> shape, Rng& rng, double lo = -1.0,
                     double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data) v = rng.uniform(lo, hi);
  return Parameter(std::move(t));
}

// Random values bounded away from zero, for ops with kinks.
Parameter rand_param_off_zero(std::vector<int> shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.data) {
    const double m = rng.uniform(0.2, 1.0);
    v = rng.uniform() < 0.5 ? -m : m;
  }
  return Parameter(std::move(t));
}

// Runs forward+backward once, then exhaustive central differences.
double fd_check(std::vector<std::pair<std::string, Parameter*>> params,
                const std::function<Tid(Tape&)>& build) {
  for (auto& [_, p] : params) p->zero_grad();
  Tape tape;
  Tid loss = build(tape);
  tape.backward(loss);
  auto forward_loss = [&]() {
    Tape t2;
    return t2.value(build(t2)).at(0);
  };
  const auto report = gradient_check(forward_loss, params, 1e-4, 0, 99);
  return report.max_rel_err;
}

}  // namespace

TEST_CASE("tanh at zero: value 0, derivative 1") {
  Parameter w(Tensor::scalar(0.0));
  w.zero_grad();
  Tape tape;
  Tid y = tape.tanh(tape.parameter(w));
  CHECK(tape.value(y).at(0) == 0.0);
  tape.backward(tape.sum_all(y));
  CHECK(w.grad.at(0) == doctest::Approx(1.0));
}

TEST_CASE("backward: sum of weights gives all-ones gradient") {
  Rng rng(1);
  Parameter w = rand_param({4, 5}, rng);
  w.zero_grad();
  Tape tape;
  tape.backward(tape.sum_all(tape.parameter(w)));
  for (double g : w.grad.data) CHECK(g == 1.0);
}

TEST_CASE("backward: loss scaled by zero gives zero gradient") {
  Rng rng(2);
  Parameter w = rand_param({6}, rng);
  w.zero_grad();
  Tape tape;
  Tid f = tape.tanh(tape.parameter(w));
  tape.backward(tape.scale_by_scalar(tape.sum_all(f), 0.0));
  for (double g : w.grad.data) CHECK(g == 0.0);
}

TEST_CASE("backward: rejects non-scalar loss") {
  Rng rng(3);
  Parameter w = rand_param({3}, rng);
  Tape tape;
  Tid y = tape.parameter(w);
  CHECK_THROWS(tape.backward(y));
}

TEST_CASE("shape mismatch reports both shapes") {
  Tape tape;
  Tid a = tape.constant(Tensor::zeros({2, 3}));
  Tid b = tape.constant(Tensor::zeros({4, 5}));
  try {
    tape.add(a, b);
    FAIL("expected throw");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2,3]") != std::string::npos);
    CHECK(msg.find("[4,5]") != std::string::npos);
  }
}

TEST_CASE("matmul gradient matches finite differences below 1e-6") {
  Rng rng(4);
  Parameter a = rand_param({8, 8}, rng);
  Parameter b = rand_param({8, 8}, rng);
  const double err = fd_check({{"a", &a}, {"b", &b}}, [&](Tape& t) {
    return t.mean_all(t.tanh(t.matmul(t.parameter(a), t.parameter(b))));
  });
  CHECK(err < 1e-6);
}

TEST_CASE("segment_max: single-member segment is the identity") {
  Rng rng(5);
  Parameter x = rand_param({1, 6}, rng);
  x.zero_grad();
  Tape tape;
  Tid y = tape.segment_max(tape.parameter(x), {0}, 1);
  for (int j = 0; j < 6; ++j) {
    CHECK(tape.value(y).at(0, j) == x.value.at(0, j));
  }
  tape.backward(tape.sum_all(y));
  for (double g : x.grad.data) CHECK(g == 1.0);  // routed unchanged
}

TEST_CASE("segment_max: empty segments give exact zero rows") {
  Tape tape;
  Tid x = tape.constant(Tensor({2, 3}, {5, -1, 2, 3, 4, -7}));
  Tid y = tape.segment_max(x, {2, 2}, 4);
  const Tensor& Y = tape.value(y);
  for (int j = 0; j < 3; ++j) {
    CHECK(Y.at(0, j) == 0.0);
    CHECK(Y.at(1, j) == 0.0);
    CHECK(Y.at(3, j) == 0.0);
  }
  CHECK(Y.at(2, 0) == 5.0);
  CHECK(Y.at(2, 1) == 4.0);
  CHECK(Y.at(2, 2) == 2.0);
}

TEST_CASE("segment_max: tie routes gradient to the lowest row index") {
  Parameter x(Tensor({3, 1}, {0.7, 0.7, 0.2}));
  x.zero_grad();
  Tape tape;
  Tid y = tape.segment_max(tape.parameter(x), {0, 0, 0}, 1);
  tape.backward(tape.sum_all(y));
  CHECK(x.grad.at(0) == 1.0);
  CHECK(x.grad.at(1) == 0.0);
  CHECK(x.grad.at(2) == 0.0);
}

TEST_CASE("elementwise and reduction ops match finite differences") {
  Rng rng(6);
  Parameter a = rand_param_off_zero({5, 7}, rng);
  Parameter b = rand_param({5, 7}, rng);
  Parameter bias = rand_param({7}, rng);

  CHECK(fd_check({{"a", &a}}, [&](Tape& t) {
          return t.mean_all(t.relu(t.parameter(a)));
        }) < 1e-6);
  CHECK(fd_check({{"a", &a}}, [&](Tape& t) {
          return t.mean_all(t.abs(t.parameter(a)));
        }) < 1e-6);
  CHECK(fd_check({{"a", &a}}, [&](Tape& t) {
          return t.mean_all(t.sigmoid(t.parameter(a)));
        }) < 1e-6);
  CHECK(fd_check({{"a", &a}, {"b", &b}}, [&](Tape& t) {
          return t.sum_all(t.tanh(t.sub(t.parameter(a), t.parameter(b))));
        }) < 1e-6);
  CHECK(fd_check({{"a", &a}, {"bias", &bias}}, [&](Tape& t) {
          return t.mean_all(t.tanh(t.add_bias(t.parameter(a),
                                              t.parameter(bias))));
        }) < 1e-6);
  CHECK(fd_check({{"a", &a}, {"b", &b}}, [&](Tape& t) {
          return t.mean_all(t.tanh(
              t.add(t.scale_by_scalar(t.parameter(a), 2.5), t.parameter(b))));
        }) < 1e-6);
}

TEST_CASE("softmax: rows sum to one and gradients match finite differences") {
  Rng rng(7);
  Parameter a = rand_param({4, 6}, rng, -3.0, 3.0);
  {
    Tape tape;
    Tid y = tape.softmax(tape.parameter(a), 1);
    for (int i = 0; i < 4; ++i) {
      double s = 0.0;
      for (int j = 0; j < 6; ++j) s += tape.value(y).at(i, j);
      CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  for (int axis : {0, 1}) {
    CHECK(fd_check({{"a", &a}}, [&, axis](Tape& t) {
            Tid y = t.softmax(t.parameter(a), axis);
            // weight rows so the loss is not constant under the simplex
            Tid w = t.constant(Tensor({4, 6}, {1,  2, -1, 0.5, 3, -2,  //
                                               2, -1, 4,  1,   0, 1,   //
                                               1,  1, 2,  -3,  2, 0,   //
                                               0,  2, 1,  1,   -1, 2}));
            return t.sum_all(t.rowdot(y, w));
          }) < 1e-6);
  }
  Parameter v = rand_param({5}, rng, -2.0, 2.0);
  CHECK(fd_check({{"v", &v}}, [&](Tape& t) {
          Tid y = t.softmax(t.parameter(v), 0);
          Tid w = t.constant(Tensor({5, 1}, {3, -1, 2, 0.5, -2}));
          return t.sum_all(t.weighted_sum(y, w));
        }) < 1e-6);
}

TEST_CASE("gather and combine ops match finite differences") {
  Rng rng(8);
  Parameter x = rand_param({6, 4}, rng);
  Parameter v = rand_param({9}, rng);
  Parameter coeffs = rand_param({7}, rng);

  CHECK(fd_check({{"x", &x}}, [&](Tape& t) {
          return t.mean_all(
              t.tanh(t.gather_rows(t.parameter(x), {3, 3, 0, 5})));
        }) < 1e-6);
  CHECK(fd_check({{"v", &v}}, [&](Tape& t) {
          return t.mean_all(t.tanh(t.gather_elements(t.parameter(v),
                                                     {0, 8, 8, 2})));
        }) < 1e-6);
  CHECK(fd_check({{"v", &v}}, [&](Tape& t) {
          return t.mean_all(t.tanh(t.slice_prefix(t.parameter(v), 4)));
        }) < 1e-6);
  CHECK(fd_check({{"x", &x}, {"coeffs", &coeffs}}, [&](Tape& t) {
          return t.mean_all(t.tanh(t.sparse_row_combine(
              t.parameter(x), t.parameter(coeffs), {0, 1, 2, 3, 4, 5, 0},
              {0, 0, 1, 1, 2, 2, 2}, 3)));
        }) < 1e-6);

  Parameter w = rand_param({6}, rng);
  CHECK(fd_check({{"x", &x}, {"w", &w}}, [&](Tape& t) {
          return t.mean_all(
              t.tanh(t.weighted_sum(t.parameter(w), t.parameter(x))));
        }) < 1e-6);

  Parameter h = rand_param({5, 3}, rng);
  Parameter mats = rand_param({2, 9}, rng);
  CHECK(fd_check({{"h", &h}, {"mats", &mats}}, [&](Tape& t) {
          return t.mean_all(t.tanh(t.rows_transform(
              t.parameter(h), t.parameter(mats), {0, 1, 0, 1, 1})));
        }) < 1e-6);
}

TEST_CASE("concat, stack and row ops match finite differences") {
  Rng rng(9);
  Parameter a = rand_param({3, 4}, rng);
  Parameter b = rand_param({2, 4}, rng);
  Parameter c = rand_param({3, 2}, rng);
  Parameter u = rand_param({5}, rng);
  Parameter w = rand_param({5}, rng);

  CHECK(fd_check({{"a", &a}, {"b", &b}}, [&](Tape& t) {
          const std::array<Tid, 2> parts{t.parameter(a), t.parameter(b)};
          return t.mean_all(t.tanh(t.concat_rows(parts)));
        }) < 1e-6);
  CHECK(fd_check({{"a", &a}, {"c", &c}}, [&](Tape& t) {
          const std::array<Tid, 2> parts{t.parameter(a), t.parameter(c)};
          return t.mean_all(t.tanh(t.concat_cols(parts)));
        }) < 1e-6);
  CHECK(fd_check({{"u", &u}, {"w", &w}}, [&](Tape& t) {
          const std::array<Tid, 2> parts{t.parameter(u), t.parameter(w)};
          return t.mean_all(t.tanh(t.concat_vec(parts)));
        }) < 1e-6);
  CHECK(fd_check({{"u", &u}, {"w", &w}}, [&](Tape& t) {
          const std::array<Tid, 2> cols{t.parameter(u), t.parameter(w)};
          return t.mean_all(t.tanh(t.stack_cols(cols)));
        }) < 1e-6);
  CHECK(fd_check({{"a", &a}}, [&](Tape& t) {
          return t.mean_all(t.tanh(t.column(t.parameter(a), 2)));
        }) < 1e-6);
  CHECK(fd_check({{"a", &a}, {"b", &b}}, [&](Tape& t) {
          Tid a2 = t.parameter(a);
          Tid rd = t.rowdot(a2, a2);
          return t.sum_all(t.tanh(rd));
        }) < 1e-6);
  Parameter scales = rand_param({3}, rng);
  CHECK(fd_check({{"a", &a}, {"scales", &scales}}, [&](Tape& t) {
          return t.mean_all(
              t.tanh(t.colscale(t.parameter(a), t.parameter(scales))));
        }) < 1e-6);
}

TEST_CASE("bce_with_logits matches finite differences and is nonnegative") {
  Rng rng(10);
  Parameter logits = rand_param({8}, rng, -3.0, 3.0);
  std::vector<double> targets;
  for (int i = 0; i < 8; ++i) targets.push_back(i % 2 == 0 ? 1.0 : 0.0);
  {
    Tape tape;
    Tid y = tape.bce_with_logits(tape.parameter(logits), targets);
    for (int i = 0; i < 8; ++i) CHECK(tape.value(y).at(i) >= 0.0);
  }
  CHECK(fd_check({{"l", &logits}}, [&](Tape& t) {
          return t.mean_all(t.bce_with_logits(t.parameter(logits), targets));
        }) < 1e-6);
}

TEST_CASE("batch_norm: train mode normalizes, running stats converge") {
  Rng rng(11);
  BatchNormState bn(3);
  Parameter x = rand_param({64, 3}, rng, -2.0, 4.0);
  Tape tape;
  Tid y = tape.batch_norm(tape.parameter(x), bn, /*training=*/true);
  const Tensor& Y = tape.value(y);
  for (int j = 0; j < 3; ++j) {
    double m = 0.0;
    for (int i = 0; i < 64; ++i) m += Y.at(i, j);
    CHECK(m / 64 == doctest::Approx(0.0).epsilon(1e-9));
  }
  // momentum 0.1 from a cold start: running mean moves 10% toward batch mean
  double batch_mean0 = 0.0;
  for (int i = 0; i < 64; ++i) batch_mean0 += x.value.at(i, 0);
  batch_mean0 /= 64;
  CHECK(bn.running_mean.at(0) == doctest::Approx(0.1 * batch_mean0));
}

TEST_CASE("batch_norm: eval mode is an affine function of the input") {
  Rng rng(12);
  BatchNormState bn(4);
  // push the running stats away from the defaults first
  for (int step = 0; step < 3; ++step) {
    Parameter x = rand_param({32, 4}, rng, -1.0, 3.0);
    Tape tape;
    tape.batch_norm(tape.parameter(x), bn, true);
  }
  Parameter x1 = rand_param({5, 4}, rng);
  Parameter x2 = rand_param({5, 4}, rng);
  auto eval = [&](const Tensor& in) {
    Tape tape(/*grad_enabled=*/false);
    Parameter p(in);
    return tape.value(tape.batch_norm(tape.parameter(p), bn, false));
  };
  const Tensor y1 = eval(x1.value);
  const Tensor y2 = eval(x2.value);
  Tensor mix = x1.value;
  for (std::size_t i = 0; i < mix.data.size(); ++i) {
    mix.data[i] = 0.3 * x1.value.data[i] + 0.7 * x2.value.data[i];
  }
  const Tensor ym = eval(mix);
  // affine => y(0.3 x1 + 0.7 x2) = 0.3 y(x1) + 0.7 y(x2)
  for (std::size_t i = 0; i < ym.data.size(); ++i) {
    CHECK(ym.data[i] ==
          doctest::Approx(0.3 * y1.data[i] + 0.7 * y2.data[i]).epsilon(1e-12));
  }
}

TEST_CASE("batch_norm and layer_norm gradients match finite differences") {
  Rng rng(13);
  BatchNormState bn(4);
  Parameter x = rand_param({12, 4}, rng, -2.0, 2.0);
  // scale/shift so gamma/beta gradients are nontrivial
  for (int j = 0; j < 4; ++j) bn.gamma.value.at(j) = 0.5 + 0.3 * j;

  // Running-stat updates during the fd sweeps are harmless: train mode
  // normalizes with batch statistics, eval mode never writes the buffers.
  CHECK(fd_check({{"x", &x}, {"g", &bn.gamma}, {"b", &bn.beta}},
                 [&](Tape& t) {
                   return t.mean_all(t.tanh(t.batch_norm(
                       t.parameter(x), bn, /*training=*/true)));
                 }) < 1e-5);
  CHECK(fd_check({{"x", &x}, {"g", &bn.gamma}, {"b", &bn.beta}},
                 [&](Tape& t) {
                   return t.mean_all(t.tanh(t.batch_norm(
                       t.parameter(x), bn, /*training=*/false)));
                 }) < 1e-6);

  Parameter gamma = rand_param({6}, rng, 0.5, 1.5);
  Parameter beta = rand_param({6}, rng, -0.5, 0.5);
  Parameter xl = rand_param({7, 6}, rng, -2.0, 2.0);
  CHECK(fd_check({{"x", &xl}, {"g", &gamma}, {"b", &beta}}, [&](Tape& t) {
          return t.mean_all(t.tanh(t.layer_norm(
              t.parameter(xl), t.parameter(gamma), t.parameter(beta))));
        }) < 1e-5);
}

TEST_CASE("gradient_check on a linear function is exact to machine noise") {
  Rng rng(14);
  Parameter w = rand_param({10}, rng);
  w.zero_grad();
  Tensor c(std::vector<int>{10});
  for (double& v : c.data) v = rng.uniform(-2, 2);
  auto build = [&](Tape& t) {
    return t.sum_all(t.colscale(
        t.stack_cols(std::array<Tid, 1>{t.parameter(w)}), t.constant(c)));
  };
  Tape tape;
  tape.backward(build(tape));
  auto forward = [&]() {
    Tape t2;
    return t2.value(build(t2)).at(0);
  };
  const auto report = gradient_check(forward, {{"w", &w}}, 1e-4);
  CHECK(report.max_rel_err < 1e-7);
}

TEST_CASE("determinism: identical forward passes are bit-identical") {
  Rng rng(15);
  Parameter a = rand_param({16, 8}, rng);
  Parameter b = rand_param({8, 8}, rng);
  auto run = [&]() {
    Tape t(/*grad_enabled=*/false);
    Tid y = t.tanh(t.matmul(t.parameter(a), t.parameter(b)));
    return t.value(y).data;
  };
  const auto y1 = run();
  const auto y2 = run();
  CHECK(std::memcmp(y1.data(), y2.data(), y1.size() * sizeof(double)) == 0);
}

TEST_CASE("mlp: hidden layers use batch norm and relu, output stays linear") {
  Rng rng(16);
  Mlp mlp({5, 8, 8, 2}, rng);
  CHECK(mlp.layers.size() == 3);
  CHECK(mlp.norms.size() == 2);
  Parameter x = rand_param({9, 5}, rng);
  Tape tape;
  Tid y = mlp.forward(tape, tape.parameter(x), /*training=*/true);
  CHECK(tape.value(y).rows() == 9);
  CHECK(tape.value(y).cols() == 2);
  // gradient through the whole stack
  std::vector<std::pair<std::string, Parameter*>> params{{"x", &x}};
  mlp.visit_params("mlp", [&](const std::string& n, Parameter& p) {
    params.emplace_back(n, &p);
  });
  for (auto& [_, p] : params) p->zero_grad();
  auto build = [&](Tape& t) {
    return t.mean_all(t.tanh(mlp.forward(t, t.parameter(x), true)));
  };
  Tape t0;
  t0.backward(build(t0));
  auto fwd = [&]() {
    Tape t2;
    return t2.value(build(t2)).at(0);
  };
  const auto report = gradient_check(fwd, params, 1e-4, 0, 3);
  CHECK(report.max_rel_err < 1e-5);
}
