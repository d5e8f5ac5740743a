#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "surfr/rng.hpp"
#include "surfr/tape.hpp"
#include "surfr/tensor.hpp"

namespace surfr {

/// Callback used to enumerate learnable parameters (and, separately,
/// non-learnable buffers such as running statistics) in a stable order for
/// the optimizer and checkpoints.
using ParamVisitor = std::function<void(const std::string&, Parameter&)>;
using BufferVisitor = std::function<void(const std::string&, Tensor&)>;

struct BatchNormState {
  Parameter gamma, beta;  // [F]
  Tensor running_mean, running_var;
  double momentum = 0.1;
  double eps = 1e-5;

  BatchNormState() = default;
  explicit BatchNormState(int features) {
    gamma = Parameter(Tensor::full({features}, 1.0));
    beta = Parameter(Tensor::zeros({features}));
    running_mean = Tensor::zeros({features});
    running_var = Tensor::full({features}, 1.0);
  }

  void visit_params(const std::string& prefix, const ParamVisitor& fn) {
    fn(prefix + ".gamma", gamma);
    fn(prefix + ".beta", beta);
  }
  void visit_buffers(const std::string& prefix, const BufferVisitor& fn) {
    fn(prefix + ".running_mean", running_mean);
    fn(prefix + ".running_var", running_var);
  }
};

// y = x * W + b with W stored [in, out].
struct Linear {
  Parameter weight;
  Parameter bias;

  Linear() = default;
  Linear(int in, int out, Rng& rng) {
    // U(+-1/sqrt(fan_in)) for both weight and bias.
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Tensor w({in, out});
    for (double& v : w.data) v = rng.uniform(-bound, bound);
    Tensor b({out});
    for (double& v : b.data) v = rng.uniform(-bound, bound);
    weight = Parameter(std::move(w));
    bias = Parameter(std::move(b));
  }

  int in_features() const { return weight.value.shape[0]; }
  int out_features() const { return weight.value.shape[1]; }

  Tid forward(Tape& tape, Tid x) {
    return tape.add_bias(tape.matmul(x, tape.parameter(weight)),
                         tape.parameter(bias));
  }

  void visit_params(const std::string& prefix, const ParamVisitor& fn) {
    fn(prefix + ".weight", weight);
    fn(prefix + ".bias", bias);
  }
};

/// Stack of Linear layers; hidden layers get BatchNorm + ReLU, the output
/// layer stays linear.
struct Mlp {
  std::vector<Linear> layers;
  std::vector<BatchNormState> norms;  // one per hidden layer

  Mlp() = default;
  Mlp(const std::vector<int>& widths, Rng& rng) {
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
      layers.emplace_back(widths[i], widths[i + 1], rng);
      if (i + 2 < widths.size()) norms.emplace_back(widths[i + 1]);
    }
  }

  Tid forward(Tape& tape, Tid x, bool training) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      x = layers[i].forward(tape, x);
      if (i < norms.size()) {
        x = tape.batch_norm(x, norms[i], training);
        x = tape.relu(x);
      }
    }
    return x;
  }

  void visit_params(const std::string& prefix, const ParamVisitor& fn) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      layers[i].visit_params(prefix + ".l" + std::to_string(i), fn);
    }
    for (std::size_t i = 0; i < norms.size(); ++i) {
      norms[i].visit_params(prefix + ".bn" + std::to_string(i), fn);
    }
  }
  void visit_buffers(const std::string& prefix, const BufferVisitor& fn) {
    for (std::size_t i = 0; i < norms.size(); ++i) {
      norms[i].visit_buffers(prefix + ".bn" + std::to_string(i), fn);
    }
  }
};

inline Parameter xavier_uniform(int in, int out, Rng& rng) {
  const double bound = std::sqrt(6.0 / (in + out));
  Tensor w({in, out});
  for (double& v : w.data) v = rng.uniform(-bound, bound);
  return Parameter(std::move(w));
}

}  // namespace surfr
