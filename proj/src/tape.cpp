#include "surfr/tape.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "surfr/nn.hpp"
#include "surfr/rng.hpp"

namespace surfr {

namespace {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

ConstMatMap as_mat(const Tensor& t) {
  return ConstMatMap(t.data.data(), t.rows(), t.cols());
}
MatMap as_mat(Tensor& t) { return MatMap(t.data.data(), t.rows(), t.cols()); }

}  // namespace

void Tape::check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                a.shape_str() + " vs " + b.shape_str());
  }
}

Tid Tape::push(Tensor value, bool needs_grad, std::function<void(Tape&)> bw) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = grad_enabled_ && needs_grad;
  if (n.needs_grad) n.backward = std::move(bw);
  nodes_.push_back(std::move(n));
  return Tid{static_cast<int>(nodes_.size()) - 1};
}

Tensor& Tape::grad_buf(int id) {
  Node& n = nodes_[id];
  if (n.grad.data.empty()) n.grad = Tensor::zeros(n.value.shape);
  return n.grad;
}

namespace {
// Accumulate helper used by every backward closure.
inline void axpy(Tensor& dst, const Tensor& src, double c = 1.0) {
  for (std::size_t i = 0; i < src.data.size(); ++i) {
    dst.data[i] += c * src.data[i];
  }
}
}  // namespace

Tid Tape::constant(Tensor t) { return push(std::move(t), false, nullptr); }

Tid Tape::parameter(Parameter& p) {
  Parameter* pp = &p;
  Tid out = push(p.value, p.requires_grad, nullptr);
  if (node_needs_grad(out)) {
    const int self = out.id;
    nodes_[self].param = pp;
    nodes_[self].backward = [self, pp](Tape& tp) {
      axpy(pp->grad, tp.nodes_[self].grad);
    };
  }
  return out;
}

Tid Tape::matmul(Tid a, Tid b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (A.ndim() != 2 || B.ndim() != 2 || A.cols() != B.rows()) {
    throw std::invalid_argument("matmul: incompatible shapes " +
                                A.shape_str() + " vs " + B.shape_str());
  }
  Tensor C({A.rows(), B.cols()});
  as_mat(C).noalias() = as_mat(A) * as_mat(B);
  Tid out = push(std::move(C), node_needs_grad(a) || node_needs_grad(b),
                 nullptr);
  if (node_needs_grad(out)) {
    const int self = out.id, ia = a.id, ib = b.id;
    nodes_[self].backward = [self, ia, ib](Tape& tp) {
      const Tensor& g = tp.nodes_[self].grad;
      const Tensor& av = tp.nodes_[ia].value;
      const Tensor& bv = tp.nodes_[ib].value;
      if (tp.nodes_[ia].needs_grad) {
        as_mat(tp.grad_buf(ia)).noalias() += as_mat(g) * as_mat(bv).transpose();
      }
      if (tp.nodes_[ib].needs_grad) {
        as_mat(tp.grad_buf(ib)).noalias() += as_mat(av).transpose() * as_mat(g);
      }
    };
  }
  return out;
}

Tid Tape::add(Tid a, Tid b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  check_same_shape(A, B, "add");
  Tensor C(A.shape);
  for (std::size_t i = 0; i < C.data.size(); ++i) {
    C.data[i] = A.data[i] + B.data[i];
  }
  Tid out = push(std::move(C), node_needs_grad(a) || node_needs_grad(b),
                 nullptr);
  if (node_needs_grad(out)) {
    const int self = out.id, ia = a.id, ib = b.id;
    nodes_[self].backward = [self, ia, ib](Tape& tp) {
      const Tensor& g = tp.nodes_[self].grad;
      if (tp.nodes_[ia].needs_grad) axpy(tp.grad_buf(ia), g);
      if (tp.nodes_[ib].needs_grad) axpy(tp.grad_buf(ib), g);
    };
  }
  return out;
}

Tid Tape::sub(Tid a, Tid b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  check_same_shape(A, B, "sub");
  Tensor C(A.shape);
  for (std::size_t i = 0; i < C.data.size(); ++i) {
    C.data[i] = A.data[i] - B.data[i];
  }
  Tid out = push(std::move(C), node_needs_grad(a) || node_needs_grad(b),
                 nullptr);
  if (node_needs_grad(out)) {
    const int self = out.id, ia = a.id, ib = b.id;
    nodes_[self].backward = [self, ia, ib](Tape& tp) {
      const Tensor& g = tp.nodes_[self].grad;
      if (tp.nodes_[ia].needs_grad) axpy(tp.grad_buf(ia), g);
      if (tp.nodes_[ib].needs_grad) axpy(tp.grad_buf(ib), g, -1.0);
    };
  }
  return out;
}

Tid Tape::add_bias(Tid x, Tid bias) {
  const Tensor& X = value(x);
  const Tensor& B = value(bias);
  if (X.ndim() != 2 || B.ndim() != 1 || X.cols() != B.shape[0]) {
    throw std::invalid_argument("add_bias: shape mismatch " + X.shape_str() +
                                " vs " + B.shape_str());
  }
  Tensor C(X.shape);
  const int n = X.rows(), f = X.cols();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < f; ++j) C.at(i, j) = X.at(i, j) + B.at(j);
  }
  Tid out = push(std::move(C), node_needs_grad(x) || node_needs_grad(bias),
                 nullptr);
  if (node_needs_grad(out)) {
    const int self = out.id, ix = x.id, ib = bias.id;
    nodes_[self].backward = [self, ix, ib](Tape& tp) {
      const Tensor& g = tp.nodes_[self].grad;
      const int gn = g.rows(), gf = g.cols();
      if (tp.nodes_[ix].needs_grad) axpy(tp.grad_buf(ix), g);
      if (tp.nodes_[ib].needs_grad) {
        Tensor& db = tp.grad_buf(ib);
        for (int i = 0; i < gn; ++i) {
          for (int j = 0; j < gf; ++j) db.at(j) += g.at(i, j);
        }
      }
    };
  }
  return out;
}

Tid Tape::scale_by_scalar(Tid x, double c) {
  const Tensor& X = value(x);
  Tensor C(X.shape);
  for (std::size_t i = 0; i < C.data.size(); ++i) C.data[i] = c * X.data[i];
  Tid out = push(std::move(C), node_needs_grad(x), nullptr);
  if (node_needs_grad(out)) {
    const int self = out.id, ix = x.id;
    nodes_[self].backward = [self, ix, c](Tape& tp) {
      axpy(tp.grad_buf(ix), tp.nodes_[self].grad, c);
    };
  }
  return out;
}

Tid Tape::relu(Tid x) {
  const Tensor& X = value(x);
  Tensor Y(X.shape);
  for (std::size_t i = 0; i < Y.data.size(); ++i) {
    Y.data[i] = X.data[i] > 0.0 ? X.data[i] : 0.0;
  }
  Tid out = push(std::move(Y), node_needs_grad(x), nullptr);
  if (node_needs_grad(out)) {
    const int self = out.id, ix = x.id;
    nodes_[self].backward = [self, ix](Tape& tp) {
      const Tensor& g = tp.nodes_[self].grad;
      const Tensor& xv = tp.nodes_[ix].value;
      Tensor& dx = tp.grad_buf(ix);
      for (std::size_t i = 0; i < g.data.size(); ++i) {
        if (xv.data[i] > 0.0) dx.data[i] += g.data[i];
      }
    };
  }
  return out;
}

Tid Tape::tanh(Tid x) {
  const Tensor& X = value(x);
  Tensor Y(X.shape);
  for (std::size_t i = 0; i < Y.data.size(); ++i) {
    Y.data[i] = std::tanh(X.data[i]);
  }
  Tid out = push(std::move(Y), node_needs_grad(x), nullptr);
  if (node_needs_grad(out)) {
    const int self = out.id, ix = x.id;
    nodes_[self].backward = [self, ix](Tape& tp) {
      const Tensor& g = tp.nodes_[self].grad;
      const Tensor& y = tp.nodes_[self].value;
      Tensor& dx = tp.grad_buf(ix);
      for (std::size_t i = 0; i < g.data.size(); ++i) {
        dx.data[i] += g.data[i] * (1.0 - y.data[i] * y.data[i]);
      }
    };
  }
  return out;
}

Tid Tape::abs(Tid x) {
  const Tensor& X = value(x);
  Tensor Y(X.shape);
  for (std::size_t i = 0; i < Y.data.size(); ++i) {
    Y.data[i] = std::abs(X.data[i]);
  }
  Tid out = push(std::move(Y), node_needs_grad(x), nullptr);
  if (node_needs_grad(out)) {
    const int self = out.id, ix = x.id;
    nodes_[self].backward = [self, ix](Tape& tp) {
      const Tensor& g = tp.nodes_[self].grad;
      const Tensor& xv = tp.nodes_[ix].value;
      Tensor& dx = tp.grad_buf(ix);
      for (std::size_t i = 0; i < g.data.size(); ++i) {
        // subgradient 0 at the kink
        const double s = xv.data[i] > 0.0 ? 1.0 : (xv.data[i] < 0.0 ? -1.0 : 0.0);
        dx.data[i] += g.data[i] * s;
      }
    };
  }
  return out;
}

Tid Tape::sigmoid(Tid x) {
  const Tensor& X = value(x);
  Tensor Y(X.shape);
  for (std::size_t i = 0; i < Y.data.size(); ++i) {
    const double v = X.data[i];
    Y.data[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                         : std::exp(v) / (1.0 + std::exp(v));
  }
  Tid out = push(std::move(Y), node_needs_grad(x), nullptr);
  if (node_needs_grad(out)) {
    const int self = out.id, ix = x.id;
    nodes_[self].backward = [self, ix](Tape& tp) {
      const Tensor& g = tp.nodes_[self].grad;
      const Tensor& y = tp.nodes_[self].value;
      Tensor& dx = tp.grad_buf(ix);
      for (std::size_t i = 0; i < g.data.size(); ++i) {
        dx.data[i] += g.data[i] * y.data[i] * (1.0 - y.data[i]);
      }
    };
  }
  return out;
}

namespace {
// softmax of one contiguous strided slice
void softmax_slice(const double* x, double* y, int n, int stride) {
  double mx = x[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, x[i * stride]);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double e = std::exp(x[i * stride] - mx);
    y[i * stride] = e;
    sum += e;
  }
  for (int i = 0; i < n; ++i) y[i * stride] /= sum;
}
void softmax_slice_backward(const double* y, const double* g, double* dx,
                            int n, int stride) {
  double dot = 0.0;
  for (int i = 0; i < n; ++i) dot += y[i * stride] * g[i * stride];
  for (int i = 0; i < n; ++i) {
    dx[i * stride] += y[i * stride] * (g[i * stride] - dot);
  }
}
}  // namespace

Tid Tape::softmax(Tid x, int axis) {
  const Tensor& X = value(x);
  Tensor Y(X.shape);
  if (X.ndim() == 1) {
    if (axis != 0) throw std::invalid_argument("softmax: 1-D axis must be 0");
    softmax_slice(X.data.data(), Y.data.data(),
                  static_cast<int>(X.numel()), 1);
  } else if (X.ndim() == 2) {
    const int n = X.rows(), f = X.cols();
    if (axis == 1) {
      for (int i = 0; i < n; ++i) {
        softmax_slice(&X.data[std::size_t(i) * f], &Y.data[std::size_t(i) * f],
                      f, 1);
      }
    } else if (axis == 0) {
      for (int j = 0; j < f; ++j) {
        softmax_slice(&X.data[j], &Y.data[j], n, f);
      }
    } else {
      throw std::invalid_argument("softmax: axis out of range");
    }
  } else {
    throw std::invalid_argument("softmax: supports 1-D and 2-D only");
  }
  Tid out = push(std::move(Y), node_needs_grad(x), nullptr);
  if (node_needs_grad(out)) {
    const int self = out.id, ix = x.id;
    nodes_[self].backward = [self, ix, axis](Tape& tp) {
      const Tensor& g = tp.nodes_[self].grad;
      const Tensor& y = tp.nodes_[self].value;
      Tensor& dx = tp.grad_buf(ix);
      if (y.ndim() == 1) {
        softmax_slice_backward(y.data.data(), g.data.data(), dx.data.data(),
                               static_cast<int>(y.numel()), 1);
      } else {
        const int n = y.rows(), f = y.cols();
        if (axis == 1) {
          for (int i = 0; i < n; ++i) {
            softmax_slice_backward(&y.data[std::size_t(i) * f],
                                   &g.data[std::size_t(i) * f],
                                   &dx.data[std::size_t(i) * f], f, 1);
          }
        } else {
          for (int j = 0; j < f; ++j) {
            softmax_slice_backward(&y.data[j], &g.data[j], &dx.data[j], n, f);
          }
        }
      }
    };
  }
  return out;
}

Tid Tape::batch_norm(Tid x, BatchNormState& bn, bool training) {
  const Tensor& X = value(x);
  if (X.ndim() != 2 || X.cols() != bn.gamma.value.shape[0]) {
    throw std::invalid_argument("batch_norm: expected [N," +
                                bn.gamma.value.shape_str() + "] input, got " +
                                X.shape_str());
  }
  const int n = X.rows(), f = X.cols();
  Tid gamma = parameter(bn.gamma);
  Tid beta = parameter(bn.beta);

  auto xhat = std::make_shared<Tensor>(X.shape);
  auto inv_std = std::make_shared<Tensor>(std::vector<int>{f});
  Tensor Y(X.shape);

  if (training) {
    std::vector<double> mean(f, 0.0), var(f, 0.0);
    for (int j = 0; j < f; ++j) {
      double m = 0.0;
      for (int i = 0; i < n; ++i) m += X.at(i, j);
      m /= n;
      double v = 0.0;
      for (int i = 0; i < n; ++i) {
        const double d = X.at(i, j) - m;
        v += d * d;
      }
      v /= n;  // biased, used for normalization
      mean[j] = m;
      var[j] = v;
      inv_std->at(j) = 1.0 / std::sqrt(v + bn.eps);
    }
    // running buffers track the unbiased variance
    for (int j = 0; j < f; ++j) {
      const double unbiased = n > 1 ? var[j] * n / (n - 1) : var[j];
      bn.running_mean.at(j) =
          (1.0 - bn.momentum) * bn.running_mean.at(j) + bn.momentum * mean[j];
      bn.running_var.at(j) =
          (1.0 - bn.momentum) * bn.running_var.at(j) + bn.momentum * unbiased;
    }
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < f; ++j) {
        const double xh = (X.at(i, j) - mean[j]) * inv_std->at(j);
        xhat->at(i, j) = xh;
        Y.at(i, j) = bn.gamma.value.at(j) * xh + bn.beta.value.at(j);
      }
    }
  } else {
    for (int j = 0; j < f; ++j) {
      inv_std->at(j) = 1.0 / std::sqrt(bn.running_var.at(j) + bn.eps);
    }
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < f; ++j) {
        const double xh =
            (X.at(i, j) - bn.running_mean.at(j)) * inv_std->at(j);
        xhat->at(i, j) = xh;
        Y.at(i, j) = bn.gamma.value.at(j) * xh + bn.beta.value.at(j);
      }
    }
  }

  Tid out = push(std::move(Y), node_needs_grad(x) || node_needs_grad(gamma),
                 nullptr);
  if (node_needs_grad(out)) {
    const int self = out.id, ix = x.id, ig = gamma.id, ibta = beta.id;
    nodes_[self].backward = [self, ix, ig, ibta, xhat, inv_std, n, f,
                             training](Tape& tp) {
      const Tensor& g = tp.nodes_[self].grad;
      const Tensor& gamma_v = tp.nodes_[ig].value;
      if (tp.nodes_[ig].needs_grad) {
        Tensor& dgamma = tp.grad_buf(ig);
        Tensor& dbeta = tp.grad_buf(ibta);
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < f; ++j) {
            dgamma.at(j) += g.at(i, j) * xhat->at(i, j);
            dbeta.at(j) += g.at(i, j);
          }
        }
      }
      if (!tp.nodes_[ix].needs_grad) return;
      Tensor& dx = tp.grad_buf(ix);
      if (!training) {
        // eval mode is a per-element affine map
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < f; ++j) {
            dx.at(i, j) += g.at(i, j) * gamma_v.at(j) * inv_std->at(j);
          }
        }
        return;
      }
      for (int j = 0; j < f; ++j) {
        double sum_g = 0.0, sum_gx = 0.0;
        for (int i = 0; i < n; ++i) {
          sum_g += g.at(i, j);
          sum_gx += g.at(i, j) * xhat->at(i, j);
        }
        const double c = gamma_v.at(j) * inv_std->at(j) / n;
        for (int i = 0; i < n; ++i) {
          dx.at(i, j) +=
              c * (n * g.at(i, j) - sum_g - xhat->at(i, j) * sum_gx);
        }
      }
    };
  }
  return out;
}

Tid Tape::layer_norm(Tid x, Tid gamma, Tid beta, double eps) {
  const Tensor& X = value(x);
  const Tensor& G = value(gamma);
  if (X.ndim() != 2 || G.ndim() != 1 || X.cols() != G.shape[0]) {
    throw std::invalid_argument("layer_norm: shape mismatch " + X.shape_str() +
                                " vs " + G.shape_str());
  }
  const int n = X.rows(), f = X.cols();
  auto xhat = std::make_shared<Tensor>(X.shape);
  auto inv_std = std::make_shared<Tensor>(std::vector<int>{n});
  Tensor Y(X.shape);
  const Tensor& B = value(beta);
  for (int i = 0; i < n; ++i) {
    double m = 0.0;
    for (int j = 0; j < f; ++j) m += X.at(i, j);
    m /= f;
    double v = 0.0;
    for (int j = 0; j < f; ++j) {
      const double d = X.at(i, j) - m;
      v += d * d;
    }
    v /= f;
    const double is = 1.0 / std::sqrt(v + eps);
    inv_std->at(i) = is;
    for (int j = 0; j < f; ++j) {
      const double xh = (X.at(i, j) - m) * is;
      xhat->at(i, j) = xh;
      Y.at(i, j) = G.at(j) * xh + B.at(j);
    }
  }
  const bool ng =
      node_needs_grad(x) || node_needs_grad(gamma) || node_needs_grad(beta);
  Tid out = push(std::move(Y), ng, nullptr);
  if (node_needs_grad(out)) {
    const int self = out.id, ix = x.id, ig = gamma.id, ib = beta.id;
    nodes_[self].backward = [self, ix, ig, ib, xhat, inv_std, n, f](Tape& tp) {
      const Tensor& g = tp.nodes_[self].grad;
      const Tensor& gamma_v = tp.nodes_[ig].value;
      if (tp.nodes_[ig].needs_grad) {
        Tensor& dgamma = tp.grad_buf(ig);
        Tensor& dbeta = tp.grad_buf(ib);
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < f; ++j) {
            dgamma.at(j) += g.at(i, j) * xhat->at(i, j);
            dbeta.at(j) += g.at(i, j);
          }
        }
      }
      if (!tp.nodes_[ix].needs_grad) return;
      Tensor& dx = tp.grad_buf(ix);
      for (int i = 0; i < n; ++i) {
        double sum_h = 0.0, sum_hx = 0.0;
        for (int j = 0; j < f; ++j) {
          const double h = g.at(i, j) * gamma_v.at(j);
          sum_h += h;
          sum_hx += h * xhat->at(i, j);
        }
        const double is = inv_std->at(i);
        for (int j = 0; j < f; ++j) {
          const double h = g.at(i, j) * gamma_v.at(j);
          dx.at(i, j) +=
              is * (h - sum_h / f - xhat->at(i, j) * sum_hx / f);
        }
      }
    };
  }
  return out;
}

Tid Tape::segment_max(Tid x, const std::vector<int>& segment_ids,
                      int num_segments) {
  const Tensor& X = value(x);
  if (X.ndim() != 2 ||
      segment_ids.size() != static_cast<std::size_t>(X.rows())) {
    throw std::invalid_argument("segment_max: ids/rows mismatch");
  }
  const int n = X.rows(), f = X.cols();
  Tensor Y({num_segments, f});  // zero rows for empty segments
  auto argmax = std::make_shared<std::vector<int>>(
      static_cast<std::size_t>(num_segments) * f, -1);
  for (int i = 0; i < n; ++i) {
    const int s = segment_ids[static_cast<std::size_t>(i)];
    if (s < 0 || s >= num_segments) {
      throw std::invalid_argument("segment_max: segment id out of range");
    }
    for (int j = 0; j < f; ++j) {
      int& am = (*argmax)[static_cast<std::size_t>(s) * f + j];
      // strict > keeps the lowest-index row on ties
      if (am < 0 || X.at(i, j) > Y.at(s, j)) {
        Y.at(s, j) = X.at(i, j);
        am = i;
      }
    }
  }
  Tid out = push(std::move(Y), node_needs_grad(x), nullptr);
  if (node_needs_grad(out)) {
    const int self = out.id, ix = x.id;
    nodes_[self].backward = [self, ix, argmax, num_segments, f](Tape& tp) {
      const Tensor& g = tp.nodes_[self].grad;
      Tensor& dx = tp.grad_buf(ix);
      for (int s = 0; s < num_segments; ++s) {
        for (int j = 0; j < f; ++j) {
          const int am = (*argmax)[static_cast<std::size_t>(s) * f + j];
          if (am >= 0) dx.at(am, j) += g.at(s, j);
        }
      }
    };
  }
  return out;
}

Tid Tape::gather_rows(Tid x, std::vector<int> rows) {
  const Tensor& X = value(x);
  if (X.ndim() != 2) throw std::invalid_argument("gather_rows: need 2-D");
  const int f = X.cols();
  Tensor Y({static_cast<int>(rows.size()), f});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const int r = rows[i];
    for (int j = 0; j < f; ++j) Y.at(static_cast<int>(i), j) = X.at(r, j);
  }
  Tid out = push(std::move(Y), node_needs_grad(x), nullptr);
  if (node_needs_grad(out)) {
    const int self = out.id, ix = x.id;
    auto rows_p = std::make_shared<std::vector<int>>(std::move(rows));
    nodes_[self].backward = [self, ix, rows_p, f](Tape& tp) {
      const Tensor& g = tp.nodes_[self].grad;
      Tensor& dx = tp.grad_buf(ix);
      for (std::size_t i = 0; i < rows_p->size(); ++i) {
        const int r = (*rows_p)[i];
        for (int j = 0; j < f; ++j) dx.at(r, j) += g.at(static_cast<int>(i), j);
      }
    };
  }
  return out;
}

Tid Tape::gather_elements(Tid v, std::vector<int> idx) {
  const Tensor& V = value(v);
  if (V.ndim() != 1) throw std::invalid_argument("gather_elements: need 1-D");
  Tensor Y({static_cast<int>(idx.size())});
  for (std::size_t i = 0; i < idx.size(); ++i) Y.at(static_cast<int>(i)) = V.at(idx[i]);
  Tid out = push(std::move(Y), node_needs_grad(v), nullptr);
  if (node_needs_grad(out)) {
    const int self = out.id, iv = v.id;
    auto idx_p = std::make_shared<std::vector<int>>(std::move(idx));
    nodes_[self].backward = [self, iv, idx_p](Tape& tp) {
      const Tensor& g = tp.nodes_[self].grad;
      Tensor& dv = tp.grad_buf(iv);
      for (std::size_t i = 0; i < idx_p->size(); ++i) {
        dv.at((*idx_p)[i]) += g.at(static_cast<int>(i));
      }
    };
  }
  return out;
}

Tid Tape::slice_prefix(Tid v, int m) {
  const Tensor& V = value(v);
  if (V.ndim() != 1 || m > V.shape[0]) {
    throw std::invalid_argument("slice_prefix: bad slice");
  }
  Tensor Y({m});
  for (int i = 0; i < m; ++i) Y.at(i) = V.at(i);
  Tid out = push(std::move(Y), node_needs_grad(v), nullptr);
  if (node_needs_grad(out)) {
    const int self = out.id, iv = v.id;
    nodes_[self].backward = [self, iv, m](Tape& tp) {
      const Tensor& g = tp.nodes_[self].grad;
      Tensor& dv = tp.grad_buf(iv);
      for (int i = 0; i < m; ++i) dv.at(i) += g.at(i);
    };
  }
  return out;
}

Tid Tape::sparse_row_combine(Tid x, Tid coeffs, std::vector<int> src_rows,
                             std::vector<int> dst_rows, int num_out) {
  const Tensor& X = value(x);
  const Tensor& C = value(coeffs);
  if (X.ndim() != 2 || C.ndim() != 1 ||
      src_rows.size() != dst_rows.size() ||
      C.shape[0] != static_cast<int>(src_rows.size())) {
    throw std::invalid_argument("sparse_row_combine: inconsistent inputs");
  }
  const int f = X.cols();
  const std::size_t nnz = src_rows.size();
  Tensor Y({num_out, f});
  for (std::size_t k = 0; k < nnz; ++k) {
    const double c = C.at(static_cast<int>(k));
    const int s = src_rows[k], d = dst_rows[k];
    for (int j = 0; j < f; ++j) Y.at(d, j) += c * X.at(s, j);
  }
  Tid out = push(std::move(Y),
                 node_needs_grad(x) || node_needs_grad(coeffs), nullptr);
  if (node_needs_grad(out)) {
    const int self = out.id, ix = x.id, ic = coeffs.id;
    auto src = std::make_shared<std::vector<int>>(std::move(src_rows));
    auto dst = std::make_shared<std::vector<int>>(std::move(dst_rows));
    nodes_[self].backward = [self, ix, ic, src, dst, f](Tape& tp) {
      const Tensor& g = tp.nodes_[self].grad;
      const Tensor& xv = tp.nodes_[ix].value;
      const Tensor& cv = tp.nodes_[ic].value;
      const bool need_x = tp.nodes_[ix].needs_grad;
      const bool need_c = tp.nodes_[ic].needs_grad;
      Tensor* dx = need_x ? &tp.grad_buf(ix) : nullptr;
      Tensor* dc = need_c ? &tp.grad_buf(ic) : nullptr;
      for (std::size_t k = 0; k < src->size(); ++k) {
        const int s = (*src)[k], d = (*dst)[k];
        if (need_c) {
          double acc = 0.0;
          for (int j = 0; j < f; ++j) acc += g.at(d, j) * xv.at(s, j);
          dc->at(static_cast<int>(k)) += acc;
        }
        if (need_x) {
          const double c = cv.at(static_cast<int>(k));
          for (int j = 0; j < f; ++j) dx->at(s, j) += c * g.at(d, j);
        }
      }
    };
  }
  return out;
}

Tid Tape::rows_transform(Tid h, Tid mats, std::vector<int> group) {
  const Tensor& H = value(h);
  const Tensor& M = value(mats);
  if (H.ndim() != 2 || M.ndim() != 2 ||
      M.cols() != H.cols() * H.cols() ||
      group.size() != static_cast<std::size_t>(H.rows())) {
    throw std::invalid_argument("rows_transform: inconsistent inputs");
  }
  const int n = H.rows(), f = H.cols();
  Tensor Y({n, f});
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    const double* hi = &H.data[std::size_t(i) * f];
    const double* mg = &M.data[std::size_t(group[std::size_t(i)]) * f * f];
    double* yi = &Y.data[std::size_t(i) * f];
    // y = h * Mg  (Mg row-major [f,f])
    Eigen::Map<const Eigen::RowVectorXd> hv(hi, f);
    Eigen::Map<const RowMat> mv(mg, f, f);
    Eigen::Map<Eigen::RowVectorXd>(yi, f).noalias() = hv * mv;
  }
  Tid out = push(std::move(Y), node_needs_grad(h) || node_needs_grad(mats),
                 nullptr);
  if (node_needs_grad(out)) {
    const int self = out.id, ih = h.id, im = mats.id;
    auto grp = std::make_shared<std::vector<int>>(std::move(group));
    // rows grouped by cell so the dM accumulation is deterministic
    auto order = std::make_shared<std::vector<std::vector<int>>>();
    order->resize(static_cast<std::size_t>(M.rows()));
    for (int i = 0; i < n; ++i) {
      (*order)[static_cast<std::size_t>((*grp)[std::size_t(i)])].push_back(i);
    }
    nodes_[self].backward = [self, ih, im, grp, order, n, f](Tape& tp) {
      const Tensor& g = tp.nodes_[self].grad;
      const Tensor& hv = tp.nodes_[ih].value;
      const Tensor& mv = tp.nodes_[im].value;
      if (tp.nodes_[ih].needs_grad) {
        Tensor& dh = tp.grad_buf(ih);
#pragma omp parallel for schedule(static)
        for (int i = 0; i < n; ++i) {
          const double* gi = &g.data[std::size_t(i) * f];
          const double* mg =
              &mv.data[std::size_t((*grp)[std::size_t(i)]) * f * f];
          double* di = &dh.data[std::size_t(i) * f];
          Eigen::Map<const Eigen::RowVectorXd> gvec(gi, f);
          Eigen::Map<const RowMat> mmat(mg, f, f);
          Eigen::Map<Eigen::RowVectorXd>(di, f).noalias() +=
              gvec * mmat.transpose();
        }
      }
      if (tp.nodes_[im].needs_grad) {
        Tensor& dm = tp.grad_buf(im);
        const int cells = static_cast<int>(order->size());
#pragma omp parallel for schedule(dynamic, 8)
        for (int c = 0; c < cells; ++c) {
          const auto& members = (*order)[static_cast<std::size_t>(c)];
          if (members.empty()) continue;
          Eigen::Map<RowMat> dmc(&dm.data[std::size_t(c) * f * f], f, f);
          for (int i : members) {
            Eigen::Map<const Eigen::RowVectorXd> hi(
                &hv.data[std::size_t(i) * f], f);
            Eigen::Map<const Eigen::RowVectorXd> gi(
                &g.data[std::size_t(i) * f], f);
            dmc.noalias() += hi.transpose() * gi;
          }
        }
      }
    };
  }
  return out;
}

Tid Tape::weighted_sum(Tid weights, Tid values) {
  const Tensor& W = value(weights);
  const Tensor& V = value(values);
  if (W.ndim() != 1 || V.ndim() != 2 || W.shape[0] != V.rows()) {
    throw std::invalid_argument("weighted_sum: shape mismatch " +
                                W.shape_str() + " vs " + V.shape_str());
  }
  const int n = V.rows(), f = V.cols();
  Tensor Y({f});
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < f; ++j) Y.at(j) += W.at(i) * V.at(i, j);
  }
  Tid out = push(std::move(Y),
                 node_needs_grad(weights) || node_needs_grad(values), nullptr);
  if (node_needs_grad(out)) {
    const int self = out.id, iw = weights.id, iv = values.id;
    nodes_[self].backward = [self, iw, iv, n, f](Tape& tp) {
      const Tensor& g = tp.nodes_[self].grad;
      const Tensor& wv = tp.nodes_[iw].value;
      const Tensor& vv = tp.nodes_[iv].value;
      if (tp.nodes_[iw].needs_grad) {
        Tensor& dw = tp.grad_buf(iw);
        for (int i = 0; i < n; ++i) {
          double acc = 0.0;
          for (int j = 0; j < f; ++j) acc += g.at(j) * vv.at(i, j);
          dw.at(i) += acc;
        }
      }
      if (tp.nodes_[iv].needs_grad) {
        Tensor& dv = tp.grad_buf(iv);
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < f; ++j) dv.at(i, j) += wv.at(i) * g.at(j);
        }
      }
    };
  }
  return out;
}

Tid Tape::concat_rows(std::span<const Tid> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: empty");
  const int f = value(parts[0]).cols();
  int total = 0;
  bool ng = false;
  for (Tid p : parts) {
    const Tensor& t = value(p);
    if (t.ndim() != 2 || t.cols() != f) {
      throw std::invalid_argument("concat_rows: column mismatch");
    }
    total += t.rows();
    ng = ng || node_needs_grad(p);
  }
  Tensor Y({total, f});
  int at = 0;
  for (Tid p : parts) {
    const Tensor& t = value(p);
    std::copy(t.data.begin(), t.data.end(),
              Y.data.begin() + std::size_t(at) * f);
    at += t.rows();
  }
  Tid out = push(std::move(Y), ng, nullptr);
  if (node_needs_grad(out)) {
    const int self = out.id;
    std::vector<std::pair<int, int>> pieces;  // (node id, rows)
    for (Tid p : parts) pieces.emplace_back(p.id, value(p).rows());
    nodes_[self].backward = [self, pieces, f](Tape& tp) {
      const Tensor& g = tp.nodes_[self].grad;
      int at2 = 0;
      for (auto [id, rows] : pieces) {
        if (tp.nodes_[id].needs_grad) {
          Tensor& d = tp.grad_buf(id);
          for (std::size_t i = 0; i < std::size_t(rows) * f; ++i) {
            d.data[i] += g.data[std::size_t(at2) * f + i];
          }
        }
        at2 += rows;
      }
    };
  }
  return out;
}

Tid Tape::concat_cols(std::span<const Tid> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: empty");
  const int n = value(parts[0]).rows();
  int total = 0;
  bool ng = false;
  for (Tid p : parts) {
    const Tensor& t = value(p);
    if (t.ndim() != 2 || t.rows() != n) {
      throw std::invalid_argument("concat_cols: row mismatch");
    }
    total += t.cols();
    ng = ng || node_needs_grad(p);
  }
  Tensor Y({n, total});
  int at = 0;
  for (Tid p : parts) {
    const Tensor& t = value(p);
    const int f = t.cols();
    for (int i = 0; i < n; ++i) {
      std::copy(&t.data[std::size_t(i) * f], &t.data[std::size_t(i) * f] + f,
                &Y.data[std::size_t(i) * total + at]);
    }
    at += f;
  }
  Tid out = push(std::move(Y), ng, nullptr);
  if (node_needs_grad(out)) {
    const int self = out.id;
    std::vector<std::pair<int, int>> pieces;  // (node id, cols)
    for (Tid p : parts) pieces.emplace_back(p.id, value(p).cols());
    nodes_[self].backward = [self, pieces, n, total](Tape& tp) {
      const Tensor& g = tp.nodes_[self].grad;
      int at2 = 0;
      for (auto [id, f] : pieces) {
        if (tp.nodes_[id].needs_grad) {
          Tensor& d = tp.grad_buf(id);
          for (int i = 0; i < n; ++i) {
            for (int j = 0; j < f; ++j) {
              d.at(i, j) += g.data[std::size_t(i) * total + at2 + j];
            }
          }
        }
        at2 += f;
      }
    };
  }
  return out;
}

Tid Tape::concat_vec(std::span<const Tid> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_vec: empty");
  int total = 0;
  bool ng = false;
  for (Tid p : parts) {
    if (value(p).ndim() != 1) throw std::invalid_argument("concat_vec: 1-D only");
    total += value(p).shape[0];
    ng = ng || node_needs_grad(p);
  }
  Tensor Y({total});
  int at = 0;
  for (Tid p : parts) {
    const Tensor& t = value(p);
    std::copy(t.data.begin(), t.data.end(), Y.data.begin() + at);
    at += t.shape[0];
  }
  Tid out = push(std::move(Y), ng, nullptr);
  if (node_needs_grad(out)) {
    const int self = out.id;
    std::vector<std::pair<int, int>> pieces;
    for (Tid p : parts) pieces.emplace_back(p.id, value(p).shape[0]);
    nodes_[self].backward = [self, pieces](Tape& tp) {
      const Tensor& g = tp.nodes_[self].grad;
      int at2 = 0;
      for (auto [id, len] : pieces) {
        if (tp.nodes_[id].needs_grad) {
          Tensor& d = tp.grad_buf(id);
          for (int i = 0; i < len; ++i) d.at(i) += g.at(at2 + i);
        }
        at2 += len;
      }
    };
  }
  return out;
}

Tid Tape::stack_cols(std::span<const Tid> cols) {
  if (cols.empty()) throw std::invalid_argument("stack_cols: empty");
  const int n = value(cols[0]).shape[0];
  bool ng = false;
  for (Tid c : cols) {
    if (value(c).ndim() != 1 || value(c).shape[0] != n) {
      throw std::invalid_argument("stack_cols: length mismatch");
    }
    ng = ng || node_needs_grad(c);
  }
  const int s = static_cast<int>(cols.size());
  Tensor Y({n, s});
  for (int j = 0; j < s; ++j) {
    const Tensor& c = value(cols[j]);
    for (int i = 0; i < n; ++i) Y.at(i, j) = c.at(i);
  }
  Tid out = push(std::move(Y), ng, nullptr);
  if (node_needs_grad(out)) {
    const int self = out.id;
    std::vector<int> ids;
    for (Tid c : cols) ids.push_back(c.id);
    nodes_[self].backward = [self, ids, n](Tape& tp) {
      const Tensor& g = tp.nodes_[self].grad;
      for (std::size_t j = 0; j < ids.size(); ++j) {
        if (!tp.nodes_[ids[j]].needs_grad) continue;
        Tensor& d = tp.grad_buf(ids[j]);
        for (int i = 0; i < n; ++i) d.at(i) += g.at(i, static_cast<int>(j));
      }
    };
  }
  return out;
}

Tid Tape::column(Tid x, int j) {
  const Tensor& X = value(x);
  if (X.ndim() != 2 || j >= X.cols()) {
    throw std::invalid_argument("column: bad index");
  }
  const int n = X.rows();
  Tensor Y({n});
  for (int i = 0; i < n; ++i) Y.at(i) = X.at(i, j);
  Tid out = push(std::move(Y), node_needs_grad(x), nullptr);
  if (node_needs_grad(out)) {
    const int self = out.id, ix = x.id;
    nodes_[self].backward = [self, ix, j, n](Tape& tp) {
      const Tensor& g = tp.nodes_[self].grad;
      Tensor& dx = tp.grad_buf(ix);
      for (int i = 0; i < n; ++i) dx.at(i, j) += g.at(i);
    };
  }
  return out;
}

Tid Tape::rowdot(Tid a, Tid b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  check_same_shape(A, B, "rowdot");
  const int n = A.rows(), f = A.cols();
  Tensor Y({n});
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int j = 0; j < f; ++j) acc += A.at(i, j) * B.at(i, j);
    Y.at(i) = acc;
  }
  Tid out = push(std::move(Y), node_needs_grad(a) || node_needs_grad(b),
                 nullptr);
  if (node_needs_grad(out)) {
    const int self = out.id, ia = a.id, ib = b.id;
    nodes_[self].backward = [self, ia, ib, n, f](Tape& tp) {
      const Tensor& g = tp.nodes_[self].grad;
      const Tensor& av = tp.nodes_[ia].value;
      const Tensor& bv = tp.nodes_[ib].value;
      if (tp.nodes_[ia].needs_grad) {
        Tensor& da = tp.grad_buf(ia);
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < f; ++j) da.at(i, j) += g.at(i) * bv.at(i, j);
        }
      }
      if (tp.nodes_[ib].needs_grad) {
        Tensor& db = tp.grad_buf(ib);
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < f; ++j) db.at(i, j) += g.at(i) * av.at(i, j);
        }
      }
    };
  }
  return out;
}

Tid Tape::colscale(Tid x, Tid c) {
  const Tensor& X = value(x);
  const Tensor& C = value(c);
  if (X.ndim() != 2 || C.ndim() != 1 || C.shape[0] != X.rows()) {
    throw std::invalid_argument("colscale: shape mismatch " + X.shape_str() +
                                " vs " + C.shape_str());
  }
  const int n = X.rows(), f = X.cols();
  Tensor Y(X.shape);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < f; ++j) Y.at(i, j) = C.at(i) * X.at(i, j);
  }
  Tid out = push(std::move(Y), node_needs_grad(x) || node_needs_grad(c),
                 nullptr);
  if (node_needs_grad(out)) {
    const int self = out.id, ix = x.id, ic = c.id;
    nodes_[self].backward = [self, ix, ic, n, f](Tape& tp) {
      const Tensor& g = tp.nodes_[self].grad;
      const Tensor& xv = tp.nodes_[ix].value;
      const Tensor& cv = tp.nodes_[ic].value;
      if (tp.nodes_[ix].needs_grad) {
        Tensor& dx = tp.grad_buf(ix);
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < f; ++j) dx.at(i, j) += cv.at(i) * g.at(i, j);
        }
      }
      if (tp.nodes_[ic].needs_grad) {
        Tensor& dc = tp.grad_buf(ic);
        for (int i = 0; i < n; ++i) {
          double acc = 0.0;
          for (int j = 0; j < f; ++j) acc += g.at(i, j) * xv.at(i, j);
          dc.at(i) += acc;
        }
      }
    };
  }
  return out;
}

Tid Tape::sum_all(Tid x) {
  const Tensor& X = value(x);
  double s = 0.0;
  for (double v : X.data) s += v;
  Tid out = push(Tensor::scalar(s), node_needs_grad(x), nullptr);
  if (node_needs_grad(out)) {
    const int self = out.id, ix = x.id;
    nodes_[self].backward = [self, ix](Tape& tp) {
      const double g = tp.nodes_[self].grad.at(0);
      Tensor& dx = tp.grad_buf(ix);
      for (double& v : dx.data) v += g;
    };
  }
  return out;
}

Tid Tape::mean_all(Tid x) {
  const Tensor& X = value(x);
  const double n = static_cast<double>(X.numel());
  double s = 0.0;
  for (double v : X.data) s += v;
  Tid out = push(Tensor::scalar(s / n), node_needs_grad(x), nullptr);
  if (node_needs_grad(out)) {
    const int self = out.id, ix = x.id;
    nodes_[self].backward = [self, ix, n](Tape& tp) {
      const double g = tp.nodes_[self].grad.at(0) / n;
      Tensor& dx = tp.grad_buf(ix);
      for (double& v : dx.data) v += g;
    };
  }
  return out;
}

Tid Tape::bce_with_logits(Tid logits, std::vector<double> targets) {
  const Tensor& L = value(logits);
  if (L.ndim() != 1 || targets.size() != static_cast<std::size_t>(L.numel())) {
    throw std::invalid_argument("bce_with_logits: shape mismatch");
  }
  const int n = L.shape[0];
  Tensor Y({n});
  for (int i = 0; i < n; ++i) {
    const double l = L.at(i), y = targets[static_cast<std::size_t>(i)];
    Y.at(i) = std::max(l, 0.0) - l * y + std::log1p(std::exp(-std::abs(l)));
  }
  Tid out = push(std::move(Y), node_needs_grad(logits), nullptr);
  if (node_needs_grad(out)) {
    const int self = out.id, il = logits.id;
    auto tgt = std::make_shared<std::vector<double>>(std::move(targets));
    nodes_[self].backward = [self, il, tgt, n](Tape& tp) {
      const Tensor& g = tp.nodes_[self].grad;
      const Tensor& lv = tp.nodes_[il].value;
      Tensor& dl = tp.grad_buf(il);
      for (int i = 0; i < n; ++i) {
        const double l = lv.at(i);
        const double sig = l >= 0.0 ? 1.0 / (1.0 + std::exp(-l))
                                    : std::exp(l) / (1.0 + std::exp(l));
        dl.at(i) += g.at(i) * (sig - (*tgt)[static_cast<std::size_t>(i)]);
      }
    };
  }
  return out;
}

void Tape::backward(Tid loss) {
  if (!grad_enabled_) {
    throw std::logic_error("backward: tape recorded without gradients");
  }
  if (value(loss).numel() != 1) {
    throw std::invalid_argument("backward: loss must be scalar, got " +
                                value(loss).shape_str());
  }
  grad_buf(loss.id).at(0) = 1.0;
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.needs_grad && !n.grad.data.empty() && n.backward) {
      n.backward(*this);
    }
    // Everything below i has already consumed this node; buffers can go.
    if (!n.keep_grad && i != loss.id) {
      n.grad.release();
      n.value.release();
    }
  }
}

GradCheckReport gradient_check(
    const std::function<double()>& forward_loss,
    const std::vector<std::pair<std::string, Parameter*>>& params, double h,
    int max_coords, std::uint64_t coord_seed, double denom_floor) {
  GradCheckReport report;
  Rng rng(coord_seed);
  for (const auto& [name, p] : params) {
    GradCheckEntry entry;
    entry.name = name;
    const std::int64_t n = p->value.numel();

    std::vector<std::int64_t> coords;
    if (max_coords <= 0 || n <= max_coords) {
      coords.resize(static_cast<std::size_t>(n));
      for (std::int64_t i = 0; i < n; ++i) coords[static_cast<std::size_t>(i)] = i;
    } else {
      // deterministic sample, always including the largest-gradient entry
      std::int64_t imax = 0;
      for (std::int64_t i = 1; i < n; ++i) {
        if (std::abs(p->grad.data[static_cast<std::size_t>(i)]) >
            std::abs(p->grad.data[static_cast<std::size_t>(imax)])) {
          imax = i;
        }
      }
      coords.push_back(imax);
      while (coords.size() < static_cast<std::size_t>(max_coords)) {
        coords.push_back(static_cast<std::int64_t>(
            rng.uniform_index(static_cast<std::uint64_t>(n))));
      }
      std::sort(coords.begin(), coords.end());
      coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
    }

    auto record = [&](double analytic, double numeric) {
      const double abs_err = std::abs(analytic - numeric);
      const double denom =
          std::max({std::abs(analytic), std::abs(numeric), denom_floor});
      entry.max_rel_err = std::max(entry.max_rel_err, abs_err / denom);
      entry.max_abs_err = std::max(entry.max_abs_err, abs_err);
    };

    for (std::int64_t c : coords) {
      double& w = p->value.data[static_cast<std::size_t>(c)];
      const double saved = w;
      w = saved + h;
      const double lp = forward_loss();
      w = saved - h;
      const double lm = forward_loss();
      w = saved;
      record(p->grad.data[static_cast<std::size_t>(c)], (lp - lm) / (2.0 * h));
      ++entry.coords_checked;
    }

    // one random-direction probe over the whole tensor
    if (n > 1) {
      std::vector<double> dir(static_cast<std::size_t>(n));
      double norm2 = 0.0;
      for (double& d : dir) {
        d = rng.normal();
        norm2 += d * d;
      }
      const double inv = 1.0 / std::sqrt(norm2);
      double analytic = 0.0;
      for (std::int64_t i = 0; i < n; ++i) {
        dir[static_cast<std::size_t>(i)] *= inv;
        analytic += dir[static_cast<std::size_t>(i)] *
                    p->grad.data[static_cast<std::size_t>(i)];
      }
      std::vector<double> saved = p->value.data;
      for (std::int64_t i = 0; i < n; ++i) {
        p->value.data[static_cast<std::size_t>(i)] =
            saved[static_cast<std::size_t>(i)] +
            h * dir[static_cast<std::size_t>(i)];
      }
      const double lp = forward_loss();
      for (std::int64_t i = 0; i < n; ++i) {
        p->value.data[static_cast<std::size_t>(i)] =
            saved[static_cast<std::size_t>(i)] -
            h * dir[static_cast<std::size_t>(i)];
      }
      const double lm = forward_loss();
      p->value.data = std::move(saved);
      record(analytic, (lp - lm) / (2.0 * h));
    }

    report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace surfr
