#pragma once

#include <functional>
#include <span>
#include <vector>

#include "surfr/tensor.hpp"

namespace surfr {

struct BatchNormState;

/// Handle to a tensor recorded on a Tape.
struct Tid {
  int id = -1;
  bool valid() const { return id >= 0; }
};

/// Reverse-mode tape. Operations append nodes in execution order, which is a
/// topological order by construction; backward() walks the record in reverse.
/// A tape is single-threaded; independent tapes may run concurrently and
/// share Parameter values read-only.
///
/// With grad tracking disabled the tape records values only, and backward()
/// is unavailable. In either mode, values of intermediate nodes can be
/// released as soon as the graph is consumed (backward() does this
/// automatically once a node can no longer be needed).
class Tape {
 public:
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  bool grad_enabled() const { return grad_enabled_; }
  std::size_t size() const { return nodes_.size(); }

  const Tensor& value(Tid t) const { return nodes_[t.id].value; }
  Tensor& mutable_value(Tid t) { return nodes_[t.id].value; }
  /// Gradient of a node after backward(); only nodes flagged keep_grad
  /// retain it.
  const Tensor& grad(Tid t) const { return nodes_[t.id].grad; }
  void keep_grad(Tid t) { nodes_[t.id].keep_grad = true; }

  // -- leaves ---------------------------------------------------------------
  Tid constant(Tensor t);
  Tid parameter(Parameter& p);

  // -- dense ops ------------------------------------------------------------
  Tid matmul(Tid a, Tid b);              // [N,K]x[K,M] -> [N,M]
  Tid add(Tid a, Tid b);                 // same shape
  Tid sub(Tid a, Tid b);                 // same shape
  Tid add_bias(Tid x, Tid bias);         // [N,F] + [F]
  Tid scale_by_scalar(Tid x, double c);
  Tid relu(Tid x);
  Tid tanh(Tid x);
  Tid abs(Tid x);
  Tid sigmoid(Tid x);
  Tid softmax(Tid x, int axis);          // 2-D: axis 0 or 1; 1-D: axis 0

  // -- normalization --------------------------------------------------------
  // Column statistics over the row dimension. In training mode uses batch
  // statistics and updates the running buffers; in eval mode the op is an
  // affine function of its input built from the running statistics.
  Tid batch_norm(Tid x, BatchNormState& bn, bool training);
  // Row statistics with learnable per-feature affine.
  Tid layer_norm(Tid x, Tid gamma, Tid beta, double eps = 1e-5);

  // -- segment / gather ops -------------------------------------------------
  // Channel-wise max over rows sharing a segment id; segments with no rows
  // produce an exact zero row. Gradients route to the lowest-index argmax.
  Tid segment_max(Tid x, const std::vector<int>& segment_ids,
                  int num_segments);
  Tid gather_rows(Tid x, std::vector<int> rows);
  Tid gather_elements(Tid v, std::vector<int> idx);  // 1-D gather
  Tid slice_prefix(Tid v, int m);                    // first m of a 1-D tensor
  // out[dst[k]] += coeffs[k] * x[src[k]]; the workhorse behind neighbor
  // aggregation. coeffs may be a constant leaf or a learnable path.
  Tid sparse_row_combine(Tid x, Tid coeffs, std::vector<int> src_rows,
                         std::vector<int> dst_rows, int num_out);
  // rows of h transformed by their group's matrix: out[i] = h[i] * M[g[i]]
  // with M stored as [C, F*F] row-major blocks.
  Tid rows_transform(Tid h, Tid mats, std::vector<int> group);

  // -- reductions / reshapes ------------------------------------------------
  Tid weighted_sum(Tid weights, Tid values);  // [N]·[N,F] -> [F]
  Tid concat_rows(std::span<const Tid> parts);
  Tid concat_cols(std::span<const Tid> parts);
  Tid concat_vec(std::span<const Tid> parts);  // 1-D concatenation
  Tid stack_cols(std::span<const Tid> cols);   // S x [N] -> [N,S]
  Tid column(Tid x, int j);                    // [N,F] -> [N]
  Tid rowdot(Tid a, Tid b);                    // [N,F],[N,F] -> [N]
  Tid colscale(Tid x, Tid c);                  // row i scaled by c[i]
  Tid sum_all(Tid x);                          // -> scalar
  Tid mean_all(Tid x);                         // -> scalar

  // Stable binary cross-entropy with logits, elementwise: targets in {0,1}.
  Tid bce_with_logits(Tid logits, std::vector<double> targets);

  /// Populates Parameter::grad for every reachable parameter. loss must be
  /// scalar. Node buffers are released as the sweep passes them.
  void backward(Tid loss);

 private:
  struct Node {
    Tensor value;
    Tensor grad;  // allocated lazily during backward
    bool needs_grad = false;
    bool keep_grad = false;
    Parameter* param = nullptr;
    std::function<void(Tape&)> backward;
  };

  Tid push(Tensor value, bool needs_grad, std::function<void(Tape&)> bw);
  Tensor& grad_buf(int id);
  bool node_needs_grad(Tid t) const {
    return grad_enabled_ && nodes_[t.id].needs_grad;
  }
  static void check_same_shape(const Tensor& a, const Tensor& b,
                               const char* op);

  std::vector<Node> nodes_;
  bool grad_enabled_;
};

/// Gradient verification via central finite differences. forward_loss must
/// re-run the forward pass and return the scalar loss; analytic gradients
/// must already be accumulated in the parameters. Checks a deterministic
/// sample of coordinates per tensor (all of them when max_coords == 0) plus
/// one random-direction derivative per tensor.
struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
  int coords_checked = 0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_err = 0.0;
  bool within(double tol) const { return max_rel_err < tol; }
};

GradCheckReport gradient_check(
    const std::function<double()>& forward_loss,
    const std::vector<std::pair<std::string, Parameter*>>& params,
    double h = 1e-4, int max_coords = 0, std::uint64_t coord_seed = 17,
    double denom_floor = 1e-3);

}  // namespace surfr
