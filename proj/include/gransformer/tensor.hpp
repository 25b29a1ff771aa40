#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "gransformer/common.hpp"

namespace gransformer {

// Dense rank-2 tensor. Values are 32-bit floats; reductions (matmul inner
// products, softmax denominators, sums) accumulate in 64-bit before rounding
// back, which keeps finite-difference gradient checks tight at desk scale.
// Scalars are 1x1, row vectors 1xn.
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<float> data;  // row-major
  std::vector<float> grad;  // empty until first backward touch
  bool requires_grad = false;
  std::string name;  // set for parameters; used in checkpoints and diagnostics
  // Scalar reductions keep their 64-bit accumulator so loss values can be read
  // without the final float rounding; finite-difference quotients need it.
  double value64 = 0.0;
  bool has_value64 = false;

  int numel() const { return rows * cols; }
  float& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  float at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
  void ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), 0.0f);
  }
  void zero_grad() {
    if (!grad.empty()) grad.assign(data.size(), 0.0f);
  }
};

using TensorPtr = std::shared_ptr<Tensor>;

TensorPtr make_tensor(int rows, int cols, bool requires_grad = false);
TensorPtr make_tensor(int rows, int cols, const std::vector<float>& values,
                      bool requires_grad = false);
TensorPtr make_param(const std::string& name, int rows, int cols);
// Gaussian init with the given standard deviation; scale 0 gives zeros.
TensorPtr make_param(const std::string& name, int rows, int cols, Rng& rng,
                     float scale);
// Constant fill; used for relu-feeding biases, which start slightly positive
// so untrained units are neither dead nor parked on the activation corner.
TensorPtr make_bias_param(const std::string& name, int cols);

// Reverse-mode tape. Operations append their backward step at record time, so
// the recording order is already a topological order and backward() is a plain
// reverse sweep. Gradients accumulate additively; callers zero them between
// steps. With recording off (generation, finite differences) ops run forward
// only and produce detached tensors.
class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}

  TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);
  TensorPtr transpose(const TensorPtr& x);
  TensorPtr add(const TensorPtr& a, const TensorPtr& b);
  TensorPtr mul(const TensorPtr& a, const TensorPtr& b);
  // x + bias broadcast over rows; bias is 1 x cols.
  TensorPtr add_rowwise(const TensorPtr& x, const TensorPtr& bias);
  // a * x + b elementwise with scalar constants.
  TensorPtr affine(const TensorPtr& x, double a, double b);
  TensorPtr scale(const TensorPtr& x, double a) { return affine(x, a, 0.0); }
  TensorPtr relu(const TensorPtr& x);
  TensorPtr sigmoid(const TensorPtr& x);
  TensorPtr log(const TensorPtr& x);
  TensorPtr log1p(const TensorPtr& x);
  TensorPtr exp(const TensorPtr& x);
  TensorPtr clamp(const TensorPtr& x, double lo, double hi);
  // Row-wise softmax, stabilized by subtracting each row's max.
  TensorPtr softmax_rows(const TensorPtr& x);
  TensorPtr sum(const TensorPtr& x);  // full reduction to 1x1
  TensorPtr slice_rows(const TensorPtr& x, int first, int count);
  TensorPtr concat_cols(const std::vector<TensorPtr>& xs);
  TensorPtr reshape(const TensorPtr& x, int rows, int cols);

  // Seeds d(loss)/d(loss) = 1 and runs the recorded steps in reverse. The loss
  // must be scalar and the tape must have been recording.
  void backward(const TensorPtr& loss);

  bool recording() const { return recording_; }
  size_t size() const { return steps_.size(); }

 private:
  TensorPtr make_out(int rows, int cols, std::initializer_list<TensorPtr> inputs);
  void record(std::function<void()> fn);
  static void check_finite(const TensorPtr& t, const char* op);

  std::vector<std::function<void()>> steps_;
  bool recording_ = true;
};

// Central-difference gradient check. build_loss must construct the loss from
// the live parameter tensors on the supplied tape so that perturbations are
// visible. Relative error uses a unit floor: |ad - fd| / max(|ad|, |fd|, 1),
// i.e. sub-unit gradients are compared absolutely.
struct GradCheckResult {
  double max_rel_err = 0.0;
  std::string worst;  // description of the worst element
  bool pass = false;
};

GradCheckResult grad_check(const std::function<TensorPtr(Tape&)>& build_loss,
                           const std::vector<TensorPtr>& params, double h,
                           double tol);

// Loss value at full accumulator precision when available.
inline double scalar_value(const TensorPtr& t) {
  return t->has_value64 ? t->value64 : static_cast<double>(t->data[0]);
}

}  // namespace gransformer
