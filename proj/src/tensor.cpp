#include "gransformer/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gransformer/common.hpp"

namespace gransformer {

namespace {

std::string shape_str(const TensorPtr& t) {
  std::ostringstream os;
  os << t->rows << "x" << t->cols;
  return os.str();
}

void require_same_shape(const TensorPtr& a, const TensorPtr& b, const char* op) {
  if (a->rows != b->rows || a->cols != b->cols) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                shape_str(a) + " vs " + shape_str(b));
  }
}

}  // namespace

TensorPtr make_tensor(int rows, int cols, bool requires_grad) {
  if (rows <= 0 || cols <= 0) {
    throw std::invalid_argument("make_tensor: non-positive dimension");
  }
  auto t = std::make_shared<Tensor>();
  t->rows = rows;
  t->cols = cols;
  t->data.assign(static_cast<size_t>(rows) * cols, 0.0f);
  t->requires_grad = requires_grad;
  return t;
}

TensorPtr make_tensor(int rows, int cols, const std::vector<float>& values,
                      bool requires_grad) {
  auto t = make_tensor(rows, cols, requires_grad);
  if (values.size() != t->data.size()) {
    throw std::invalid_argument("make_tensor: value count does not match shape");
  }
  t->data = values;
  return t;
}

TensorPtr make_param(const std::string& name, int rows, int cols) {
  auto t = make_tensor(rows, cols, true);
  t->name = name;
  return t;
}

TensorPtr make_param(const std::string& name, int rows, int cols, Rng& rng,
                     float scale) {
  auto t = make_param(name, rows, cols);
  if (scale != 0.0f) {
    for (auto& v : t->data) {
      v = static_cast<float>(rng.normal()) * scale;
    }
  }
  return t;
}

TensorPtr make_bias_param(const std::string& name, int cols) {
  auto t = make_param(name, 1, cols);
  for (auto& v : t->data) v = 0.05f;
  return t;
}

TensorPtr Tape::make_out(int rows, int cols,
                         std::initializer_list<TensorPtr> inputs) {
  bool rg = false;
  for (const auto& in : inputs) rg = rg || in->requires_grad;
  return make_tensor(rows, cols, recording_ && rg);
}

void Tape::record(std::function<void()> fn) {
  if (recording_) steps_.push_back(std::move(fn));
}

void Tape::check_finite(const TensorPtr& t, const char* op) {
  for (float v : t->data) {
    if (!std::isfinite(v)) {
      throw numeric_error(std::string("non-finite value produced by ") + op);
    }
  }
}

// ==== Linear algebra ====

TensorPtr Tape::matmul(const TensorPtr& a, const TensorPtr& b) {
  if (a->cols != b->rows) {
    throw std::invalid_argument("matmul: inner dimension mismatch " +
                                shape_str(a) + " * " + shape_str(b));
  }
  auto out = make_out(a->rows, b->cols, {a, b});
  const int m = a->rows, k = a->cols, n = b->cols;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int p = 0; p < k; ++p) {
        acc += static_cast<double>(a->at(i, p)) * static_cast<double>(b->at(p, j));
      }
      out->at(i, j) = static_cast<float>(acc);
    }
  }
  check_finite(out, "matmul");
  if (out->requires_grad) {
    record([a, b, out] {
      if (a->requires_grad) {
        a->ensure_grad();
        for (int i = 0; i < a->rows; ++i) {
          for (int p = 0; p < a->cols; ++p) {
            double acc = 0.0;
            for (int j = 0; j < b->cols; ++j) {
              acc += static_cast<double>(out->grad[static_cast<size_t>(i) * out->cols + j]) *
                     static_cast<double>(b->at(p, j));
            }
            a->grad[static_cast<size_t>(i) * a->cols + p] += static_cast<float>(acc);
          }
        }
      }
      if (b->requires_grad) {
        b->ensure_grad();
        for (int p = 0; p < b->rows; ++p) {
          for (int j = 0; j < b->cols; ++j) {
            double acc = 0.0;
            for (int i = 0; i < a->rows; ++i) {
              acc += static_cast<double>(a->at(i, p)) *
                     static_cast<double>(out->grad[static_cast<size_t>(i) * out->cols + j]);
            }
            b->grad[static_cast<size_t>(p) * b->cols + j] += static_cast<float>(acc);
          }
        }
      }
    });
  }
  return out;
}

TensorPtr Tape::transpose(const TensorPtr& x) {
  auto out = make_out(x->cols, x->rows, {x});
  for (int i = 0; i < x->rows; ++i) {
    for (int j = 0; j < x->cols; ++j) out->at(j, i) = x->at(i, j);
  }
  if (out->requires_grad) {
    record([x, out] {
      x->ensure_grad();
      for (int i = 0; i < x->rows; ++i) {
        for (int j = 0; j < x->cols; ++j) {
          x->grad[static_cast<size_t>(i) * x->cols + j] += out->grad[static_cast<size_t>(j) * out->cols + i];
        }
      }
    });
  }
  return out;
}

// ==== Elementwise ====

TensorPtr Tape::add(const TensorPtr& a, const TensorPtr& b) {
  require_same_shape(a, b, "add");
  auto out = make_out(a->rows, a->cols, {a, b});
  for (int i = 0; i < out->numel(); ++i) out->data[i] = a->data[i] + b->data[i];
  if (out->numel() == 1 && a->has_value64 && b->has_value64) {
    out->value64 = a->value64 + b->value64;
    out->has_value64 = true;
  }
  check_finite(out, "add");
  if (out->requires_grad) {
    record([a, b, out] {
      if (a->requires_grad) {
        a->ensure_grad();
        for (int i = 0; i < out->numel(); ++i) a->grad[i] += out->grad[i];
      }
      if (b->requires_grad) {
        b->ensure_grad();
        for (int i = 0; i < out->numel(); ++i) b->grad[i] += out->grad[i];
      }
    });
  }
  return out;
}

TensorPtr Tape::mul(const TensorPtr& a, const TensorPtr& b) {
  require_same_shape(a, b, "mul");
  auto out = make_out(a->rows, a->cols, {a, b});
  for (int i = 0; i < out->numel(); ++i) out->data[i] = a->data[i] * b->data[i];
  check_finite(out, "mul");
  if (out->requires_grad) {
    record([a, b, out] {
      if (a->requires_grad) {
        a->ensure_grad();
        for (int i = 0; i < out->numel(); ++i) a->grad[i] += out->grad[i] * b->data[i];
      }
      if (b->requires_grad) {
        b->ensure_grad();
        for (int i = 0; i < out->numel(); ++i) b->grad[i] += out->grad[i] * a->data[i];
      }
    });
  }
  return out;
}

TensorPtr Tape::add_rowwise(const TensorPtr& x, const TensorPtr& bias) {
  if (bias->rows != 1 || bias->cols != x->cols) {
    throw std::invalid_argument("add_rowwise: bias must be 1x" +
                                std::to_string(x->cols) + ", got " + shape_str(bias));
  }
  auto out = make_out(x->rows, x->cols, {x, bias});
  for (int i = 0; i < x->rows; ++i) {
    for (int j = 0; j < x->cols; ++j) out->at(i, j) = x->at(i, j) + bias->data[j];
  }
  check_finite(out, "add_rowwise");
  if (out->requires_grad) {
    record([x, bias, out] {
      if (x->requires_grad) {
        x->ensure_grad();
        for (int i = 0; i < out->numel(); ++i) x->grad[i] += out->grad[i];
      }
      if (bias->requires_grad) {
        bias->ensure_grad();
        for (int j = 0; j < out->cols; ++j) {
          double acc = 0.0;
          for (int i = 0; i < out->rows; ++i) {
            acc += static_cast<double>(out->grad[static_cast<size_t>(i) * out->cols + j]);
          }
          bias->grad[j] += static_cast<float>(acc);
        }
      }
    });
  }
  return out;
}

TensorPtr Tape::affine(const TensorPtr& x, double a, double b) {
  auto out = make_out(x->rows, x->cols, {x});
  for (int i = 0; i < out->numel(); ++i) {
    out->data[i] = static_cast<float>(a * static_cast<double>(x->data[i]) + b);
  }
  if (out->numel() == 1 && x->has_value64) {
    out->value64 = a * x->value64 + b;
    out->has_value64 = true;
  }
  check_finite(out, "affine");
  if (out->requires_grad) {
    record([x, out, a] {
      x->ensure_grad();
      for (int i = 0; i < out->numel(); ++i) {
        x->grad[i] += static_cast<float>(a * static_cast<double>(out->grad[i]));
      }
    });
  }
  return out;
}

TensorPtr Tape::relu(const TensorPtr& x) {
  auto out = make_out(x->rows, x->cols, {x});
  for (int i = 0; i < out->numel(); ++i) {
    out->data[i] = x->data[i] > 0.0f ? x->data[i] : 0.0f;
  }
  if (out->requires_grad) {
    // Subgradient at 0 is 0.
    record([x, out] {
      x->ensure_grad();
      for (int i = 0; i < out->numel(); ++i) {
        if (x->data[i] > 0.0f) x->grad[i] += out->grad[i];
      }
    });
  }
  return out;
}

TensorPtr Tape::sigmoid(const TensorPtr& x) {
  auto out = make_out(x->rows, x->cols, {x});
  for (int i = 0; i < out->numel(); ++i) {
    out->data[i] = static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(x->data[i]))));
  }
  if (out->requires_grad) {
    record([x, out] {
      x->ensure_grad();
      for (int i = 0; i < out->numel(); ++i) {
        double s = out->data[i];
        x->grad[i] += static_cast<float>(static_cast<double>(out->grad[i]) * s * (1.0 - s));
      }
    });
  }
  return out;
}

TensorPtr Tape::log(const TensorPtr& x) {
  auto out = make_out(x->rows, x->cols, {x});
  for (int i = 0; i < out->numel(); ++i) {
    if (x->data[i] <= 0.0f) {
      throw numeric_error("log: non-positive input " + std::to_string(x->data[i]));
    }
    out->data[i] = static_cast<float>(std::log(static_cast<double>(x->data[i])));
  }
  if (out->requires_grad) {
    record([x, out] {
      x->ensure_grad();
      for (int i = 0; i < out->numel(); ++i) {
        x->grad[i] += static_cast<float>(static_cast<double>(out->grad[i]) /
                                         static_cast<double>(x->data[i]));
      }
    });
  }
  return out;
}

TensorPtr Tape::log1p(const TensorPtr& x) {
  auto out = make_out(x->rows, x->cols, {x});
  for (int i = 0; i < out->numel(); ++i) {
    if (x->data[i] <= -1.0f) {
      throw numeric_error("log1p: input " + std::to_string(x->data[i]) + " <= -1");
    }
    out->data[i] = static_cast<float>(std::log1p(static_cast<double>(x->data[i])));
  }
  if (out->requires_grad) {
    record([x, out] {
      x->ensure_grad();
      for (int i = 0; i < out->numel(); ++i) {
        x->grad[i] += static_cast<float>(static_cast<double>(out->grad[i]) /
                                         (1.0 + static_cast<double>(x->data[i])));
      }
    });
  }
  return out;
}

TensorPtr Tape::exp(const TensorPtr& x) {
  auto out = make_out(x->rows, x->cols, {x});
  for (int i = 0; i < out->numel(); ++i) {
    out->data[i] = static_cast<float>(std::exp(static_cast<double>(x->data[i])));
  }
  check_finite(out, "exp");
  if (out->requires_grad) {
    record([x, out] {
      x->ensure_grad();
      for (int i = 0; i < out->numel(); ++i) {
        x->grad[i] += out->grad[i] * out->data[i];
      }
    });
  }
  return out;
}

TensorPtr Tape::clamp(const TensorPtr& x, double lo, double hi) {
  if (!(lo < hi)) throw std::invalid_argument("clamp: lo must be < hi");
  auto out = make_out(x->rows, x->cols, {x});
  const float flo = static_cast<float>(lo), fhi = static_cast<float>(hi);
  for (int i = 0; i < out->numel(); ++i) {
    out->data[i] = std::min(std::max(x->data[i], flo), fhi);
  }
  if (out->requires_grad) {
    record([x, out, flo, fhi] {
      x->ensure_grad();
      for (int i = 0; i < out->numel(); ++i) {
        if (x->data[i] > flo && x->data[i] < fhi) x->grad[i] += out->grad[i];
      }
    });
  }
  return out;
}

// ==== Structured ops ====

TensorPtr Tape::softmax_rows(const TensorPtr& x) {
  auto out = make_out(x->rows, x->cols, {x});
  for (int i = 0; i < x->rows; ++i) {
    double m = x->at(i, 0);
    for (int j = 1; j < x->cols; ++j) m = std::max(m, static_cast<double>(x->at(i, j)));
    double denom = 0.0;
    for (int j = 0; j < x->cols; ++j) denom += std::exp(static_cast<double>(x->at(i, j)) - m);
    for (int j = 0; j < x->cols; ++j) {
      out->at(i, j) = static_cast<float>(std::exp(static_cast<double>(x->at(i, j)) - m) / denom);
    }
  }
  check_finite(out, "softmax_rows");
  if (out->requires_grad) {
    record([x, out] {
      x->ensure_grad();
      for (int i = 0; i < x->rows; ++i) {
        double dot = 0.0;
        for (int j = 0; j < x->cols; ++j) {
          dot += static_cast<double>(out->grad[static_cast<size_t>(i) * out->cols + j]) *
                 static_cast<double>(out->at(i, j));
        }
        for (int j = 0; j < x->cols; ++j) {
          double p = out->at(i, j);
          double g = out->grad[static_cast<size_t>(i) * out->cols + j];
          x->grad[static_cast<size_t>(i) * x->cols + j] += static_cast<float>(p * (g - dot));
        }
      }
    });
  }
  return out;
}

TensorPtr Tape::sum(const TensorPtr& x) {
  auto out = make_out(1, 1, {x});
  double acc = 0.0;
  for (float v : x->data) acc += static_cast<double>(v);
  out->data[0] = static_cast<float>(acc);
  out->value64 = acc;
  out->has_value64 = true;
  check_finite(out, "sum");
  if (out->requires_grad) {
    record([x, out] {
      x->ensure_grad();
      for (int i = 0; i < x->numel(); ++i) x->grad[i] += out->grad[0];
    });
  }
  return out;
}

TensorPtr Tape::slice_rows(const TensorPtr& x, int first, int count) {
  if (first < 0 || count <= 0 || first + count > x->rows) {
    throw std::invalid_argument("slice_rows: range [" + std::to_string(first) + ", " +
                                std::to_string(first + count) + ") outside " + shape_str(x));
  }
  auto out = make_out(count, x->cols, {x});
  std::copy(x->data.begin() + static_cast<size_t>(first) * x->cols,
            x->data.begin() + static_cast<size_t>(first + count) * x->cols,
            out->data.begin());
  if (out->requires_grad) {
    record([x, out, first] {
      x->ensure_grad();
      for (int i = 0; i < out->numel(); ++i) {
        x->grad[static_cast<size_t>(first) * x->cols + i] += out->grad[i];
      }
    });
  }
  return out;
}

TensorPtr Tape::concat_cols(const std::vector<TensorPtr>& xs) {
  if (xs.empty()) throw std::invalid_argument("concat_cols: no inputs");
  int total = 0;
  for (const auto& x : xs) {
    if (x->rows != xs[0]->rows) {
      throw std::invalid_argument("concat_cols: row count mismatch");
    }
    total += x->cols;
  }
  bool rg = false;
  for (const auto& x : xs) rg = rg || x->requires_grad;
  auto out = make_tensor(xs[0]->rows, total, recording_ && rg);
  int off = 0;
  for (const auto& x : xs) {
    for (int i = 0; i < x->rows; ++i) {
      for (int j = 0; j < x->cols; ++j) out->at(i, off + j) = x->at(i, j);
    }
    off += x->cols;
  }
  if (out->requires_grad) {
    auto inputs = xs;
    record([inputs, out] {
      int off2 = 0;
      for (const auto& x : inputs) {
        if (x->requires_grad) {
          x->ensure_grad();
          for (int i = 0; i < x->rows; ++i) {
            for (int j = 0; j < x->cols; ++j) {
              x->grad[static_cast<size_t>(i) * x->cols + j] +=
                  out->grad[static_cast<size_t>(i) * out->cols + off2 + j];
            }
          }
        }
        off2 += x->cols;
      }
    });
  }
  return out;
}

TensorPtr Tape::reshape(const TensorPtr& x, int rows, int cols) {
  if (rows * cols != x->numel()) {
    throw std::invalid_argument("reshape: element count mismatch");
  }
  auto out = make_out(rows, cols, {x});
  out->data = x->data;
  if (out->requires_grad) {
    record([x, out] {
      x->ensure_grad();
      for (int i = 0; i < x->numel(); ++i) x->grad[i] += out->grad[i];
    });
  }
  return out;
}

void Tape::backward(const TensorPtr& loss) {
  if (loss->numel() != 1) {
    throw std::invalid_argument("backward: loss must be scalar, got " + shape_str(loss));
  }
  if (!recording_) {
    throw std::invalid_argument("backward: tape was not recording");
  }
  loss->ensure_grad();
  loss->grad[0] += 1.0f;
  for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) (*it)();
}

GradCheckResult grad_check(const std::function<TensorPtr(Tape&)>& build_loss,
                           const std::vector<TensorPtr>& params, double h,
                           double tol) {
  // Analytic pass.
  for (const auto& p : params) p->zero_grad();
  Tape tape(true);
  auto loss = build_loss(tape);
  tape.backward(loss);
  std::vector<std::vector<float>> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) {
    p->ensure_grad();
    analytic.push_back(p->grad);
  }

  auto eval = [&build_loss]() {
    Tape t(false);
    return scalar_value(build_loss(t));
  };

  GradCheckResult res;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = params[pi];
    for (int i = 0; i < p->numel(); ++i) {
      const float orig = p->data[i];
      const float up = static_cast<float>(static_cast<double>(orig) + h);
      const float dn = static_cast<float>(static_cast<double>(orig) - h);
      p->data[i] = up;
      double fu = eval();
      p->data[i] = dn;
      double fd = eval();
      p->data[i] = orig;
      // Use the realized float step, not the nominal h.
      double fdg = (fu - fd) / (static_cast<double>(up) - static_cast<double>(dn));
      double adg = analytic[pi][i];
      double rel = std::abs(adg - fdg) /
                   std::max({std::abs(adg), std::abs(fdg), 1.0});
      if (rel > res.max_rel_err) {
        res.max_rel_err = rel;
        std::ostringstream os;
        os << (p->name.empty() ? "tensor" : p->name) << "[" << i / p->cols << ","
           << i % p->cols << "] ad=" << adg << " fd=" << fdg;
        res.worst = os.str();
      }
    }
  }
  res.pass = res.max_rel_err <= tol;
  return res;
}

}  // namespace gransformer
