#include "gransformer/made.hpp"

#include <cmath>
#include <stdexcept>

namespace gransformer {
namespace {

TensorPtr mask_from(const std::vector<int>& from_tags,
                    const std::vector<int>& to_tags, bool strict) {
  auto m = make_tensor(static_cast<int>(from_tags.size()),
                       static_cast<int>(to_tags.size()));
  for (size_t u = 0; u < from_tags.size(); ++u) {
    for (size_t w = 0; w < to_tags.size(); ++w) {
      const bool open = strict ? from_tags[u] < to_tags[w]
                               : from_tags[u] <= to_tags[w];
      m->data[u * to_tags.size() + w] = open ? 1.0f : 0.0f;
    }
  }
  return m;
}

}  // namespace

std::vector<TensorPtr> MadeParams::all() const {
  std::vector<TensorPtr> out;
  for (size_t l = 0; l < w.size(); ++l) {
    out.push_back(w[l]);
    out.push_back(b[l]);
  }
  out.push_back(w_out);
  out.push_back(b_out);
  out.push_back(w_direct);
  return out;
}

MadeMasks build_masks(int n_max, int cond_width,
                      const std::vector<int>& hidden_sizes, uint64_t seed) {
  if (n_max < 2) {
    throw std::invalid_argument("build_masks: n_max must be at least 2");
  }
  if (hidden_sizes.empty()) {
    throw std::invalid_argument("build_masks: need at least one hidden layer");
  }
  for (int hs : hidden_sizes) {
    if (hs < 1) {
      throw std::invalid_argument("build_masks: hidden sizes must be >= 1");
    }
  }
  MadeMasks masks;
  masks.n_max = n_max;
  masks.cond_width = cond_width;
  masks.hidden_sizes = hidden_sizes;
  masks.input_tags.assign(n_max + cond_width, 0);
  for (int j = 0; j < n_max; ++j) masks.input_tags[j] = j + 1;

  Rng rng(seed);
  for (int hs : hidden_sizes) {
    std::vector<int> tags(hs);
    for (int& t : tags) t = 1 + static_cast<int>(rng.below(n_max - 1));
    masks.hidden_tags.push_back(std::move(tags));
  }

  std::vector<int> out_tags(n_max);
  for (int j = 0; j < n_max; ++j) out_tags[j] = j + 1;

  const std::vector<int>* prev = &masks.input_tags;
  for (const auto& tags : masks.hidden_tags) {
    masks.layer_masks.push_back(mask_from(*prev, tags, false));
    prev = &tags;
  }
  masks.out_mask = mask_from(*prev, out_tags, true);
  masks.direct_mask = mask_from(masks.input_tags, out_tags, true);
  return masks;
}

MadeParams make_made_params(const std::string& prefix, const MadeMasks& masks,
                            Rng& rng, float scale_mult) {
  MadeParams p;
  int fan_in = masks.input_width();
  for (size_t l = 0; l < masks.hidden_sizes.size(); ++l) {
    const int width = masks.hidden_sizes[l];
    const float s = scale_mult / std::sqrt(static_cast<float>(fan_in));
    p.w.push_back(make_param(prefix + ".w" + std::to_string(l), fan_in, width,
                             rng, s));
    p.b.push_back(make_bias_param(prefix + ".b" + std::to_string(l), width));
    fan_in = width;
  }
  const float s_out = scale_mult / std::sqrt(static_cast<float>(fan_in));
  p.w_out = make_param(prefix + ".w_out", fan_in, masks.n_max, rng, s_out);
  p.b_out = make_param(prefix + ".b_out", 1, masks.n_max);
  const float s_dir =
      scale_mult / std::sqrt(static_cast<float>(masks.input_width()));
  p.w_direct = make_param(prefix + ".w_direct", masks.input_width(),
                          masks.n_max, rng, s_dir);
  return p;
}

TensorPtr made_forward(Tape& tape, const TensorPtr& target,
                       const TensorPtr& cond, const MadeMasks& masks,
                       const MadeParams& params) {
  if (target->cols != masks.n_max || cond->cols != masks.cond_width ||
      target->rows != cond->rows) {
    throw std::invalid_argument("made_forward: input shape mismatch");
  }
  TensorPtr x = tape.concat_cols({target, cond});
  TensorPtr z = x;
  for (size_t l = 0; l < params.w.size(); ++l) {
    TensorPtr wm = tape.mul(masks.layer_masks[l], params.w[l]);
    z = tape.relu(tape.add_rowwise(tape.matmul(z, wm), params.b[l]));
  }
  TensorPtr logits =
      tape.add(tape.matmul(z, tape.mul(masks.out_mask, params.w_out)),
               tape.matmul(x, tape.mul(masks.direct_mask, params.w_direct)));
  return tape.sigmoid(tape.add_rowwise(logits, params.b_out));
}

TensorPtr conditionals_for_zero_target(Tape& tape, const TensorPtr& cond,
                                       const MadeMasks& masks,
                                       const MadeParams& params) {
  TensorPtr zeros = make_tensor(cond->rows, masks.n_max);
  TensorPtr p = made_forward(tape, zeros, cond, masks, params);
  return tape.affine(p, -1.0, 1.0);
}

int n_bits_width(int n_max) {
  int bits = 0;
  while ((1 << bits) <= n_max) ++bits;
  return bits;
}

std::vector<float> n_bits(int n, int n_max) {
  if (n < 0 || n > n_max) {
    throw std::invalid_argument("n_bits: n out of range");
  }
  const int width = n_bits_width(n_max);
  std::vector<float> bits(width, 0.0f);
  for (int b = 0; b < width; ++b) {
    bits[b] = static_cast<float>((n >> (width - 1 - b)) & 1);
  }
  return bits;
}

}  // namespace gransformer
