#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "radpipe/rng.hpp"

namespace radpipe {

struct Tensor {
  size_t rows = 0, cols = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(size_t r, size_t c) : rows(r), cols(c), v(r * c, 0.0) {}
  double& operator()(size_t i, size_t j) { return v[i * cols + j]; }
  double operator()(size_t i, size_t j) const { return v[i * cols + j]; }
  size_t size() const { return v.size(); }
  void zero() { std::fill(v.begin(), v.end(), 0.0); }
};

struct TinyEncoderConfig {
  size_t vocab_size = 0;
  size_t width = 32;        // d
  size_t ffn_width = 64;    // hidden width of the feed-forward block
  size_t max_positions = 128;
  size_t n_sections = 5;

  size_t param_count() const;
};

/// Embeddings + one single-head self-attention block with a tanh feed-forward
/// (both with residual connections) + three per-token/pooled heads. All math
/// in double precision with hand-written backward passes.
class TinyEncoder {
 public:
  explicit TinyEncoder(const TinyEncoderConfig& cfg);

  void init(uint64_t seed);  // normal(0, 0.02) everywhere

  const TinyEncoderConfig& config() const { return cfg_; }

  struct Cache {
    std::vector<int> ids;
    Tensor e, q, k, v, a, c, o, h1, fact, h;
  };

  Cache forward(const std::vector<int>& ids) const;

  /// Vocabulary logits of selected rows (generator head).
  std::vector<std::vector<double>> gen_logit_rows(const Cache& cache,
                                                  const std::vector<size_t>& positions) const;
  /// Per-position scalar logits (discriminator head).
  std::vector<double> disc_logits(const Cache& cache) const;
  /// Five-way logits over the mean-pooled range [start, end).
  std::vector<double> section_logits(const Cache& cache, size_t start, size_t end) const;
  /// Mean-pooled encoding of [start, end).
  std::vector<double> pooled(const Cache& cache, size_t start, size_t end) const;

  // Backward entry points. Each accumulates parameter gradients and adds the
  // propagated dH into `dh` (caller owns one dh per forward, then calls
  // backward_encoder once).
  void backward_gen_rows(const Cache& cache, const std::vector<size_t>& positions,
                         const std::vector<std::vector<double>>& dlogits, Tensor* dh);
  void backward_disc(const Cache& cache, const std::vector<double>& dlogits, Tensor* dh);
  void backward_section(const Cache& cache, size_t start, size_t end,
                        const std::vector<double>& dlogits, Tensor* dh);
  void backward_pooled(const Cache& cache, size_t start, size_t end,
                       const std::vector<double>& dpooled, Tensor* dh);
  void backward_encoder(const Cache& cache, const Tensor& dh);

  struct Param {
    std::string name;
    Tensor* value;
    Tensor* grad;
  };
  std::vector<Param>& params() { return params_; }
  const std::vector<Param>& params() const { return params_; }
  void zero_grads();

  void save(const std::string& path) const;
  /// Loads a checkpoint saved by save(); shapes must match the config.
  void load(const std::string& path);

 private:
  void register_params();

  TinyEncoderConfig cfg_;
  Tensor tok_emb_, pos_emb_;
  Tensor wq_, wk_, wv_, wo_, bq_, bk_, bv_, bo_;
  Tensor w1_, b1_, w2_, b2_;
  Tensor wg_, bg_, wd_, bd_, ws_, bs_;
  Tensor g_tok_emb_, g_pos_emb_;
  Tensor g_wq_, g_wk_, g_wv_, g_wo_, g_bq_, g_bk_, g_bv_, g_bo_;
  Tensor g_w1_, g_b1_, g_w2_, g_b2_;
  Tensor g_wg_, g_bg_, g_wd_, g_bd_, g_ws_, g_bs_;
  std::vector<Param> params_;
};

/// Softmax with max subtraction, in place over a row.
void softmax_inplace(std::vector<double>& row);

/// Generator distributions at the masked positions (softmax over vocabulary).
std::vector<std::vector<double>> forward_generator(const TinyEncoder& enc,
                                                   const std::vector<int>& x_masked,
                                                   const std::vector<size_t>& masked);

/// Replaces positions in `masked` by categorical samples from the matching
/// p_g row; other positions copy from x. Deterministic per seed.
std::vector<int> sample_corrupt(const std::vector<std::vector<double>>& p_g,
                                const std::vector<int>& x, const std::vector<size_t>& masked,
                                uint64_t seed);

}  // namespace radpipe
