#pragma once

#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <vector>

namespace radpipe {

/// Sentence encodings from the adapted (A) and general (P) encoders:
/// B sentences, L layers, width d, stored row-major as [b][l][d].
struct EncodingBatch {
  size_t batch = 0, layers = 1, width = 0;
  std::vector<double> h_a;
  std::vector<double> h_p;
  double tau = 1.0;

  double a(size_t b, size_t l, size_t j) const { return h_a[(b * layers + l) * width + j]; }
  double p(size_t b, size_t l, size_t j) const { return h_p[(b * layers + l) * width + j]; }
};

/// One sequence of replaced-token-detection data. p_g rows are the generator
/// distributions at masked positions; d holds discriminator sigmoid outputs.
struct RtdBatch {
  std::vector<int> x;          // original token ids
  std::vector<int> x_corrupt;  // after generator sampling
  std::vector<size_t> masked;  // masked position set m
  std::vector<std::vector<double>> p_g;  // |masked| rows over the vocabulary
  std::vector<double> d;       // per-position discriminator outputs in (0,1)

  // knowledge links for l_kg; empty sets mean "unlinked"
  std::vector<std::set<std::string>> sites_orig;
  std::vector<std::set<std::string>> sites_corrupt;
  std::vector<std::set<std::string>> bodysys_orig;
  std::vector<std::set<std::string>> bodysys_corrupt;
  std::vector<bool> linked_orig;
  std::vector<bool> linked_corrupt;

  size_t length() const { return x.size(); }
  bool has_links() const { return !linked_orig.empty(); }
};

struct LossWeights {
  double lambda_a = 1.0;
  double lambda_kg = 1.0;
};

enum class Reduction { Sum, Mean };

struct LossConfig {
  Reduction reduction = Reduction::Sum;
  int reg_sign = +1;   // +1 follows the printed formula; -1 for the negated convention
  size_t reg_layer = 0;  // which encoder layer enters the regularizer (0 = final when layers==1)
};

struct LossStats {
  uint64_t clamped = 0;  // probabilities clamped at epsilon
};

constexpr double kLossEpsilon = 1e-12;

/// Contrastive vocabulary-adaptation regularizer:
/// (1/B) log sum_i exp(sim(hA_i,hP_i)/tau) / sum_j exp(sim(hA_i,hP_j)/tau),
/// sim = cosine. Stabilized by per-row max subtraction. Exactly 0 for B == 1.
/// Throws PipelineError on a zero-norm encoding.
double l_reg(const EncodingBatch& batch, const LossConfig& cfg = {});

/// Gradients of l_reg w.r.t. h_a and h_p (same layout as the inputs).
void l_reg_backward(const EncodingBatch& batch, const LossConfig& cfg, std::vector<double>* grad_a,
                    std::vector<double>* grad_p);

/// Generator loss: lambda_a * reg + sum_{i in m} -log p_g(x_i | x_masked).
double l_mlm(const RtdBatch& batch, double reg, double lambda_a, const LossConfig& cfg = {},
             LossStats* stats = nullptr);

/// Discriminator RTD loss:
/// lambda_a * reg + sum_t -1[corrupt==orig] log D_t - 1[corrupt!=orig] log(1-D_t).
double l_disc(const RtdBatch& batch, double reg, double lambda_a, const LossConfig& cfg = {},
              LossStats* stats = nullptr);

/// Knowledge regularizer: a position counts as "real" when the corrupt token
/// equals the original, or when both tokens link to concepts that share an
/// anatomical site or a body-system branch. Unlinked positions fall back to
/// the plain RTD indicator.
double l_kg(const RtdBatch& batch, const LossConfig& cfg = {}, LossStats* stats = nullptr);

/// Final discriminator loss: l_disc + lambda_kg * l_kg.
double l_disc_kg(const RtdBatch& batch, double reg, const LossWeights& weights,
                 const LossConfig& cfg = {}, LossStats* stats = nullptr);

/// Per-position "real-equivalent" indicator used by l_kg.
bool kg_position_real(const RtdBatch& batch, size_t t);

// ---------------------------------------------------------------------------
// analytic gradients for the trainer (w.r.t. pre-sigmoid / pre-softmax logits)

/// d l_mlm / d logits for one masked row: softmax(row) - onehot(target).
std::vector<double> mlm_grad_row(const std::vector<double>& p_row, size_t target);

/// d/dz of -log sigma(z) when real, -log(1-sigma(z)) when fake: D - 1[real].
double disc_grad_logit(double d_value, bool real);

// ---------------------------------------------------------------------------
// finite-difference gradient checking

/// Max relative error between analytic gradients and central finite
/// differences of `f` over `x`; error is |a-n| / max(1, |a|, |n|).
double grad_check(const std::function<double(const std::vector<double>&)>& f,
                  const std::vector<double>& x, const std::vector<double>& analytic,
                  double eps = 1e-5);

}  // namespace radpipe
