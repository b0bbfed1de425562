#include "radpipe/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "radpipe/errors.hpp"
#include "radpipe/io.hpp"

namespace radpipe {

size_t TinyEncoderConfig::param_count() const {
  size_t d = width, h = ffn_width, V = vocab_size;
  return V * d + max_positions * d        // embeddings
         + 4 * d * d + 4 * d              // attention
         + d * h + h + h * d + d          // ffn
         + d * V + V                      // generator head
         + d + 1                          // discriminator head
         + d * n_sections + n_sections;   // section head
}

TinyEncoder::TinyEncoder(const TinyEncoderConfig& cfg) : cfg_(cfg) {
  size_t d = cfg.width, h = cfg.ffn_width, V = cfg.vocab_size;
  tok_emb_ = Tensor(V, d);
  pos_emb_ = Tensor(cfg.max_positions, d);
  wq_ = Tensor(d, d); wk_ = Tensor(d, d); wv_ = Tensor(d, d); wo_ = Tensor(d, d);
  bq_ = Tensor(1, d); bk_ = Tensor(1, d); bv_ = Tensor(1, d); bo_ = Tensor(1, d);
  w1_ = Tensor(d, h); b1_ = Tensor(1, h); w2_ = Tensor(h, d); b2_ = Tensor(1, d);
  wg_ = Tensor(d, V); bg_ = Tensor(1, V);
  wd_ = Tensor(d, 1); bd_ = Tensor(1, 1);
  ws_ = Tensor(d, cfg.n_sections); bs_ = Tensor(1, cfg.n_sections);
  register_params();
}

void TinyEncoder::register_params() {
  params_.clear();
  auto reg = [&](const char* name, Tensor& value, Tensor& grad) {
    grad = Tensor(value.rows, value.cols);
    params_.push_back({name, &value, &grad});
  };
  reg("tok_emb", tok_emb_, g_tok_emb_);
  reg("pos_emb", pos_emb_, g_pos_emb_);
  reg("attn.wq", wq_, g_wq_); reg("attn.bq", bq_, g_bq_);
  reg("attn.wk", wk_, g_wk_); reg("attn.bk", bk_, g_bk_);
  reg("attn.wv", wv_, g_wv_); reg("attn.bv", bv_, g_bv_);
  reg("attn.wo", wo_, g_wo_); reg("attn.bo", bo_, g_bo_);
  reg("ffn.w1", w1_, g_w1_); reg("ffn.b1", b1_, g_b1_);
  reg("ffn.w2", w2_, g_w2_); reg("ffn.b2", b2_, g_b2_);
  reg("gen.w", wg_, g_wg_); reg("gen.b", bg_, g_bg_);
  reg("disc.w", wd_, g_wd_); reg("disc.b", bd_, g_bd_);
  reg("sec.w", ws_, g_ws_); reg("sec.b", bs_, g_bs_);
}

void TinyEncoder::init(uint64_t seed) {
  Rng rng(seed);
  auto gauss = [&]() {
    double u1 = rng.next_double();
    double u2 = rng.next_double();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  };
  for (Param& p : params_) {
    bool is_bias = p.name.find(".b") != std::string::npos;
    for (double& x : p.value->v) x = is_bias ? 0.0 : 0.02 * gauss();
  }
}

void TinyEncoder::zero_grads() {
  for (Param& p : params_) p.grad->zero();
}

// ---------------------------------------------------------------------------
// forward

void softmax_inplace(std::vector<double>& row) {
  double mx = *std::max_element(row.begin(), row.end());
  double denom = 0;
  for (double& x : row) {
    x = std::exp(x - mx);
    denom += x;
  }
  for (double& x : row) x /= denom;
}

namespace {

// out = x * w + b  (x: L x d, w: d x m, b: 1 x m)
Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
  Tensor out(x.rows, w.cols);
  for (size_t i = 0; i < x.rows; ++i)
    for (size_t k = 0; k < x.cols; ++k) {
      double xv = x(i, k);
      if (xv == 0.0) continue;
      const double* wrow = &w.v[k * w.cols];
      double* orow = &out.v[i * out.cols];
      for (size_t j = 0; j < w.cols; ++j) orow[j] += xv * wrow[j];
    }
  for (size_t i = 0; i < out.rows; ++i)
    for (size_t j = 0; j < out.cols; ++j) out(i, j) += b(0, j);
  return out;
}

// accumulate dw += x^T * dy and db += colsum(dy); returns dx = dy * w^T
Tensor affine_backward(const Tensor& x, const Tensor& w, const Tensor& dy, Tensor* dw, Tensor* db) {
  for (size_t i = 0; i < x.rows; ++i)
    for (size_t k = 0; k < x.cols; ++k) {
      double xv = x(i, k);
      if (xv == 0.0) continue;
      const double* dyrow = &dy.v[i * dy.cols];
      double* dwrow = &dw->v[k * dw->cols];
      for (size_t j = 0; j < dy.cols; ++j) dwrow[j] += xv * dyrow[j];
    }
  for (size_t i = 0; i < dy.rows; ++i)
    for (size_t j = 0; j < dy.cols; ++j) (*db)(0, j) += dy(i, j);
  Tensor dx(x.rows, x.cols);
  for (size_t i = 0; i < dy.rows; ++i)
    for (size_t j = 0; j < dy.cols; ++j) {
      double dv = dy(i, j);
      if (dv == 0.0) continue;
      const double* wrow = &w.v[0];
      for (size_t k = 0; k < x.cols; ++k) dx(i, k) += dv * wrow[k * w.cols + j];
    }
  return dx;
}

}  // namespace

TinyEncoder::Cache TinyEncoder::forward(const std::vector<int>& ids) const {
  size_t L = ids.size();
  size_t d = cfg_.width;
  if (L > cfg_.max_positions)
    throw PipelineError("TinyEncoder: sequence length " + std::to_string(L) +
                        " exceeds max positions " + std::to_string(cfg_.max_positions));
  Cache cc;
  cc.ids = ids;
  cc.e = Tensor(L, d);
  for (size_t t = 0; t < L; ++t)
    for (size_t j = 0; j < d; ++j)
      cc.e(t, j) = tok_emb_(static_cast<size_t>(ids[t]), j) + pos_emb_(t, j);

  cc.q = affine(cc.e, wq_, bq_);
  cc.k = affine(cc.e, wk_, bk_);
  cc.v = affine(cc.e, wv_, bv_);

  double scale = 1.0 / std::sqrt(static_cast<double>(d));
  cc.a = Tensor(L, L);
  std::vector<double> row(L);
  for (size_t i = 0; i < L; ++i) {
    for (size_t j = 0; j < L; ++j) {
      double s = 0;
      for (size_t k = 0; k < d; ++k) s += cc.q(i, k) * cc.k(j, k);
      row[j] = s * scale;
    }
    softmax_inplace(row);
    for (size_t j = 0; j < L; ++j) cc.a(i, j) = row[j];
  }

  cc.c = Tensor(L, d);
  for (size_t i = 0; i < L; ++i)
    for (size_t j = 0; j < L; ++j) {
      double av = cc.a(i, j);
      if (av == 0.0) continue;
      for (size_t k = 0; k < d; ++k) cc.c(i, k) += av * cc.v(j, k);
    }

  cc.o = affine(cc.c, wo_, bo_);
  cc.h1 = Tensor(L, d);
  for (size_t i = 0; i < L * d; ++i) cc.h1.v[i] = cc.e.v[i] + cc.o.v[i];

  Tensor fpre = affine(cc.h1, w1_, b1_);
  cc.fact = fpre;
  for (double& x : cc.fact.v) x = std::tanh(x);
  Tensor f = affine(cc.fact, w2_, b2_);
  cc.h = Tensor(L, d);
  for (size_t i = 0; i < L * d; ++i) cc.h.v[i] = cc.h1.v[i] + f.v[i];
  return cc;
}

std::vector<std::vector<double>> TinyEncoder::gen_logit_rows(
    const Cache& cache, const std::vector<size_t>& positions) const {
  size_t d = cfg_.width, V = cfg_.vocab_size;
  std::vector<std::vector<double>> rows;
  rows.reserve(positions.size());
  for (size_t pos : positions) {
    std::vector<double> row(V);
    for (size_t j = 0; j < V; ++j) row[j] = bg_(0, j);
    for (size_t k = 0; k < d; ++k) {
      double hv = cache.h(pos, k);
      if (hv == 0.0) continue;
      const double* wrow = &wg_.v[k * V];
      for (size_t j = 0; j < V; ++j) row[j] += hv * wrow[j];
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<double> TinyEncoder::disc_logits(const Cache& cache) const {
  size_t L = cache.h.rows, d = cfg_.width;
  std::vector<double> out(L);
  for (size_t t = 0; t < L; ++t) {
    double z = bd_(0, 0);
    for (size_t k = 0; k < d; ++k) z += cache.h(t, k) * wd_(k, 0);
    out[t] = z;
  }
  return out;
}

std::vector<double> TinyEncoder::pooled(const Cache& cache, size_t start, size_t end) const {
  size_t d = cfg_.width;
  std::vector<double> out(d, 0.0);
  double inv = 1.0 / static_cast<double>(end - start);
  for (size_t t = start; t < end; ++t)
    for (size_t k = 0; k < d; ++k) out[k] += cache.h(t, k) * inv;
  return out;
}

std::vector<double> TinyEncoder::section_logits(const Cache& cache, size_t start,
                                                size_t end) const {
  std::vector<double> p = pooled(cache, start, end);
  std::vector<double> out(cfg_.n_sections);
  for (size_t j = 0; j < cfg_.n_sections; ++j) {
    double z = bs_(0, j);
    for (size_t k = 0; k < cfg_.width; ++k) z += p[k] * ws_(k, j);
    out[j] = z;
  }
  return out;
}

// ---------------------------------------------------------------------------
// backward

void TinyEncoder::backward_gen_rows(const Cache& cache, const std::vector<size_t>& positions,
                                    const std::vector<std::vector<double>>& dlogits, Tensor* dh) {
  size_t d = cfg_.width, V = cfg_.vocab_size;
  for (size_t r = 0; r < positions.size(); ++r) {
    size_t pos = positions[r];
    const std::vector<double>& dl = dlogits[r];
    for (size_t j = 0; j < V; ++j) g_bg_(0, j) += dl[j];
    for (size_t k = 0; k < d; ++k) {
      double hv = cache.h(pos, k);
      double acc = 0;
      double* gw = &g_wg_.v[k * V];
      const double* w = &wg_.v[k * V];
      for (size_t j = 0; j < V; ++j) {
        gw[j] += hv * dl[j];
        acc += w[j] * dl[j];
      }
      (*dh)(pos, k) += acc;
    }
  }
}

void TinyEncoder::backward_disc(const Cache& cache, const std::vector<double>& dlogits,
                                Tensor* dh) {
  size_t d = cfg_.width;
  for (size_t t = 0; t < dlogits.size(); ++t) {
    double dz = dlogits[t];
    if (dz == 0.0) continue;
    g_bd_(0, 0) += dz;
    for (size_t k = 0; k < d; ++k) {
      g_wd_(k, 0) += cache.h(t, k) * dz;
      (*dh)(t, k) += wd_(k, 0) * dz;
    }
  }
}

void TinyEncoder::backward_pooled(const Cache& cache, size_t start, size_t end,
                                  const std::vector<double>& dpooled, Tensor* dh) {
  (void)cache;
  double inv = 1.0 / static_cast<double>(end - start);
  for (size_t t = start; t < end; ++t)
    for (size_t k = 0; k < cfg_.width; ++k) (*dh)(t, k) += dpooled[k] * inv;
}

void TinyEncoder::backward_section(const Cache& cache, size_t start, size_t end,
                                   const std::vector<double>& dlogits, Tensor* dh) {
  size_t d = cfg_.width;
  std::vector<double> p = pooled(cache, start, end);
  std::vector<double> dpooled(d, 0.0);
  for (size_t j = 0; j < cfg_.n_sections; ++j) {
    double dz = dlogits[j];
    g_bs_(0, j) += dz;
    for (size_t k = 0; k < d; ++k) {
      g_ws_(k, j) += p[k] * dz;
      dpooled[k] += ws_(k, j) * dz;
    }
  }
  backward_pooled(cache, start, end, dpooled, dh);
}

void TinyEncoder::backward_encoder(const Cache& cache, const Tensor& dh) {
  size_t L = cache.h.rows, d = cfg_.width;
  double scale = 1.0 / std::sqrt(static_cast<double>(d));

  // ffn: h = h1 + tanh(h1 w1 + b1) w2 + b2
  Tensor dh1 = dh;  // residual path
  Tensor dfact = affine_backward(cache.fact, w2_, dh, &g_w2_, &g_b2_);
  for (size_t i = 0; i < L * cfg_.ffn_width; ++i)
    dfact.v[i] *= 1.0 - cache.fact.v[i] * cache.fact.v[i];
  Tensor dh1_ffn = affine_backward(cache.h1, w1_, dfact, &g_w1_, &g_b1_);
  for (size_t i = 0; i < L * d; ++i) dh1.v[i] += dh1_ffn.v[i];

  // attention output: h1 = e + (a v) wo + bo
  Tensor de = dh1;  // residual path
  Tensor dc = affine_backward(cache.c, wo_, dh1, &g_wo_, &g_bo_);

  // c = a v
  Tensor da(L, L);
  Tensor dv(L, d);
  for (size_t i = 0; i < L; ++i)
    for (size_t j = 0; j < L; ++j) {
      double acc = 0;
      for (size_t k = 0; k < d; ++k) acc += dc(i, k) * cache.v(j, k);
      da(i, j) = acc;
      double av = cache.a(i, j);
      if (av != 0.0)
        for (size_t k = 0; k < d; ++k) dv(j, k) += av * dc(i, k);
    }

  // softmax rows: ds = a * (da - rowdot(da, a))
  Tensor ds(L, L);
  for (size_t i = 0; i < L; ++i) {
    double dot = 0;
    for (size_t j = 0; j < L; ++j) dot += da(i, j) * cache.a(i, j);
    for (size_t j = 0; j < L; ++j) ds(i, j) = cache.a(i, j) * (da(i, j) - dot);
  }

  // s = q k^T * scale
  Tensor dq(L, d), dk(L, d);
  for (size_t i = 0; i < L; ++i)
    for (size_t j = 0; j < L; ++j) {
      double dsv = ds(i, j) * scale;
      if (dsv == 0.0) continue;
      for (size_t k = 0; k < d; ++k) {
        dq(i, k) += dsv * cache.k(j, k);
        dk(j, k) += dsv * cache.q(i, k);
      }
    }

  Tensor de_q = affine_backward(cache.e, wq_, dq, &g_wq_, &g_bq_);
  Tensor de_k = affine_backward(cache.e, wk_, dk, &g_wk_, &g_bk_);
  Tensor de_v = affine_backward(cache.e, wv_, dv, &g_wv_, &g_bv_);
  for (size_t i = 0; i < L * d; ++i) de.v[i] += de_q.v[i] + de_k.v[i] + de_v.v[i];

  for (size_t t = 0; t < L; ++t)
    for (size_t j = 0; j < d; ++j) {
      g_tok_emb_(static_cast<size_t>(cache.ids[t]), j) += de(t, j);
      g_pos_emb_(t, j) += de(t, j);
    }
}

// ---------------------------------------------------------------------------
// checkpointing

namespace {
constexpr char kMagic[4] = {'R', 'P', 'C', 'K'};
constexpr uint32_t kVersion = 1;
}  // namespace

void TinyEncoder::save(const std::string& path) const {
  std::string out;
  out.append(kMagic, 4);
  auto put_u32 = [&](uint32_t v) { out.append(reinterpret_cast<const char*>(&v), 4); };
  auto put_u64 = [&](uint64_t v) { out.append(reinterpret_cast<const char*>(&v), 8); };
  put_u32(kVersion);
  put_u32(static_cast<uint32_t>(params_.size()));
  for (const Param& p : params_) {
    put_u32(static_cast<uint32_t>(p.name.size()));
    out += p.name;
    put_u64(p.value->rows);
    put_u64(p.value->cols);
    out.append(reinterpret_cast<const char*>(p.value->v.data()), p.value->v.size() * sizeof(double));
  }
  write_file(path, out);
}

void TinyEncoder::load(const std::string& path) {
  std::string in = read_file(path);
  size_t off = 0;
  auto take = [&](void* dst, size_t n) {
    if (off + n > in.size()) throw ConfigError("checkpoint truncated: " + path);
    std::memcpy(dst, in.data() + off, n);
    off += n;
  };
  char magic[4];
  take(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw ConfigError("not a checkpoint file: " + path);
  uint32_t version = 0, count = 0;
  take(&version, 4);
  if (version != kVersion) throw ConfigError("unsupported checkpoint version");
  take(&count, 4);
  if (count != params_.size()) throw ConfigError("checkpoint parameter count mismatch");
  for (Param& p : params_) {
    uint32_t name_len = 0;
    take(&name_len, 4);
    std::string name(name_len, '\0');
    take(name.data(), name_len);
    if (name != p.name) throw ConfigError("checkpoint parameter order mismatch: " + name);
    uint64_t rows = 0, cols = 0;
    take(&rows, 8);
    take(&cols, 8);
    if (rows != p.value->rows || cols != p.value->cols)
      throw ConfigError("checkpoint shape mismatch for " + name);
    take(p.value->v.data(), p.value->v.size() * sizeof(double));
  }
}

// ---------------------------------------------------------------------------
// generator helpers

std::vector<std::vector<double>> forward_generator(const TinyEncoder& enc,
                                                   const std::vector<int>& x_masked,
                                                   const std::vector<size_t>& masked) {
  TinyEncoder::Cache cache = enc.forward(x_masked);
  std::vector<std::vector<double>> rows = enc.gen_logit_rows(cache, masked);
  for (auto& row : rows) softmax_inplace(row);
  return rows;
}

std::vector<int> sample_corrupt(const std::vector<std::vector<double>>& p_g,
                                const std::vector<int>& x, const std::vector<size_t>& masked,
                                uint64_t seed) {
  std::vector<int> out = x;
  Rng rng(seed);
  for (size_t i = 0; i < masked.size(); ++i) {
    double u = rng.next_double();
    const std::vector<double>& row = p_g[i];
    double acc = 0;
    size_t pick = row.size() - 1;
    for (size_t j = 0; j < row.size(); ++j) {
      acc += row[j];
      if (u < acc) {
        pick = j;
        break;
      }
    }
    out[masked[i]] = static_cast<int>(pick);
  }
  return out;
}

}  // namespace radpipe
