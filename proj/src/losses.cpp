#include "radpipe/losses.hpp"

#include <algorithm>
#include <cmath>

#include "radpipe/errors.hpp"

namespace radpipe {

namespace {

double clamp_prob(double p, LossStats* stats) {
  if (p < kLossEpsilon) {
    if (stats) ++stats->clamped;
    return kLossEpsilon;
  }
  if (p > 1.0 - kLossEpsilon) {
    if (stats) ++stats->clamped;
    return 1.0 - kLossEpsilon;
  }
  return p;
}

struct CosineParts {
  double dot = 0, na = 0, np = 0;  // dot product and the two norms
};

CosineParts cosine_parts(const EncodingBatch& b, size_t l, size_t i, size_t j) {
  CosineParts c;
  for (size_t k = 0; k < b.width; ++k) {
    double av = b.a(i, l, k);
    double pv = b.p(j, l, k);
    c.dot += av * pv;
    c.na += av * av;
    c.np += pv * pv;
  }
  c.na = std::sqrt(c.na);
  c.np = std::sqrt(c.np);
  if (c.na == 0.0 || c.np == 0.0)
    throw PipelineError("l_reg: zero-norm encoding, cosine similarity undefined");
  return c;
}

double reduce(double sum, size_t count, Reduction r) {
  if (r == Reduction::Mean && count > 0) return sum / static_cast<double>(count);
  return sum;
}

}  // namespace

double l_reg(const EncodingBatch& batch, const LossConfig& cfg) {
  size_t B = batch.batch;
  size_t l = cfg.reg_layer;
  if (B == 0) throw PipelineError("l_reg: empty batch");
  if (batch.tau <= 0) throw PipelineError("l_reg: tau must be positive");

  // s[i][j] = cos(hA_i, hP_j) / tau
  std::vector<double> s(B * B);
  for (size_t i = 0; i < B; ++i)
    for (size_t j = 0; j < B; ++j) {
      CosineParts c = cosine_parts(batch, l, i, j);
      s[i * B + j] = (c.dot / (c.na * c.np)) / batch.tau;
    }

  double total = 0;
  for (size_t i = 0; i < B; ++i) {
    double mx = s[i * B];
    for (size_t j = 1; j < B; ++j) mx = std::max(mx, s[i * B + j]);
    double denom = 0;
    for (size_t j = 0; j < B; ++j) denom += std::exp(s[i * B + j] - mx);
    total += std::exp(s[i * B + i] - mx) / denom;  // softmax row i at column i
  }
  double value = std::log(total) / static_cast<double>(B);
  return cfg.reg_sign >= 0 ? value : -value;
}

void l_reg_backward(const EncodingBatch& batch, const LossConfig& cfg, std::vector<double>* grad_a,
                    std::vector<double>* grad_p) {
  size_t B = batch.batch;
  size_t l = cfg.reg_layer;
  size_t d = batch.width;
  grad_a->assign(batch.h_a.size(), 0.0);
  grad_p->assign(batch.h_p.size(), 0.0);

  std::vector<CosineParts> parts(B * B);
  std::vector<double> s(B * B);
  for (size_t i = 0; i < B; ++i)
    for (size_t j = 0; j < B; ++j) {
      parts[i * B + j] = cosine_parts(batch, l, i, j);
      const CosineParts& c = parts[i * B + j];
      s[i * B + j] = (c.dot / (c.na * c.np)) / batch.tau;
    }

  // softmax rows and the total S = sum_i softmax_i(i)
  std::vector<double> soft(B * B);
  double S = 0;
  for (size_t i = 0; i < B; ++i) {
    double mx = s[i * B];
    for (size_t j = 1; j < B; ++j) mx = std::max(mx, s[i * B + j]);
    double denom = 0;
    for (size_t j = 0; j < B; ++j) denom += std::exp(s[i * B + j] - mx);
    for (size_t j = 0; j < B; ++j) soft[i * B + j] = std::exp(s[i * B + j] - mx) / denom;
    S += soft[i * B + i];
  }

  double sign = cfg.reg_sign >= 0 ? 1.0 : -1.0;
  for (size_t i = 0; i < B; ++i) {
    double r_i = soft[i * B + i];
    for (size_t j = 0; j < B; ++j) {
      // dL/ds_ij = (1/(B*S)) * r_i * (delta_ij - soft_i(j)), times the sign
      double dl_ds = sign * r_i * ((i == j ? 1.0 : 0.0) - soft[i * B + j]) /
                     (static_cast<double>(B) * S);
      if (dl_ds == 0.0) continue;
      const CosineParts& c = parts[i * B + j];
      double cos_ij = c.dot / (c.na * c.np);
      for (size_t k = 0; k < d; ++k) {
        double av = batch.a(i, l, k);
        double pv = batch.p(j, l, k);
        double dcos_da = pv / (c.na * c.np) - cos_ij * av / (c.na * c.na);
        double dcos_dp = av / (c.na * c.np) - cos_ij * pv / (c.np * c.np);
        (*grad_a)[(i * batch.layers + l) * d + k] += dl_ds * dcos_da / batch.tau;
        (*grad_p)[(j * batch.layers + l) * d + k] += dl_ds * dcos_dp / batch.tau;
      }
    }
  }
}

double l_mlm(const RtdBatch& batch, double reg, double lambda_a, const LossConfig& cfg,
             LossStats* stats) {
  if (batch.masked.empty()) throw PipelineError("l_mlm: masked position set is empty");
  double sum = 0;
  for (size_t i = 0; i < batch.masked.size(); ++i) {
    size_t pos = batch.masked[i];
    int target = batch.x[pos];
    double p = clamp_prob(batch.p_g[i][static_cast<size_t>(target)], stats);
    sum += -std::log(p);
  }
  return lambda_a * reg + reduce(sum, batch.masked.size(), cfg.reduction);
}

double l_disc(const RtdBatch& batch, double reg, double lambda_a, const LossConfig& cfg,
              LossStats* stats) {
  double sum = 0;
  for (size_t t = 0; t < batch.length(); ++t) {
    double d = clamp_prob(batch.d[t], stats);
    if (batch.x_corrupt[t] == batch.x[t]) sum += -std::log(d);
    else sum += -std::log(1.0 - d);
  }
  return lambda_a * reg + reduce(sum, batch.length(), cfg.reduction);
}

bool kg_position_real(const RtdBatch& batch, size_t t) {
  if (batch.x_corrupt[t] == batch.x[t]) return true;  // reflexive membership
  if (!batch.has_links()) return false;
  if (!batch.linked_orig[t] || !batch.linked_corrupt[t]) return false;
  for (const std::string& s : batch.sites_corrupt[t])
    if (batch.sites_orig[t].count(s)) return true;
  for (const std::string& b : batch.bodysys_corrupt[t])
    if (batch.bodysys_orig[t].count(b)) return true;
  return false;
}

double l_kg(const RtdBatch& batch, const LossConfig& cfg, LossStats* stats) {
  double sum = 0;
  for (size_t t = 0; t < batch.length(); ++t) {
    double d = clamp_prob(batch.d[t], stats);
    if (kg_position_real(batch, t)) sum += -std::log(d);
    else sum += -std::log(1.0 - d);
  }
  return reduce(sum, batch.length(), cfg.reduction);
}

double l_disc_kg(const RtdBatch& batch, double reg, const LossWeights& weights,
                 const LossConfig& cfg, LossStats* stats) {
  double disc = l_disc(batch, reg, weights.lambda_a, cfg, stats);
  if (weights.lambda_kg == 0.0) return disc;
  return disc + weights.lambda_kg * l_kg(batch, cfg, stats);
}

std::vector<double> mlm_grad_row(const std::vector<double>& p_row, size_t target) {
  std::vector<double> g = p_row;
  g[target] -= 1.0;
  return g;
}

double disc_grad_logit(double d_value, bool real) {
  return real ? d_value - 1.0 : d_value;
}

double grad_check(const std::function<double(const std::vector<double>&)>& f,
                  const std::vector<double>& x, const std::vector<double>& analytic, double eps) {
  std::vector<double> probe = x;
  double worst = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + eps;
    double up = f(probe);
    probe[i] = x[i] - eps;
    double down = f(probe);
    probe[i] = x[i];
    double numeric = (up - down) / (2 * eps);
    double err = std::fabs(numeric - analytic[i]) /
                 std::max({1.0, std::fabs(numeric), std::fabs(analytic[i])});
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace radpipe
