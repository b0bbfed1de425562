#include "radpipe/verify.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <tuple>

#include "radpipe/annotator.hpp"
#include "radpipe/corpus.hpp"
#include "radpipe/errors.hpp"
#include "radpipe/losses.hpp"
#include "radpipe/masking.hpp"
#include "radpipe/model.hpp"
#include "radpipe/pipeline.hpp"
#include "radpipe/rng.hpp"
#include "radpipe/syngen.hpp"
#include "radpipe/taxonomy.hpp"
#include "radpipe/tokenizer.hpp"

namespace radpipe {

namespace {

// -------------------------------------------------------------- harness

struct Checker {
  std::ostringstream out;
  bool ok = true;
  size_t passed = 0, failed = 0;

  void check(const std::string& name, bool cond, const std::string& detail = "") {
    if (cond) {
      ++passed;
      out << "PASS " << name << "\n";
    } else {
      ++failed;
      ok = false;
      out << "FAIL " << name << (detail.empty() ? "" : ": " + detail) << "\n";
    }
  }
};

// ------------------------------------------------ naive loss references
// Straight transliterations of the formulas, kept independent of the
// stabilized kernels in losses.cpp.

double naive_cos(const EncodingBatch& b, size_t i, size_t j) {
  double dot = 0, na = 0, np = 0;
  for (size_t k = 0; k < b.width; ++k) {
    dot += b.a(i, 0, k) * b.p(j, 0, k);
    na += b.a(i, 0, k) * b.a(i, 0, k);
    np += b.p(j, 0, k) * b.p(j, 0, k);
  }
  return dot / (std::sqrt(na) * std::sqrt(np));
}

double naive_l_reg(const EncodingBatch& b) {
  double total = 0;
  for (size_t i = 0; i < b.batch; ++i) {
    double denom = 0;
    for (size_t j = 0; j < b.batch; ++j) denom += std::exp(naive_cos(b, i, j) / b.tau);
    total += std::exp(naive_cos(b, i, i) / b.tau) / denom;
  }
  return std::log(total) / static_cast<double>(b.batch);
}

double naive_l_mlm(const RtdBatch& b, double reg, double la) {
  double s = 0;
  for (size_t i = 0; i < b.masked.size(); ++i)
    s += -std::log(b.p_g[i][static_cast<size_t>(b.x[b.masked[i]])]);
  return la * reg + s;
}

double naive_l_disc(const RtdBatch& b, double reg, double la) {
  double s = 0;
  for (size_t t = 0; t < b.x.size(); ++t) {
    if (b.x_corrupt[t] == b.x[t]) s += -std::log(b.d[t]);
    else s += -std::log(1.0 - b.d[t]);
  }
  return la * reg + s;
}

bool naive_kg_real(const RtdBatch& b, size_t t) {
  if (b.x_corrupt[t] == b.x[t]) return true;
  if (b.linked_orig.empty() || !b.linked_orig[t] || !b.linked_corrupt[t]) return false;
  for (const std::string& s : b.sites_corrupt[t])
    if (b.sites_orig[t].count(s)) return true;
  for (const std::string& s : b.bodysys_corrupt[t])
    if (b.bodysys_orig[t].count(s)) return true;
  return false;
}

double naive_l_kg(const RtdBatch& b) {
  double s = 0;
  for (size_t t = 0; t < b.x.size(); ++t) {
    if (naive_kg_real(b, t)) s += -std::log(b.d[t]);
    else s += -std::log(1.0 - b.d[t]);
  }
  return s;
}

// ------------------------------------------------------ random batches

EncodingBatch random_encoding_batch(Rng& rng, size_t B, size_t d) {
  EncodingBatch b;
  b.batch = B;
  b.layers = 1;
  b.width = d;
  b.tau = 0.5 + 1.5 * rng.next_double();
  b.h_a.resize(B * d);
  b.h_p.resize(B * d);
  for (double& x : b.h_a) x = 2.0 * rng.next_double() - 1.0;
  for (double& x : b.h_p) x = 2.0 * rng.next_double() - 1.0;
  return b;
}

RtdBatch random_rtd_batch(Rng& rng, size_t n, size_t vocab) {
  RtdBatch b;
  b.x.resize(n);
  b.x_corrupt.resize(n);
  b.d.resize(n);
  b.linked_orig.resize(n);
  b.linked_corrupt.resize(n);
  b.sites_orig.resize(n);
  b.sites_corrupt.resize(n);
  b.bodysys_orig.resize(n);
  b.bodysys_corrupt.resize(n);
  const std::string site_pool[4] = {"s1", "s2", "s3", "s4"};
  for (size_t t = 0; t < n; ++t) {
    b.x[t] = static_cast<int>(rng.below(vocab));
    b.x_corrupt[t] = rng.bernoulli(0.5) ? b.x[t] : static_cast<int>(rng.below(vocab));
    b.d[t] = 0.02 + 0.96 * rng.next_double();
    b.linked_orig[t] = rng.bernoulli(0.6);
    b.linked_corrupt[t] = rng.bernoulli(0.6);
    for (int k = 0; k < 2; ++k) {
      if (rng.bernoulli(0.6)) b.sites_orig[t].insert(site_pool[rng.below(4)]);
      if (rng.bernoulli(0.6)) b.sites_corrupt[t].insert(site_pool[rng.below(4)]);
      if (rng.bernoulli(0.3)) b.bodysys_orig[t].insert(site_pool[rng.below(4)]);
      if (rng.bernoulli(0.3)) b.bodysys_corrupt[t].insert(site_pool[rng.below(4)]);
    }
  }
  size_t n_masked = 1 + rng.below(n / 2 + 1);
  std::vector<size_t> picked = rng.sample_without_replacement(n, n_masked);
  std::sort(picked.begin(), picked.end());
  b.masked = picked;
  for (size_t i = 0; i < n_masked; ++i) {
    std::vector<double> row(vocab);
    double sum = 0;
    for (double& x : row) {
      x = 0.05 + rng.next_double();
      sum += x;
    }
    for (double& x : row) x /= sum;
    b.p_g.push_back(std::move(row));
  }
  return b;
}

// ---------------------------------------------------------- components

void verify_losses(Checker& c, size_t n_batches) {
  Rng rng(0xC0FFEE);
  double worst = 0;
  for (size_t i = 0; i < n_batches; ++i) {
    EncodingBatch eb = random_encoding_batch(rng, 2 + rng.below(7), 4 + rng.below(12));
    worst = std::max(worst, std::fabs(l_reg(eb) - naive_l_reg(eb)));
    RtdBatch rb = random_rtd_batch(rng, 4 + rng.below(28), 16);
    double reg = rng.next_double();
    worst = std::max(worst, std::fabs(l_mlm(rb, reg, 1.0) - naive_l_mlm(rb, reg, 1.0)));
    worst = std::max(worst, std::fabs(l_disc(rb, reg, 1.0) - naive_l_disc(rb, reg, 1.0)));
    worst = std::max(worst, std::fabs(l_kg(rb) - naive_l_kg(rb)));
    LossWeights w;
    worst = std::max(worst, std::fabs(l_disc_kg(rb, reg, w) -
                                      (naive_l_disc(rb, reg, 1.0) + naive_l_kg(rb))));
  }
  c.check("losses.oracle-agreement", worst < 1e-12,
          "max deviation " + std::to_string(worst));

  // pinned analytic values
  EncodingBatch one;
  one.batch = 1;
  one.width = 3;
  one.h_a = {0.3, -1.2, 0.5};
  one.h_p = {2.0, 0.1, -0.4};
  one.tau = 0.7;
  c.check("losses.l_reg-b1-zero", l_reg(one) == 0.0);

  EncodingBatch two;
  two.batch = 2;
  two.width = 2;
  two.h_a = {1, 0, 0, 1};
  two.h_p = {1, 0, 0, 1};
  two.tau = 1.0;
  double expected = 0.5 * std::log(2.0 * M_E / (M_E + 1.0));
  c.check("losses.l_reg-b2-orthonormal", std::fabs(l_reg(two) - expected) < 1e-9);
}

void verify_grads(Checker& c) {
  Rng rng(0xD1CE);
  LossConfig cfg;

  // l_reg w.r.t. both encoder outputs
  EncodingBatch eb = random_encoding_batch(rng, 4, 8);
  std::vector<double> ga, gp;
  l_reg_backward(eb, cfg, &ga, &gp);
  auto f_a = [&](const std::vector<double>& x) {
    EncodingBatch b = eb;
    b.h_a = x;
    return l_reg(b, cfg);
  };
  auto f_p = [&](const std::vector<double>& x) {
    EncodingBatch b = eb;
    b.h_p = x;
    return l_reg(b, cfg);
  };
  c.check("grads.l_reg-h_a", grad_check(f_a, eb.h_a, ga) < 1e-4);
  c.check("grads.l_reg-h_p", grad_check(f_p, eb.h_p, gp) < 1e-4);

  // l_mlm w.r.t. generator logits (softmax composed inside)
  RtdBatch rb = random_rtd_batch(rng, 12, 8);
  size_t V = 8;
  std::vector<double> logits(rb.masked.size() * V);
  for (double& x : logits) x = 2.0 * rng.next_double() - 1.0;
  auto mlm_of_logits = [&](const std::vector<double>& z) {
    RtdBatch b = rb;
    for (size_t r = 0; r < b.masked.size(); ++r) {
      std::vector<double> row(z.begin() + r * V, z.begin() + (r + 1) * V);
      softmax_inplace(row);
      b.p_g[r] = row;
    }
    return l_mlm(b, 0.0, 1.0);
  };
  std::vector<double> mlm_grad(logits.size());
  for (size_t r = 0; r < rb.masked.size(); ++r) {
    std::vector<double> row(logits.begin() + r * V, logits.begin() + (r + 1) * V);
    softmax_inplace(row);
    std::vector<double> g = mlm_grad_row(row, static_cast<size_t>(rb.x[rb.masked[r]]));
    for (size_t j = 0; j < V; ++j) mlm_grad[r * V + j] = g[j];
  }
  c.check("grads.l_mlm-logits", grad_check(mlm_of_logits, logits, mlm_grad) < 1e-4);

  // l_disc / l_kg / l_disc_kg w.r.t. pre-sigmoid logits
  std::vector<double> z(rb.x.size());
  for (double& x : z) x = 2.0 * rng.next_double() - 1.0;
  auto sigmoid = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  auto disc_of_z = [&](const std::vector<double>& zz) {
    RtdBatch b = rb;
    for (size_t t = 0; t < zz.size(); ++t) b.d[t] = sigmoid(zz[t]);
    return l_disc(b, 0.0, 1.0);
  };
  auto kg_of_z = [&](const std::vector<double>& zz) {
    RtdBatch b = rb;
    for (size_t t = 0; t < zz.size(); ++t) b.d[t] = sigmoid(zz[t]);
    return l_kg(b);
  };
  auto disc_kg_of_z = [&](const std::vector<double>& zz) {
    RtdBatch b = rb;
    for (size_t t = 0; t < zz.size(); ++t) b.d[t] = sigmoid(zz[t]);
    LossWeights w;
    w.lambda_kg = 0.7;
    return l_disc_kg(b, 0.0, w);
  };
  std::vector<double> gdisc(z.size()), gkg(z.size()), gboth(z.size());
  for (size_t t = 0; t < z.size(); ++t) {
    double d = sigmoid(z[t]);
    bool real = rb.x_corrupt[t] == rb.x[t];
    bool kgreal = kg_position_real(rb, t);
    gdisc[t] = disc_grad_logit(d, real);
    gkg[t] = disc_grad_logit(d, kgreal);
    gboth[t] = gdisc[t] + 0.7 * gkg[t];
  }
  c.check("grads.l_disc-logits", grad_check(disc_of_z, z, gdisc) < 1e-4);
  c.check("grads.l_kg-logits", grad_check(kg_of_z, z, gkg) < 1e-4);
  c.check("grads.l_disc_kg-logits", grad_check(disc_kg_of_z, z, gboth) < 1e-4);

  // end-to-end: full rtd step gradient on one example, tiny model
  TinyEncoderConfig ecfg;
  ecfg.vocab_size = 24;
  ecfg.width = 6;
  ecfg.ffn_width = 10;
  ecfg.max_positions = 12;
  TinyEncoder gmodel(ecfg), dmodel(ecfg);
  gmodel.init(11);
  dmodel.init(12);
  std::vector<int> ids = {2, 7, 9, 13, 5, 17, 21, 8, 3};
  std::vector<size_t> masked = {1, 4, 6};
  std::vector<int> x_masked = ids;
  for (size_t p : masked) x_masked[p] = 6;  // stand-in mask id
  std::vector<std::vector<double>> p0 = forward_generator(gmodel, x_masked, masked);
  std::vector<int> corrupt = sample_corrupt(p0, ids, masked, 99);

  auto flatten = [](TinyEncoder& m) {
    std::vector<double> out;
    for (const TinyEncoder::Param& p : m.params())
      out.insert(out.end(), p.value->v.begin(), p.value->v.end());
    return out;
  };
  auto unflatten = [](TinyEncoder& m, const std::vector<double>& x) {
    size_t off = 0;
    for (TinyEncoder::Param& p : m.params()) {
      std::copy(x.begin() + off, x.begin() + off + p.value->size(), p.value->v.begin());
      off += p.value->size();
    }
  };
  auto step_loss = [&]() {
    TinyEncoder::Cache gc = gmodel.forward(x_masked);
    std::vector<std::vector<double>> rows = gmodel.gen_logit_rows(gc, masked);
    double loss = 0;
    for (size_t r = 0; r < masked.size(); ++r) {
      std::vector<double> p = rows[r];
      softmax_inplace(p);
      loss += -std::log(p[static_cast<size_t>(ids[masked[r]])]);
    }
    TinyEncoder::Cache dc = dmodel.forward(corrupt);
    std::vector<double> zz = dmodel.disc_logits(dc);
    for (size_t t = 0; t < zz.size(); ++t) {
      double d = 1.0 / (1.0 + std::exp(-zz[t]));
      loss += (corrupt[t] == ids[t]) ? -std::log(d) : -std::log(1.0 - d);
    }
    return loss;
  };

  // analytic gradients via the backward passes
  gmodel.zero_grads();
  dmodel.zero_grads();
  {
    TinyEncoder::Cache gc = gmodel.forward(x_masked);
    std::vector<std::vector<double>> rows = gmodel.gen_logit_rows(gc, masked);
    std::vector<std::vector<double>> drows;
    for (size_t r = 0; r < masked.size(); ++r) {
      std::vector<double> p = rows[r];
      softmax_inplace(p);
      drows.push_back(mlm_grad_row(p, static_cast<size_t>(ids[masked[r]])));
    }
    Tensor dh(x_masked.size(), ecfg.width);
    gmodel.backward_gen_rows(gc, masked, drows, &dh);
    gmodel.backward_encoder(gc, dh);

    TinyEncoder::Cache dc = dmodel.forward(corrupt);
    std::vector<double> zz = dmodel.disc_logits(dc);
    std::vector<double> dz(zz.size());
    for (size_t t = 0; t < zz.size(); ++t) {
      double d = 1.0 / (1.0 + std::exp(-zz[t]));
      dz[t] = disc_grad_logit(d, corrupt[t] == ids[t]);
    }
    Tensor dh2(corrupt.size(), ecfg.width);
    dmodel.backward_disc(dc, dz, &dh2);
    dmodel.backward_encoder(dc, dh2);
  }
  std::vector<double> analytic;
  for (const TinyEncoder::Param& p : gmodel.params())
    analytic.insert(analytic.end(), p.grad->v.begin(), p.grad->v.end());
  for (const TinyEncoder::Param& p : dmodel.params())
    analytic.insert(analytic.end(), p.grad->v.begin(), p.grad->v.end());

  std::vector<double> theta = flatten(gmodel);
  size_t gen_len = theta.size();
  std::vector<double> theta_d = flatten(dmodel);
  theta.insert(theta.end(), theta_d.begin(), theta_d.end());
  auto f_theta = [&](const std::vector<double>& x) {
    std::vector<double> xg(x.begin(), x.begin() + gen_len);
    std::vector<double> xd(x.begin() + gen_len, x.end());
    unflatten(gmodel, xg);
    unflatten(dmodel, xd);
    double loss = step_loss();
    return loss;
  };
  double e2e = grad_check(f_theta, theta, analytic, 1e-5);
  unflatten(gmodel, std::vector<double>(theta.begin(), theta.begin() + gen_len));
  unflatten(dmodel, std::vector<double>(theta.begin() + gen_len, theta.end()));
  c.check("grads.end-to-end-rtd", e2e < 1e-3, "rel err " + std::to_string(e2e));
}

struct FixtureData {
  Taxonomy tax;
  Vocabulary base;
  Vocabulary extended;
  RegexRuleSet rules;
  HeaderPatternSet headers;
  std::vector<Template> templates;
  std::vector<GeneratedReport> generated;
  std::vector<SectionedReport> sectioned;
};

FixtureData load_fixture(const std::string& data_dir, size_t n_reports) {
  FixtureData f{Taxonomy::load(data_dir + "/taxonomy.jsonl"),
                Vocabulary::load(data_dir + "/base_vocab.txt"),
                Vocabulary(),
                RegexRuleSet::load(data_dir + "/clean_rules.tsv"),
                HeaderPatternSet::load(data_dir + "/headers.tsv"),
                load_templates(data_dir + "/templates.jsonl"),
                {},
                {}};
  f.generated = generate(n_reports, f.tax, f.templates, 20240817);
  std::vector<RawReport> raws;
  for (const GeneratedReport& g : f.generated) raws.push_back(g.raw);
  f.sectioned = preprocess_corpus(raws, f.rules, f.headers);

  std::vector<std::string> texts;
  for (const SectionedReport& r : f.sectioned)
    for (const Segment& seg : r.segments)
      for (const Sentence& s : seg.sentences) texts.push_back(s.text);
  WordPieceResult wp = train_wordpiece(texts, 2000);
  f.extended = extend_vocabulary(f.base, wp.tokens, f.tax);
  return f;
}

void verify_corpus(Checker& c, const FixtureData& f) {
  bool idempotent = true, partition = true, sections_match = true, roundtrip = true;
  bool budget_ok = true;
  for (size_t i = 0; i < f.generated.size(); ++i) {
    const GeneratedReport& gold = f.generated[i];
    std::string cleaned = clean_text(gold.raw.text, f.rules);
    if (clean_text(cleaned, f.rules) != cleaned) idempotent = false;
    if (cleaned != gold.raw.text) idempotent = false;  // generator emits cleaned form

    SectionedReport rep = identify_sections(gold.raw.id, cleaned, f.headers);
    size_t covered = 0;
    for (const Segment& seg : rep.segments)
      covered += (seg.header_end - seg.header_start) + (seg.body_end - seg.body_start);
    if (covered != cleaned.size()) partition = false;

    std::vector<std::pair<SectionKind, std::string>> got, want;
    for (const Segment& seg : rep.segments)
      for (const Sentence& s : seg.sentences) got.emplace_back(seg.kind, s.text);
    for (const GoldSentence& s : gold.sentences) want.emplace_back(s.section, s.text);
    if (got != want) sections_match = false;

    for (const Segment& seg : rep.segments) {
      size_t pos = seg.body_start;
      for (const Sentence& s : seg.sentences) {
        for (size_t k = pos; k < s.start; ++k)
          if (!std::isspace(static_cast<unsigned char>(cleaned[k]))) roundtrip = false;
        if (cleaned.substr(s.start, s.end - s.start) != s.text) roundtrip = false;
        pos = s.end;
      }
      for (size_t k = pos; k < seg.body_end; ++k)
        if (!std::isspace(static_cast<unsigned char>(cleaned[k]))) roundtrip = false;
    }

    for (const Chunk& chunk : chunk_sections(rep, f.extended, 96)) {
      size_t total = 2;
      for (const Sentence& s : chunk.sentences) total += tokenize(f.extended, s.text).size();
      if (total > 96 || total != chunk.token_count) budget_ok = false;
    }
  }
  c.check("corpus.clean-idempotent", idempotent);
  c.check("corpus.partition", partition);
  c.check("corpus.section-ground-truth", sections_match);
  c.check("corpus.sentence-roundtrip", roundtrip);
  c.check("corpus.chunk-budget", budget_ok);
}

void verify_vocab(Checker& c, const FixtureData& f) {
  bool base_preserved = true;
  for (size_t i = 0; i < f.base.size(); ++i)
    if (f.extended.token_of(static_cast<int>(i)) != f.base.token_of(static_cast<int>(i)))
      base_preserved = false;
  c.check("vocab.base-ids-preserved", base_preserved);

  bool gate = true;
  size_t n_new = 0;
  for (size_t i = 0; i < f.extended.size(); ++i) {
    if (f.extended.provenance(static_cast<int>(i)) != TokenProvenance::New) continue;
    ++n_new;
    std::string t = f.extended.token_of(static_cast<int>(i));
    if (t.rfind("##", 0) == 0) t = t.substr(2);
    if (f.tax.lookup(t).empty()) gate = false;
  }
  c.check("vocab.gate-soundness", gate && n_new > 0,
          "new tokens: " + std::to_string(n_new));

  bool specials = true;
  for (const std::string& t : anonymization_tokens()) {
    size_t count = 0;
    for (size_t i = 0; i < f.extended.size(); ++i)
      if (f.extended.token_of(static_cast<int>(i)) == t) ++count;
    if (count != 1) specials = false;
  }
  c.check("vocab.specials-exactly-once", specials);

  size_t pre = tokenize(f.base, "thalamus").size();
  std::vector<int> post = tokenize(f.extended, "thalamus");
  c.check("vocab.thalamus-unfragmented",
          pre >= 3 && post.size() == 1 &&
              f.extended.token_of(post[0]) == "thalamus",
          "pre=" + std::to_string(pre) + " post=" + std::to_string(post.size()));
}

void verify_masking(Checker& c, const FixtureData& f, size_t target_examples) {
  bool quota_ok = true, specials_ok = true, table_ok = true, context_ok = true;
  bool fill_ok = true, determinism_ok = true;
  size_t produced = 0;
  uint64_t run_seed = 7;
  while (produced < target_examples) {
    std::vector<PipelineExample> examples =
        make_masked_examples(f.sectioned, f.extended, f.tax, MaskingMode::Kg, 96, run_seed);
    std::vector<PipelineExample> again =
        make_masked_examples(f.sectioned, f.extended, f.tax, MaskingMode::Kg, 96, run_seed);
    if (examples.size() != again.size()) determinism_ok = false;
    for (size_t i = 0; i < examples.size() && produced < target_examples; ++i, ++produced) {
      const PipelineExample& ex = examples[i];
      const MaskedExample& m = ex.masked;
      size_t n = m.token_ids.size();
      if (m.mask_positions.size() < mask_quota(n)) quota_ok = false;
      std::vector<bool> special = ex.chunk.special_mask(f.extended);
      bool anat = false, obs = false;
      for (size_t p : m.mask_positions) {
        if (special[p]) specials_ok = false;
        bool in_span = false;
        for (const EntitySpan& s : ex.spans) {
          if (p >= s.token_start && p < s.token_end) {
            in_span = true;
            if (m.option && !option_licenses(*m.option, s.category, s.section)) table_ok = false;
            if (s.category == Category::Anatomy) anat = true;
            if (s.category == Category::Observation) obs = true;
          }
        }
        if (!in_span && m.option) {
          // fill positions must sit outside every entity span
          for (const EntitySpan& s : ex.spans)
            if (p >= s.token_start && p < s.token_end) fill_ok = false;
        }
      }
      if (anat && obs) context_ok = false;
      if (i < again.size()) {
        const MaskedExample& m2 = again[i].masked;
        if (m.token_ids != m2.token_ids || m.mask_positions != m2.mask_positions)
          determinism_ok = false;
      }
    }
    ++run_seed;
  }
  c.check("masking.quota", quota_ok);
  c.check("masking.specials-never-masked", specials_ok);
  c.check("masking.option-table-compliance", table_ok);
  c.check("masking.context-preservation", context_ok);
  c.check("masking.fill-outside-entities", fill_ok);
  c.check("masking.seed-determinism", determinism_ok);
  c.check("masking.examples-generated", produced >= target_examples,
          std::to_string(produced) + " examples");

  // option selection uniform over qualifiers
  std::vector<EntitySpan> spans;
  auto add_span = [&](Category cat, SectionKind sec, size_t start, size_t len) {
    EntitySpan s;
    s.category = cat;
    s.section = sec;
    s.token_start = start;
    s.token_end = start + len;
    spans.push_back(s);
  };
  // all four options reach the quota for n=20 (quota 3)
  add_span(Category::Anatomy, SectionKind::Clinical, 1, 3);
  add_span(Category::Observation, SectionKind::Findings, 5, 3);
  add_span(Category::Observation, SectionKind::Impressions, 9, 3);
  add_span(Category::Symptom, SectionKind::Findings, 13, 3);
  size_t counts[4] = {0, 0, 0, 0};
  size_t trials = 10000;
  for (size_t s = 0; s < trials; ++s) {
    auto [opt, q] = select_option(spans, 20, 0xAB00 + s);
    if (!q) quota_ok = false;
    counts[static_cast<int>(opt)]++;
  }
  double sigma = std::sqrt(static_cast<double>(trials) * 0.25 * 0.75);
  bool uniform = true;
  for (size_t k = 0; k < 4; ++k)
    if (std::fabs(static_cast<double>(counts[k]) - trials * 0.25) > 3 * sigma) uniform = false;
  c.check("masking.option-selection-uniform", uniform,
          std::to_string(counts[0]) + "/" + std::to_string(counts[1]) + "/" +
              std::to_string(counts[2]) + "/" + std::to_string(counts[3]));
}

void verify_annotator(Checker& c, const FixtureData& f) {
  size_t gold_total = 0, recovered = 0;
  bool offsets_ok = true;
  for (size_t i = 0; i < f.generated.size(); ++i) {
    const GeneratedReport& gold = f.generated[i];
    const SectionedReport& rep = f.sectioned[i];
    // annotate every chunk, then map spans back to char offsets
    std::set<std::tuple<size_t, size_t, std::string, int>> found;
    for (const Chunk& chunk : chunk_sections(rep, f.extended, 96)) {
      TokenizedChunk tc = tokenize_chunk(f.extended, chunk);
      for (const EntitySpan& span : annotate(tc, f.extended, f.tax)) {
        size_t cs = 0, ce = 0;
        bool first = true;
        for (const TokenizedWord& w : tc.words) {
          if (w.token_end <= span.token_start || w.token_start >= span.token_end) continue;
          if (first) cs = w.char_start;
          ce = w.char_end;
          first = false;
        }
        if (first) offsets_ok = false;
        found.insert({cs, ce, span.concept_id, static_cast<int>(span.category)});
      }
    }
    for (const GoldEntity& g : gold.entities) {
      ++gold_total;
      if (found.count({g.char_start, g.char_end, g.concept_id, static_cast<int>(g.category)}))
        ++recovered;
    }
  }
  double rate = gold_total ? static_cast<double>(recovered) / static_cast<double>(gold_total) : 0;
  c.check("annotator.closure", rate >= 0.95 && offsets_ok,
          std::to_string(recovered) + "/" + std::to_string(gold_total));

  // the documented example sentences
  auto spans_of = [&](const std::string& text, SectionKind kind) {
    Chunk chunk;
    chunk.report_id = "fixture";
    chunk.section = kind;
    chunk.sentences.push_back({text, 0, text.size()});
    TokenizedChunk tc = tokenize_chunk(f.extended, chunk);
    std::map<std::string, std::string> out;  // surface -> category
    for (const EntitySpan& s : annotate(tc, f.extended, f.tax))
      out[s.surface] = category_name(s.category);
    return out;
  };
  auto s1 = spans_of("Pneumonia in both lungs.", SectionKind::Findings);
  c.check("annotator.pneumonia-lungs",
          s1.count("pneumonia") && s1["pneumonia"] == "observation" && s1.count("lungs") &&
              s1["lungs"] == "anatomy");
  auto s2 = spans_of("Mild basilar atelectasis without definite focal consolidation.",
                     SectionKind::Findings);
  c.check("annotator.basilar-atelectasis-split",
          s2.count("basilar") && s2["basilar"] == "anatomy" && s2.count("atelectasis") &&
              s2["atelectasis"] == "observation");
  auto s3 = spans_of("Findings are suggestive of mild pulmonary edema with basilar atelectasis.",
                     SectionKind::Impressions);
  c.check("annotator.edema-sentence",
          s3.count("edema") && s3["edema"] == "observation" && s3.count("basilar") &&
              s3.count("atelectasis"));
}

void verify_determinism(Checker& c, const FixtureData& f) {
  std::string a = sectioned_to_jsonl(f.sectioned);
  std::string b = sectioned_to_jsonl(f.sectioned);
  std::vector<PipelineExample> e1 =
      make_masked_examples(f.sectioned, f.extended, f.tax, MaskingMode::Kg, 96, 99);
  std::vector<PipelineExample> e2 =
      make_masked_examples(f.sectioned, f.extended, f.tax, MaskingMode::Kg, 96, 99);
  c.check("determinism.outputs",
          a == b && masked_examples_to_jsonl(e1) == masked_examples_to_jsonl(e2));

  std::vector<GeneratedReport> g1 = generate(5, f.tax, f.templates, 31337);
  std::vector<GeneratedReport> g2 = generate(5, f.tax, f.templates, 31337);
  bool same = g1.size() == g2.size();
  for (size_t i = 0; same && i < g1.size(); ++i)
    if (g1[i].raw.text != g2[i].raw.text) same = false;
  c.check("determinism.syngen", same);
}

}  // namespace

VerifyResult verify_all(const VerifyOptions& options) {
  Checker c;
  try {
    verify_losses(c, options.oracle_batches);
    verify_grads(c);
    FixtureData f = load_fixture(options.data_dir, options.closure_reports);
    c.check("taxonomy.fixture-loads", f.tax.size() > 100,
            std::to_string(f.tax.size()) + " concepts");
    verify_corpus(c, f);
    verify_vocab(c, f);
    verify_masking(c, f, options.masking_examples);
    verify_annotator(c, f);
    verify_determinism(c, f);
  } catch (const std::exception& e) {
    c.check("verify.no-exception", false, e.what());
  }
  c.out << (c.ok ? "OK" : "FAILED") << " (" << c.passed << " passed, " << c.failed
        << " failed)\n";
  return {c.ok, c.out.str()};
}

}  // namespace radpipe
