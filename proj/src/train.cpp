#include "radpipe/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "radpipe/errors.hpp"
#include "radpipe/io.hpp"
#include "radpipe/log.hpp"

namespace radpipe {

const char* objective_name(Objective o) {
  switch (o) {
    case Objective::Mlm: return "mlm";
    case Objective::Ss: return "ss";
    case Objective::Kg: return "kg";
  }
  return "mlm";
}

std::optional<Objective> objective_from_name(const std::string& name) {
  if (name == "mlm") return Objective::Mlm;
  if (name == "ss") return Objective::Ss;
  if (name == "kg") return Objective::Kg;
  return std::nullopt;
}

nlohmann::json TrainConfig::to_json() const {
  return {
      {"objective", objective_name(objective)},
      {"steps", steps},
      {"batch_size", batch_size},
      {"lr", lr},
      {"weight_decay", weight_decay},
      {"warmup_frac", warmup_frac},
      {"schedule", schedule == LrSchedule::Constant ? "constant" : "polynomial-warmup"},
      {"run_seed", run_seed},
      {"lambda_a", weights.lambda_a},
      {"lambda_kg", weights.lambda_kg},
      {"budget", budget},
      {"d_model", d_model},
      {"gen_d_model", gen_d_model},
      {"ffn_mult", ffn_mult},
      {"holdout_frac", holdout_frac},
      {"eval_every", eval_every},
      {"patience", patience},
      {"reg_tau", reg_tau},
      {"reference_prefix", reference_prefix},
  };
}

nlohmann::json TrainReport::to_json() const {
  nlohmann::json curve_json = nlohmann::json::array();
  for (const TrainStepLog& s : curve)
    curve_json.push_back({{"step", s.step},
                          {"gen", s.gen_loss},
                          {"disc", s.disc_loss},
                          {"kg", s.kg_loss},
                          {"reg_gen", s.reg_gen},
                          {"reg_disc", s.reg_disc},
                          {"total", s.total}});
  nlohmann::json evals_json = nlohmann::json::array();
  for (const TrainEvalLog& e : evals)
    evals_json.push_back({{"step", e.step}, {"holdout_loss", e.holdout_loss}, {"metric", e.metric}});
  nlohmann::json j{{"config", config},
                   {"curve", std::move(curve_json)},
                   {"evals", std::move(evals_json)},
                   {"steps_run", steps_run},
                   {"rtd_auc", rtd_auc},
                   {"section_accuracy", section_accuracy},
                   {"checkpoints", checkpoints}};
  if (early_stopped_at) j["early_stopped_at"] = *early_stopped_at;
  else j["early_stopped_at"] = nullptr;
  return j;
}

std::string TrainReport::to_json_string() const { return to_json().dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// optimizer

AdamW::AdamW(std::vector<TinyEncoder::Param>* params, double beta1, double beta2, double eps,
             double weight_decay)
    : params_(params), beta1_(beta1), beta2_(beta2), eps_(eps), weight_decay_(weight_decay) {
  for (const TinyEncoder::Param& p : *params_) {
    m_.emplace_back(p.value->size(), 0.0);
    v_.emplace_back(p.value->size(), 0.0);
  }
}

void AdamW::step(double lr) {
  ++t_;
  double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t pi = 0; pi < params_->size(); ++pi) {
    TinyEncoder::Param& p = (*params_)[pi];
    std::vector<double>& m = m_[pi];
    std::vector<double>& v = v_[pi];
    for (size_t i = 0; i < p.value->size(); ++i) {
      double g = p.grad->v[i];
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
      double mhat = m[i] / bc1;
      double vhat = v[i] / bc2;
      p.value->v[i] -= lr * (mhat / (std::sqrt(vhat) + eps_) + weight_decay_ * p.value->v[i]);
    }
  }
}

double schedule_lr(const TrainConfig& cfg, size_t step) {
  if (cfg.schedule == LrSchedule::Constant) return cfg.lr;
  size_t warmup = static_cast<size_t>(std::ceil(cfg.warmup_frac * static_cast<double>(cfg.steps)));
  if (warmup > 0 && step < warmup)
    return cfg.lr * static_cast<double>(step + 1) / static_cast<double>(warmup);
  size_t decay_span = cfg.steps > warmup ? cfg.steps - warmup : 1;
  double frac = static_cast<double>(step - warmup) / static_cast<double>(decay_span);
  return cfg.lr * (1.0 - frac);
}

// ---------------------------------------------------------------------------
// trainer internals

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double clamped_log(double p) { return std::log(std::max(p, kLossEpsilon)); }

bool in_holdout(const std::string& report_id, double frac) {
  return static_cast<double>(hash_mix(0, report_id) % 10000) < frac * 10000.0;
}

struct SsExample {
  std::vector<int> ids;
  SectionKind label = SectionKind::Miscellaneous;
  std::string text;
  std::string report_id;
};

struct ReferenceModels {
  Vocabulary vocab;
  TinyEncoder gen;
  TinyEncoder disc;

  ReferenceModels(Vocabulary v, const TinyEncoderConfig& gen_cfg,
                  const TinyEncoderConfig& disc_cfg)
      : vocab(std::move(v)), gen(gen_cfg), disc(disc_cfg) {}
};

/// Mean-pooled encoding of `text` under the frozen reference encoder.
std::vector<double> reference_pooled(const TinyEncoder& enc, const Vocabulary& vocab,
                                     const std::string& text, size_t max_positions) {
  std::vector<int> ids;
  ids.push_back(vocab.cls_id());
  for (int id : tokenize(vocab, text)) ids.push_back(id);
  ids.push_back(vocab.sep_id());
  if (ids.size() > max_positions) ids.resize(max_positions);
  TinyEncoder::Cache cache = enc.forward(ids);
  return enc.pooled(cache, 0, ids.size());
}

struct AucAccumulator {
  std::vector<double> positives;  // D at original positions
  std::vector<double> negatives;  // D at replaced positions

  double value() const {
    if (positives.empty() || negatives.empty()) return 0.5;
    // Mann-Whitney with midrank ties
    std::vector<std::pair<double, int>> all;
    all.reserve(positives.size() + negatives.size());
    for (double d : positives) all.emplace_back(d, 1);
    for (double d : negatives) all.emplace_back(d, 0);
    std::sort(all.begin(), all.end());
    double rank_sum_pos = 0;
    size_t i = 0;
    while (i < all.size()) {
      size_t j = i;
      while (j < all.size() && all[j].first == all[i].first) ++j;
      double midrank = 0.5 * static_cast<double>(i + 1 + j);  // average of ranks i+1..j
      for (size_t k = i; k < j; ++k)
        if (all[k].second == 1) rank_sum_pos += midrank;
      i = j;
    }
    double np = static_cast<double>(positives.size());
    double nn = static_cast<double>(negatives.size());
    return (rank_sum_pos - np * (np + 1) / 2.0) / (np * nn);
  }
};

}  // namespace

TrainReport train(const TrainConfig& cfg, const std::vector<SectionedReport>& corpus,
                  const Taxonomy& tax, const Vocabulary& vocab) {
  if (cfg.steps == 0 || cfg.batch_size == 0 || cfg.lr <= 0 || cfg.d_model == 0 ||
      cfg.budget < 8 || cfg.eval_every == 0)
    throw ConfigError("train: hyperparameters must be positive");

  TinyEncoderConfig ecfg;
  ecfg.vocab_size = vocab.size();
  ecfg.width = cfg.d_model;
  ecfg.ffn_width = cfg.d_model * cfg.ffn_mult;
  ecfg.max_positions = cfg.budget;
  TinyEncoderConfig gcfg = ecfg;
  if (cfg.gen_d_model) {
    gcfg.width = cfg.gen_d_model;
    gcfg.ffn_width = cfg.gen_d_model * cfg.ffn_mult;
  }
  TinyEncoder gen(gcfg), disc(ecfg);
  gen.init(hash_mix(hash_mix(0, cfg.run_seed), "init_gen"));
  disc.init(hash_mix(hash_mix(0, cfg.run_seed), "init_disc"));

  std::unique_ptr<ReferenceModels> reference;
  if (!cfg.reference_prefix.empty()) {
    if (cfg.reference_vocab.empty())
      throw ConfigError("train: reference_prefix requires reference_vocab");
    Vocabulary ref_vocab = Vocabulary::load(cfg.reference_vocab);
    TinyEncoderConfig rgcfg = gcfg, rdcfg = ecfg;
    rgcfg.vocab_size = rdcfg.vocab_size = ref_vocab.size();
    reference = std::make_unique<ReferenceModels>(std::move(ref_vocab), rgcfg, rdcfg);
    reference->gen.load(cfg.reference_prefix + ".gen.bin");
    reference->disc.load(cfg.reference_prefix + ".disc.bin");
  }

  bool rtd_objective = cfg.objective != Objective::Ss;

  // ------------------------------------------------------------------ data
  std::vector<PipelineExample> rtd_train, rtd_holdout;
  std::vector<std::vector<double>> ref_gen_train, ref_gen_holdout;
  std::vector<SsExample> ss_train, ss_holdout;

  if (rtd_objective) {
    MaskingMode mode = cfg.masking.value_or(cfg.objective == Objective::Kg ? MaskingMode::Kg
                                                                           : MaskingMode::Random);
    PipelineStats stats;
    std::vector<PipelineExample> all =
        make_masked_examples(corpus, vocab, tax, mode, cfg.budget, cfg.run_seed, &stats);
    log_info("train: " + std::to_string(all.size()) + " examples from " +
             std::to_string(stats.reports_in) + " reports");
    for (PipelineExample& ex : all) {
      if (in_holdout(ex.chunk.report_id, cfg.holdout_frac)) rtd_holdout.push_back(std::move(ex));
      else rtd_train.push_back(std::move(ex));
    }
    if (rtd_train.empty()) throw ConfigError("train: no training examples");
    if (reference) {
      for (const PipelineExample& ex : rtd_train)
        ref_gen_train.push_back(
            reference_pooled(reference->gen, reference->vocab, ex.text, ecfg.max_positions));
      for (const PipelineExample& ex : rtd_holdout)
        ref_gen_holdout.push_back(
            reference_pooled(reference->gen, reference->vocab, ex.text, ecfg.max_positions));
    }
  } else {
    for (const SectionedReport& report : corpus) {
      std::vector<Chunk> chunks;
      try {
        chunks = chunk_sections(report, vocab, cfg.budget);
      } catch (const PipelineError& e) {
        log_warn(std::string(e.what()));
        continue;
      }
      bool holdout = in_holdout(report.id, cfg.holdout_frac);
      for (const Chunk& chunk : chunks) {
        TokenizedChunk tc = tokenize_chunk(vocab, chunk);
        for (const TokenizedSentence& sent : tc.sentences) {
          SsExample ex;
          ex.ids.push_back(vocab.cls_id());
          for (size_t t = sent.token_start; t < sent.token_end; ++t) ex.ids.push_back(tc.ids[t]);
          ex.ids.push_back(vocab.sep_id());
          ex.label = tc.section;
          ex.report_id = report.id;
          for (size_t w = sent.word_start; w < sent.word_end; ++w) {
            if (!ex.text.empty()) ex.text.push_back(' ');
            ex.text += tc.words[w].text;
          }
          (holdout ? ss_holdout : ss_train).push_back(std::move(ex));
        }
      }
    }
    if (ss_train.empty()) throw ConfigError("train: no training examples");
  }

  KgLinkTable links;
  bool use_kg = cfg.objective == Objective::Kg && cfg.weights.lambda_kg != 0.0;
  if (use_kg) links = KgLinkTable::build(vocab, tax);

  AdamW opt_gen(&gen.params(), 0.9, 0.999, 1e-8, cfg.weight_decay);
  AdamW opt_disc(&disc.params(), 0.9, 0.999, 1e-8, cfg.weight_decay);

  size_t n_train = rtd_objective ? rtd_train.size() : ss_train.size();
  std::vector<size_t> order(n_train);
  size_t epoch = 0, cursor = n_train;  // forces a shuffle before the first batch

  auto next_batch = [&]() {
    std::vector<size_t> batch;
    for (size_t i = 0; i < cfg.batch_size; ++i) {
      if (cursor >= n_train) {
        for (size_t k = 0; k < n_train; ++k) order[k] = k;
        Rng shuffler(hash_mix(hash_mix(hash_mix(0, cfg.run_seed), "order"), epoch));
        shuffler.shuffle(order);
        ++epoch;
        cursor = 0;
      }
      batch.push_back(order[cursor++]);
    }
    return batch;
  };

  double kg_eval_scale = use_kg ? cfg.weights.lambda_kg : 0.0;

  // ------------------------------------------------------- rtd batch pass
  // Returns per-batch mean component losses and, when training, accumulates
  // gradients. `corrupt_tag` decouples the sampling stream of training steps
  // from evaluation passes.
  auto rtd_pass = [&](const std::vector<PipelineExample>& pool,
                      const std::vector<std::vector<double>>& ref_pool,
                      const std::vector<size_t>& idxs, uint64_t corrupt_tag, bool training,
                      AucAccumulator* auc) {
    TrainStepLog log;
    double scale = 1.0 / static_cast<double>(idxs.size());
    struct PerExample {
      TinyEncoder::Cache gen_cache, disc_cache;
      Tensor dh_gen, dh_disc;
      std::vector<size_t> positions;
    };
    std::vector<PerExample> work(idxs.size());

    for (size_t b = 0; b < idxs.size(); ++b) {
      const PipelineExample& ex = pool[idxs[b]];
      PerExample& w = work[b];
      w.positions = ex.masked.mask_positions;
      w.gen_cache = gen.forward(ex.masked.token_ids);
      std::vector<std::vector<double>> rows = gen.gen_logit_rows(w.gen_cache, w.positions);
      for (auto& row : rows) softmax_inplace(row);
      if (training) w.dh_gen = Tensor(ex.masked.token_ids.size(), gcfg.width);

      std::vector<std::vector<double>> drows;
      for (size_t r = 0; r < w.positions.size(); ++r) {
        int target = ex.masked.original_ids[r];
        log.gen_loss += -clamped_log(rows[r][static_cast<size_t>(target)]) * scale;
        if (training) {
          std::vector<double> drow = mlm_grad_row(rows[r], static_cast<size_t>(target));
          for (double& g : drow) g *= scale;
          drows.push_back(std::move(drow));
        }
      }
      if (training) gen.backward_gen_rows(w.gen_cache, w.positions, drows, &w.dh_gen);

      std::vector<int> corrupt =
          sample_corrupt(rows, ex.chunk.ids, w.positions,
                         hash_mix(hash_mix(ex.masked.rng_seed, "corrupt"), corrupt_tag));
      w.disc_cache = disc.forward(corrupt);
      std::vector<double> z = disc.disc_logits(w.disc_cache);
      if (training) w.dh_disc = Tensor(corrupt.size(), ecfg.width);
      std::vector<double> dz(z.size(), 0.0);
      for (size_t t = 0; t < z.size(); ++t) {
        double d = sigmoid(z[t]);
        bool real = corrupt[t] == ex.chunk.ids[t];
        log.disc_loss += (real ? -clamped_log(d) : -clamped_log(1.0 - d)) * scale;
        if (training) dz[t] += disc_grad_logit(d, real) * scale;
        if (auc) (real ? auc->positives : auc->negatives).push_back(d);
        if (use_kg) {
          bool kg_real = real;
          if (!kg_real) {
            int a = ex.chunk.ids[t], c = corrupt[t];
            if (links.linked[static_cast<size_t>(a)] && links.linked[static_cast<size_t>(c)]) {
              const auto& sa = links.sites[static_cast<size_t>(a)];
              for (const std::string& s : links.sites[static_cast<size_t>(c)])
                if (sa.count(s)) { kg_real = true; break; }
              if (!kg_real) {
                const auto& ba = links.bodysys[static_cast<size_t>(a)];
                for (const std::string& s : links.bodysys[static_cast<size_t>(c)])
                  if (ba.count(s)) { kg_real = true; break; }
              }
            }
          }
          log.kg_loss += (kg_real ? -clamped_log(d) : -clamped_log(1.0 - d)) * scale;
          if (training) dz[t] += cfg.weights.lambda_kg * disc_grad_logit(d, kg_real) * scale;
        }
      }
      if (training) disc.backward_disc(w.disc_cache, dz, &w.dh_disc);
    }

    if (reference) {
      EncodingBatch gen_batch, disc_batch;
      gen_batch.batch = disc_batch.batch = idxs.size();
      gen_batch.width = gcfg.width;
      disc_batch.width = ecfg.width;
      gen_batch.tau = disc_batch.tau = cfg.reg_tau;
      for (size_t b = 0; b < idxs.size(); ++b) {
        const PerExample& w = work[b];
        std::vector<double> pg = gen.pooled(w.gen_cache, 0, w.gen_cache.h.rows);
        std::vector<double> pd = disc.pooled(w.disc_cache, 0, w.disc_cache.h.rows);
        const std::vector<double>& ref = ref_pool[idxs[b]];
        gen_batch.h_a.insert(gen_batch.h_a.end(), pg.begin(), pg.end());
        gen_batch.h_p.insert(gen_batch.h_p.end(), ref.begin(), ref.end());
        disc_batch.h_a.insert(disc_batch.h_a.end(), pd.begin(), pd.end());
        disc_batch.h_p.insert(disc_batch.h_p.end(), ref.begin(), ref.end());
      }
      log.reg_gen = l_reg(gen_batch, cfg.loss);
      log.reg_disc = l_reg(disc_batch, cfg.loss);
      if (training && cfg.weights.lambda_a != 0.0) {
        std::vector<double> ga, gp, da, dp;
        l_reg_backward(gen_batch, cfg.loss, &ga, &gp);
        l_reg_backward(disc_batch, cfg.loss, &da, &dp);
        for (size_t b = 0; b < idxs.size(); ++b) {
          std::vector<double> dg(gcfg.width), dd(ecfg.width);
          for (size_t k = 0; k < gcfg.width; ++k)
            dg[k] = cfg.weights.lambda_a * ga[b * gcfg.width + k];
          for (size_t k = 0; k < ecfg.width; ++k)
            dd[k] = cfg.weights.lambda_a * da[b * ecfg.width + k];
          gen.backward_pooled(work[b].gen_cache, 0, work[b].gen_cache.h.rows, dg, &work[b].dh_gen);
          disc.backward_pooled(work[b].disc_cache, 0, work[b].disc_cache.h.rows, dd,
                               &work[b].dh_disc);
        }
      }
    }

    if (training) {
      for (PerExample& w : work) {
        gen.backward_encoder(w.gen_cache, w.dh_gen);
        disc.backward_encoder(w.disc_cache, w.dh_disc);
      }
    }
    log.gen_loss += cfg.weights.lambda_a * log.reg_gen;
    log.disc_loss += cfg.weights.lambda_a * log.reg_disc;
    log.total = log.gen_loss + log.disc_loss + kg_eval_scale * log.kg_loss;
    return log;
  };

  // -------------------------------------------------------- ss batch pass
  auto ss_pass = [&](const std::vector<SsExample>& pool, const std::vector<size_t>& idxs,
                     bool training, size_t* correct) {
    TrainStepLog log;
    double scale = 1.0 / static_cast<double>(idxs.size());
    struct PerExample {
      TinyEncoder::Cache cache;
      Tensor dh;
    };
    std::vector<PerExample> work(idxs.size());
    for (size_t b = 0; b < idxs.size(); ++b) {
      const SsExample& ex = pool[idxs[b]];
      PerExample& w = work[b];
      w.cache = disc.forward(ex.ids);
      std::vector<double> logits = disc.section_logits(w.cache, 0, ex.ids.size());
      std::vector<double> p = logits;
      softmax_inplace(p);
      size_t label = static_cast<size_t>(ex.label);
      log.disc_loss += -clamped_log(p[label]) * scale;
      if (correct) {
        size_t argmax = std::max_element(p.begin(), p.end()) - p.begin();
        if (argmax == label) ++*correct;
      }
      if (training) {
        w.dh = Tensor(ex.ids.size(), ecfg.width);
        std::vector<double> dlogits = p;
        dlogits[label] -= 1.0;
        for (double& g : dlogits) g *= scale;
        disc.backward_section(w.cache, 0, ex.ids.size(), dlogits, &w.dh);
        disc.backward_encoder(w.cache, w.dh);
      }
    }
    log.total = log.disc_loss;
    return log;
  };

  // ------------------------------------------------------------- the loop
  TrainReport report;
  report.config = cfg.to_json();

  double best_holdout = std::numeric_limits<double>::infinity();
  size_t bad_evals = 0;
  std::vector<std::vector<double>> best_gen, best_disc;
  bool stopped = false;

  auto snapshot = [&](std::vector<std::vector<double>>* dst, TinyEncoder& model) {
    dst->clear();
    for (const TinyEncoder::Param& p : model.params()) dst->push_back(p.value->v);
  };
  auto restore = [&](const std::vector<std::vector<double>>& src, TinyEncoder& model) {
    for (size_t i = 0; i < src.size(); ++i) model.params()[i].value->v = src[i];
  };

  auto evaluate = [&](size_t at_step) {
    TrainEvalLog ev;
    ev.step = at_step;
    if (rtd_objective) {
      const auto& pool = rtd_holdout.empty() ? rtd_train : rtd_holdout;
      const auto& refs = rtd_holdout.empty() ? ref_gen_train : ref_gen_holdout;
      std::vector<size_t> idxs(pool.size());
      for (size_t i = 0; i < pool.size(); ++i) idxs[i] = i;
      AucAccumulator auc;
      TrainStepLog log = rtd_pass(pool, refs, idxs, /*corrupt_tag=*/1, false, &auc);
      ev.holdout_loss = log.total;
      ev.metric = auc.value();
    } else {
      const auto& pool = ss_holdout.empty() ? ss_train : ss_holdout;
      std::vector<size_t> idxs(pool.size());
      for (size_t i = 0; i < pool.size(); ++i) idxs[i] = i;
      size_t correct = 0;
      TrainStepLog log = ss_pass(pool, idxs, false, &correct);
      ev.holdout_loss = log.total;
      ev.metric = static_cast<double>(correct) / static_cast<double>(pool.size());
    }
    return ev;
  };

  for (size_t step = 0; step < cfg.steps && !stopped; ++step) {
    std::vector<size_t> batch = next_batch();
    gen.zero_grads();
    disc.zero_grads();
    TrainStepLog log = rtd_objective
                           ? rtd_pass(rtd_train, ref_gen_train, batch,
                                      /*corrupt_tag=*/1000 + step, true, nullptr)
                           : ss_pass(ss_train, batch, true, nullptr);
    log.step = step;
    if (!std::isfinite(log.total)) {
      nlohmann::json dump{{"step", step}, {"batch", batch}, {"gen", log.gen_loss},
                          {"disc", log.disc_loss}, {"kg", log.kg_loss}};
      std::string where = "<not written>";
      if (!cfg.out_dir.empty()) {
        where = cfg.out_dir + "/nan_dump.json";
        write_file(where, dump.dump(2) + "\n");
      }
      throw PipelineError("train: non-finite loss at step " + std::to_string(step) +
                          "; diagnostic dump: " + where);
    }
    double lr = schedule_lr(cfg, step);
    if (rtd_objective) opt_gen.step(lr);
    opt_disc.step(lr);
    report.curve.push_back(log);
    report.steps_run = step + 1;

    if ((step + 1) % cfg.eval_every == 0 || step + 1 == cfg.steps) {
      TrainEvalLog ev = evaluate(step + 1);
      report.evals.push_back(ev);
      if (ev.holdout_loss < best_holdout) {
        best_holdout = ev.holdout_loss;
        bad_evals = 0;
        snapshot(&best_gen, gen);
        snapshot(&best_disc, disc);
      } else if (++bad_evals >= cfg.patience) {
        report.early_stopped_at = step + 1;
        stopped = true;
      }
    }
  }

  if (!best_gen.empty()) {
    restore(best_gen, gen);
    restore(best_disc, disc);
  }
  TrainEvalLog final_eval = evaluate(report.steps_run);
  if (rtd_objective) {
    report.rtd_auc = final_eval.metric;
    report.section_accuracy = 0;
  } else {
    report.section_accuracy = final_eval.metric;
    report.rtd_auc = 0;
  }

  if (!cfg.out_dir.empty()) {
    gen.save(cfg.out_dir + "/ckpt_best.gen.bin");
    disc.save(cfg.out_dir + "/ckpt_best.disc.bin");
    report.checkpoints = {"ckpt_best.gen.bin", "ckpt_best.disc.bin"};
    write_file(cfg.out_dir + "/report.json", report.to_json_string());
  }
  return report;
}

}  // namespace radpipe
