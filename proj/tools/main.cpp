#include <cstdio>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "json.hpp"
#include "radpipe/annotator.hpp"
#include "radpipe/corpus.hpp"
#include "radpipe/errors.hpp"
#include "radpipe/io.hpp"
#include "radpipe/log.hpp"
#include "radpipe/losses.hpp"
#include "radpipe/pipeline.hpp"
#include "radpipe/syngen.hpp"
#include "radpipe/taxonomy.hpp"
#include "radpipe/tokenizer.hpp"
#include "radpipe/train.hpp"
#include "radpipe/verify.hpp"

namespace {

using namespace radpipe;

/// Flat key=value config file; '#' starts a comment line.
std::map<std::string, std::string> read_config(const std::string& path) {
  std::map<std::string, std::string> out;
  for (const std::string& line : read_lines(path)) {
    if (line.empty() || line[0] == '#') continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(path + ": expected key=value, got: " + line);
    out[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return out;
}

int cmd_syngen(size_t n, uint64_t seed, const std::string& tax_path,
               const std::string& templates_path, const std::string& out_dir) {
  Taxonomy tax = Taxonomy::load(tax_path);
  std::vector<Template> templates = load_templates(templates_path);
  std::vector<GeneratedReport> reports = generate(n, tax, templates, seed);

  std::string corpus, gold;
  for (const GeneratedReport& r : reports) {
    corpus += nlohmann::json{{"id", r.raw.id}, {"text", r.raw.text}}.dump();
    corpus += '\n';
    nlohmann::json sentences = nlohmann::json::array();
    for (const GoldSentence& s : r.sentences)
      sentences.push_back({{"section", section_name(s.section)},
                           {"text", s.text},
                           {"start", s.char_start},
                           {"end", s.char_end}});
    nlohmann::json entities = nlohmann::json::array();
    for (const GoldEntity& e : r.entities)
      entities.push_back({{"section", section_name(e.section)},
                          {"start", e.char_start},
                          {"end", e.char_end},
                          {"surface", e.surface},
                          {"concept", e.concept_id},
                          {"category", category_name(e.category)}});
    gold += nlohmann::json{{"id", r.raw.id},
                           {"sentences", std::move(sentences)},
                           {"entities", std::move(entities)}}
                .dump();
    gold += '\n';
  }
  write_file(out_dir + "/corpus.jsonl", corpus);
  write_file(out_dir + "/gold.jsonl", gold);
  std::printf("syngen: wrote %zu reports to %s\n", reports.size(), out_dir.c_str());
  return 0;
}

int cmd_preprocess(const std::string& in, const std::string& rules_path,
                   const std::string& headers_path, const std::string& out) {
  RegexRuleSet rules = RegexRuleSet::load(rules_path);
  HeaderPatternSet headers = HeaderPatternSet::load(headers_path);
  std::vector<RawReport> raw = read_corpus_jsonl(in);
  std::vector<SectionedReport> sectioned = preprocess_corpus(raw, rules, headers);
  write_file(out, sectioned_to_jsonl(sectioned));
  std::printf("preprocess: %zu/%zu reports sectioned -> %s\n", sectioned.size(), raw.size(),
              out.c_str());
  return 0;
}

int cmd_build_vocab(const std::string& base_path, const std::string& corpus_path,
                    const std::string& tax_path, size_t target_size, const std::string& out) {
  Vocabulary base = Vocabulary::load(base_path);
  Taxonomy tax = Taxonomy::load(tax_path);
  std::vector<SectionedReport> sectioned = read_sectioned_jsonl(corpus_path);
  std::vector<std::string> texts;
  for (const SectionedReport& r : sectioned)
    for (const Segment& seg : r.segments)
      for (const Sentence& s : seg.sentences) texts.push_back(s.text);
  WordPieceResult wp = train_wordpiece(texts, target_size);
  Vocabulary extended = extend_vocabulary(base, wp.tokens, tax);
  extended.save(out);
  extended.save_provenance(out + ".provenance.tsv");
  size_t added = extended.size() - base.size();
  std::printf("build-vocab: %zu base + %zu added -> %s%s\n", base.size(), added, out.c_str(),
              wp.reached_target ? "" : " (corpus exhausted before target)");
  return 0;
}

int cmd_annotate(const std::string& in, const std::string& tax_path,
                 const std::string& vocab_path, size_t budget, const std::string& out) {
  Taxonomy tax = Taxonomy::load(tax_path);
  Vocabulary vocab = Vocabulary::load(vocab_path);
  std::vector<SectionedReport> sectioned = read_sectioned_jsonl(in);
  std::string dump;
  size_t n_spans = 0;
  for (const SectionedReport& r : sectioned) {
    std::vector<Chunk> chunks;
    try {
      chunks = chunk_sections(r, vocab, budget);
    } catch (const PipelineError& e) {
      log_warn(std::string(e.what()));
      continue;
    }
    for (size_t ci = 0; ci < chunks.size(); ++ci) {
      TokenizedChunk tc = tokenize_chunk(vocab, chunks[ci]);
      nlohmann::json spans = nlohmann::json::array();
      for (const EntitySpan& s : annotate(tc, vocab, tax)) {
        spans.push_back({{"start", s.token_start},
                         {"end", s.token_end},
                         {"surface", s.surface},
                         {"concept", s.concept_id},
                         {"category", category_name(s.category)}});
        ++n_spans;
      }
      dump += nlohmann::json{{"report_id", r.id}, {"chunk_idx", ci}, {"spans", std::move(spans)}}
                  .dump();
      dump += '\n';
    }
  }
  write_file(out, dump);
  std::printf("annotate: %zu spans -> %s\n", n_spans, out.c_str());
  return 0;
}

int cmd_mask(const std::string& objective, const std::string& in, const std::string& vocab_path,
             const std::string& tax_path, uint64_t seed, size_t budget, const std::string& out) {
  Vocabulary vocab = Vocabulary::load(vocab_path);
  Taxonomy tax = Taxonomy::load(tax_path);
  std::vector<SectionedReport> sectioned = read_sectioned_jsonl(in);
  if (objective == "ss") {
    std::string dump;
    size_t n = 0;
    for (const SectionedReport& r : sectioned) {
      std::vector<Chunk> chunks;
      try {
        chunks = chunk_sections(r, vocab, budget);
      } catch (const PipelineError& e) {
        log_warn(std::string(e.what()));
        continue;
      }
      std::vector<TokenizedChunk> tcs;
      for (const Chunk& chunk : chunks) tcs.push_back(tokenize_chunk(vocab, chunk));
      for (const SentenceExample& ex : label_sections(tcs, vocab)) {
        dump += nlohmann::json{{"ids", ex.ids},
                               {"masks", nlohmann::json::array()},
                               {"labels", nlohmann::json::array()},
                               {"option", nullptr},
                               {"sections", {section_name(ex.label)}},
                               {"seed", seed}}
                    .dump();
        dump += '\n';
        ++n;
      }
    }
    write_file(out, dump);
    std::printf("mask: %zu sentence examples -> %s\n", n, out.c_str());
    return 0;
  }
  MaskingMode mode = objective == "kg" ? MaskingMode::Kg : MaskingMode::Random;
  PipelineStats stats;
  std::vector<PipelineExample> examples =
      make_masked_examples(sectioned, vocab, tax, mode, budget, seed, &stats);
  write_file(out, masked_examples_to_jsonl(examples));
  std::printf("mask: %zu examples (%zu chunks, %zu short, %zu overlong, %zu quota) -> %s\n",
              examples.size(), stats.chunks, stats.skipped_short, stats.skipped_overlong,
              stats.skipped_quota, out.c_str());
  return 0;
}

TrainConfig config_from_file(const std::map<std::string, std::string>& kv) {
  TrainConfig cfg;
  auto get = [&](const char* key) -> const std::string* {
    auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };
  if (auto v = get("steps")) cfg.steps = std::stoull(*v);
  if (auto v = get("batch_size")) cfg.batch_size = std::stoull(*v);
  if (auto v = get("lr")) cfg.lr = std::stod(*v);
  if (auto v = get("weight_decay")) cfg.weight_decay = std::stod(*v);
  if (auto v = get("warmup_frac")) cfg.warmup_frac = std::stod(*v);
  if (auto v = get("schedule")) {
    if (*v == "constant") cfg.schedule = LrSchedule::Constant;
    else if (*v == "polynomial-warmup") cfg.schedule = LrSchedule::PolynomialWarmup;
    else throw ConfigError("unknown schedule: " + *v);
  }
  if (auto v = get("lambda_a")) cfg.weights.lambda_a = std::stod(*v);
  if (auto v = get("lambda_kg")) cfg.weights.lambda_kg = std::stod(*v);
  if (auto v = get("reg_sign")) cfg.loss.reg_sign = std::stoi(*v);
  if (auto v = get("reduction"))
    cfg.loss.reduction = (*v == "mean") ? Reduction::Mean : Reduction::Sum;
  if (auto v = get("budget")) cfg.budget = std::stoull(*v);
  if (auto v = get("d_model")) cfg.d_model = std::stoull(*v);
  if (auto v = get("gen_d_model")) cfg.gen_d_model = std::stoull(*v);
  if (auto v = get("ffn_mult")) cfg.ffn_mult = std::stoull(*v);
  if (auto v = get("holdout_frac")) cfg.holdout_frac = std::stod(*v);
  if (auto v = get("eval_every")) cfg.eval_every = std::stoull(*v);
  if (auto v = get("patience")) cfg.patience = std::stoull(*v);
  if (auto v = get("reg_tau")) cfg.reg_tau = std::stod(*v);
  if (auto v = get("masking")) {
    if (*v == "random") cfg.masking = MaskingMode::Random;
    else if (*v == "kg") cfg.masking = MaskingMode::Kg;
    else throw ConfigError("unknown masking mode: " + *v);
  }
  if (auto v = get("reference_prefix")) cfg.reference_prefix = *v;
  if (auto v = get("reference_vocab")) cfg.reference_vocab = *v;
  return cfg;
}

int cmd_train(const std::string& objective, const std::string& config_path, uint64_t seed,
              size_t steps_override, const std::string& out_dir) {
  std::map<std::string, std::string> kv =
      config_path.empty() ? std::map<std::string, std::string>{} : read_config(config_path);
  TrainConfig cfg = config_from_file(kv);
  auto obj = objective_from_name(objective);
  if (!obj) throw ConfigError("unknown objective: " + objective);
  cfg.objective = *obj;
  cfg.run_seed = seed;
  if (steps_override) cfg.steps = steps_override;
  cfg.out_dir = out_dir;

  auto need = [&](const char* key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw ConfigError(std::string("train config: missing key ") + key);
    return it->second;
  };
  RegexRuleSet rules = RegexRuleSet::load(need("rules"));
  HeaderPatternSet headers = HeaderPatternSet::load(need("headers"));
  Taxonomy tax = Taxonomy::load(need("taxonomy"));
  Vocabulary vocab = Vocabulary::load(need("vocab"));
  std::vector<RawReport> raw = read_corpus_jsonl(need("corpus"));
  std::vector<SectionedReport> sectioned = preprocess_corpus(raw, rules, headers);

  TrainReport report = train(cfg, sectioned, tax, vocab);
  std::printf("train: %zu steps, rtd_auc=%.4f section_accuracy=%.4f -> %s\n", report.steps_run,
              report.rtd_auc, report.section_accuracy, out_dir.c_str());
  return 0;
}

int cmd_loss_eval(const std::string& batch_path) {
  nlohmann::json j = nlohmann::json::parse(read_file(batch_path));
  RtdBatch batch;
  batch.x = j.at("x").get<std::vector<int>>();
  batch.x_corrupt = j.at("x_corrupt").get<std::vector<int>>();
  batch.masked = j.at("masked").get<std::vector<size_t>>();
  batch.d = j.at("d").get<std::vector<double>>();
  for (const auto& row : j.at("p_g")) batch.p_g.push_back(row.get<std::vector<double>>());
  size_t n = batch.x.size();
  auto read_sets = [&](const char* key, std::vector<std::set<std::string>>* dst) {
    dst->assign(n, {});
    if (!j.contains(key)) return;
    size_t t = 0;
    for (const auto& arr : j.at(key)) {
      for (const auto& s : arr) (*dst)[t].insert(s.get<std::string>());
      ++t;
    }
  };
  if (j.contains("linked_orig")) {
    batch.linked_orig = j.at("linked_orig").get<std::vector<bool>>();
    batch.linked_corrupt = j.at("linked_corrupt").get<std::vector<bool>>();
    read_sets("sites_orig", &batch.sites_orig);
    read_sets("sites_corrupt", &batch.sites_corrupt);
    read_sets("bodysys_orig", &batch.bodysys_orig);
    read_sets("bodysys_corrupt", &batch.bodysys_corrupt);
  }
  double reg = j.value("reg", 0.0);
  LossWeights weights;
  weights.lambda_a = j.value("lambda_a", 1.0);
  weights.lambda_kg = j.value("lambda_kg", 1.0);

  double v_reg = reg;
  if (j.contains("h_a")) {
    EncodingBatch eb;
    for (const auto& row : j.at("h_a"))
      for (const auto& x : row) eb.h_a.push_back(x.get<double>());
    for (const auto& row : j.at("h_p"))
      for (const auto& x : row) eb.h_p.push_back(x.get<double>());
    eb.batch = j.at("h_a").size();
    eb.width = eb.batch ? eb.h_a.size() / eb.batch : 0;
    eb.tau = j.value("tau", 1.0);
    v_reg = l_reg(eb);
  }
  double v_mlm = l_mlm(batch, v_reg, weights.lambda_a);
  double v_disc = l_disc(batch, v_reg, weights.lambda_a);
  double v_kg = l_kg(batch);
  double v_disc_kg = l_disc_kg(batch, v_reg, weights);
  std::printf("l_reg     % .12f\n", v_reg);
  std::printf("l_mlm     % .12f\n", v_mlm);
  std::printf("l_disc    % .12f\n", v_disc);
  std::printf("l_kg      % .12f\n", v_kg);
  std::printf("l_disc_kg % .12f\n", v_disc_kg);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"radiology-report pretraining pipeline"};
  app.require_subcommand(1);

  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "debug|info|warn|error|off");

  // syngen
  auto* sc_syngen = app.add_subcommand("syngen", "generate a labeled synthetic corpus");
  size_t syn_n = 100;
  uint64_t syn_seed = 42;
  std::string syn_tax = "data/taxonomy.jsonl", syn_templates = "data/templates.jsonl";
  std::string syn_out = "out";
  sc_syngen->add_option("--n", syn_n, "number of reports");
  sc_syngen->add_option("--seed", syn_seed, "generation seed");
  sc_syngen->add_option("--tax", syn_tax, "taxonomy JSONL");
  sc_syngen->add_option("--templates", syn_templates, "template JSONL");
  sc_syngen->add_option("--out", syn_out, "output directory");

  // preprocess
  auto* sc_pre = app.add_subcommand("preprocess", "clean and section a raw corpus");
  std::string pre_in, pre_rules = "data/clean_rules.tsv", pre_headers = "data/headers.tsv";
  std::string pre_out = "sectioned.jsonl";
  sc_pre->add_option("--in", pre_in, "raw corpus JSONL")->required();
  sc_pre->add_option("--rules", pre_rules, "regex rule file");
  sc_pre->add_option("--headers", pre_headers, "header pattern file");
  sc_pre->add_option("--out", pre_out, "sectioned output JSONL");

  // build-vocab
  auto* sc_vocab = app.add_subcommand("build-vocab", "extend the base vocabulary");
  std::string bv_base = "data/base_vocab.txt", bv_corpus, bv_tax = "data/taxonomy.jsonl";
  std::string bv_out = "vocab.txt";
  size_t bv_target = 2000;
  sc_vocab->add_option("--base", bv_base, "base vocabulary file");
  sc_vocab->add_option("--corpus", bv_corpus, "sectioned corpus JSONL")->required();
  sc_vocab->add_option("--tax", bv_tax, "taxonomy JSONL");
  sc_vocab->add_option("--target-size", bv_target, "wordpiece induction target");
  sc_vocab->add_option("--out", bv_out, "output vocabulary file");

  // annotate
  auto* sc_ann = app.add_subcommand("annotate", "dump entity annotations");
  std::string an_in, an_tax = "data/taxonomy.jsonl", an_vocab, an_out = "annotations.jsonl";
  size_t an_budget = 512;
  sc_ann->add_option("--in", an_in, "sectioned corpus JSONL")->required();
  sc_ann->add_option("--tax", an_tax, "taxonomy JSONL");
  sc_ann->add_option("--vocab", an_vocab, "vocabulary file")->required();
  sc_ann->add_option("--budget", an_budget, "chunk token budget");
  sc_ann->add_option("--out", an_out, "annotation dump JSONL");

  // mask
  auto* sc_mask = app.add_subcommand("mask", "build masked training examples");
  std::string mk_obj = "mlm", mk_in, mk_vocab, mk_tax = "data/taxonomy.jsonl";
  std::string mk_out = "examples.jsonl";
  uint64_t mk_seed = 42;
  size_t mk_budget = 512;
  sc_mask->add_option("--objective", mk_obj, "mlm|kg|ss")
      ->check(CLI::IsMember({"mlm", "kg", "ss"}));
  sc_mask->add_option("--in", mk_in, "sectioned corpus JSONL")->required();
  sc_mask->add_option("--vocab", mk_vocab, "vocabulary file")->required();
  sc_mask->add_option("--tax", mk_tax, "taxonomy JSONL");
  sc_mask->add_option("--seed", mk_seed, "run seed");
  sc_mask->add_option("--budget", mk_budget, "chunk token budget");
  sc_mask->add_option("--out", mk_out, "examples JSONL");

  // train
  auto* sc_train = app.add_subcommand("train", "run the toy training loop");
  std::string tr_obj = "mlm", tr_config, tr_out = "out";
  uint64_t tr_seed = 42;
  size_t tr_steps = 0;
  sc_train->add_option("--objective", tr_obj, "mlm|kg|ss")
      ->check(CLI::IsMember({"mlm", "kg", "ss"}));
  sc_train->add_option("--config", tr_config, "key=value config file");
  sc_train->add_option("--seed", tr_seed, "run seed");
  sc_train->add_option("--steps", tr_steps, "override config steps");
  sc_train->add_option("--out", tr_out, "output directory");

  // loss-eval
  auto* sc_loss = app.add_subcommand("loss-eval", "evaluate the loss kernels on a batch file");
  std::string le_batch;
  sc_loss->add_option("--batch", le_batch, "RtdBatch JSON file")->required();

  // verify
  auto* sc_verify = app.add_subcommand("verify", "run the invariant suite");
  std::string vf_data = "data";
  sc_verify->add_option("--data", vf_data, "bundled data directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints help or the error
    return 2;
  }

  try {
    radpipe::set_log_level(log_level);
    if (sc_syngen->parsed())
      return cmd_syngen(syn_n, syn_seed, syn_tax, syn_templates, syn_out);
    if (sc_pre->parsed()) return cmd_preprocess(pre_in, pre_rules, pre_headers, pre_out);
    if (sc_vocab->parsed())
      return cmd_build_vocab(bv_base, bv_corpus, bv_tax, bv_target, bv_out);
    if (sc_ann->parsed()) return cmd_annotate(an_in, an_tax, an_vocab, an_budget, an_out);
    if (sc_mask->parsed())
      return cmd_mask(mk_obj, mk_in, mk_vocab, mk_tax, mk_seed, mk_budget, mk_out);
    if (sc_train->parsed()) return cmd_train(tr_obj, tr_config, tr_seed, tr_steps, tr_out);
    if (sc_loss->parsed()) return cmd_loss_eval(le_batch);
    if (sc_verify->parsed()) {
      VerifyOptions opt;
      opt.data_dir = vf_data;
      VerifyResult result = verify_all(opt);
      std::fputs(result.report.c_str(), stdout);
      return result.ok ? 0 : 1;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
