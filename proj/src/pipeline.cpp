#include "radpipe/pipeline.hpp"

#include "json.hpp"
#include "radpipe/errors.hpp"
#include "radpipe/io.hpp"
#include "radpipe/log.hpp"
#include "radpipe/rng.hpp"

namespace radpipe {

std::vector<SectionedReport> preprocess_corpus(const std::vector<RawReport>& reports,
                                               const RegexRuleSet& rules,
                                               const HeaderPatternSet& headers) {
  std::vector<SectionedReport> out;
  out.reserve(reports.size());
  for (const RawReport& r : reports) {
    std::string cleaned = clean_text(r.text, rules);
    if (cleaned.empty()) {
      log_warn("report " + r.id + " dropped: empty after cleaning");
      continue;
    }
    out.push_back(identify_sections(r.id, cleaned, headers));
  }
  return out;
}

std::vector<RawReport> read_corpus_jsonl(const std::string& path) {
  std::vector<RawReport> out;
  size_t line_no = 0;
  for (const std::string& line : read_lines(path)) {
    ++line_no;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path + " line " + std::to_string(line_no) + ": " + e.what());
    }
    out.push_back({j.at("id").get<std::string>(), j.at("text").get<std::string>()});
  }
  return out;
}

void write_corpus_jsonl(const std::vector<RawReport>& reports, const std::string& path) {
  std::string out;
  for (const RawReport& r : reports) {
    nlohmann::json j{{"id", r.id}, {"text", r.text}};
    out += j.dump();
    out += '\n';
  }
  write_file(path, out);
}

std::string sectioned_to_jsonl(const std::vector<SectionedReport>& reports) {
  std::string out;
  for (const SectionedReport& r : reports) {
    nlohmann::json sections = nlohmann::json::object();
    for (const auto& [kind, sentences] : r.sections()) {
      nlohmann::json arr = nlohmann::json::array();
      for (const Sentence& s : sentences)
        arr.push_back({{"text", s.text}, {"start", s.start}, {"end", s.end}});
      sections[section_name(kind)] = std::move(arr);
    }
    nlohmann::json j{{"id", r.id}, {"sections", std::move(sections)}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<SectionedReport> read_sectioned_jsonl(const std::string& path) {
  std::vector<SectionedReport> out;
  size_t line_no = 0;
  for (const std::string& line : read_lines(path)) {
    ++line_no;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path + " line " + std::to_string(line_no) + ": " + e.what());
    }
    SectionedReport r;
    r.id = j.at("id").get<std::string>();
    for (const auto& [name, arr] : j.at("sections").items()) {
      auto kind = section_from_name(name);
      if (!kind) throw ConfigError(path + " line " + std::to_string(line_no) +
                                   ": unknown section " + name);
      Segment seg;
      seg.kind = *kind;
      for (const auto& sj : arr) {
        Sentence s;
        s.text = sj.at("text").get<std::string>();
        s.start = sj.at("start").get<size_t>();
        s.end = sj.at("end").get<size_t>();
        seg.sentences.push_back(std::move(s));
      }
      r.segments.push_back(std::move(seg));
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<PipelineExample> make_masked_examples(const std::vector<SectionedReport>& reports,
                                                  const Vocabulary& vocab, const Taxonomy& tax,
                                                  MaskingMode mode, size_t budget,
                                                  uint64_t run_seed, PipelineStats* stats) {
  PipelineStats local;
  PipelineStats& st = stats ? *stats : local;
  st.reports_in += reports.size();

  std::vector<PipelineExample> out;
  for (const SectionedReport& report : reports) {
    std::vector<Chunk> chunks;
    try {
      chunks = chunk_sections(report, vocab, budget);
    } catch (const PipelineError& e) {
      ++st.skipped_overlong;
      log_warn(std::string(e.what()));
      continue;
    }
    for (size_t ci = 0; ci < chunks.size(); ++ci) {
      ++st.chunks;
      PipelineExample ex;
      ex.chunk = tokenize_chunk(vocab, chunks[ci]);
      ex.chunk_idx = ci;
      if (ex.chunk.ids.size() < 7) {
        ++st.skipped_short;
        continue;
      }
      for (const Sentence& s : chunks[ci].sentences) {
        if (!ex.text.empty()) ex.text.push_back(' ');
        ex.text += s.text;
      }
      uint64_t seed = example_seed(run_seed, report.id, ci);
      std::vector<bool> specials = ex.chunk.special_mask(vocab);
      bool kg_section = ex.chunk.section == SectionKind::Clinical ||
                        ex.chunk.section == SectionKind::Findings ||
                        ex.chunk.section == SectionKind::Impressions;
      try {
        if (mode == MaskingMode::Kg && kg_section) {
          ex.spans = annotate(ex.chunk, vocab, tax);
          auto [option, qualified] = select_option(ex.spans, ex.chunk.ids.size(),
                                                   hash_mix(seed, "select"));
          ex.masked = mask_kg(ex.chunk.ids, specials, ex.spans, option, qualified,
                              vocab.mask_id(), hash_mix(seed, "mask"),
                              report.id + "#" + std::to_string(ci));
        } else {
          ex.masked = mask_random(ex.chunk.ids, specials, vocab.mask_id(), 0.15, seed);
        }
      } catch (const PipelineError& e) {
        ++st.skipped_quota;
        log_warn(std::string(e.what()));
        continue;
      }
      ex.masked.rng_seed = seed;
      for (size_t s = 0; s < ex.chunk.sentences.size(); ++s)
        ex.masked.section_labels.push_back(ex.chunk.section);
      ++st.examples;
      out.push_back(std::move(ex));
    }
  }
  return out;
}

std::string masked_examples_to_jsonl(const std::vector<PipelineExample>& examples) {
  std::string out;
  for (const PipelineExample& ex : examples) {
    nlohmann::json sections = nlohmann::json::array();
    for (SectionKind kind : ex.masked.section_labels) sections.push_back(section_name(kind));
    nlohmann::json j{
        {"ids", ex.masked.token_ids},
        {"masks", ex.masked.mask_positions},
        {"labels", ex.masked.original_ids},
        {"option", ex.masked.option ? nlohmann::json(masking_option_name(*ex.masked.option))
                                    : nlohmann::json(nullptr)},
        {"sections", std::move(sections)},
        {"seed", ex.masked.rng_seed},
    };
    out += j.dump();
    out += '\n';
  }
  return out;
}

KgLinkTable KgLinkTable::build(const Vocabulary& vocab, const Taxonomy& tax) {
  KgLinkTable table;
  size_t n = vocab.size();
  table.linked.assign(n, false);
  table.sites.resize(n);
  table.bodysys.resize(n);
  for (size_t id = 0; id < n; ++id) {
    if (vocab.is_special_id(static_cast<int>(id))) continue;
    const std::string& token = vocab.token_of(static_cast<int>(id));
    if (token.rfind("##", 0) == 0) continue;  // continuations never link
    SurfaceLink link = link_surface(tax, token);
    if (!link.match) continue;
    table.linked[id] = true;
    table.sites[id] = tax.anatomical_sites(*link.match);
    table.bodysys[id] = tax.body_system_branches(*link.match);
  }
  return table;
}

}  // namespace radpipe
