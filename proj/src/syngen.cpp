#include "radpipe/syngen.hpp"

#include <algorithm>
#include <cctype>

#include "json.hpp"
#include "radpipe/errors.hpp"
#include "radpipe/io.hpp"
#include "radpipe/rng.hpp"

namespace radpipe {

std::vector<Template> load_templates(const std::string& path) {
  std::vector<Template> out;
  size_t line_no = 0;
  for (const std::string& line : read_lines(path)) {
    ++line_no;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path + " line " + std::to_string(line_no) + ": " + e.what());
    }
    Template t;
    auto kind = section_from_name(j.at("section").get<std::string>());
    if (!kind) throw ConfigError(path + " line " + std::to_string(line_no) + ": bad section");
    t.section = *kind;
    t.pattern = j.at("pattern").get<std::string>();
    t.weight = j.value("weight", 1.0);
    if (t.weight <= 0) throw ConfigError(path + " line " + std::to_string(line_no) + ": weight");
    out.push_back(std::move(t));
  }
  if (out.empty()) throw ConfigError(path + ": no templates");
  return out;
}

namespace {

struct SlotPools {
  std::vector<std::pair<const Concept*, std::string>> anat, obs, sym, desc;
};

std::vector<std::string> split_words(const std::string& surface) {
  std::vector<std::string> words;
  std::string cur;
  for (char c : surface) {
    if (c == ' ') {
      if (!cur.empty()) words.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) words.push_back(cur);
  return words;
}

SlotPools build_pools(const Taxonomy& tax) {
  // "density"/"densities" stay out of the fill pools: a {DESC} draw of
  // "streaky" next to them would collide with the compound concept and
  // desynchronize the gold labels.
  const std::set<std::string> excluded = {"density", "densities"};
  SlotPools pools;
  auto add_surfaces = [&](const Concept& c, auto& pool) {
    if (!excluded.count(c.preferred_label)) pool.emplace_back(&c, c.preferred_label);
    for (const std::string& s : c.synonyms)
      if (!excluded.count(s)) pool.emplace_back(&c, s);
  };
  for (const Concept& c : tax.concepts()) {
    if (c.parents.empty()) continue;  // class roots never appear in text
    const std::string& cls = c.radlex_class;
    if (cls == "anatomical entity") add_surfaces(c, pools.anat);
    else if (cls == "clinical finding" || cls == "imaging observation")
      add_surfaces(c, pools.obs);
    else if (cls == "symptom") add_surfaces(c, pools.sym);
    else if (cls == "location descriptor" || cls == "size descriptor" ||
             cls == "turbidity descriptor" || cls == "stage of healing descriptor" ||
             cls == "composition descriptor" || cls == "anatomically-related descriptor" ||
             cls == "anatomical descriptors" || cls == "severity descriptor")
      add_surfaces(c, pools.desc);
  }
  if (pools.anat.empty() || pools.obs.empty() || pools.sym.empty() || pools.desc.empty())
    throw ConfigError("syngen: taxonomy does not populate all slot pools");
  return pools;
}

const std::vector<std::pair<SectionKind, std::vector<std::string>>>& section_order() {
  static const std::vector<std::pair<SectionKind, std::vector<std::string>>> order = {
      {SectionKind::Clinical,
       {"CLINICAL HISTORY:", "HISTORY:", "INDICATION:", "CLINICAL INFORMATION:"}},
      {SectionKind::Comparison, {"COMPARISON:"}},
      {SectionKind::Miscellaneous, {"TECHNIQUE:", "EXAMINATION:", "EXAM:"}},
      {SectionKind::Findings, {"FINDINGS:"}},
      {SectionKind::Impressions, {"IMPRESSION:", "IMPRESSIONS:"}},
  };
  return order;
}

double section_presence(SectionKind kind) {
  switch (kind) {
    case SectionKind::Clinical: return 0.8;
    case SectionKind::Comparison: return 0.5;
    case SectionKind::Miscellaneous: return 0.4;
    case SectionKind::Findings: return 1.0;
    case SectionKind::Impressions: return 0.85;
  }
  return 0.0;
}

struct FilledSentence {
  std::string text;
  // entity parts with offsets local to `text`
  std::vector<GoldEntity> entities;
};

/// Slot fills carry the co-occurrence structure of real reports: anatomies
/// usually agree with the observation's anatomical site, symptoms with its
/// region, and descriptor flavors with the observation class. The residual
/// random draws keep the corpus from being fully deterministic.
const std::pair<const Concept*, std::string>* pick_correlated(
    const Taxonomy& tax, const SlotPools& pools, const std::string& slot,
    const Concept* nearest_obs, Rng& rng) {
  const std::vector<std::pair<const Concept*, std::string>>* pool = nullptr;
  if (slot == "ANAT") pool = &pools.anat;
  else if (slot == "OBS") pool = &pools.obs;
  else if (slot == "SYM") pool = &pools.sym;
  else if (slot == "DESC") pool = &pools.desc;
  else throw ConfigError("syngen: unknown slot {" + slot + "}");

  const auto* pick = &(*pool)[rng.below(pool->size())];
  if (nearest_obs == nullptr || slot == "OBS") return pick;

  std::vector<const std::pair<const Concept*, std::string>*> preferred;
  if (slot == "ANAT" && rng.bernoulli(0.85)) {
    std::set<std::string> sites = tax.anatomical_sites(*nearest_obs);
    for (const auto& entry : *pool)
      if (sites.count(entry.first->id)) preferred.push_back(&entry);
  } else if (slot == "SYM" && rng.bernoulli(0.8)) {
    std::set<std::string> sites = tax.anatomical_sites(*nearest_obs);
    for (const auto& entry : *pool) {
      std::set<std::string> sym_sites = tax.anatomical_sites(*entry.first);
      for (const std::string& s : sym_sites)
        if (sites.count(s)) {
          preferred.push_back(&entry);
          break;
        }
    }
  } else if (slot == "DESC" && rng.bernoulli(0.8)) {
    bool imaging = nearest_obs->radlex_class == "imaging observation";
    for (const auto& entry : *pool) {
      const std::string& cls = entry.first->radlex_class;
      bool compatible = imaging ? (cls == "turbidity descriptor" || cls == "size descriptor")
                                : (cls == "location descriptor" ||
                                   cls == "stage of healing descriptor" ||
                                   cls == "severity descriptor");
      if (compatible) preferred.push_back(&entry);
    }
  }
  if (!preferred.empty()) pick = preferred[rng.below(preferred.size())];
  return pick;
}

FilledSentence fill_template(const Template& tmpl, const Taxonomy& tax, const SlotPools& pools,
                             Rng& rng) {
  struct Part {
    std::string literal;  // empty for slots
    std::string slot;
    const std::pair<const Concept*, std::string>* fill = nullptr;
  };
  std::vector<Part> parts;
  const std::string& pat = tmpl.pattern;
  size_t i = 0;
  while (i < pat.size()) {
    if (pat[i] != '{') {
      if (parts.empty() || !parts.back().slot.empty()) parts.push_back({});
      parts.back().literal.push_back(pat[i]);
      ++i;
      continue;
    }
    size_t close = pat.find('}', i);
    if (close == std::string::npos) throw ConfigError("syngen: unbalanced slot in " + pat);
    Part p;
    p.slot = pat.substr(i + 1, close - i - 1);
    parts.push_back(std::move(p));
    i = close + 1;
  }

  // observations first, then the slots correlated with them
  for (Part& p : parts)
    if (p.slot == "OBS") p.fill = pick_correlated(tax, pools, p.slot, nullptr, rng);
  const Concept* nearest = nullptr;
  for (Part& p : parts) {
    if (p.slot == "OBS") nearest = p.fill->first;
    else if (!p.slot.empty()) p.fill = pick_correlated(tax, pools, p.slot, nearest, rng);
  }

  FilledSentence out;
  bool annotatable = tmpl.section == SectionKind::Clinical ||
                     tmpl.section == SectionKind::Findings ||
                     tmpl.section == SectionKind::Impressions;
  for (const Part& p : parts) {
    if (p.slot.empty()) {
      out.text += p.literal;
      continue;
    }
    const std::string& surface = p.fill->second;
    size_t fill_start = out.text.size();
    out.text += surface;
    // gold labels follow the same resolution the annotator applies, so
    // compound fills that split are recorded split; entity linking is only
    // defined for Clinical/Findings/Impressions, so other sections carry
    // no gold labels
    if (!annotatable) continue;
    std::vector<std::string> words = split_words(surface);
    std::vector<size_t> word_starts;
    size_t acc = fill_start;
    for (const std::string& w : words) {
      word_starts.push_back(acc);
      acc += w.size() + 1;
    }
    for (const ResolvedPart& part : resolve_surface(tax, words)) {
      GoldEntity g;
      g.section = tmpl.section;
      g.char_start = word_starts[part.word_offset];
      size_t last = part.word_offset + part.n_words - 1;
      g.char_end = word_starts[last] + words[last].size();
      g.surface = out.text.substr(g.char_start, g.char_end - g.char_start);
      g.concept_id = part.concept_id;
      g.category = part.category;
      out.entities.push_back(std::move(g));
    }
  }
  if (!out.text.empty())
    out.text[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out.text[0])));
  return out;
}

}  // namespace

std::vector<GeneratedReport> generate(size_t n_reports, const Taxonomy& tax,
                                      const std::vector<Template>& templates, uint64_t seed) {
  SlotPools pools = build_pools(tax);

  // per-section template index + cumulative weights
  struct SectionTemplates {
    std::vector<const Template*> templates;
    std::vector<double> cumulative;
    double total = 0;
  };
  std::map<SectionKind, SectionTemplates> by_section;
  for (const Template& t : templates) {
    auto& st = by_section[t.section];
    st.total += t.weight;
    st.templates.push_back(&t);
    st.cumulative.push_back(st.total);
  }

  std::vector<GeneratedReport> out;
  out.reserve(n_reports);
  for (size_t idx = 0; idx < n_reports; ++idx) {
    Rng rng(hash_mix(hash_mix(0, seed), static_cast<uint64_t>(idx)));
    GeneratedReport report;
    report.raw.id = "synth-" + std::to_string(100000 + idx).substr(1);

    std::vector<SectionKind> present;
    for (const auto& [kind, headers] : section_order()) {
      (void)headers;
      if (by_section.count(kind) && rng.bernoulli(section_presence(kind))) present.push_back(kind);
    }
    if (present.size() < 2) present.push_back(SectionKind::Impressions);

    std::string& text = report.raw.text;
    for (SectionKind kind : present) {
      const auto& headers = std::find_if(section_order().begin(), section_order().end(),
                                         [&](const auto& p) { return p.first == kind; })
                                ->second;
      if (!text.empty()) text.push_back('\n');
      text += headers[rng.below(headers.size())];

      const SectionTemplates& st = by_section.at(kind);
      size_t n_sentences = 1 + rng.below(3);
      for (size_t s = 0; s < n_sentences; ++s) {
        double u = rng.next_double() * st.total;
        size_t pick = std::lower_bound(st.cumulative.begin(), st.cumulative.end(), u) -
                      st.cumulative.begin();
        if (pick >= st.templates.size()) pick = st.templates.size() - 1;
        FilledSentence filled = fill_template(*st.templates[pick], tax, pools, rng);
        text.push_back(' ');
        size_t sentence_start = text.size();
        text += filled.text;

        GoldSentence gs;
        gs.section = kind;
        gs.text = filled.text;
        gs.char_start = sentence_start;
        gs.char_end = text.size();
        report.sentences.push_back(std::move(gs));
        for (GoldEntity g : filled.entities) {
          g.char_start += sentence_start;
          g.char_end += sentence_start;
          report.entities.push_back(std::move(g));
        }
      }
    }
    out.push_back(std::move(report));
  }
  return out;
}

}  // namespace radpipe
