#include "radpipe/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "radpipe/errors.hpp"
#include "radpipe/io.hpp"
#include "radpipe/log.hpp"
#include "radpipe/taxonomy.hpp"

namespace radpipe {

const std::vector<std::string>& anonymization_tokens() {
  static const std::vector<std::string> tokens = {"[date]", "[person]", "[location]", "[time]",
                                                  "[removed]"};
  return tokens;
}

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary Vocabulary::load(const std::string& path) {
  return from_tokens(read_lines(path));
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens) {
  Vocabulary v;
  for (const std::string& t : tokens) v.append(t, TokenProvenance::Base);
  v.find_control_ids();
  return v;
}

void Vocabulary::append(const std::string& token, TokenProvenance prov) {
  if (index_.count(token)) throw ConfigError("vocabulary: duplicate token \"" + token + "\"");
  index_.emplace(token, static_cast<int>(tokens_.size()));
  tokens_.push_back(token);
  provenance_.push_back(prov);
}

void Vocabulary::find_control_ids() {
  auto need = [&](const char* t) {
    auto it = index_.find(t);
    if (it == index_.end())
      throw ConfigError(std::string("vocabulary: missing control token ") + t);
    return it->second;
  };
  pad_id_ = need("[PAD]");
  unk_id_ = need("[UNK]");
  cls_id_ = need("[CLS]");
  sep_id_ = need("[SEP]");
  mask_id_ = need("[MASK]");
}

void Vocabulary::save(const std::string& path) const {
  std::string out;
  for (const std::string& t : tokens_) {
    out += t;
    out += '\n';
  }
  write_file(path, out);
}

void Vocabulary::save_provenance(const std::string& path) const {
  std::string out;
  for (size_t i = 0; i < tokens_.size(); ++i) {
    out += tokens_[i];
    out += '\t';
    switch (provenance_[i]) {
      case TokenProvenance::Base: out += "base"; break;
      case TokenProvenance::New: out += "new"; break;
      case TokenProvenance::Special: out += "special"; break;
    }
    out += '\n';
  }
  write_file(path, out);
}

std::optional<int> Vocabulary::id_of(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool Vocabulary::is_special_id(int id) const {
  if (id == pad_id_ || id == unk_id_ || id == cls_id_ || id == sep_id_ || id == mask_id_)
    return true;
  return provenance_.at(static_cast<size_t>(id)) == TokenProvenance::Special;
}

// ---------------------------------------------------------------------------
// pre-tokenization

namespace {

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

/// Length of an anonymization placeholder starting at text[pos], or 0.
size_t placeholder_at(const std::string& lower, size_t pos) {
  if (lower[pos] != '[') return 0;
  for (const std::string& t : anonymization_tokens()) {
    if (lower.compare(pos, t.size(), t) == 0) return t.size();
  }
  return 0;
}

}  // namespace

std::vector<Word> pre_tokenize(const std::string& text) {
  std::string lower;
  lower.reserve(text.size());
  for (char c : text)
    lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));

  std::vector<Word> out;
  size_t i = 0;
  size_t n = lower.size();
  while (i < n) {
    char c = lower[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (size_t len = placeholder_at(lower, i)) {
      out.push_back({lower.substr(i, len), i, i + len, true});
      i += len;
      continue;
    }
    if (is_word_char(c)) {
      size_t j = i;
      while (j < n && is_word_char(lower[j])) ++j;
      out.push_back({lower.substr(i, j - i), i, j, false});
      i = j;
      continue;
    }
    // punctuation (and any other byte) becomes its own token
    out.push_back({lower.substr(i, 1), i, i + 1, false});
    ++i;
  }
  return out;
}

std::string normalize_text(const std::string& text) {
  std::string out;
  for (const Word& w : pre_tokenize(text)) {
    if (!out.empty()) out.push_back(' ');
    out += w.text;
  }
  return out;
}

// ---------------------------------------------------------------------------
// tokenize / detokenize

namespace {

/// Greedy longest-prefix WordPiece of one word; empty result means no match.
std::vector<int> wordpiece_word(const Vocabulary& vocab, const std::string& word) {
  std::vector<int> pieces;
  size_t start = 0;
  while (start < word.size()) {
    size_t end = word.size();
    std::optional<int> found;
    while (start < end) {
      std::string sub = word.substr(start, end - start);
      if (start > 0) sub = "##" + sub;
      if (auto id = vocab.id_of(sub)) {
        found = id;
        break;
      }
      --end;
    }
    if (!found) return {};
    pieces.push_back(*found);
    start = end;
  }
  return pieces;
}

}  // namespace

std::vector<int> tokenize(const Vocabulary& vocab, const std::string& text) {
  std::vector<int> ids;
  for (const Word& w : pre_tokenize(text)) {
    if (w.is_special) {
      auto id = vocab.id_of(w.text);
      ids.push_back(id ? *id : vocab.unk_id());
      continue;
    }
    std::vector<int> pieces = wordpiece_word(vocab, w.text);
    if (pieces.empty()) ids.push_back(vocab.unk_id());
    else ids.insert(ids.end(), pieces.begin(), pieces.end());
  }
  return ids;
}

std::string detokenize(const Vocabulary& vocab, const std::vector<int>& ids) {
  std::string out;
  for (int id : ids) {
    const std::string& t = vocab.token_of(id);
    if (t.size() > 2 && t[0] == '#' && t[1] == '#') {
      out += t.substr(2);
    } else {
      if (!out.empty()) out.push_back(' ');
      out += t;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// WordPiece induction

WordPieceResult train_wordpiece(const std::vector<std::string>& corpus_texts, size_t target_size,
                                bool relax_target_floor) {
  if (!relax_target_floor && target_size < 256)
    throw ConfigError("train_wordpiece: target_size must be >= 256");

  // word frequencies, in first-seen order for determinism
  std::vector<std::pair<std::string, size_t>> word_freq;
  std::unordered_map<std::string, size_t> word_pos;
  for (const std::string& text : corpus_texts) {
    for (const Word& w : pre_tokenize(text)) {
      if (w.is_special) continue;
      auto [it, fresh] = word_pos.emplace(w.text, word_freq.size());
      if (fresh) word_freq.emplace_back(w.text, 1);
      else ++word_freq[it->second].second;
    }
  }
  if (word_freq.empty()) throw PipelineError("train_wordpiece: empty corpus");

  // symbol sequences per word
  std::vector<std::vector<std::string>> seqs(word_freq.size());
  std::set<std::string> vocab;
  std::set<char> alphabet;
  for (size_t w = 0; w < word_freq.size(); ++w) {
    const std::string& word = word_freq[w].first;
    for (size_t i = 0; i < word.size(); ++i) {
      std::string sym = (i == 0) ? std::string(1, word[i]) : "##" + std::string(1, word[i]);
      seqs[w].push_back(sym);
      alphabet.insert(word[i]);
    }
  }
  // seed both forms of every character present in the corpus
  for (char c : alphabet) {
    vocab.insert(std::string(1, c));
    vocab.insert("##" + std::string(1, c));
  }

  auto merge_token = [](const std::string& left, const std::string& right) {
    std::string r = right;
    if (r.rfind("##", 0) == 0) r = r.substr(2);
    return left + r;
  };

  while (vocab.size() < target_size) {
    // pair and symbol frequencies over the current segmentation
    std::map<std::pair<std::string, std::string>, size_t> pair_freq;
    std::unordered_map<std::string, size_t> sym_freq;
    for (size_t w = 0; w < word_freq.size(); ++w) {
      size_t f = word_freq[w].second;
      const auto& seq = seqs[w];
      for (size_t i = 0; i < seq.size(); ++i) {
        sym_freq[seq[i]] += f;
        if (i + 1 < seq.size()) pair_freq[{seq[i], seq[i + 1]}] += f;
      }
    }
    // best-scoring pair whose merge is not already in the vocabulary;
    // std::map iteration order makes the lexicographic tie-break implicit
    bool have_best = false;
    double best_score = 0;
    std::pair<std::string, std::string> best;
    for (const auto& [pair, freq] : pair_freq) {
      if (vocab.count(merge_token(pair.first, pair.second))) continue;
      double score = static_cast<double>(freq) /
                     (static_cast<double>(sym_freq[pair.first]) *
                      static_cast<double>(sym_freq[pair.second]));
      if (!have_best || score > best_score) {
        have_best = true;
        best_score = score;
        best = pair;
      }
    }
    if (!have_best) {
      log_warn("train_wordpiece: corpus exhausted at " + std::to_string(vocab.size()) +
               " tokens (target " + std::to_string(target_size) + ")");
      return {std::move(vocab), false};
    }
    std::string merged = merge_token(best.first, best.second);
    vocab.insert(merged);
    // apply the merge left-to-right in every word
    for (auto& seq : seqs) {
      std::vector<std::string> next;
      next.reserve(seq.size());
      size_t i = 0;
      while (i < seq.size()) {
        if (i + 1 < seq.size() && seq[i] == best.first && seq[i + 1] == best.second) {
          next.push_back(merged);
          i += 2;
        } else {
          next.push_back(seq[i]);
          ++i;
        }
      }
      seq = std::move(next);
    }
  }
  return {std::move(vocab), true};
}

// ---------------------------------------------------------------------------
// vocabulary extension

namespace {

std::string strip_continuation(const std::string& token) {
  if (token.rfind("##", 0) == 0) return token.substr(2);
  return token;
}

}  // namespace

Vocabulary extend_vocabulary(const Vocabulary& base, const std::set<std::string>& corpus_tokens,
                             const Taxonomy& tax) {
  Vocabulary v = base;  // base ids unchanged
  std::vector<std::string> fresh;
  for (const std::string& t : corpus_tokens) {
    if (base.id_of(t)) continue;  // T_candidate = corpus - base
    if (!tax.lookup(strip_continuation(t)).empty()) fresh.push_back(t);
  }
  std::sort(fresh.begin(), fresh.end());
  for (const std::string& t : fresh) v.append(t, TokenProvenance::New);
  for (const std::string& t : anonymization_tokens()) {
    if (!v.id_of(t)) v.append(t, TokenProvenance::Special);
  }
  return v;
}

// ---------------------------------------------------------------------------
// chunk tokenization

std::vector<bool> TokenizedChunk::special_mask(const Vocabulary& vocab) const {
  std::vector<bool> mask(ids.size(), false);
  for (size_t i = 0; i < ids.size(); ++i) mask[i] = vocab.is_special_id(ids[i]);
  return mask;
}

TokenizedChunk tokenize_chunk(const Vocabulary& vocab, const Chunk& chunk) {
  TokenizedChunk out;
  out.report_id = chunk.report_id;
  out.section = chunk.section;
  out.ids.push_back(vocab.cls_id());
  for (const Sentence& s : chunk.sentences) {
    TokenizedSentence ts;
    ts.token_start = out.ids.size();
    ts.word_start = out.words.size();
    for (const Word& w : pre_tokenize(s.text)) {
      TokenizedWord tw;
      tw.text = w.text;
      tw.char_start = s.start + w.start;
      tw.char_end = s.start + w.end;
      tw.is_special = w.is_special;
      tw.token_start = out.ids.size();
      if (w.is_special) {
        auto id = vocab.id_of(w.text);
        out.ids.push_back(id ? *id : vocab.unk_id());
      } else {
        std::vector<int> pieces = wordpiece_word(vocab, w.text);
        if (pieces.empty()) out.ids.push_back(vocab.unk_id());
        else out.ids.insert(out.ids.end(), pieces.begin(), pieces.end());
      }
      tw.token_end = out.ids.size();
      out.words.push_back(std::move(tw));
    }
    ts.token_end = out.ids.size();
    ts.word_end = out.words.size();
    out.sentences.push_back(ts);
  }
  out.ids.push_back(vocab.sep_id());
  return out;
}

}  // namespace radpipe
