#include "radpipe/taxonomy.hpp"

#include <algorithm>
#include <cctype>
#include <deque>

#include "json.hpp"
#include "radpipe/errors.hpp"
#include "radpipe/io.hpp"

namespace radpipe {

namespace {
constexpr const char* kBodySystemRootLabel = "body-system-specific disorder";
constexpr const char* kAnatomicalEntityClass = "anatomical entity";
}  // namespace

std::string normalize_surface(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  bool in_space = true;  // trims leading whitespace
  for (char c : s) {
    unsigned char uc = static_cast<unsigned char>(c);
    if (std::isspace(uc)) {
      in_space = true;
      continue;
    }
    if (in_space && !out.empty()) out.push_back(' ');
    in_space = false;
    out.push_back(static_cast<char>(std::tolower(uc)));
  }
  return out;
}

Taxonomy Taxonomy::load(const std::string& path) {
  std::vector<Concept> concepts;
  size_t line_no = 0;
  for (const std::string& line : read_lines(path)) {
    ++line_no;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("taxonomy " + path + " line " + std::to_string(line_no) + ": " + e.what());
    }
    Concept c;
    c.id = j.at("id").get<std::string>();
    c.preferred_label = normalize_surface(j.at("label").get<std::string>());
    for (const auto& s : j.value("synonyms", nlohmann::json::array()))
      c.synonyms.push_back(normalize_surface(s.get<std::string>()));
    c.radlex_class = j.at("class").get<std::string>();
    for (const auto& p : j.value("parents", nlohmann::json::array()))
      c.parents.push_back(p.get<std::string>());
    for (const auto& a : j.value("anatomical_site", nlohmann::json::array()))
      c.anatomical_site.push_back(a.get<std::string>());
    concepts.push_back(std::move(c));
  }
  return from_concepts(std::move(concepts));
}

Taxonomy Taxonomy::from_concepts(std::vector<Concept> concepts) {
  Taxonomy t;
  t.concepts_ = std::move(concepts);
  t.build_indexes();
  t.validate();
  return t;
}

void Taxonomy::build_indexes() {
  by_id_.clear();
  surface_index_.clear();
  class_roots_.clear();
  body_system_root_.clear();
  for (size_t i = 0; i < concepts_.size(); ++i) {
    const Concept& c = concepts_[i];
    if (!by_id_.emplace(c.id, i).second)
      throw ConfigError("taxonomy: duplicate concept id " + c.id);
    surface_index_[c.preferred_label].push_back(c.id);
    for (const std::string& s : c.synonyms) surface_index_[s].push_back(c.id);
    if (c.parents.empty()) {
      class_roots_.emplace(c.radlex_class, c.id);
      if (c.preferred_label == kBodySystemRootLabel) body_system_root_ = c.id;
    }
  }
}

void Taxonomy::validate() const {
  // duplicate preferred labels
  std::unordered_map<std::string, std::string> label_owner;
  for (const Concept& c : concepts_) {
    auto [it, fresh] = label_owner.emplace(c.preferred_label, c.id);
    if (!fresh)
      throw ConfigError("taxonomy: duplicate preferred label \"" + c.preferred_label + "\" (" +
                        it->second + ", " + c.id + ")");
  }
  // resolving references
  for (const Concept& c : concepts_) {
    for (const std::string& p : c.parents)
      if (!by_id_.count(p))
        throw ConfigError("taxonomy: dangling parent reference " + p + " in concept " + c.id);
    for (const std::string& s : c.anatomical_site) {
      auto it = by_id_.find(s);
      if (it == by_id_.end())
        throw ConfigError("taxonomy: dangling anatomical_site reference " + s + " in concept " +
                          c.id);
      if (concepts_[it->second].radlex_class != kAnatomicalEntityClass)
        throw ConfigError("taxonomy: anatomical_site " + s + " of concept " + c.id +
                          " is not an anatomical entity");
    }
  }
  // acyclicity of the parent graph; on failure, name the cycle
  enum class Mark { White, Grey, Black };
  std::unordered_map<std::string, Mark> mark;
  std::vector<std::string> stack;
  auto dfs = [&](auto&& self, const std::string& id) -> void {
    mark[id] = Mark::Grey;
    stack.push_back(id);
    for (const std::string& p : concepts_[by_id_.at(id)].parents) {
      Mark m = mark.count(p) ? mark[p] : Mark::White;
      if (m == Mark::Grey) {
        std::string cycle;
        auto it = std::find(stack.begin(), stack.end(), p);
        for (; it != stack.end(); ++it) cycle += *it + " -> ";
        cycle += p;
        throw ConfigError("taxonomy: cycle detected: " + cycle);
      }
      if (m == Mark::White) self(self, p);
    }
    stack.pop_back();
    mark[id] = Mark::Black;
  };
  for (const Concept& c : concepts_)
    if (!mark.count(c.id)) dfs(dfs, c.id);
}

const Concept* Taxonomy::find(const std::string& id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &concepts_[it->second];
}

const Concept& Taxonomy::at(const std::string& id) const {
  const Concept* c = find(id);
  if (!c) throw PipelineError("taxonomy: unknown concept id " + id);
  return *c;
}

std::vector<const Concept*> Taxonomy::lookup(const std::string& surface) const {
  auto it = surface_index_.find(normalize_surface(surface));
  std::vector<const Concept*> out;
  if (it == surface_index_.end()) return out;
  out.reserve(it->second.size());
  for (const std::string& id : it->second) out.push_back(&concepts_[by_id_.at(id)]);
  return out;
}

std::set<std::string> Taxonomy::anatomical_sites(const Concept& c) const {
  if (!c.anatomical_site.empty())
    return std::set<std::string>(c.anatomical_site.begin(), c.anatomical_site.end());
  // breadth-first over parents: nearest declaring ancestors win, ties unioned
  std::set<std::string> visited{c.id};
  std::deque<std::string> frontier(c.parents.begin(), c.parents.end());
  while (!frontier.empty()) {
    std::set<std::string> found;
    std::deque<std::string> next;
    for (const std::string& id : frontier) {
      if (!visited.insert(id).second) continue;
      const Concept& p = at(id);
      if (!p.anatomical_site.empty())
        found.insert(p.anatomical_site.begin(), p.anatomical_site.end());
      else
        next.insert(next.end(), p.parents.begin(), p.parents.end());
    }
    if (!found.empty()) return found;
    frontier = std::move(next);
  }
  return {};
}

std::set<std::string> Taxonomy::ancestors(const Concept& c) const {
  std::set<std::string> out;
  std::deque<std::string> frontier(c.parents.begin(), c.parents.end());
  while (!frontier.empty()) {
    std::string id = frontier.front();
    frontier.pop_front();
    if (!out.insert(id).second) continue;
    const Concept& p = at(id);
    frontier.insert(frontier.end(), p.parents.begin(), p.parents.end());
  }
  return out;
}

std::set<std::string> Taxonomy::body_system_branches(const Concept& c) const {
  std::set<std::string> out;
  if (body_system_root_.empty()) return out;
  std::set<std::string> up = ancestors(c);
  up.insert(c.id);
  for (const std::string& id : up) {
    if (id == body_system_root_) continue;
    const Concept& x = at(id);
    for (const std::string& p : x.parents)
      if (p == body_system_root_) out.insert(id);
  }
  return out;
}

bool Taxonomy::same_body_system(const Concept& a, const Concept& b) const {
  std::set<std::string> ba = body_system_branches(a);
  if (ba.empty()) return false;
  std::set<std::string> bb = body_system_branches(b);
  for (const std::string& id : bb)
    if (ba.count(id)) return true;
  return false;
}

}  // namespace radpipe
