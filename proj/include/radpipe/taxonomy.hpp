#pragma once

#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace radpipe {

/// One ontology node. Labels and synonyms are lowercase surface forms;
/// anatomical_site links point at concepts whose class is "anatomical entity".
struct Concept {
  std::string id;
  std::string preferred_label;
  std::vector<std::string> synonyms;
  std::string radlex_class;
  std::vector<std::string> parents;
  std::vector<std::string> anatomical_site;
};

/// Immutable after load; safe for unrestricted concurrent reads.
class Taxonomy {
 public:
  /// Loads the JSON-lines ontology format:
  ///   {"id","label","synonyms":[...],"class","parents":[...],"anatomical_site":[...]}
  /// Validates resolving references, label uniqueness, site classes and
  /// acyclicity of the parent graph. Throws ConfigError naming the offender.
  static Taxonomy load(const std::string& path);
  static Taxonomy from_concepts(std::vector<Concept> concepts);

  size_t size() const { return concepts_.size(); }
  bool empty() const { return concepts_.empty(); }

  const Concept* find(const std::string& id) const;
  const Concept& at(const std::string& id) const;  // throws PipelineError on unknown id

  /// Exact surface-form match against preferred labels and synonyms.
  /// The query is lowercased and whitespace-normalized internally.
  std::vector<const Concept*> lookup(const std::string& surface) const;

  /// The concept's own anatomical sites, or the nearest ancestor's declared
  /// sites when it declares none (ties at equal depth are unioned).
  std::set<std::string> anatomical_sites(const Concept& c) const;

  /// True iff both concepts descend from (or are) a common immediate child of
  /// the "body-system-specific disorder" root.
  bool same_body_system(const Concept& a, const Concept& b) const;

  const std::string& class_of(const Concept& c) const { return c.radlex_class; }
  const std::string& class_of(const std::string& id) const { return at(id).radlex_class; }

  /// All ancestor ids (transitive parents), excluding the concept itself.
  std::set<std::string> ancestors(const Concept& c) const;

  /// Ids of the immediate children of the body-system root that `c` descends
  /// from or is; empty when `c` is outside that subtree.
  std::set<std::string> body_system_branches(const Concept& c) const;

  /// class name -> root concept id, for parentless concepts.
  const std::unordered_map<std::string, std::string>& class_roots() const { return class_roots_; }

  const std::vector<Concept>& concepts() const { return concepts_; }

 private:
  void build_indexes();
  void validate() const;

  std::vector<Concept> concepts_;
  std::unordered_map<std::string, size_t> by_id_;
  std::unordered_map<std::string, std::vector<std::string>> surface_index_;
  std::unordered_map<std::string, std::string> class_roots_;
  std::string body_system_root_;
};

/// Lowercase + collapse internal whitespace runs to single spaces + trim.
std::string normalize_surface(const std::string& s);

}  // namespace radpipe
