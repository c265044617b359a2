#pragma once

#include <map>
#include <string>
#include <vector>

#include "replan/template.hpp"

namespace replan {

struct KnowledgeBaseMeta {
  int version = 1;
  std::string created;
  std::vector<std::string> provenance;
  bool operator==(const KnowledgeBaseMeta&) const = default;
};

struct KnowledgeBase {
  std::map<std::string, Template> templates;  // keyed by template id
  KnowledgeBaseMeta meta;

  bool operator==(const KnowledgeBase&) const = default;
};

inline constexpr int kKnowledgeBaseVersion = 1;

// Coalescing insert: a structurally identical resident template absorbs
// the new one (union bounds, max ratio); otherwise the template is added.
void add_template(KnowledgeBase& kb, Template tpl);

// Union of both bases under the same coalescing rule. Associative and
// commutative; merge(kb, kb) == kb.
KnowledgeBase merge_kb(const KnowledgeBase& a, const KnowledgeBase& b);

// Everything is stored as one triple graph: meta under a fixed subject,
// each template's properties and pattern nodes under template-scoped IRIs.
// Bytes are deterministic for a given base.
std::string save_kb(const KnowledgeBase& kb);
KnowledgeBase load_kb(std::string_view text);

void save_kb_file(const KnowledgeBase& kb, const std::string& path);
KnowledgeBase load_kb_file(const std::string& path);

std::string kb_stats(const KnowledgeBase& kb);

}  // namespace replan
