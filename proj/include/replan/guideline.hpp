#pragma once

#include <optional>
#include <string>
#include <vector>

#include "replan/plan.hpp"

namespace replan {

// One directive node: a join tag with exactly two children (outer first)
// or an access tag with none. TABID names a table reference by instance
// qualifier; TABLE names it by table name instead. INDEX optionally pins
// the index an IXSCAN should use.
struct GuidelineNode {
  PopType tag = PopType::TbScan;  // HSJOIN/MSJOIN/NLJOIN/TBSCAN/IXSCAN
  std::optional<std::string> tabid;
  std::optional<std::string> table;
  std::optional<std::string> index;
  std::vector<GuidelineNode> children;

  bool is_join_tag() const { return is_join(tag); }
  bool operator==(const GuidelineNode&) const = default;
};

struct GuidelineDoc {
  std::vector<GuidelineNode> roots;
  bool operator==(const GuidelineDoc&) const = default;
};

void validate_guideline(const GuidelineNode& node);

// XML: <OPTGUIDELINES> root, single-quoted attributes, two-space
// indentation, LF endings. The empty document is the bare element pair.
std::string guideline_to_xml(const GuidelineDoc& doc);
GuidelineDoc parse_guideline_xml(std::string_view xml);

}  // namespace replan
