#include "replan/guideline.hpp"

#include <cctype>
#include <sstream>

#include "replan/error.hpp"

namespace replan {

void validate_guideline(const GuidelineNode& node) {
  if (node.tag == PopType::Fetch || node.tag == PopType::Sort || node.tag == PopType::Return)
    throw Error(ErrorKind::Structure, "guideline tags are join or access operators only");
  if (node.is_join_tag()) {
    if (node.children.size() != 2)
      throw Error(ErrorKind::Structure, "join guideline tags need exactly two children");
    if (node.tabid || node.table || node.index)
      throw Error(ErrorKind::Structure, "join guideline tags carry no attributes");
  } else {
    if (!node.children.empty())
      throw Error(ErrorKind::Structure, "access guideline tags have no children");
    if (!node.tabid && !node.table)
      throw Error(ErrorKind::Structure, "access guideline tags need TABID or TABLE");
    if (node.index && node.tag != PopType::IxScan)
      throw Error(ErrorKind::Structure, "INDEX is only valid on IXSCAN tags");
  }
  for (const auto& child : node.children) validate_guideline(child);
}

namespace {

void render(const GuidelineNode& node, int depth, std::ostringstream& out) {
  std::string indent(static_cast<size_t>(depth) * 2, ' ');
  out << indent << "<" << to_string(node.tag);
  if (node.tabid) out << " TABID='" << *node.tabid << "'";
  if (node.table) out << " TABLE='" << *node.table << "'";
  if (node.index) out << " INDEX='" << *node.index << "'";
  if (node.children.empty()) {
    out << "/>\n";
    return;
  }
  out << ">\n";
  for (const auto& child : node.children) render(child, depth + 1, out);
  out << indent << "</" << to_string(node.tag) << ">\n";
}

struct XmlCursor {
  std::string_view text;
  size_t pos = 0;

  void skip_ws() {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\n' || text[pos] == '\t' || text[pos] == '\r'))
      ++pos;
  }
  bool eat(std::string_view token) {
    if (text.substr(pos, token.size()) == token) {
      pos += token.size();
      return true;
    }
    return false;
  }
  [[noreturn]] void fail(const std::string& msg) {
    throw Error(ErrorKind::Syntax, msg + " at offset " + std::to_string(pos));
  }
  std::string name() {
    size_t start = pos;
    while (pos < text.size() && (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
      ++pos;
    if (pos == start) fail("expected a name");
    return std::string(text.substr(start, pos - start));
  }
};

GuidelineNode parse_element(XmlCursor& cur) {
  cur.skip_ws();
  if (!cur.eat("<")) cur.fail("expected '<'");
  std::string tag_name = cur.name();
  auto tag = pop_type_from_string(tag_name);
  if (!tag) cur.fail("unknown guideline tag " + tag_name);

  GuidelineNode node;
  node.tag = *tag;
  while (true) {
    cur.skip_ws();
    if (cur.eat("/>")) {
      validate_guideline(node);
      return node;
    }
    if (cur.eat(">")) break;
    std::string attr = cur.name();
    cur.skip_ws();
    if (!cur.eat("=")) cur.fail("expected '=' after attribute " + attr);
    cur.skip_ws();
    if (!cur.eat("'")) cur.fail("attributes use single quotes");
    size_t end = cur.text.find('\'', cur.pos);
    if (end == std::string_view::npos) cur.fail("unterminated attribute value");
    std::string value(cur.text.substr(cur.pos, end - cur.pos));
    cur.pos = end + 1;
    if (attr == "TABID") node.tabid = value;
    else if (attr == "TABLE") node.table = value;
    else if (attr == "INDEX") node.index = value;
    else cur.fail("unknown attribute " + attr);
  }

  while (true) {
    cur.skip_ws();
    if (cur.eat("</")) {
      std::string closing = cur.name();
      if (closing != tag_name) cur.fail("mismatched closing tag " + closing);
      cur.skip_ws();
      if (!cur.eat(">")) cur.fail("expected '>'");
      validate_guideline(node);
      return node;
    }
    node.children.push_back(parse_element(cur));
  }
}

}  // namespace

std::string guideline_to_xml(const GuidelineDoc& doc) {
  for (const auto& root : doc.roots) validate_guideline(root);
  if (doc.roots.empty()) return "<OPTGUIDELINES></OPTGUIDELINES>\n";
  std::ostringstream out;
  out << "<OPTGUIDELINES>\n";
  for (const auto& root : doc.roots) render(root, 1, out);
  out << "</OPTGUIDELINES>\n";
  return out.str();
}

GuidelineDoc parse_guideline_xml(std::string_view xml) {
  XmlCursor cur{xml, 0};
  cur.skip_ws();
  if (!cur.eat("<OPTGUIDELINES>")) cur.fail("expected <OPTGUIDELINES>");
  GuidelineDoc doc;
  while (true) {
    cur.skip_ws();
    if (cur.eat("</OPTGUIDELINES>")) break;
    doc.roots.push_back(parse_element(cur));
  }
  cur.skip_ws();
  if (cur.pos != cur.text.size()) cur.fail("trailing content after </OPTGUIDELINES>");
  return doc;
}

}  // namespace replan
