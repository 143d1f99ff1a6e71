#include <algorithm>
#include <cctype>
#include <set>
#include <vector>

#include "mlcld/dataio.hpp"
#include "mlcld/errors.hpp"

namespace mlcld::dataio {
namespace {

// Just enough XML for Mulan label headers: prolog, comments, nested
// elements with quoted attributes, and character data between tags.
class LabelXmlReader {
 public:
  explicit LabelXmlReader(std::string_view text) : text_(text) {}

  std::vector<std::string> read() {
    std::vector<std::string> stack;
    bool saw_root = false;
    while (pos_ < text_.size()) {
      if (text_[pos_] != '<') {
        advance(1);
        continue;
      }
      if (lookahead("<?")) {
        skip_past("?>", "unterminated processing instruction");
      } else if (lookahead("<!--")) {
        skip_past("-->", "unterminated comment");
      } else if (lookahead("<!")) {
        skip_past(">", "unterminated declaration");
      } else if (lookahead("</")) {
        advance(2);
        const std::string name = read_name();
        skip_space();
        expect('>');
        if (stack.empty() || stack.back() != name) {
          throw ParseError("mismatched closing tag </" + name + ">", line_);
        }
        stack.pop_back();
      } else {
        advance(1);
        if (saw_root && stack.empty()) throw ParseError("content after the root element", line_);
        const std::string name = read_name();
        std::string label_name;
        bool has_label_name = false;
        bool self_closing = false;
        while (true) {
          skip_space();
          if (at_end()) throw ParseError("unterminated tag <" + name + ">", line_);
          if (text_[pos_] == '/') {
            advance(1);
            expect('>');
            self_closing = true;
            break;
          }
          if (text_[pos_] == '>') {
            advance(1);
            break;
          }
          const std::string attr = read_name();
          skip_space();
          expect('=');
          skip_space();
          const std::string value = read_quoted();
          if (local_name(attr) == "name") {
            label_name = value;
            has_label_name = true;
          }
        }
        saw_root = true;
        if (local_name(name) == "label") {
          if (!has_label_name) throw ParseError("label element without a name attribute", line_);
          if (!seen_.insert(label_name).second) {
            throw ParseError("duplicate label name '" + label_name + "'", line_);
          }
          names_.push_back(label_name);
        }
        if (!self_closing) stack.push_back(name);
      }
    }
    if (!stack.empty()) throw ParseError("unclosed element <" + stack.back() + ">", line_);
    if (!saw_root) throw ParseError("no root element", line_);
    return names_;
  }

 private:
  static std::string local_name(const std::string& qname) {
    const auto colon = qname.find(':');
    return colon == std::string::npos ? qname : qname.substr(colon + 1);
  }

  bool at_end() const { return pos_ >= text_.size(); }
  bool lookahead(std::string_view s) const { return text_.substr(pos_, s.size()) == s; }

  void advance(std::size_t n) {
    for (std::size_t i = 0; i < n && pos_ < text_.size(); ++i, ++pos_)
      if (text_[pos_] == '\n') ++line_;
  }

  void skip_past(std::string_view terminator, const char* err) {
    const auto end = text_.find(terminator, pos_);
    if (end == std::string_view::npos) throw ParseError(err, line_);
    advance(end + terminator.size() - pos_);
  }

  void skip_space() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(text_[pos_]))) advance(1);
  }

  void expect(char ch) {
    if (at_end() || text_[pos_] != ch) throw ParseError(std::string("expected '") + ch + "'", line_);
    advance(1);
  }

  std::string read_name() {
    const std::size_t start = pos_;
    while (!at_end()) {
      const char ch = text_[pos_];
      if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' || ch == '.' ||
          ch == ':') {
        advance(1);
      } else {
        break;
      }
    }
    if (pos_ == start) throw ParseError("expected a tag or attribute name", line_);
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string read_quoted() {
    if (at_end() || (text_[pos_] != '"' && text_[pos_] != '\'')) {
      throw ParseError("expected a quoted attribute value", line_);
    }
    const char q = text_[pos_];
    advance(1);
    const auto end = text_.find(q, pos_);
    if (end == std::string_view::npos) throw ParseError("unterminated attribute value", line_);
    std::string raw(text_.substr(pos_, end - pos_));
    advance(end + 1 - pos_);
    return decode_entities(raw);
  }

  std::string decode_entities(const std::string& raw) const {
    static const std::pair<std::string_view, char> entities[] = {
        {"&amp;", '&'}, {"&lt;", '<'}, {"&gt;", '>'}, {"&quot;", '"'}, {"&apos;", '\''}};
    std::string out;
    for (std::size_t i = 0; i < raw.size();) {
      if (raw[i] == '&') {
        bool matched = false;
        for (const auto& [ent, ch] : entities) {
          if (std::string_view(raw).substr(i, ent.size()) == ent) {
            out.push_back(ch);
            i += ent.size();
            matched = true;
            break;
          }
        }
        if (!matched) throw ParseError("unknown entity in attribute value", line_);
      } else {
        out.push_back(raw[i++]);
      }
    }
    return out;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::vector<std::string> names_;
  std::set<std::string> seen_;
};

}  // namespace

std::vector<std::string> parse_labels_xml(std::string_view text) {
  return LabelXmlReader(text).read();
}

}  // namespace mlcld::dataio
