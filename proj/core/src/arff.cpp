#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mlcld/dataio.hpp"
#include "mlcld/errors.hpp"

namespace mlcld::dataio {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && lower(s.substr(0, prefix.size())) == prefix;
}

std::string_view unquote(std::string_view s) {
  if (s.size() >= 2 && (s.front() == '\'' || s.front() == '"') && s.back() == s.front()) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

/// Reads one possibly-quoted token from the front of `s`, consuming it.
std::string take_token(std::string_view& s, std::size_t line) {
  s = trim(s);
  if (s.empty()) throw ParseError("expected a name", line);
  if (s.front() == '\'' || s.front() == '"') {
    const char q = s.front();
    const auto end = s.find(q, 1);
    if (end == std::string_view::npos) throw ParseError("unterminated quoted name", line);
    std::string tok(s.substr(1, end - 1));
    s.remove_prefix(end + 1);
    return tok;
  }
  std::size_t end = 0;
  while (end < s.size() && !std::isspace(static_cast<unsigned char>(s[end]))) ++end;
  std::string tok(s.substr(0, end));
  s.remove_prefix(end);
  return tok;
}

double parse_number(std::string_view tok, std::size_t line) {
  tok = unquote(trim(tok));
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
    throw ParseError("non-numeric value '" + std::string(tok) + "'", line);
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

ArffAttribute parse_attribute(std::string_view rest, std::size_t line) {
  ArffAttribute attr;
  attr.name = take_token(rest, line);
  rest = trim(rest);
  if (rest.empty()) throw ParseError("attribute '" + attr.name + "' has no type", line);
  if (rest.front() == '{') {
    if (rest.back() != '}') throw ParseError("unterminated nominal value list", line);
    attr.nominal = true;
    for (auto v : split(rest.substr(1, rest.size() - 2), ',')) {
      v = unquote(trim(v));
      parse_number(v, line);  // nominal values must be numeric literals
      attr.nominal_values.emplace_back(v);
    }
    if (attr.nominal_values.empty()) throw ParseError("empty nominal value list", line);
    return attr;
  }
  const std::string type = lower(take_token(rest, line));
  if (type == "numeric" || type == "real" || type == "integer") return attr;
  throw ParseError("unsupported attribute type '" + type + "' for '" + attr.name + "'", line);
}

double parse_cell(const ArffAttribute& attr, std::string_view tok, std::size_t line) {
  tok = unquote(trim(tok));
  const double v = parse_number(tok, line);
  if (attr.nominal) {
    const bool known = std::any_of(attr.nominal_values.begin(), attr.nominal_values.end(),
                                   [&](const std::string& nv) { return parse_number(nv, line) == v; });
    if (!known) {
      throw ParseError("value '" + std::string(tok) + "' not in nominal set of '" + attr.name + "'",
                       line);
    }
  }
  return v;
}

}  // namespace

std::vector<std::string> ArffData::attribute_names() const {
  std::vector<std::string> names;
  names.reserve(attributes.size());
  for (const auto& a : attributes) names.push_back(a.name);
  return names;
}

std::map<std::size_t, std::vector<std::string>> ArffData::nominal_columns() const {
  std::map<std::size_t, std::vector<std::string>> out;
  for (std::size_t i = 0; i < attributes.size(); ++i)
    if (attributes[i].nominal) out.emplace(i, attributes[i].nominal_values);
  return out;
}

ArffData parse_arff(std::string_view text) {
  ArffData out;
  std::vector<double> cells;
  bool in_data = false;
  bool saw_relation = false;
  std::size_t rows = 0;
  std::size_t line_no = 0;

  for (auto raw : split(text, '\n')) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '%') continue;

    if (!in_data) {
      if (line.front() != '@') throw ParseError("expected a header declaration", line_no);
      if (starts_with_ci(line, "@relation")) {
        auto rest = line.substr(9);
        out.relation = take_token(rest, line_no);
        saw_relation = true;
      } else if (starts_with_ci(line, "@attribute")) {
        if (!saw_relation) throw ParseError("@attribute before @relation", line_no);
        out.attributes.push_back(parse_attribute(line.substr(10), line_no));
      } else if (starts_with_ci(line, "@data")) {
        if (out.attributes.empty()) throw ParseError("@data before any @attribute", line_no);
        in_data = true;
      } else {
        throw ParseError("unknown header declaration", line_no);
      }
      continue;
    }

    const std::size_t width = out.attributes.size();
    const std::size_t base = cells.size();
    cells.resize(base + width, 0.0);
    if (line.front() == '{') {
      if (line.back() != '}') throw ParseError("unterminated sparse row", line_no);
      const auto body = trim(line.substr(1, line.size() - 2));
      std::vector<bool> seen(width, false);
      if (!body.empty()) {
        for (auto entry : split(body, ',')) {
          entry = trim(entry);
          const auto sp = entry.find_first_of(" \t");
          if (sp == std::string_view::npos) throw ParseError("sparse entry missing a value", line_no);
          const double idx_d = parse_number(entry.substr(0, sp), line_no);
          if (idx_d < 0 || idx_d != std::floor(idx_d) || idx_d >= static_cast<double>(width)) {
            throw ParseError("sparse index " + std::string(trim(entry.substr(0, sp))) +
                                 " out of range",
                             line_no);
          }
          const auto idx = static_cast<std::size_t>(idx_d);
          if (seen[idx]) throw ParseError("duplicate sparse index", line_no);
          seen[idx] = true;
          cells[base + idx] = parse_cell(out.attributes[idx], entry.substr(sp + 1), line_no);
        }
      }
    } else {
      const auto toks = split(line, ',');
      if (toks.size() != width) {
        throw ParseError("row has " + std::to_string(toks.size()) + " values, expected " +
                             std::to_string(width),
                         line_no);
      }
      for (std::size_t j = 0; j < width; ++j)
        cells[base + j] = parse_cell(out.attributes[j], toks[j], line_no);
    }
    ++rows;
  }

  if (!in_data) throw ParseError("missing @data section", line_no);
  out.values = Matrix(rows, out.attributes.size(), std::move(cells));
  return out;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string quote_if_needed(const std::string& name) {
  const bool plain = !name.empty() && std::none_of(name.begin(), name.end(), [](char ch) {
    return std::isspace(static_cast<unsigned char>(ch)) || ch == ',' || ch == '{' || ch == '}' ||
           ch == '\'' || ch == '"' || ch == '%';
  });
  return plain ? name : "'" + name + "'";
}

}  // namespace

std::string write_arff(const ArffData& data) {
  std::ostringstream os;
  os << "@relation " << quote_if_needed(data.relation.empty() ? "data" : data.relation) << "\n\n";
  for (const auto& a : data.attributes) {
    os << "@attribute " << quote_if_needed(a.name) << ' ';
    if (a.nominal) {
      os << '{';
      for (std::size_t i = 0; i < a.nominal_values.size(); ++i)
        os << (i ? "," : "") << a.nominal_values[i];
      os << '}';
    } else {
      os << "numeric";
    }
    os << '\n';
  }
  os << "\n@data\n";
  for (std::size_t r = 0; r < data.values.rows(); ++r) {
    const auto row = data.values.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) os << (j ? "," : "") << format_double(row[j]);
    os << '\n';
  }
  return os.str();
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace mlcld::dataio
