#include "cryocurate/star.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>

#include "cryocurate/error.hpp"

namespace cryocurate::star {
namespace {

struct Token {
  std::string text;
  std::size_t line = 0;
  bool first_on_line = false;
  bool literal = false;  // quoted or text field: never a keyword
};

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(s[i])) != prefix[i]) return false;
  return true;
}

enum class Kind { Value, Data, Loop, Tag, Stop, Unsupported };

Kind kind_of(const Token& t) {
  if (t.literal) return Kind::Value;
  if (starts_with_ci(t.text, "data_")) return Kind::Data;
  if (starts_with_ci(t.text, "loop_") && t.text.size() == 5) return Kind::Loop;
  if (starts_with_ci(t.text, "stop_") && t.text.size() == 5) return Kind::Stop;
  if (starts_with_ci(t.text, "save_") || starts_with_ci(t.text, "global_")) return Kind::Unsupported;
  if (!t.text.empty() && t.text[0] == '_') return Kind::Tag;
  return Kind::Value;
}

[[noreturn]] void syntax_error(std::size_t line, const std::string& what) {
  raise(ErrorCode::StarSyntaxError, "STAR line " + std::to_string(line) + ": " + what);
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    if (end == std::string_view::npos) {
      if (start < text.size()) lines.push_back(text.substr(start));
      break;
    }
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

std::vector<Token> tokenize(std::string_view text) {
  const auto lines = split_lines(text);
  std::vector<Token> tokens;
  for (std::size_t li = 0; li < lines.size(); ++li) {
    std::string_view line = lines[li];
    std::size_t pos = 0;
    bool first = true;

    if (!line.empty() && line[0] == ';') {
      const std::size_t start_line = li + 1;
      std::string value(line.substr(1));
      bool closed = false;
      while (++li < lines.size()) {
        if (!lines[li].empty() && lines[li][0] == ';') {
          closed = true;
          break;
        }
        value += '\n';
        value += lines[li];
      }
      if (!closed) syntax_error(start_line, "unterminated ;-delimited text field");
      tokens.push_back({std::move(value), start_line, true, true});
      line = lines[li];
      pos = 1;
      first = false;
    }

    while (pos < line.size()) {
      while (pos < line.size() && is_space(line[pos])) ++pos;
      if (pos >= line.size()) break;
      const char c = line[pos];
      if (c == '#') break;
      Token tok{{}, li + 1, first, false};
      first = false;
      if (c == '\'' || c == '"') {
        std::size_t end = pos + 1;
        while (true) {
          end = line.find(c, end);
          if (end == std::string_view::npos) syntax_error(li + 1, "unterminated quoted string");
          if (end + 1 == line.size() || is_space(line[end + 1])) break;
          ++end;
        }
        tok.text = std::string(line.substr(pos + 1, end - pos - 1));
        tok.literal = true;
        pos = end + 1;
      } else {
        const std::size_t start = pos;
        while (pos < line.size() && !is_space(line[pos])) ++pos;
        tok.text = std::string(line.substr(start, pos - start));
      }
      tokens.push_back(std::move(tok));
    }
  }
  return tokens;
}

bool quote_safe(std::string_view v, char q) {
  for (std::size_t i = v.find(q); i != std::string_view::npos; i = v.find(q, i + 1))
    if (i + 1 == v.size() || is_space(v[i + 1])) return false;
  return true;
}

bool needs_quoting(std::string_view v) {
  if (v.empty()) return true;
  for (char c : v)
    if (is_space(c)) return true;
  const char c = v[0];
  if (c == '_' || c == '#' || c == '$' || c == '\'' || c == '"' || c == ';' || c == '[' ||
      c == ']')
    return true;
  return starts_with_ci(v, "data_") || starts_with_ci(v, "save_") ||
         starts_with_ci(v, "global_") || starts_with_ci(v, "loop_") || starts_with_ci(v, "stop_");
}

enum class Style { Bare, Single, Double, TextField };

Style style_for(std::string_view v) {
  if (!needs_quoting(v)) return Style::Bare;
  if (v.find('\n') == std::string_view::npos) {
    if (quote_safe(v, '\'')) return Style::Single;
    if (quote_safe(v, '"')) return Style::Double;
  }
  if (v.find("\n;") != std::string_view::npos)
    raise(ErrorCode::InvalidArgument, "STAR value contains a line starting with ';'");
  return Style::TextField;
}

// Appends `v`, tracking whether output currently sits at the start of a line.
void emit_value(std::string& out, std::string_view v, bool& at_line_start) {
  switch (style_for(v)) {
    case Style::Bare:
      out += v;
      break;
    case Style::Single:
      out += '\'';
      out += v;
      out += '\'';
      break;
    case Style::Double:
      out += '"';
      out += v;
      out += '"';
      break;
    case Style::TextField:
      if (!at_line_start) out += '\n';
      out += ';';
      out += v;
      out += "\n;";
      break;
  }
  at_line_start = false;
}

template <class T>
T parse_number(const std::string& s, std::string_view column) {
  T value{};
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end)
    raise(ErrorCode::InvalidArgument,
          "STAR value '" + s + "' in column " + std::string(column) + " is not numeric");
  return value;
}

}  // namespace

std::optional<std::size_t> StarLoop::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name || (name.size() && name[0] != '_' && columns[i].substr(1) == name))
      return i;
  return std::nullopt;
}

const std::string& StarLoop::get(std::size_t row, std::string_view column) const {
  const auto idx = column_index(column);
  if (!idx) raise(ErrorCode::InvalidArgument, "no STAR column " + std::string(column));
  if (row >= rows.size())
    raise(ErrorCode::IndexOutOfRange, "STAR row " + std::to_string(row) + " out of range");
  return rows[row][*idx];
}

std::int64_t StarLoop::get_int(std::size_t row, std::string_view column) const {
  return parse_number<std::int64_t>(get(row, column), column);
}

double StarLoop::get_float(std::size_t row, std::string_view column) const {
  return parse_number<double>(get(row, column), column);
}

std::vector<std::string> StarLoop::column(std::string_view name) const {
  const auto idx = column_index(name);
  if (!idx) raise(ErrorCode::InvalidArgument, "no STAR column " + std::string(name));
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[*idx]);
  return out;
}

const std::string* StarBlock::find_value(std::string_view key) const {
  for (const auto& [k, v] : pairs)
    if (k == key) return &v;
  return nullptr;
}

const StarLoop* StarBlock::find_loop(std::string_view column) const {
  for (const auto& loop : loops)
    if (loop.column_index(column)) return &loop;
  return nullptr;
}

const StarBlock* StarTable::find_block(std::string_view name) const {
  for (const auto& b : blocks)
    if (b.name == name) return &b;
  return nullptr;
}

StarTable read_star(std::string_view text) {
  const std::vector<Token> tokens = tokenize(text);
  StarTable table;
  std::size_t i = 0;
  auto require_block = [&](const Token& t) -> StarBlock& {
    if (table.blocks.empty()) syntax_error(t.line, "'" + t.text + "' before any data_ block");
    return table.blocks.back();
  };

  while (i < tokens.size()) {
    const Token& t = tokens[i];
    switch (kind_of(t)) {
      case Kind::Data:
        table.blocks.push_back({t.text.substr(5), {}, {}});
        ++i;
        break;
      case Kind::Tag: {
        StarBlock& block = require_block(t);
        if (i + 1 >= tokens.size() || kind_of(tokens[i + 1]) != Kind::Value)
          syntax_error(t.line, "tag " + t.text + " has no value");
        block.pairs.emplace_back(t.text, tokens[i + 1].text);
        i += 2;
        break;
      }
      case Kind::Loop: {
        StarBlock& block = require_block(t);
        StarLoop loop;
        ++i;
        while (i < tokens.size() && kind_of(tokens[i]) == Kind::Tag) loop.columns.push_back(tokens[i++].text);
        if (loop.columns.empty()) syntax_error(t.line, "loop_ without column tags");
        std::vector<std::string> row;
        std::size_t row_line = t.line;
        while (i < tokens.size() && kind_of(tokens[i]) == Kind::Value) {
          const Token& v = tokens[i++];
          if (row.empty()) {
            if (!v.first_on_line)
              syntax_error(v.line, "loop row does not start on a new line; previous row has " +
                                       std::string("too many values for ") +
                                       std::to_string(loop.columns.size()) + " columns");
            row_line = v.line;
          }
          row.push_back(v.text);
          if (row.size() == loop.columns.size()) {
            loop.rows.push_back(std::move(row));
            row.clear();
          }
        }
        if (!row.empty())
          syntax_error(row_line, "loop row has " + std::to_string(row.size()) + " values, expected " +
                                     std::to_string(loop.columns.size()));
        if (i < tokens.size() && kind_of(tokens[i]) == Kind::Stop) ++i;
        block.loops.push_back(std::move(loop));
        break;
      }
      case Kind::Stop:
        ++i;
        break;
      case Kind::Unsupported:
        syntax_error(t.line, "'" + t.text + "' frames are not supported");
      case Kind::Value:
        syntax_error(t.line, "value '" + t.text + "' without a tag");
    }
  }
  return table;
}

std::string write_star(const StarTable& table) {
  std::string out;
  for (const auto& block : table.blocks) {
    out += "data_" + block.name + "\n\n";
    for (const auto& [key, value] : block.pairs) {
      out += key;
      out += ' ';
      bool at_start = false;
      emit_value(out, value, at_start);
      out += '\n';
    }
    if (!block.pairs.empty()) out += '\n';
    for (const auto& loop : block.loops) {
      out += "loop_\n";
      for (std::size_t c = 0; c < loop.columns.size(); ++c)
        out += loop.columns[c] + " #" + std::to_string(c + 1) + "\n";
      for (const auto& row : loop.rows) {
        bool at_start = true;
        for (std::size_t c = 0; c < row.size(); ++c) {
          if (c) out += ' ';
          emit_value(out, row[c], at_start);
        }
        out += '\n';
      }
      out += '\n';
    }
  }
  return out;
}

}  // namespace cryocurate::star
