#include <algorithm>
#include <cctype>
#include <regex>
#include <set>
#include <sstream>

#include "cryocurate/archive.hpp"
#include "cryocurate/error.hpp"

namespace cryocurate::archive {
namespace {

std::string percent_decode(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size() && std::isxdigit(static_cast<unsigned char>(s[i + 1])) &&
        std::isxdigit(static_cast<unsigned char>(s[i + 2]))) {
      out.push_back(static_cast<char>(std::stoi(std::string(s.substr(i + 1, 2)), nullptr, 16)));
      i += 2;
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

std::string html_unescape(std::string s) {
  static const std::pair<const char*, const char*> entities[] = {
      {"&amp;", "&"}, {"&lt;", "<"}, {"&gt;", ">"}, {"&quot;", "\""}, {"&#39;", "'"}};
  for (const auto& [from, to] : entities) {
    for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + 1))
      s.replace(pos, std::string_view(from).size(), to);
  }
  return s;
}

std::optional<ListingEntry> entry_from_href(std::string href) {
  if (href.empty() || href[0] == '?' || href[0] == '#' || href[0] == '/') return std::nullopt;
  if (href.find("://") != std::string::npos || href.rfind("mailto:", 0) == 0) return std::nullopt;
  if (href.rfind("./", 0) == 0) href.erase(0, 2);
  if (href.empty() || href.rfind("../", 0) == 0 || href == "..") return std::nullopt;
  if (const auto q = href.find_first_of("?#"); q != std::string::npos) href.erase(q);
  ListingEntry e;
  e.is_directory = !href.empty() && href.back() == '/';
  e.href = href;
  e.name = percent_decode(e.is_directory ? href.substr(0, href.size() - 1) : href);
  if (e.name.empty() || e.name.find('/') != std::string::npos) return std::nullopt;
  return e;
}

// A bracket expression starting at p[i] == '['. Returns the index just past
// the closing ']', or npos when unterminated (then '[' is literal).
std::size_t set_end(std::string_view p, std::size_t i) {
  std::size_t j = i + 1;
  if (j < p.size() && p[j] == '!') ++j;
  if (j < p.size() && p[j] == ']') ++j;
  while (j < p.size() && p[j] != ']') ++j;
  return j >= p.size() ? std::string_view::npos : j + 1;
}

struct CharSet {
  bool negated = false;
  std::vector<std::pair<unsigned char, unsigned char>> ranges;
};

CharSet parse_set(std::string_view body) {
  CharSet set;
  std::size_t k = 0;
  if (!body.empty() && body[0] == '!') {
    set.negated = true;
    k = 1;
  }
  while (k < body.size()) {
    const auto lo = static_cast<unsigned char>(body[k]);
    if (k + 2 < body.size() && body[k + 1] == '-') {
      const auto hi = static_cast<unsigned char>(body[k + 2]);
      if (lo <= hi) set.ranges.emplace_back(lo, hi);  // reversed ranges match nothing
      k += 3;
    } else {
      set.ranges.emplace_back(lo, lo);
      ++k;
    }
  }
  return set;
}

bool in_set(const CharSet& set, unsigned char c) {
  bool hit = false;
  for (auto [lo, hi] : set.ranges)
    if (c >= lo && c <= hi) hit = true;
  return hit != set.negated;
}

// Matches one non-star pattern element at p[pi] against c; sets `next`.
bool match_one(std::string_view p, std::size_t pi, char c, std::size_t& next) {
  if (p[pi] == '?') {
    next = pi + 1;
    return true;
  }
  if (p[pi] == '[') {
    const auto end = set_end(p, pi);
    if (end != std::string_view::npos) {
      next = end;
      return in_set(parse_set(p.substr(pi + 1, end - pi - 2)), static_cast<unsigned char>(c));
    }
  }
  next = pi + 1;
  return p[pi] == c;
}

void append_escaped(std::string& out, unsigned char c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "\\x%02x", c);
  out += buf;
}

}  // namespace

std::vector<ListingEntry> parse_html_listing(std::string_view html) {
  static const std::regex anchor(R"re(<a\s[^>]*?href\s*=\s*(?:"([^"]*)"|'([^']*)'|([^\s>]+)))re",
                                 std::regex::icase);
  std::vector<ListingEntry> out;
  std::set<std::string> seen;
  const std::string text(html);
  for (auto it = std::sregex_iterator(text.begin(), text.end(), anchor); it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    std::string href = m[1].matched ? m[1].str() : m[2].matched ? m[2].str() : m[3].str();
    auto e = entry_from_href(html_unescape(std::move(href)));
    if (e && seen.insert(e->href).second) out.push_back(std::move(*e));
  }
  return out;
}

std::vector<ListingEntry> parse_ftp_listing(std::string_view text) {
  std::vector<ListingEntry> out;
  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || (line[0] != 'd' && line[0] != '-' && line[0] != 'l')) continue;
    // permissions, links, owner, group, size, month, day, time-or-year, name
    std::size_t pos = 0;
    for (int field = 0; field < 8 && pos != std::string::npos; ++field) {
      pos = line.find_first_not_of(" \t", pos);
      pos = pos == std::string::npos ? pos : line.find_first_of(" \t", pos);
    }
    if (pos == std::string::npos) continue;
    std::string name = line.substr(line.find_first_not_of(" \t", pos));
    if (line[0] == 'l')
      if (const auto arrow = name.find(" -> "); arrow != std::string::npos) name.erase(arrow);
    if (name == "." || name == ".." || name.empty()) continue;
    ListingEntry e;
    e.is_directory = line[0] == 'd';
    e.name = name;
    e.href = name + (e.is_directory ? "/" : "");
    out.push_back(std::move(e));
  }
  return out;
}

bool glob_match(std::string_view p, std::string_view s) {
  std::size_t pi = 0, si = 0;
  std::size_t star = std::string_view::npos, mark = 0;
  while (si < s.size()) {
    if (pi < p.size() && p[pi] == '*') {
      star = pi++;
      mark = si;
      continue;
    }
    std::size_t next = 0;
    if (pi < p.size() && match_one(p, pi, s[si], next)) {
      pi = next;
      ++si;
      continue;
    }
    if (star == std::string_view::npos) return false;
    pi = star + 1;
    si = ++mark;
  }
  while (pi < p.size() && p[pi] == '*') ++pi;
  return pi == p.size();
}

std::string glob_to_regex(std::string_view p) {
  std::string out;
  for (std::size_t i = 0; i < p.size();) {
    const char c = p[i];
    if (c == '*') {
      out += "[\\s\\S]*";
      ++i;
    } else if (c == '?') {
      out += "[\\s\\S]";
      ++i;
    } else if (c == '[' && set_end(p, i) != std::string_view::npos) {
      const auto end = set_end(p, i);
      const CharSet set = parse_set(p.substr(i + 1, end - i - 2));
      if (set.ranges.empty()) {
        out += set.negated ? "[\\s\\S]" : "(?!)";
      } else {
        out += set.negated ? "[^" : "[";
        for (auto [lo, hi] : set.ranges) {
          append_escaped(out, lo);
          if (hi != lo) {
            out += '-';
            append_escaped(out, hi);
          }
        }
        out += ']';
      }
      i = end;
    } else {
      append_escaped(out, static_cast<unsigned char>(c));
      ++i;
    }
  }
  return out;
}

Pattern Pattern::glob(std::string text) {
  Pattern p;
  p.text_ = std::move(text);
  return p;
}

Pattern Pattern::regex(std::string text) {
  Pattern p;
  try {
    p.regex_.emplace(text, std::regex::ECMAScript);
  } catch (const std::regex_error& e) {
    raise(ErrorCode::BadPattern, "invalid regular expression '" + text + "': " + e.what());
  }
  p.text_ = std::move(text);
  return p;
}

bool Pattern::matches(std::string_view name) const {
  if (regex_) return std::regex_match(name.begin(), name.end(), *regex_);
  return glob_match(text_, name);
}

}  // namespace cryocurate::archive
