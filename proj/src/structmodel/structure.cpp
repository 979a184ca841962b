#include "cryocurate/structure.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>

#include "cryocurate/error.hpp"

namespace cryocurate::structmodel {
namespace {

[[noreturn]] void malformed(std::size_t line, const std::string& what) {
  raise(ErrorCode::MalformedStructure, "line " + std::to_string(line) + ": " + what);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<int> parse_int(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

bool is_water_name(std::string_view name) {
  return name == "HOH" || name == "WAT" || name == "DOD";
}

// ---------------------------------------------------------------- PDB ----

bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }

bool is_atom_record(std::string_view line) {
  return starts_with(line, "ATOM  ") || starts_with(line, "HETATM") || line == "ATOM" ||
         line == "HETATM";
}

bool is_attached_record(std::string_view line) {
  return starts_with(line, "ANISOU") || starts_with(line, "SIGATM") || starts_with(line, "SIGUIJ");
}

// Element from the 4-character name field when columns 77-78 are blank.
std::string element_from_name(std::string_view field) {
  std::string f(field);
  f.resize(4, ' ');
  if (f[0] == ' ' || std::isdigit(static_cast<unsigned char>(f[0]))) {
    const char c = f[1];
    return std::isalpha(static_cast<unsigned char>(c)) ? std::string(1, static_cast<char>(std::toupper(c)))
                                                       : std::string();
  }
  std::string name(trim(f));
  // leading digits are a legacy hydrogen numbering prefix
  while (!name.empty() && std::isdigit(static_cast<unsigned char>(name.front()))) name.erase(0, 1);
  if (name.empty()) return {};
  if (name.size() == 4 && (name[0] == 'H' || name[0] == 'D')) return std::string(1, name[0]);
  std::string e;
  for (char c : name) {
    if (!std::isalpha(static_cast<unsigned char>(c)) || e.size() == 2) break;
    e.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  return e;
}

AtomRecord parse_pdb_atom(std::string_view raw, std::size_t line_no, int model) {
  std::string line(raw);
  if (line.size() < 54) malformed(line_no, "atom record shorter than 54 columns");
  line.resize(80, ' ');
  auto col = [&](std::size_t first, std::size_t width) {
    return std::string_view(line).substr(first - 1, width);
  };

  AtomRecord a;
  a.is_hetero = starts_with(line, "HETATM");
  const auto serial = decode_hybrid36(col(7, 5), 5);
  if (!serial) malformed(line_no, "bad atom serial '" + std::string(col(7, 5)) + "'");
  a.serial = *serial;
  a.name = std::string(trim(col(13, 4)));
  if (col(17, 1)[0] != ' ') a.alt_loc = col(17, 1)[0];
  a.res_name = std::string(trim(col(18, 3)));
  a.chain_id = std::string(trim(col(22, 1)));
  const auto seq = decode_hybrid36(col(23, 4), 4);
  if (!seq) malformed(line_no, "bad residue number '" + std::string(col(23, 4)) + "'");
  a.res_seq = *seq;
  if (col(27, 1)[0] != ' ') a.insertion_code = col(27, 1)[0];
  const auto x = parse_double(col(31, 8));
  const auto y = parse_double(col(39, 8));
  const auto z = parse_double(col(47, 8));
  if (!x || !y || !z) malformed(line_no, "bad coordinates in columns 31-54");
  a.x = *x;
  a.y = *y;
  a.z = *z;
  if (!trim(col(55, 6)).empty()) {
    const auto occ = parse_double(col(55, 6));
    if (!occ) malformed(line_no, "bad occupancy '" + std::string(col(55, 6)) + "'");
    a.occupancy = *occ;
  }
  if (!trim(col(61, 6)).empty()) {
    const auto b = parse_double(col(61, 6));
    if (!b) malformed(line_no, "bad temperature factor '" + std::string(col(61, 6)) + "'");
    a.b_factor = *b;
  }
  a.element = upper(trim(col(77, 2)));
  if (a.element.empty()) a.element = element_from_name(col(13, 4));
  if (a.element.empty()) malformed(line_no, "cannot determine element for atom '" + a.name + "'");
  a.charge = std::string(trim(col(79, 2)));
  a.model = model;
  return a;
}

std::string format_name(const AtomRecord& a) {
  if (a.name.size() >= 4) return a.name.substr(0, 4);
  std::string field;
  if (a.element.size() == 1 && !a.name.empty() && std::toupper(static_cast<unsigned char>(a.name[0])) == a.element[0])
    field = " " + a.name;
  else
    field = a.name;
  field.resize(4, ' ');
  return field;
}

std::string format_pdb_atom(const AtomRecord& a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-6s%5s %4s%c%3s %c%4s%c   %8.3f%8.3f%8.3f%6.2f%6.2f          %2s%-2s",
                a.is_hetero ? "HETATM" : "ATOM", encode_hybrid36(a.serial, 5).c_str(),
                format_name(a).c_str(), a.alt_loc.value_or(' '), a.res_name.substr(0, 3).c_str(),
                a.chain_id.empty() ? ' ' : a.chain_id[0], encode_hybrid36(a.res_seq, 4).c_str(),
                a.insertion_code.value_or(' '), a.x, a.y, a.z, a.occupancy, a.b_factor,
                a.element.substr(0, 2).c_str(), a.charge.substr(0, 2).c_str());
  return buf;
}

// --------------------------------------------------------------- mmCIF ---

struct CifToken {
  std::string raw;    // as written, including quotes
  std::string value;  // unquoted; "." and "?" kept literally
};

// Tokenizes the value section of a loop starting at `first_line`. Stops at
// the first line that opens with a keyword, tag or comment; returns the
// index of that line.
std::size_t tokenize_loop_values(const std::vector<std::string_view>& lines, std::size_t first_line,
                                 std::vector<CifToken>& out) {
  std::size_t li = first_line;
  for (; li < lines.size(); ++li) {
    std::string_view line = lines[li];
    const std::string_view t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#' || t[0] == '_' || starts_with(t, "loop_") || starts_with(t, "data_")) break;
    if (line[0] == ';') {
      std::string value(line.substr(1));
      std::string raw(line);
      bool closed = false;
      while (++li < lines.size()) {
        raw += '\n';
        raw += lines[li];
        if (!lines[li].empty() && lines[li][0] == ';') {
          closed = true;
          break;
        }
        value += '\n';
        value += lines[li];
      }
      if (!closed) malformed(li, "unterminated text field in atom_site loop");
      out.push_back({raw, value});
      continue;
    }
    std::size_t pos = 0;
    while (pos < line.size()) {
      while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
      if (pos >= line.size()) break;
      const char c = line[pos];
      if (c == '#') break;
      if (c == '\'' || c == '"') {
        std::size_t end = pos + 1;
        while (true) {
          end = line.find(c, end);
          if (end == std::string_view::npos) malformed(li + 1, "unterminated quoted value");
          if (end + 1 == line.size() || std::isspace(static_cast<unsigned char>(line[end + 1]))) break;
          ++end;
        }
        out.push_back({std::string(line.substr(pos, end - pos + 1)),
                       std::string(line.substr(pos + 1, end - pos - 1))});
        pos = end + 1;
      } else {
        const std::size_t start = pos;
        while (pos < line.size() && !std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
        const std::string tok(line.substr(start, pos - start));
        out.push_back({tok, tok});
      }
    }
  }
  return li;
}

bool cif_null(std::string_view v) { return v == "." || v == "?"; }

class AtomSiteColumns {
 public:
  explicit AtomSiteColumns(const std::vector<std::string>& columns) {
    for (std::size_t i = 0; i < columns.size(); ++i) index_[columns[i]] = i;
  }
  std::optional<std::size_t> find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  // Prefers the first of the given column names that is present and non-null.
  const std::string* pick(const std::vector<CifToken>& row, std::initializer_list<std::string_view> names) const {
    for (auto n : names) {
      if (auto i = find(n); i && !cif_null(row[*i].value)) return &row[*i].value;
    }
    return nullptr;
  }

 private:
  std::map<std::string, std::size_t, std::less<>> index_;
};

AtomRecord cif_atom(const AtomSiteColumns& cols, const std::vector<CifToken>& row, std::size_t row_no) {
  auto fail = [&](const std::string& what) {
    raise(ErrorCode::MalformedStructure, "atom_site row " + std::to_string(row_no) + ": " + what);
  };
  AtomRecord a;
  if (const auto* g = cols.pick(row, {"group_PDB"})) a.is_hetero = *g == "HETATM";
  if (const auto* v = cols.pick(row, {"id"})) {
    const auto serial = parse_int(*v);
    if (!serial) fail("bad id '" + *v + "'");
    a.serial = *serial;
  }
  if (const auto* v = cols.pick(row, {"auth_atom_id", "label_atom_id"})) a.name = *v;
  if (const auto* v = cols.pick(row, {"label_alt_id"})) a.alt_loc = (*v)[0];
  if (const auto* v = cols.pick(row, {"auth_comp_id", "label_comp_id"})) a.res_name = *v;
  if (const auto* v = cols.pick(row, {"auth_asym_id", "label_asym_id"})) a.chain_id = *v;
  if (const auto* v = cols.pick(row, {"auth_seq_id", "label_seq_id"})) {
    const auto seq = parse_int(*v);
    if (!seq) fail("bad residue number '" + *v + "'");
    a.res_seq = *seq;
  }
  if (const auto* v = cols.pick(row, {"pdbx_PDB_ins_code"})) a.insertion_code = (*v)[0];
  const char* axes[] = {"Cartn_x", "Cartn_y", "Cartn_z"};
  double* dest[] = {&a.x, &a.y, &a.z};
  for (int k = 0; k < 3; ++k) {
    const auto* v = cols.pick(row, {axes[k]});
    const auto d = v ? parse_double(*v) : std::nullopt;
    if (!d) fail(std::string("missing or bad ") + axes[k]);
    *dest[k] = *d;
  }
  if (const auto* v = cols.pick(row, {"occupancy"})) {
    const auto d = parse_double(*v);
    if (!d) fail("bad occupancy '" + *v + "'");
    a.occupancy = *d;
  }
  if (const auto* v = cols.pick(row, {"B_iso_or_equiv"})) {
    const auto d = parse_double(*v);
    if (!d) fail("bad B_iso_or_equiv '" + *v + "'");
    a.b_factor = *d;
  }
  if (const auto* v = cols.pick(row, {"type_symbol"})) a.element = upper(*v);
  if (a.element.empty()) {
    std::string field = a.name;
    a.element = element_from_name(a.name.size() < 4 ? " " + field : field);
  }
  if (a.element.empty()) fail("cannot determine element");
  if (const auto* v = cols.pick(row, {"pdbx_formal_charge"})) a.charge = *v;
  if (const auto* v = cols.pick(row, {"pdbx_PDB_model_num"})) {
    const auto m = parse_int(*v);
    if (!m) fail("bad model number '" + *v + "'");
    a.model = *m;
  }
  return a;
}

}  // namespace

std::string_view to_string(StructureFormat format) {
  return format == StructureFormat::Cif ? "mmCIF" : "PDB";
}

std::string_view extension(StructureFormat format) {
  return format == StructureFormat::Cif ? "cif" : "pdb";
}

bool AtomRecord::is_hydrogen() const { return element == "H" || element == "D"; }

bool AtomRecord::is_water() const { return is_water_name(res_name); }

std::vector<Model> Structure::hierarchy() const {
  std::vector<Model> models;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    const AtomRecord& a = atoms_[i];
    if (models.empty() || models.back().number != a.model) models.push_back({a.model, {}});
    auto& chains = models.back().chains;
    if (chains.empty() || chains.back().id != a.chain_id) chains.push_back({a.chain_id, {}});
    auto& residues = chains.back().residues;
    if (residues.empty() || residues.back().seq != a.res_seq ||
        residues.back().insertion_code != a.insertion_code || residues.back().name != a.res_name)
      residues.push_back({a.res_name, a.res_seq, a.insertion_code, {}});
    residues.back().atoms.push_back(i);
  }
  return models;
}

Structure Structure::filter(const std::function<bool(const AtomRecord&)>& keep) const {
  Structure out;
  out.format_ = format_;
  out.block_name_ = block_name_;
  out.cif_prefix_ = cif_prefix_;
  out.cif_columns_ = cif_columns_;
  out.cif_suffix_ = cif_suffix_;

  std::vector<std::optional<std::size_t>> remap(atoms_.size());
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    if (!keep(atoms_[i])) continue;
    remap[i] = out.atoms_.size();
    out.atoms_.push_back(atoms_[i]);
    if (format_ == StructureFormat::Cif)
      out.cif_rows_.push_back(cif_rows_[i]);
    else
      out.pdb_attached_.push_back(pdb_attached_[i]);
  }
  for (const auto& line : pdb_lines_) {
    if (!line.atom) {
      out.pdb_lines_.push_back(line);
    } else if (remap[*line.atom]) {
      out.pdb_lines_.push_back({{}, remap[*line.atom]});
    }
  }
  return out;
}

Structure parse_structure(std::string_view text, std::optional<StructureFormat> format_hint) {
  const auto lines = split_lines(text);
  StructureFormat format = StructureFormat::Pdb;
  if (format_hint) {
    format = *format_hint;
  } else {
    for (auto line : lines) {
      const auto t = trim(line);
      if (t.empty() || t[0] == '#') continue;
      if (starts_with(t, "data_")) format = StructureFormat::Cif;
      break;
    }
  }

  Structure s;
  s.format_ = format;

  if (format == StructureFormat::Pdb) {
    int model = 1;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const auto line = lines[i];
      if (starts_with(line, "MODEL ")) {
        if (const auto m = parse_int(line.substr(6))) model = *m;
      } else if (starts_with(line, "HEADER") && line.size() >= 66) {
        s.block_name_ = std::string(trim(line.substr(62, 4)));
      }
      if (is_atom_record(line)) {
        s.atoms_.push_back(parse_pdb_atom(line, i + 1, model));
        s.pdb_attached_.emplace_back();
        s.pdb_lines_.push_back({{}, s.atoms_.size() - 1});
      } else if (is_attached_record(line) && !s.atoms_.empty() && s.pdb_lines_.back().atom) {
        s.pdb_attached_.back().emplace_back(line);
      } else {
        s.pdb_lines_.push_back({std::string(line), std::nullopt});
      }
    }
    return s;
  }

  // mmCIF: locate the atom_site loop; everything around it is passthrough.
  std::size_t li = 0;
  bool have_block = false;
  std::optional<std::size_t> loop_line;
  for (; li < lines.size(); ++li) {
    const auto t = trim(lines[li]);
    if (!have_block && starts_with(t, "data_")) {
      s.block_name_ = std::string(t.substr(5));
      have_block = true;
    }
    if (t == "loop_" && li + 1 < lines.size() && starts_with(trim(lines[li + 1]), "_atom_site.")) {
      loop_line = li;
      break;
    }
    if (starts_with(t, "_atom_site.")) malformed(li + 1, "atom_site must be a loop_ category");
  }
  if (!have_block) malformed(1, "mmCIF input has no data_ block");
  if (!loop_line) {
    // no coordinates at all: keep the document verbatim
    s.cif_prefix_ = std::string(text);
    return s;
  }
  for (std::size_t k = 0; k < *loop_line; ++k) {
    s.cif_prefix_ += lines[k];
    s.cif_prefix_ += '\n';
  }
  li = *loop_line + 1;
  while (li < lines.size() && starts_with(trim(lines[li]), "_atom_site.")) {
    const auto t = trim(lines[li]);
    const auto end = t.find_first_of(" \t");
    s.cif_columns_.emplace_back(t.substr(11, end == std::string_view::npos ? end : end - 11));
    ++li;
  }
  std::vector<CifToken> tokens;
  const std::size_t after = tokenize_loop_values(lines, li, tokens);
  const std::size_t ncol = s.cif_columns_.size();
  if (tokens.size() % ncol != 0)
    malformed(after, "truncated atom_site loop: " + std::to_string(tokens.size()) + " values for " +
                         std::to_string(ncol) + " columns");
  const AtomSiteColumns cols(s.cif_columns_);
  for (std::size_t r = 0; r * ncol < tokens.size(); ++r) {
    std::vector<CifToken> row(tokens.begin() + static_cast<std::ptrdiff_t>(r * ncol),
                              tokens.begin() + static_cast<std::ptrdiff_t>((r + 1) * ncol));
    s.atoms_.push_back(cif_atom(cols, row, r + 1));
    std::vector<std::string> raw;
    raw.reserve(ncol);
    for (auto& t : row) raw.push_back(std::move(t.raw));
    s.cif_rows_.push_back(std::move(raw));
  }
  for (std::size_t k = after; k < lines.size(); ++k) {
    s.cif_suffix_ += lines[k];
    s.cif_suffix_ += '\n';
  }
  return s;
}

std::string serialize(const Structure& s) {
  std::string out;
  if (s.format_ == StructureFormat::Pdb) {
    for (const auto& line : s.pdb_lines_) {
      if (line.atom) {
        out += format_pdb_atom(s.atoms_[*line.atom]);
        out += '\n';
        for (const auto& extra : s.pdb_attached_[*line.atom]) {
          out += extra;
          out += '\n';
        }
      } else {
        out += line.text;
        out += '\n';
      }
    }
    return out;
  }
  out = s.cif_prefix_;
  if (s.cif_columns_.empty()) return out;
  out += "loop_\n";
  for (const auto& c : s.cif_columns_) out += "_atom_site." + c + "\n";
  for (const auto& row : s.cif_rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += row[i][0] == ';' ? "\n" : " ";
      out += row[i];
    }
    out += '\n';
  }
  out += s.cif_suffix_;
  return out;
}

Structure remove_hydrogens(const Structure& s) {
  return s.filter([](const AtomRecord& a) { return !a.is_hydrogen(); });
}

Structure remove_water(const Structure& s) {
  return s.filter([](const AtomRecord& a) { return !a.is_water(); });
}

Structure remove_hetatoms(const Structure& s) {
  return s.filter([](const AtomRecord& a) { return !a.is_hetero; });
}

Structure remove_residue_range(const Structure& s, std::optional<std::string> chain, int start, int end) {
  if (start > end)
    raise(ErrorCode::InvalidRange,
          "residue range " + std::to_string(start) + "-" + std::to_string(end) + " is empty");
  return s.filter([&](const AtomRecord& a) {
    const bool on_chain = !chain || a.chain_id == *chain;
    return !(on_chain && a.res_seq >= start && a.res_seq <= end);
  });
}

// ------------------------------------------------------------- hybrid-36 ---

namespace {

constexpr std::string_view kUpperDigits = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ";
constexpr std::string_view kLowerDigits = "0123456789abcdefghijklmnopqrstuvwxyz";

long long ipow(long long b, int e) {
  long long r = 1;
  while (e-- > 0) r *= b;
  return r;
}

}  // namespace

std::optional<int> decode_hybrid36(std::string_view field, int width) {
  const auto t = trim(field);
  if (t.empty()) return std::nullopt;
  const char c = t[0];
  if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+') return parse_int(t);
  if (static_cast<int>(t.size()) != width) return std::nullopt;
  const bool is_upper = std::isupper(static_cast<unsigned char>(c));
  const auto digits = is_upper ? kUpperDigits : kLowerDigits;
  long long v = 0;
  for (char d : t) {
    const auto k = digits.find(d);
    if (k == std::string_view::npos) return std::nullopt;
    v = v * 36 + static_cast<long long>(k);
  }
  v += ipow(10, width) - 10 * ipow(36, width - 1);
  if (!is_upper) v += 26 * ipow(36, width - 1);
  return static_cast<int>(v);
}

std::string encode_hybrid36(int value, int width) {
  const long long decimal_limit = ipow(10, width);
  if (value < decimal_limit) {
    std::string s = std::to_string(value);
    if (static_cast<int>(s.size()) < width) s.insert(0, width - s.size(), ' ');
    return s;
  }
  long long v = value - decimal_limit;
  const long long block = 26 * ipow(36, width - 1);
  auto digits = kUpperDigits;
  if (v >= block) {
    v -= block;
    digits = kLowerDigits;
  }
  if (v >= block) raise(ErrorCode::InvalidArgument, "value " + std::to_string(value) + " exceeds hybrid-36 range");
  v += 10 * ipow(36, width - 1);
  std::string s(static_cast<std::size_t>(width), '0');
  for (int i = width - 1; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[static_cast<std::size_t>(v % 36)];
    v /= 36;
  }
  return s;
}

}  // namespace cryocurate::structmodel
