#pragma once

// STAR metadata files as written by RELION and friends: data_ blocks holding
// key/value pairs and loop_ tables. Values are kept as strings; numeric
// interpretation happens in the typed accessors.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cryocurate::star {

struct StarLoop {
  /// Column tags including the leading underscore, e.g. "_rlnImageName".
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column_index(std::string_view name) const;
  const std::string& get(std::size_t row, std::string_view column) const;
  std::int64_t get_int(std::size_t row, std::string_view column) const;
  double get_float(std::size_t row, std::string_view column) const;
  /// Every value of one column, in row order.
  std::vector<std::string> column(std::string_view name) const;

  friend bool operator==(const StarLoop&, const StarLoop&) = default;
};

struct StarBlock {
  /// Text after "data_"; may be empty.
  std::string name;
  std::vector<std::pair<std::string, std::string>> pairs;
  std::vector<StarLoop> loops;

  const std::string* find_value(std::string_view key) const;
  /// First loop containing `column`.
  const StarLoop* find_loop(std::string_view column) const;

  friend bool operator==(const StarBlock&, const StarBlock&) = default;
};

struct StarTable {
  std::vector<StarBlock> blocks;

  const StarBlock* find_block(std::string_view name) const;

  friend bool operator==(const StarTable&, const StarTable&) = default;
};

/// Throws Error(StarSyntaxError) with a 1-based line number on malformed
/// input. Loop rows must each begin on a new line; a row may continue onto
/// following lines.
StarTable read_star(std::string_view text);

/// Within each block, pairs are written before loops. Values that would not
/// survive bare tokenization are quoted, or written as ;-delimited text
/// fields when they contain newlines or both quote styles.
std::string write_star(const StarTable& table);

}  // namespace cryocurate::star
