#pragma once

// Editable atomic models parsed from PDB fixed-column text or mmCIF.
//
// Only atom records are interpreted. Everything else (headers, remarks,
// CONECT, non-atom CIF categories) is carried verbatim and re-emitted in
// place. Structures are immutable; every deletion returns a new Structure
// with the surviving atoms in their original order.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cryocurate::structmodel {

enum class StructureFormat { Pdb, Cif };

std::string_view to_string(StructureFormat format);
/// File extension without the dot: "pdb" or "cif".
std::string_view extension(StructureFormat format);

struct AtomRecord {
  int serial = 0;
  std::string name;
  std::optional<char> alt_loc;
  std::string res_name;
  std::string chain_id;
  int res_seq = 0;
  std::optional<char> insertion_code;
  double x = 0, y = 0, z = 0;
  double occupancy = 1.0;
  double b_factor = 0.0;
  std::string element;
  std::string charge;
  bool is_hetero = false;
  int model = 1;

  bool is_hydrogen() const;
  bool is_water() const;

  friend bool operator==(const AtomRecord&, const AtomRecord&) = default;
};

struct Residue {
  std::string name;
  int seq = 0;
  std::optional<char> insertion_code;
  std::vector<std::size_t> atoms;  // indices into Structure::atoms()
};

struct Chain {
  std::string id;
  std::vector<Residue> residues;
};

struct Model {
  int number = 1;
  std::vector<Chain> chains;
};

class Structure {
 public:
  StructureFormat source_format() const noexcept { return format_; }
  const std::vector<AtomRecord>& atoms() const noexcept { return atoms_; }
  std::size_t atom_count() const noexcept { return atoms_.size(); }

  /// mmCIF data block name ("4V1W" for data_4V1W); the IDCODE of the HEADER
  /// record for PDB input, or empty.
  const std::string& block_name() const noexcept { return block_name_; }

  /// Atoms grouped by model, chain and residue in file order. Consecutive
  /// atoms sharing (model, chain, res_seq, insertion code, res_name) form a
  /// residue.
  std::vector<Model> hierarchy() const;

  /// New structure keeping only atoms for which `keep` returns true.
  Structure filter(const std::function<bool(const AtomRecord&)>& keep) const;

 private:
  friend Structure parse_structure(std::string_view, std::optional<StructureFormat>);
  friend std::string serialize(const Structure&);

  // A PDB line: either verbatim text or the atom at `atom`. ANISOU and
  // SIGATM/SIGUIJ lines following an atom travel with it.
  struct PdbLine {
    std::string text;
    std::optional<std::size_t> atom;
  };

  StructureFormat format_ = StructureFormat::Pdb;
  std::string block_name_;
  std::vector<AtomRecord> atoms_;

  std::vector<PdbLine> pdb_lines_;
  std::vector<std::vector<std::string>> pdb_attached_;  // per atom

  std::string cif_prefix_;
  std::vector<std::string> cif_columns_;
  std::vector<std::vector<std::string>> cif_rows_;  // raw tokens per atom
  std::string cif_suffix_;
};

/// Parses PDB or mmCIF text. Without a hint, input whose first significant
/// line starts with data_ is read as mmCIF. Raises MalformedStructure with a
/// line number on bad records.
Structure parse_structure(std::string_view text, std::optional<StructureFormat> format_hint = std::nullopt);

/// Emits the structure in its source format. PDB atoms use the wwPDB v3.3
/// fixed columns (80 characters per record); mmCIF atom_site rows are
/// written one per line with single-space separators.
std::string serialize(const Structure& structure);

/// Drops atoms whose element is H or D (atom-name heuristic when the element
/// column is absent).
Structure remove_hydrogens(const Structure& s);
/// Drops residues named HOH, WAT or DOD.
Structure remove_water(const Structure& s);
/// Drops HETATM records (water included).
Structure remove_hetatoms(const Structure& s);
/// Drops residues with start <= res_seq <= end on `chain`, or on every chain
/// when no chain is given. Raises InvalidRange when start > end.
Structure remove_residue_range(const Structure& s, std::optional<std::string> chain, int start, int end);

// Hybrid-36 integer fields as used by PDB files with more than 99999 atoms
// or 9999 residues.
std::optional<int> decode_hybrid36(std::string_view field, int width);
std::string encode_hybrid36(int value, int width);

}  // namespace cryocurate::structmodel
