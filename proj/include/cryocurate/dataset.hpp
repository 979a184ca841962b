#pragma once

// Labeled image datasets from a local directory. Files are named
// "<class>_<suffix>.<ext>"; the manifest keeps paths only and images are
// read one at a time when an item is requested.

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cryocurate/image.hpp"

namespace cryocurate::dataset {

// ----------------------------------------------------------- transforms ---

/// Weights of a normalized 1D Gaussian with `kernel` taps. Raises
/// InvalidTransform unless sigma > 0 and kernel is odd and >= 3.
std::vector<double> gaussian_weights(double sigma, int kernel);

// All transforms compute in double and return Float32 arrays.

/// (x - min) / (max - min); constant images become zeros.
ImageArray normalize_minmax(const ImageArray& image);
/// Zero mean, unit population standard deviation; constant images become zeros.
ImageArray standardize(const ImageArray& image);
/// Separable Gaussian along every axis, edges extended by mirroring with the
/// edge sample repeated (d c b a | a b c d | d c b a).
ImageArray gaussian_blur(const ImageArray& image, double sigma, int kernel);
/// Linear interpolation along each of the trailing target.size() axes, with
/// pixel centres aligned (bilinear in 2D, trilinear in 3D).
ImageArray rescale(const ImageArray& image, const std::vector<std::size_t>& target);
/// Scales every axis longer than one by `factor` (rounded, at least 1).
ImageArray rescale_by(const ImageArray& image, double factor);
/// Zero-pads the trailing target.size() axes, centred with the odd sample
/// after. Raises InvalidTransform if any axis is already longer.
ImageArray pad_to(const ImageArray& image, const std::vector<std::size_t>& target);

struct Transform {
  enum class Kind { NormalizeMinmax, Standardize, GaussianBlur, Rescale, PadTo };
  Kind kind = Kind::NormalizeMinmax;
  double sigma = 0.0;
  int kernel = 0;
  std::vector<std::size_t> shape;  // rescale target or pad_to shape
  double factor = 0.0;             // rescale by factor when shape is empty

  static Transform normalize_minmax();
  static Transform standardize();
  static Transform gaussian_blur(double sigma, int kernel);
  static Transform rescale(std::vector<std::size_t> shape);
  static Transform rescale_by(double factor);
  static Transform pad_to(std::vector<std::size_t> shape);

  ImageArray apply(const ImageArray& image) const;
  /// e.g. "gaussian_blur(1.5,5)", "rescale(32x32)", "rescale(0.5)".
  std::string to_string() const;
  friend bool operator==(const Transform&, const Transform&) = default;
};

/// Ordered transform pipeline; order matters.
struct TransformSpec {
  std::vector<Transform> steps;

  /// Comma-separated steps in the to_string() form. Raises InvalidTransform.
  static TransformSpec parse(std::string_view text);
  std::string to_string() const;
  bool empty() const { return steps.empty(); }
  ImageArray apply(const ImageArray& image) const;
  friend bool operator==(const TransformSpec&, const TransformSpec&) = default;
};

// ------------------------------------------------------------- manifest ---

struct Record {
  std::filesystem::path path;
  std::string class_label;
  std::string suffix;
  friend bool operator==(const Record&, const Record&) = default;
};

struct DatasetManifest {
  std::filesystem::path datapath;
  std::string datatype;
  std::vector<Record> records;     // path order
  std::vector<std::string> classes;  // sorted, unique
  std::optional<std::size_t> dataset_size;
  std::vector<std::string> warnings;  // skipped files

  std::size_t size() const { return records.size(); }
  /// Position of `label` in `classes`; raises InvalidArgument.
  int label_index(const std::string& label) const;
  /// Records per class, aligned with `classes`.
  std::vector<std::size_t> class_counts() const;
};

struct DiscoverOptions {
  /// Only these classes; every one must have files. Empty: infer.
  std::vector<std::string> classes;
  /// Caps the total record count, applied after ordering.
  std::optional<std::size_t> dataset_size;
  /// Files without a class prefix raise InvalidArgument instead of a warning.
  bool strict = false;
};

/// Scans the regular files of `datapath` (not recursive) ending in
/// ".<datatype>". Opens no image files. Raises DirectoryNotFound,
/// EmptyDataset or UnknownClassInStrictMode.
DatasetManifest discover(const std::filesystem::path& datapath, std::string datatype = "mrc",
                         const DiscoverOptions& options = {});

// ---------------------------------------------------------------- split ---

struct SplitConfig {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
  bool stratified = true;
};

struct Split {
  DatasetManifest train;
  DatasetManifest validation;
  std::vector<std::size_t> train_indices;       // ascending
  std::vector<std::size_t> validation_indices;  // ascending
};

/// One mt19937_64 seeded with `seed` drives a Fisher-Yates shuffle of each
/// class in class order (or of the whole manifest when not stratified); the
/// first ceil(fraction * n) shuffled items go to training. Both halves keep
/// manifest order. Raises ClassTooSmall or InvalidArgument.
Split split(const DatasetManifest& manifest, const SplitConfig& config);

/// Uniform integer in [0, bound) by rejection, independent of the standard
/// library's distributions.
std::uint64_t bounded_random(std::mt19937_64& rng, std::uint64_t bound);

// ------------------------------------------------------- items, batches ---

struct Item {
  ImageArray image;
  std::string label;
  int label_index = 0;
  std::string suffix;
  std::filesystem::path path;
};

struct ItemMeta {
  std::string suffix;
  std::filesystem::path path;
  friend bool operator==(const ItemMeta&, const ItemMeta&) = default;
};

struct Batch {
  ImageArray data;  // (B, ...item shape)
  std::vector<int> labels;
  std::vector<std::string> classes;  // index -> label
  std::vector<ItemMeta> meta;

  std::size_t size() const { return labels.size(); }
  friend bool operator==(const Batch&, const Batch&) = default;
};

class Dataset;

/// Sequential batches of consecutive items.
class BatchIterator {
 public:
  BatchIterator(const Dataset& dataset, std::size_t batch_size, bool drop_last);
  std::optional<Batch> next();
  std::size_t batch_count() const;

 private:
  const Dataset* dataset_;
  std::size_t batch_size_;
  bool drop_last_;
  std::size_t position_ = 0;
};

class Dataset {
 public:
  explicit Dataset(DatasetManifest manifest, TransformSpec transforms = {});

  const DatasetManifest& manifest() const { return manifest_; }
  const TransformSpec& transforms() const { return transforms_; }
  std::size_t size() const { return manifest_.records.size(); }

  /// Reads and decodes one file, then applies the transforms. Safe to call
  /// concurrently. Raises IndexOutOfRange, IoError or DecodeError.
  Item get_item(std::size_t index) const;

  /// Items [first, first + count) stacked along a new leading axis. Items
  /// sharing a dtype keep it; mixed dtypes are stored as Float32. Raises
  /// ShapeMismatch naming both files.
  Batch make_batch(std::size_t first, std::size_t count) const;

  /// The dataset must outlive the iterator. Raises InvalidArgument for a
  /// zero batch size.
  BatchIterator batches(std::size_t batch_size, bool drop_last = false) const;

  /// Image files read so far.
  std::size_t files_read() const { return files_read_->load(); }

 private:
  DatasetManifest manifest_;
  TransformSpec transforms_;
  std::shared_ptr<std::atomic<std::size_t>> files_read_;
};

// --------------------------------------------------------------- export ---

struct ExportedBatch {
  std::string file;  // "batch_<k>.npy"
  std::size_t count = 0;
  std::vector<std::size_t> shape;
};

/// Contents of export_index.json.
struct ExportIndex {
  int version = 1;
  std::string datatype;
  std::string dtype;
  std::vector<std::string> classes;
  std::size_t record_count = 0;
  std::size_t batch_size = 0;
  std::string transforms;
  std::vector<ExportedBatch> batches;

  std::string to_json() const;
  static ExportIndex from_json(std::string_view text);
};

inline constexpr const char* kExportIndexFile = "export_index.json";

/// Writes batch_<k>.npy, labels.csv (index,label,path,suffix), classes.txt
/// and export_index.json. Raises PermissionDenied or IoError.
ExportIndex export_dataset(const Dataset& dataset, const std::filesystem::path& out_dir, std::size_t batch_size);

struct ImportedExport {
  ExportIndex index;
  std::vector<Batch> batches;
};

/// Reads back what export_dataset wrote.
ImportedExport import_export(const std::filesystem::path& dir);

}  // namespace cryocurate::dataset
