#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "cryocurate/dataset.hpp"
#include "cryocurate/error.hpp"
#include "cryocurate/formats.hpp"
#include "cryocurate/npy.hpp"
#include "../util/files.hpp"
#include "json.hpp"

namespace cryocurate::dataset {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::size_t train_count(double fraction, std::size_t n) {
  // The tolerance keeps products such as 0.7 * 10 from rounding up to 8.
  const double want = fraction * static_cast<double>(n);
  return std::min(n, static_cast<std::size_t>(std::ceil(want - 1e-9 * std::max(1.0, want))));
}

void fisher_yates(std::vector<std::size_t>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[bounded_random(rng, i)]);
}

DatasetManifest subset(const DatasetManifest& m, const std::vector<std::size_t>& indices) {
  DatasetManifest out = m;
  out.records.clear();
  out.warnings.clear();
  for (auto i : indices) out.records.push_back(m.records[i]);
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  return fields;
}

// Splits CSV text into records, honoring newlines inside quotes.
std::vector<std::string> csv_lines(const std::string& text) {
  std::vector<std::string> lines(1);
  bool quoted = false;
  for (char c : text) {
    if (c == '"') quoted = !quoted;
    if (c == '\n' && !quoted) {
      lines.emplace_back();
      continue;
    }
    lines.back() += c;
  }
  if (lines.back().empty()) lines.pop_back();
  return lines;
}

}  // namespace

// ------------------------------------------------------------- manifest ---

int DatasetManifest::label_index(const std::string& label) const {
  const auto it = std::lower_bound(classes.begin(), classes.end(), label);
  if (it == classes.end() || *it != label) raise(ErrorCode::InvalidArgument, "unknown class '" + label + "'");
  return static_cast<int>(it - classes.begin());
}

std::vector<std::size_t> DatasetManifest::class_counts() const {
  std::vector<std::size_t> counts(classes.size(), 0);
  for (const auto& r : records) ++counts[static_cast<std::size_t>(label_index(r.class_label))];
  return counts;
}

DatasetManifest discover(const fs::path& datapath, std::string datatype, const DiscoverOptions& options) {
  while (!datatype.empty() && datatype.front() == '.') datatype.erase(0, 1);
  datatype = util::lower(datatype);
  if (datatype.empty()) raise(ErrorCode::InvalidArgument, "datatype must name a file extension");
  std::error_code ec;
  if (!fs::is_directory(datapath, ec)) raise(ErrorCode::DirectoryNotFound, datapath.string() + " is not a directory");

  DatasetManifest m;
  m.datapath = datapath;
  m.datatype = datatype;
  m.dataset_size = options.dataset_size;

  std::vector<fs::path> files;
  for (fs::directory_iterator it(datapath, ec), end; !ec && it != end; it.increment(ec)) {
    if (!it->is_regular_file(ec)) continue;
    const auto ext = it->path().extension().string();
    if (ext.size() > 1 && util::lower(ext.substr(1)) == datatype) files.push_back(it->path());
  }
  if (ec) raise(ErrorCode::IoError, "cannot list " + datapath.string() + ": " + ec.message());
  std::sort(files.begin(), files.end());

  const std::set<std::string> wanted(options.classes.begin(), options.classes.end());
  for (const auto& f : files) {
    const std::string stem = f.stem().string();
    const auto underscore = stem.find('_');
    if (underscore == std::string::npos || underscore == 0) {
      const std::string why = f.filename().string() + " has no '<class>_' prefix";
      if (options.strict) raise(ErrorCode::InvalidArgument, why);
      m.warnings.push_back(why + "; skipped");
      continue;
    }
    Record r{f, stem.substr(0, underscore), stem.substr(underscore + 1)};
    if (!wanted.empty() && !wanted.count(r.class_label)) continue;
    m.records.push_back(std::move(r));
  }

  if (!wanted.empty()) {
    std::set<std::string> present;
    for (const auto& r : m.records) present.insert(r.class_label);
    for (const auto& c : wanted)
      if (!present.count(c))
        raise(ErrorCode::UnknownClassInStrictMode, "class '" + c + "' has no ." + datatype + " files in " +
                                                       datapath.string());
  }
  if (options.dataset_size && m.records.size() > *options.dataset_size) m.records.resize(*options.dataset_size);
  if (m.records.empty())
    raise(ErrorCode::EmptyDataset, "no usable ." + datatype + " files in " + datapath.string());

  if (!wanted.empty()) {
    m.classes.assign(wanted.begin(), wanted.end());
  } else {
    std::set<std::string> labels;
    for (const auto& r : m.records) labels.insert(r.class_label);
    m.classes.assign(labels.begin(), labels.end());
  }
  return m;
}

// ---------------------------------------------------------------- split ---

std::uint64_t bounded_random(std::mt19937_64& rng, std::uint64_t bound) {
  if (bound == 0) raise(ErrorCode::InvalidArgument, "bound must be positive");
  // Largest multiple of bound that fits, so every residue is equally likely.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do x = rng();
  while (x >= limit);
  return x % bound;
}

Split split(const DatasetManifest& manifest, const SplitConfig& config) {
  if (!(config.train_fraction > 0.0 && config.train_fraction < 1.0))
    raise(ErrorCode::InvalidArgument, "train fraction must lie strictly between 0 and 1");
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> train;

  auto take = [&](std::vector<std::size_t> members) {
    fisher_yates(members, rng);
    const std::size_t n = train_count(config.train_fraction, members.size());
    train.insert(train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n));
  };

  if (config.stratified) {
    std::vector<std::vector<std::size_t>> by_class(manifest.classes.size());
    for (std::size_t i = 0; i < manifest.records.size(); ++i)
      by_class[static_cast<std::size_t>(manifest.label_index(manifest.records[i].class_label))].push_back(i);
    for (std::size_t c = 0; c < by_class.size(); ++c)
      if (by_class[c].size() == 1)
        raise(ErrorCode::ClassTooSmall, "class '" + manifest.classes[c] + "' has 1 item; a stratified split needs 2");
    for (auto& members : by_class)
      if (!members.empty()) take(std::move(members));
  } else {
    std::vector<std::size_t> all(manifest.records.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    take(std::move(all));
  }

  std::sort(train.begin(), train.end());
  Split s;
  s.train_indices = train;
  for (std::size_t i = 0, t = 0; i < manifest.records.size(); ++i) {
    if (t < train.size() && train[t] == i)
      ++t;
    else
      s.validation_indices.push_back(i);
  }
  s.train = subset(manifest, s.train_indices);
  s.validation = subset(manifest, s.validation_indices);
  return s;
}

// ------------------------------------------------------- items, batches ---

Dataset::Dataset(DatasetManifest manifest, TransformSpec transforms)
    : manifest_(std::move(manifest)),
      transforms_(std::move(transforms)),
      files_read_(std::make_shared<std::atomic<std::size_t>>(0)) {}

Item Dataset::get_item(std::size_t index) const {
  if (index >= manifest_.records.size())
    raise(ErrorCode::IndexOutOfRange, "item " + std::to_string(index) + " out of range (" +
                                          std::to_string(manifest_.records.size()) + " records)");
  const Record& r = manifest_.records[index];
  const std::string bytes = util::read_file(r.path);
  ++*files_read_;
  Item item;
  try {
    const auto* p = reinterpret_cast<const std::byte*>(bytes.data());
    item.image = decode_image(std::span<const std::byte>(p, bytes.size()), r.path.filename().string());
  } catch (const Error& e) {
    raise(ErrorCode::DecodeError, r.path.string() + ": " + e.what());
  }
  item.image = transforms_.apply(item.image);
  item.label = r.class_label;
  item.label_index = manifest_.label_index(r.class_label);
  item.suffix = r.suffix;
  item.path = r.path;
  return item;
}

Batch Dataset::make_batch(std::size_t first, std::size_t count) const {
  if (count == 0 || first + count > size()) raise(ErrorCode::IndexOutOfRange, "batch outside the dataset");
  std::vector<Item> items;
  items.reserve(count);
  for (std::size_t i = first; i < first + count; ++i) {
    items.push_back(get_item(i));
    if (items.back().image.shape() != items.front().image.shape())
      raise(ErrorCode::ShapeMismatch,
            items.front().path.string() + " has shape " + shape_to_string(items.front().image.shape()) + " but " +
                items.back().path.string() + " has shape " + shape_to_string(items.back().image.shape()) +
                "; add rescale or pad_to");
  }
  const bool same_dtype = std::all_of(items.begin(), items.end(),
                                      [&](const Item& it) { return it.image.dtype() == items.front().image.dtype(); });
  const DType dtype = same_dtype ? items.front().image.dtype() : DType::Float32;

  std::vector<std::size_t> shape{count};
  shape.insert(shape.end(), items.front().image.shape().begin(), items.front().image.shape().end());
  Batch b;
  b.data = ImageArray(shape, dtype);
  b.classes = manifest_.classes;
  const std::size_t stride = items.front().image.element_count() * dtype_size(dtype);
  auto out = b.data.mutable_bytes();
  for (std::size_t k = 0; k < count; ++k) {
    const Item& it = items[k];
    if (same_dtype) {
      std::memcpy(out.data() + k * stride, it.image.bytes().data(), stride);
    } else {
      const auto v = it.image.to_double();
      auto* dst = reinterpret_cast<float*>(out.data() + k * stride);
      for (std::size_t e = 0; e < v.size(); ++e) dst[e] = static_cast<float>(v[e]);
    }
    b.labels.push_back(it.label_index);
    b.meta.push_back({it.suffix, it.path});
  }
  return b;
}

BatchIterator Dataset::batches(std::size_t batch_size, bool drop_last) const {
  return BatchIterator(*this, batch_size, drop_last);
}

BatchIterator::BatchIterator(const Dataset& dataset, std::size_t batch_size, bool drop_last)
    : dataset_(&dataset), batch_size_(batch_size), drop_last_(drop_last) {
  if (batch_size == 0) raise(ErrorCode::InvalidArgument, "batch size must be at least 1");
}

std::size_t BatchIterator::batch_count() const {
  const std::size_t n = dataset_->size();
  return drop_last_ ? n / batch_size_ : (n + batch_size_ - 1) / batch_size_;
}

std::optional<Batch> BatchIterator::next() {
  const std::size_t n = dataset_->size();
  if (position_ >= n) return std::nullopt;
  const std::size_t count = std::min(batch_size_, n - position_);
  if (drop_last_ && count < batch_size_) {
    position_ = n;
    return std::nullopt;
  }
  Batch b = dataset_->make_batch(position_, count);
  position_ += count;
  return b;
}

// --------------------------------------------------------------- export ---

std::string ExportIndex::to_json() const {
  json j;
  j["version"] = version;
  j["datatype"] = datatype;
  j["dtype"] = dtype;
  j["classes"] = classes;
  j["record_count"] = record_count;
  j["batch_size"] = batch_size;
  j["transforms"] = transforms;
  j["batches"] = json::array();
  for (const auto& b : batches) j["batches"].push_back({{"file", b.file}, {"count", b.count}, {"shape", b.shape}});
  return j.dump(1) + "\n";
}

ExportIndex ExportIndex::from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    ExportIndex x;
    x.version = j.at("version").get<int>();
    if (x.version != 1) raise(ErrorCode::InvalidArgument, "unsupported export version " + std::to_string(x.version));
    x.datatype = j.at("datatype").get<std::string>();
    x.dtype = j.at("dtype").get<std::string>();
    x.classes = j.at("classes").get<std::vector<std::string>>();
    x.record_count = j.at("record_count").get<std::size_t>();
    x.batch_size = j.at("batch_size").get<std::size_t>();
    x.transforms = j.at("transforms").get<std::string>();
    for (const auto& b : j.at("batches"))
      x.batches.push_back({b.at("file").get<std::string>(), b.at("count").get<std::size_t>(),
                           b.at("shape").get<std::vector<std::size_t>>()});
    return x;
  } catch (const json::exception& e) {
    raise(ErrorCode::InvalidArgument, std::string("malformed export index: ") + e.what());
  }
}

ExportIndex export_dataset(const Dataset& dataset, const fs::path& out_dir, std::size_t batch_size) {
  util::ensure_writable_directory(out_dir);
  const auto& m = dataset.manifest();
  ExportIndex index;
  index.datatype = m.datatype;
  index.classes = m.classes;
  index.record_count = dataset.size();
  index.batch_size = batch_size;
  index.transforms = dataset.transforms().to_string();

  std::string labels = "index,label,path,suffix\n";
  auto it = dataset.batches(batch_size);
  std::size_t row = 0;
  for (std::size_t k = 0; auto b = it.next(); ++k) {
    const std::string file = "batch_" + std::to_string(k) + ".npy";
    const auto npy = npy::write_npy(b->data);
    util::atomic_write(out_dir / file, std::string_view(reinterpret_cast<const char*>(npy.data()), npy.size()));
    index.batches.push_back({file, b->size(), b->data.shape()});
    if (index.dtype.empty()) index.dtype = std::string(to_string(b->data.dtype()));
    for (std::size_t i = 0; i < b->size(); ++i, ++row)
      labels += std::to_string(row) + "," + csv_field(m.classes[static_cast<std::size_t>(b->labels[i])]) + "," +
                csv_field(b->meta[i].path.string()) + "," + csv_field(b->meta[i].suffix) + "\n";
  }
  std::string classes;
  for (const auto& c : m.classes) classes += c + "\n";
  util::atomic_write(out_dir / "labels.csv", labels);
  util::atomic_write(out_dir / "classes.txt", classes);
  util::atomic_write(out_dir / kExportIndexFile, index.to_json());
  return index;
}

ImportedExport import_export(const fs::path& dir) {
  ImportedExport out;
  out.index = ExportIndex::from_json(util::read_file(dir / kExportIndexFile));
  std::vector<std::string> classes;
  std::istringstream cls(util::read_file(dir / "classes.txt"));
  for (std::string line; std::getline(cls, line);) classes.push_back(line);
  if (classes != out.index.classes) raise(ErrorCode::InvalidArgument, "classes.txt disagrees with the export index");

  auto rows = csv_lines(util::read_file(dir / "labels.csv"));
  if (rows.empty() || rows.front() != "index,label,path,suffix")
    raise(ErrorCode::InvalidArgument, "labels.csv lacks its header");
  rows.erase(rows.begin());
  if (rows.size() != out.index.record_count)
    raise(ErrorCode::InvalidArgument, "labels.csv has " + std::to_string(rows.size()) + " rows, expected " +
                                          std::to_string(out.index.record_count));

  std::map<std::string, int> label_of;
  for (std::size_t c = 0; c < classes.size(); ++c) label_of[classes[c]] = static_cast<int>(c);
  std::size_t row = 0;
  for (const auto& b : out.index.batches) {
    const auto bytes = util::read_file(dir / b.file);
    Batch batch;
    batch.data = npy::read_npy(std::span<const std::byte>(reinterpret_cast<const std::byte*>(bytes.data()), bytes.size()));
    if (batch.data.shape() != b.shape) raise(ErrorCode::InvalidArgument, b.file + " does not match the export index");
    batch.classes = classes;
    for (std::size_t i = 0; i < b.count; ++i, ++row) {
      const auto f = csv_split(rows[row]);
      if (f.size() != 4 || f[0] != std::to_string(row) || !label_of.count(f[1]))
        raise(ErrorCode::InvalidArgument, "labels.csv row " + std::to_string(row) + " is malformed");
      batch.labels.push_back(label_of[f[1]]);
      batch.meta.push_back({f[3], fs::path(f[2])});
    }
    out.batches.push_back(std::move(batch));
  }
  return out;
}

}  // namespace cryocurate::dataset
