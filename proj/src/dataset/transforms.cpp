#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numeric>

#include "cryocurate/dataset.hpp"
#include "cryocurate/error.hpp"
#include "cryocurate/kernels.hpp"

namespace cryocurate::dataset {
namespace {

struct Grid {
  std::vector<std::size_t> shape;
  std::vector<double> values;
};

Grid to_grid(const ImageArray& image) { return {image.shape(), image.to_double()}; }

ImageArray to_float32(const Grid& g) {
  ImageArray out(g.shape, DType::Float32);
  kernels::narrow(g.values, out.mutable_values<float>());
  return out;
}

// Splits the shape around `axis` into (outer, length, inner).
struct AxisView {
  std::size_t outer = 1, length = 1, inner = 1;
};

AxisView view_of(const std::vector<std::size_t>& shape, std::size_t axis) {
  AxisView v;
  for (std::size_t k = 0; k < axis; ++k) v.outer *= shape[k];
  v.length = shape[axis];
  for (std::size_t k = axis + 1; k < shape.size(); ++k) v.inner *= shape[k];
  return v;
}

std::size_t reflect(long long index, std::size_t n) {
  const long long period = 2 * static_cast<long long>(n);
  long long m = index % period;
  if (m < 0) m += period;
  return static_cast<std::size_t>(m < static_cast<long long>(n) ? m : period - 1 - m);
}

void blur_axis(Grid& g, std::size_t axis, const std::vector<double>& weights) {
  const auto v = view_of(g.shape, axis);
  if (v.length == 0) return;
  const long long radius = static_cast<long long>(weights.size() / 2);
  std::vector<double> padded(v.length + weights.size() - 1), line(v.length);
  for (std::size_t o = 0; o < v.outer; ++o) {
    for (std::size_t i = 0; i < v.inner; ++i) {
      const std::size_t base = o * v.length * v.inner + i;
      for (std::size_t p = 0; p < padded.size(); ++p)
        padded[p] = g.values[base + reflect(static_cast<long long>(p) - radius, v.length) * v.inner];
      kernels::correlate(padded, weights, line);
      for (std::size_t k = 0; k < v.length; ++k) g.values[base + k * v.inner] = line[k];
    }
  }
}

void resample_axis(Grid& g, std::size_t axis, std::size_t target) {
  const auto v = view_of(g.shape, axis);
  if (v.length == target) return;
  std::vector<std::size_t> shape = g.shape;
  shape[axis] = target;
  std::vector<double> out(v.outer * target * v.inner);
  const double n = static_cast<double>(v.length), m = static_cast<double>(target);
  for (std::size_t j = 0; j < target; ++j) {
    double src = (static_cast<double>(j) + 0.5) * n / m - 0.5;
    src = std::clamp(src, 0.0, n - 1.0);
    const auto i0 = static_cast<std::size_t>(src);
    const std::size_t i1 = std::min(i0 + 1, v.length - 1);
    const double t = src - static_cast<double>(i0);
    for (std::size_t o = 0; o < v.outer; ++o) {
      const double* row = g.values.data() + o * v.length * v.inner;
      double* dst = out.data() + o * target * v.inner + j * v.inner;
      for (std::size_t i = 0; i < v.inner; ++i) {
        const double a = row[i0 * v.inner + i], b = row[i1 * v.inner + i];
        dst[i] = a + t * (b - a);
      }
    }
  }
  g.shape = std::move(shape);
  g.values = std::move(out);
}

void check_target(const ImageArray& image, const std::vector<std::size_t>& target, const char* what) {
  if (target.empty() || target.size() > image.rank())
    raise(ErrorCode::InvalidTransform, std::string(what) + " target " + shape_to_string(target) +
                                           " does not fit an image of shape " + shape_to_string(image.shape()));
  for (auto d : target)
    if (d == 0) raise(ErrorCode::InvalidTransform, std::string(what) + " target dimensions must be at least 1");
}

std::string format_number(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string format_shape(const std::vector<std::size_t>& shape) {
  std::string out;
  for (std::size_t k = 0; k < shape.size(); ++k) out += (k ? "x" : "") + std::to_string(shape[k]);
  return out;
}

double parse_number(std::string_view s, std::string_view step) {
  double v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(v))
    raise(ErrorCode::InvalidTransform, "bad number '" + std::string(s) + "' in " + std::string(step));
  return v;
}

std::vector<std::size_t> parse_shape(std::string_view s, std::string_view step) {
  std::vector<std::size_t> shape;
  std::size_t pos = 0;
  while (true) {
    const auto x = s.find('x', pos);
    const auto part = s.substr(pos, x == std::string_view::npos ? std::string_view::npos : x - pos);
    std::size_t d = 0;
    const auto r = std::from_chars(part.data(), part.data() + part.size(), d);
    if (part.empty() || r.ec != std::errc() || r.ptr != part.data() + part.size())
      raise(ErrorCode::InvalidTransform, "bad shape '" + std::string(s) + "' in " + std::string(step));
    shape.push_back(d);
    if (x == std::string_view::npos) break;
    pos = x + 1;
  }
  return shape;
}

std::string_view strip(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

std::vector<double> gaussian_weights(double sigma, int kernel) {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    raise(ErrorCode::InvalidTransform, "gaussian_blur sigma must be positive");
  if (kernel < 3 || kernel % 2 == 0)
    raise(ErrorCode::InvalidTransform, "gaussian_blur kernel must be odd and at least 3");
  const int r = kernel / 2;
  std::vector<double> w(static_cast<std::size_t>(kernel));
  for (int j = -r; j <= r; ++j) w[static_cast<std::size_t>(j + r)] = std::exp(-0.5 * (j * j) / (sigma * sigma));
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& x : w) x /= total;
  return w;
}

ImageArray normalize_minmax(const ImageArray& image) {
  Grid g = to_grid(image);
  if (g.values.empty()) return to_float32(g);
  const auto mm = kernels::minmax(g.values);
  if (mm.max > mm.min)
    kernels::affine(g.values, mm.min, 1.0 / (mm.max - mm.min), g.values);
  else
    std::fill(g.values.begin(), g.values.end(), 0.0);
  return to_float32(g);
}

ImageArray standardize(const ImageArray& image) {
  Grid g = to_grid(image);
  if (g.values.empty()) return to_float32(g);
  const double n = static_cast<double>(g.values.size());
  const double mean = kernels::sum(g.values) / n;
  const double sd = std::sqrt(kernels::sum_sq_dev(g.values, mean) / n);
  if (sd > 0.0)
    kernels::affine(g.values, mean, 1.0 / sd, g.values);
  else
    std::fill(g.values.begin(), g.values.end(), 0.0);
  return to_float32(g);
}

ImageArray gaussian_blur(const ImageArray& image, double sigma, int kernel) {
  const auto weights = gaussian_weights(sigma, kernel);
  Grid g = to_grid(image);
  for (std::size_t axis = 0; axis < g.shape.size(); ++axis)
    if (g.shape[axis] > 1) blur_axis(g, axis, weights);
  return to_float32(g);
}

ImageArray rescale(const ImageArray& image, const std::vector<std::size_t>& target) {
  check_target(image, target, "rescale");
  Grid g = to_grid(image);
  const std::size_t first = g.shape.size() - target.size();
  for (std::size_t k = 0; k < target.size(); ++k) resample_axis(g, first + k, target[k]);
  return to_float32(g);
}

ImageArray rescale_by(const ImageArray& image, double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor))
    raise(ErrorCode::InvalidTransform, "rescale factor must be positive");
  std::vector<std::size_t> target = image.shape();
  for (auto& d : target)
    if (d > 1) d = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(static_cast<double>(d) * factor)));
  return rescale(image, target);
}

ImageArray pad_to(const ImageArray& image, const std::vector<std::size_t>& target) {
  check_target(image, target, "pad_to");
  const auto& src = image.shape();
  const std::size_t first = src.size() - target.size();
  std::vector<std::size_t> shape = src, before(src.size(), 0);
  for (std::size_t k = 0; k < target.size(); ++k) {
    if (target[k] < src[first + k])
      raise(ErrorCode::InvalidTransform,
            "pad_to " + shape_to_string(target) + " is smaller than image shape " + shape_to_string(src));
    shape[first + k] = target[k];
    before[first + k] = (target[k] - src[first + k]) / 2;
  }
  const auto in = image.to_double();
  Grid g{shape, std::vector<double>(std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>()))};
  std::vector<std::size_t> idx(src.size(), 0);
  for (std::size_t flat = 0; flat < in.size(); ++flat) {
    std::size_t out = 0;
    for (std::size_t k = 0; k < src.size(); ++k) out = out * shape[k] + idx[k] + before[k];
    g.values[out] = in[flat];
    for (std::size_t k = src.size(); k-- > 0;) {
      if (++idx[k] < src[k]) break;
      idx[k] = 0;
    }
  }
  return to_float32(g);
}

// ------------------------------------------------------------ Transform ---

Transform Transform::normalize_minmax() { return {}; }

Transform Transform::standardize() {
  Transform t;
  t.kind = Kind::Standardize;
  return t;
}

Transform Transform::gaussian_blur(double sigma, int kernel) {
  gaussian_weights(sigma, kernel);
  Transform t;
  t.kind = Kind::GaussianBlur;
  t.sigma = sigma;
  t.kernel = kernel;
  return t;
}

Transform Transform::rescale(std::vector<std::size_t> shape) {
  if (shape.empty()) raise(ErrorCode::InvalidTransform, "rescale needs a target shape");
  for (auto d : shape)
    if (d == 0) raise(ErrorCode::InvalidTransform, "rescale target dimensions must be at least 1");
  Transform t;
  t.kind = Kind::Rescale;
  t.shape = std::move(shape);
  return t;
}

Transform Transform::rescale_by(double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor))
    raise(ErrorCode::InvalidTransform, "rescale factor must be positive");
  Transform t;
  t.kind = Kind::Rescale;
  t.factor = factor;
  return t;
}

Transform Transform::pad_to(std::vector<std::size_t> shape) {
  if (shape.empty()) raise(ErrorCode::InvalidTransform, "pad_to needs a shape");
  Transform t;
  t.kind = Kind::PadTo;
  t.shape = std::move(shape);
  return t;
}

ImageArray Transform::apply(const ImageArray& image) const {
  switch (kind) {
    case Kind::NormalizeMinmax:
      return dataset::normalize_minmax(image);
    case Kind::Standardize:
      return dataset::standardize(image);
    case Kind::GaussianBlur:
      return dataset::gaussian_blur(image, sigma, kernel);
    case Kind::Rescale:
      return shape.empty() ? dataset::rescale_by(image, factor) : dataset::rescale(image, shape);
    case Kind::PadTo:
      return dataset::pad_to(image, shape);
  }
  return image;
}

std::string Transform::to_string() const {
  switch (kind) {
    case Kind::NormalizeMinmax:
      return "normalize_minmax";
    case Kind::Standardize:
      return "standardize";
    case Kind::GaussianBlur:
      return "gaussian_blur(" + format_number(sigma) + "," + std::to_string(kernel) + ")";
    case Kind::Rescale:
      return "rescale(" + (shape.empty() ? format_number(factor) : format_shape(shape)) + ")";
    case Kind::PadTo:
      return "pad_to(" + format_shape(shape) + ")";
  }
  return {};
}

TransformSpec TransformSpec::parse(std::string_view text) {
  TransformSpec spec;
  std::vector<std::string_view> parts;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    const char c = i < text.size() ? text[i] : ',';
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (depth < 0) raise(ErrorCode::InvalidTransform, "unbalanced ')' in '" + std::string(text) + "'");
    if (c == ',' && depth == 0) {
      parts.push_back(strip(text.substr(start, i - start)));
      start = i + 1;
    }
  }
  if (depth != 0) raise(ErrorCode::InvalidTransform, "unbalanced '(' in '" + std::string(text) + "'");
  if (parts.size() == 1 && parts[0].empty()) return spec;

  for (const auto step : parts) {
    const auto open = step.find('(');
    const auto name = strip(step.substr(0, open));
    std::string_view args;
    if (open != std::string_view::npos) {
      if (step.back() != ')') raise(ErrorCode::InvalidTransform, "trailing text after ')' in " + std::string(step));
      args = strip(step.substr(open + 1, step.size() - open - 2));
    }
    const bool has_args = open != std::string_view::npos;
    if (name == "normalize_minmax" && !has_args) {
      spec.steps.push_back(Transform::normalize_minmax());
    } else if (name == "standardize" && !has_args) {
      spec.steps.push_back(Transform::standardize());
    } else if (name == "gaussian_blur" && has_args) {
      const auto comma = args.find(',');
      if (comma == std::string_view::npos) raise(ErrorCode::InvalidTransform, "gaussian_blur needs (sigma,kernel)");
      const double sigma = parse_number(strip(args.substr(0, comma)), step);
      const double kernel = parse_number(strip(args.substr(comma + 1)), step);
      if (kernel != std::floor(kernel) || kernel > 1e6)
        raise(ErrorCode::InvalidTransform, "gaussian_blur kernel must be an integer");
      spec.steps.push_back(Transform::gaussian_blur(sigma, static_cast<int>(kernel)));
    } else if (name == "rescale" && has_args) {
      if (args.find('x') != std::string_view::npos)
        spec.steps.push_back(Transform::rescale(parse_shape(args, step)));
      else
        spec.steps.push_back(Transform::rescale_by(parse_number(args, step)));
    } else if (name == "pad_to" && has_args) {
      spec.steps.push_back(Transform::pad_to(parse_shape(args, step)));
    } else {
      raise(ErrorCode::InvalidTransform,
            "unknown transform '" + std::string(step) +
                "' (expected normalize_minmax, standardize, gaussian_blur(s,k), rescale(HxW|f), pad_to(HxW))");
    }
  }
  return spec;
}

std::string TransformSpec::to_string() const {
  std::string out;
  for (std::size_t k = 0; k < steps.size(); ++k) out += (k ? "," : "") + steps[k].to_string();
  return out;
}

ImageArray TransformSpec::apply(const ImageArray& image) const {
  if (steps.empty()) return image;
  ImageArray current = steps.front().apply(image);
  for (std::size_t k = 1; k < steps.size(); ++k) current = steps[k].apply(current);
  return current;
}

}  // namespace cryocurate::dataset
