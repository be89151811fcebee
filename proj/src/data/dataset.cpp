#include "advseg/data/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "advseg/core/rng.hpp"
#include "advseg/data/png_io.hpp"

namespace advseg {

namespace fs = std::filesystem;

std::size_t Dataset::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (samples[i].id == id) return i;
  throw Error(ErrorKind::InvalidInput, "unknown sample id " + id);
}

std::unordered_map<std::string, std::size_t> Dataset::id_index() const {
  std::unordered_map<std::string, std::size_t> out;
  out.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) out.emplace(samples[i].id, i);
  return out;
}

std::uint64_t Dataset::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ULL;
    }
  };
  feed(&class_count, sizeof(class_count));
  for (const auto& s : samples) {
    feed(s.id.data(), s.id.size());
    const int dims[2] = {s.image.height(), s.image.width()};
    feed(dims, sizeof(dims));
    feed(s.image.data(), s.image.size() * sizeof(float));
    const unsigned char has_label = s.label.has_value();
    feed(&has_label, 1);
    if (s.label) feed(s.label->values().data(), s.label->size());
  }
  return h;
}

namespace {

constexpr std::array<std::array<double, 3>, 8> kClassColors = {{
    {0.85, 0.25, 0.25},
    {0.25, 0.75, 0.30},
    {0.30, 0.35, 0.85},
    {0.85, 0.80, 0.20},
    {0.75, 0.30, 0.80},
    {0.25, 0.80, 0.80},
    {0.95, 0.55, 0.15},
    {0.55, 0.55, 0.55},
}};

enum class ShapeKind { Disk, Square, Triangle };

struct Shape {
  ShapeKind kind;
  double cx, cy, r;

  bool contains(double x, double y) const {
    switch (kind) {
      case ShapeKind::Disk:
        return (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r;
      case ShapeKind::Square: {
        const double half = 0.85 * r;
        return std::abs(x - cx) <= half && std::abs(y - cy) <= half;
      }
      case ShapeKind::Triangle: {
        // Upward-pointing isosceles triangle.
        const double ax = cx, ay = cy - r;
        const double bx = cx - 0.95 * r, by = cy + 0.7 * r;
        const double qx = cx + 0.95 * r, qy = cy + 0.7 * r;
        auto edge = [&](double x0, double y0, double x1, double y1) {
          return (x1 - x0) * (y - y0) - (y1 - y0) * (x - x0);
        };
        const double e0 = edge(ax, ay, bx, by);
        const double e1 = edge(bx, by, qx, qy);
        const double e2 = edge(qx, qy, ax, ay);
        return (e0 <= 0 && e1 <= 0 && e2 <= 0) || (e0 >= 0 && e1 >= 0 && e2 >= 0);
      }
    }
    return false;
  }
};

float quantize(double v) {
  v = std::clamp(v, 0.0, 1.0);
  return static_cast<float>(std::lround(v * 255.0)) / 255.0f;
}

Sample generate_one(int index, int height, int width, int class_count, std::uint64_t seed,
                    const ShapesOptions& opt) {
  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(index)));
  char id[32];
  std::snprintf(id, sizeof(id), "%06d", index);

  // Textured background: base colour, two plane waves, per-pixel noise.
  std::array<double, 3> base{};
  for (auto& b : base) b = rng.uniform(0.2, 0.8);
  struct Wave {
    double fx, fy, phase, amp;
  };
  std::array<Wave, 2> waves{};
  for (auto& wv : waves) {
    wv.fx = rng.uniform(-0.5, 0.5);
    wv.fy = rng.uniform(-0.5, 0.5);
    wv.phase = rng.uniform(0.0, 6.283185307179586);
    wv.amp = rng.uniform(0.03, 0.12);
  }

  LabelMap label(height, width, class_count, 0);
  std::vector<std::uint8_t> occupied(static_cast<std::size_t>(height) * width, 0);

  const int shape_count = static_cast<int>(rng.uniform_int(opt.min_shapes, opt.max_shapes));
  const double side = std::min(height, width);
  const auto area_cap = static_cast<std::size_t>(opt.max_shape_area * height * width);
  std::size_t covered = 0;
  std::vector<std::pair<int, std::array<double, 3>>> colors;  // per placed shape

  for (int s = 0; s < shape_count; ++s) {
    const int cls = static_cast<int>(rng.uniform_int(1, class_count - 1));
    const auto kind = static_cast<ShapeKind>((cls - 1) % 3);
    const auto& center = kClassColors[static_cast<std::size_t>(cls - 1) % kClassColors.size()];
    std::array<double, 3> color{};
    for (int c = 0; c < 3; ++c) color[c] = center[c] + opt.color_jitter * rng.normal();

    for (int attempt = 0; attempt < 40; ++attempt) {
      const double r = rng.uniform(opt.min_radius, opt.max_radius) * side;
      Shape shape{kind, rng.uniform(r, std::max(r, width - r)),
                  rng.uniform(r, std::max(r, height - r)), r};
      std::vector<std::size_t> pixels;
      bool clash = false;
      for (int y = 0; y < height && !clash; ++y) {
        for (int x = 0; x < width; ++x) {
          if (!shape.contains(x + 0.5, y + 0.5)) continue;
          // One-pixel margin keeps shapes from touching.
          for (int dy = -1; dy <= 1 && !clash; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
              const int yy = y + dy, xx = x + dx;
              if (yy < 0 || xx < 0 || yy >= height || xx >= width) continue;
              if (occupied[static_cast<std::size_t>(yy) * width + xx]) {
                clash = true;
                break;
              }
            }
          if (clash) break;
          pixels.push_back(static_cast<std::size_t>(y) * width + x);
        }
      }
      if (clash || pixels.empty() || covered + pixels.size() > area_cap) continue;
      for (auto p : pixels) {
        occupied[p] = static_cast<std::uint8_t>(s + 1);
        label.values()[p] = static_cast<std::uint8_t>(cls);
      }
      covered += pixels.size();
      colors.emplace_back(s + 1, color);
      break;
    }
  }

  Image image(height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * width + x;
      std::array<double, 3> px = base;
      double tex = 0.0;
      for (const auto& wv : waves) tex += wv.amp * std::sin(wv.fx * x + wv.fy * y + wv.phase);
      if (occupied[p]) {
        for (const auto& [tag, col] : colors)
          if (tag == occupied[p]) px = col;
        tex *= 0.5;
      }
      for (int c = 0; c < 3; ++c)
        image.at(c, y, x) = quantize(px[c] + tex + opt.pixel_noise * rng.normal());
    }
  }
  return Sample{id, std::move(image), std::move(label)};
}

}  // namespace

Dataset generate_shapes_dataset(int n, int height, int width, int class_count,
                                std::uint64_t seed, const ShapesOptions& options) {
  if (class_count < 2) throw Error(ErrorKind::InvalidConfig, "class count must be >= 2");
  if (class_count > 255) throw Error(ErrorKind::InvalidConfig, "class count must be < 255");
  if (n < 0) throw Error(ErrorKind::InvalidConfig, "sample count must be >= 0");
  if (height < 1 || width < 1) throw Error(ErrorKind::InvalidConfig, "image size must be >= 1");
  Dataset ds;
  ds.class_count = class_count;
  ds.samples.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    ds.samples.push_back(generate_one(i, height, width, class_count, seed, options));
  return ds;
}

Dataset load_folder_dataset(const fs::path& root) {
  const fs::path image_dir = root / "images";
  const fs::path label_dir = root / "labels";
  if (!fs::is_directory(image_dir)) {
    throw Error(ErrorKind::Ingestion, "missing images/ directory under " + root.string());
  }
  std::vector<std::string> stems;
  for (const auto& entry : fs::directory_iterator(image_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png")
      stems.push_back(entry.path().stem().string());
  }
  std::sort(stems.begin(), stems.end());

  Dataset ds;
  int max_label = -1;
  for (const auto& stem : stems) {
    Sample s;
    s.id = stem;
    s.image = read_png_rgb(image_dir / (stem + ".png"));
    const fs::path label_path = label_dir / (stem + ".png");
    if (fs::exists(label_path)) {
      GrayImage g = read_png_gray(label_path);
      if (g.height != s.image.height() || g.width != s.image.width()) {
        throw Error(ErrorKind::Ingestion, "label size mismatch for sample '" + stem + "'");
      }
      for (auto v : g.pixels)
        if (v != kIgnoreLabel) max_label = std::max<int>(max_label, v);
      s.label = LabelMap(g.height, g.width, 0, std::move(g.pixels));
    }
    ds.samples.push_back(std::move(s));
  }

  int class_count = max_label + 1;
  const fs::path classes_file = root / "classes.txt";
  if (fs::exists(classes_file)) {
    std::ifstream in(classes_file);
    if (!(in >> class_count) || class_count < 1) {
      throw Error(ErrorKind::Ingestion, "malformed " + classes_file.string());
    }
  }
  ds.class_count = class_count;
  for (auto& s : ds.samples) {
    if (!s.label) continue;
    std::vector<std::uint8_t> v(s.label->values().begin(), s.label->values().end());
    s.label = LabelMap(s.label->height(), s.label->width(), class_count, std::move(v));
    try {
      s.label->validate();
    } catch (const Error& e) {
      throw Error(ErrorKind::Ingestion, "sample '" + s.id + "': " + e.what());
    }
  }
  return ds;
}

void save_folder_dataset(const Dataset& dataset, const fs::path& root) {
  fs::create_directories(root / "images");
  fs::create_directories(root / "labels");
  for (const auto& s : dataset.samples) {
    write_png_rgb(root / "images" / (s.id + ".png"), s.image);
    if (s.label) {
      GrayImage g{s.label->height(), s.label->width(),
                  std::vector<std::uint8_t>(s.label->values().begin(), s.label->values().end())};
      write_png_gray(root / "labels" / (s.id + ".png"), g);
    }
  }
  std::ofstream out(root / "classes.txt");
  out << dataset.class_count << "\n";
  if (!out) throw Error(ErrorKind::Io, "cannot write classes.txt under " + root.string());
}

}  // namespace advseg
