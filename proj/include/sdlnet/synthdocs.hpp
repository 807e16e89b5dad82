#pragma once

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "sdlnet/geometry.hpp"
#include "sdlnet/image.hpp"
#include "sdlnet/quad_json.hpp"
#include "sdlnet/rng.hpp"

namespace sdlnet {

// ---------------------------------------------------------------------------
// Styles: five synthetic card families standing in for the five document
// classes. Aspect ratios and palettes are deliberately far apart so the
// holdout studies measure generalization over genuinely distinct classes.
// ---------------------------------------------------------------------------

using Rgb = std::array<std::uint8_t, 3>;

struct DocClassStyle {
  std::string class_id;
  int card_w = 0, card_h = 0;  // native render size; aspect = w/h exactly
  Rgb base{}, header{}, accent{};
  int layout = 0;  // 0 photo-left, 1 photo-right, 2 emblem+mrz, 3 two-column

  double aspect_ratio() const { return (double)card_w / card_h; }
};

inline const std::vector<DocClassStyle>& default_styles() {
  static const std::vector<DocClassStyle> styles = {
      {"ID", 160, 100, {70, 110, 190}, {40, 70, 140}, {25, 30, 45}, 0},
      {"DL", 145, 100, {230, 150, 170}, {200, 90, 120}, {60, 25, 35}, 1},
      {"P", 72, 100, {120, 40, 60}, {90, 25, 45}, {210, 180, 140}, 2},
      {"RP", 130, 100, {90, 170, 110}, {50, 120, 75}, {20, 45, 30}, 0},
      {"VRC", 210, 100, {235, 195, 120}, {190, 145, 70}, {70, 50, 20}, 3},
  };
  return styles;
}

inline const DocClassStyle& style_by_id(const std::string& class_id) {
  for (const auto& s : default_styles())
    if (s.class_id == class_id) return s;
  throw std::invalid_argument("unknown document class \"" + class_id + "\"");
}

// class mix used by the generator, matching the source data proportions
inline const std::vector<std::pair<std::string, double>>& default_class_mix() {
  static const std::vector<std::pair<std::string, double>> mix = {
      {"ID", 0.21}, {"DL", 0.19}, {"P", 0.25}, {"RP", 0.14}, {"VRC", 0.21}};
  return mix;
}

// ---------------------------------------------------------------------------
// Card rendering
// ---------------------------------------------------------------------------

namespace synth_detail {

inline void fill_rect(Image& img, int x0, int y0, int x1, int y1, Rgb c) {
  x0 = std::max(0, x0);
  y0 = std::max(0, y0);
  x1 = std::min(img.width, x1);
  y1 = std::min(img.height, y1);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x)
      for (int ch = 0; ch < 3; ++ch) img.at(x, y, ch) = c[(std::size_t)ch];
}

inline Rgb shade(Rgb c, int delta) {
  Rgb out;
  for (int i = 0; i < 3; ++i)
    out[(std::size_t)i] = (std::uint8_t)std::clamp((int)c[(std::size_t)i] + delta, 0, 255);
  return out;
}

}  // namespace synth_detail

// Deterministic card image: base fill with a vertical shade ramp, header
// band, layout-specific blocks, and seeded text-like bars.
inline Image render_document(const DocClassStyle& style, std::uint64_t seed) {
  using synth_detail::fill_rect;
  using synth_detail::shade;
  const int w = style.card_w, h = style.card_h;
  Image img(w, h, 3);
  Rng rng(seed, 0xCA4D);

  for (int y = 0; y < h; ++y) {
    Rgb row = shade(style.base, (int)(10.0 * y / h) - 5);
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = row[(std::size_t)c];
  }
  const int band = std::max(6, (int)(0.18 * h));
  fill_rect(img, 0, 0, w, band, style.header);

  auto text_bars = [&](int x0, int x1, int y0, int y1, int rows) {
    const int gap = std::max(3, (y1 - y0) / std::max(1, rows));
    for (int r = 0; r < rows; ++r) {
      const int y = y0 + r * gap;
      if (y + 2 > y1) break;
      const int len = (int)((x1 - x0) * rng.uniform(0.45, 0.95));
      fill_rect(img, x0, y, x0 + len, y + 2, style.accent);
    }
  };

  switch (style.layout) {
    case 0: {  // photo on the left, bars right
      const int px0 = (int)(0.05 * w), px1 = (int)(0.28 * w);
      const int py0 = band + (int)(0.08 * h), py1 = (int)(0.9 * h);
      fill_rect(img, px0, py0, px1, py1, shade(style.base, -70));
      for (int i = 0; i < 30; ++i)  // face-like speckle
        fill_rect(img, px0 + rng.uniform_int(std::max(1, px1 - px0 - 2)),
                  py0 + rng.uniform_int(std::max(1, py1 - py0 - 2)), 0, 0, {0, 0, 0});
      text_bars((int)(0.34 * w), (int)(0.95 * w), py0, py1, 5 + rng.uniform_int(3));
      break;
    }
    case 1: {  // photo on the right
      const int px0 = (int)(0.72 * w), px1 = (int)(0.95 * w);
      const int py0 = band + (int)(0.08 * h), py1 = (int)(0.9 * h);
      fill_rect(img, px0, py0, px1, py1, shade(style.base, -70));
      text_bars((int)(0.05 * w), (int)(0.66 * w), py0, py1, 5 + rng.uniform_int(3));
      break;
    }
    case 2: {  // centered emblem, MRZ-like double bar at the bottom
      const int ew = (int)(w * rng.uniform(0.34, 0.46));
      const int ey = (int)(h * rng.uniform(0.26, 0.34));
      fill_rect(img, (w - ew) / 2, ey, (w + ew) / 2, ey + (int)(0.32 * h),
                shade(style.header, 25));
      const int mrz0 = (int)(w * rng.uniform(0.05, 0.10));
      fill_rect(img, mrz0, (int)(0.78 * h), w - mrz0, (int)(0.81 * h), style.accent);
      fill_rect(img, mrz0, (int)(0.85 * h), w - mrz0, (int)(0.88 * h), style.accent);
      break;
    }
    default: {  // two text columns
      const int mid = w / 2;
      text_bars((int)(0.05 * w), mid - 4, band + 4, (int)(0.92 * h), 6 + rng.uniform_int(3));
      text_bars(mid + 4, (int)(0.95 * w), band + 4, (int)(0.92 * h), 6 + rng.uniform_int(3));
      break;
    }
  }
  // border frame
  Rgb edge = shade(style.header, -50);
  fill_rect(img, 0, 0, w, 2, edge);
  fill_rect(img, 0, h - 2, w, h, edge);
  fill_rect(img, 0, 0, 2, h, edge);
  fill_rect(img, w - 2, 0, w, h, edge);
  return img;
}

// ---------------------------------------------------------------------------
// Scene composition
// ---------------------------------------------------------------------------

struct Sample {
  Image image;
  Quadrangle label;  // pixel coordinates in image space, role order
  std::string class_id;
  std::uint64_t seed = 0;
};

struct CompositeResult {
  Sample sample;
  Homography card_to_scene;  // maps card pixel coords onto the scene
};

namespace synth_detail {

inline Image procedural_background(int size, Rng& rng) {
  Image bg(size, size, 3);
  Rgb top{(std::uint8_t)rng.uniform_int(140), (std::uint8_t)rng.uniform_int(140),
          (std::uint8_t)rng.uniform_int(140)};
  Rgb bot{(std::uint8_t)rng.uniform_int(140), (std::uint8_t)rng.uniform_int(140),
          (std::uint8_t)rng.uniform_int(140)};
  for (int y = 0; y < size; ++y) {
    const double t = (double)y / size;
    for (int x = 0; x < size; ++x)
      for (int c = 0; c < 3; ++c)
        bg.at(x, y, c) =
            (std::uint8_t)((1 - t) * top[(std::size_t)c] + t * bot[(std::size_t)c]);
  }
  const int clutter = 2 + rng.uniform_int(4);
  for (int i = 0; i < clutter; ++i) {
    const int cw = 4 + rng.uniform_int(size / 2);
    const int ch = 4 + rng.uniform_int(size / 2);
    const int cx = rng.uniform_int(std::max(1, size - cw));
    const int cy = rng.uniform_int(std::max(1, size - ch));
    Rgb col{(std::uint8_t)rng.uniform_int(160), (std::uint8_t)rng.uniform_int(160),
            (std::uint8_t)rng.uniform_int(160)};
    fill_rect(bg, cx, cy, cx + cw, cy + ch, col);
  }
  for (auto& p : bg.px)
    p = (std::uint8_t)std::clamp((int)p + (int)rng.uniform(-6.0, 6.0), 0, 255);
  return bg;
}

}  // namespace synth_detail

// Place a card onto a procedural background with a known homography. The
// label is the exact image of the card corners; all corners stay in frame
// (resampled up to 10 times, then rejected).
inline CompositeResult composite_scene(const Image& card, int scene_size,
                                       std::uint64_t background_seed,
                                       double perspective_magnitude) {
  if (perspective_magnitude < 0 || perspective_magnitude > 0.25)
    throw std::invalid_argument("composite_scene: perspective magnitude must be in [0, 0.25]");
  Rng rng(background_seed, 0x5CE7E);
  Image bg = synth_detail::procedural_background(scene_size, rng);

  const Quadrangle card_rect = rect_quad(0, 0, card.width - 1, card.height - 1);
  const double margin = 2.0;

  Quadrangle placed;
  bool ok = false;
  for (int attempt = 0; attempt < 10 && !ok; ++attempt) {
    const double frac = rng.uniform(0.55, 0.82);
    const double tw = card.width >= card.height ? frac * scene_size
                                                : frac * scene_size * card.width / card.height;
    const double th = tw * card.height / card.width;
    if (tw > scene_size - 2 * margin || th > scene_size - 2 * margin) continue;
    const double jit = perspective_magnitude * std::min(tw, th);
    const double cx = rng.uniform(margin + jit + tw / 2, scene_size - margin - jit - tw / 2);
    const double cy = rng.uniform(margin + jit + th / 2, scene_size - margin - jit - th / 2);
    placed = make_quad({cx - tw / 2, cy - th / 2}, {cx + tw / 2, cy - th / 2},
                       {cx - tw / 2, cy + th / 2}, {cx + tw / 2, cy + th / 2});
    ok = true;
    for (int i = 0; i < 4 && ok; ++i) {
      placed[i].x += rng.uniform(-jit, jit);
      placed[i].y += rng.uniform(-jit, jit);
      if (placed[i].x < margin || placed[i].x > scene_size - 1 - margin ||
          placed[i].y < margin || placed[i].y > scene_size - 1 - margin)
        ok = false;
    }
    if (ok && !(quad_is_simple(placed) && quad_is_role_consistent(placed))) ok = false;
  }
  if (!ok)
    throw std::runtime_error("composite_scene: could not place the card inside the frame");

  const Homography h = estimate_homography_dlt(card_rect, placed);
  const Homography hinv = h.inverse();
  // 3x3 supersampled inverse warp: the card shrinks several times over, so
  // point sampling would alias the fine print into shimmer
  double vals[4], acc[3];
  for (int y = 0; y < scene_size; ++y)
    for (int x = 0; x < scene_size; ++x) {
      const Point2 center = hinv.apply({(double)x, (double)y});
      if (center.x < -1 || center.y < -1 || center.x > card.width || center.y > card.height)
        continue;
      int covered = 0;
      acc[0] = acc[1] = acc[2] = 0;
      for (int sy = -1; sy <= 1; ++sy)
        for (int sx = -1; sx <= 1; ++sx) {
          const Point2 s = hinv.apply({x + sx / 3.0, y + sy / 3.0});
          if (s.x < 0 || s.y < 0 || s.x > card.width - 1 || s.y > card.height - 1) continue;
          sample_bilinear(card, s.x, s.y, vals);
          for (int c = 0; c < 3; ++c) acc[c] += vals[c];
          ++covered;
        }
      if (covered < 5) continue;  // mostly outside: keep the background
      for (int c = 0; c < 3; ++c)
        bg.at(x, y, c) = (std::uint8_t)std::min(255.0, std::max(0.0, acc[c] / covered + 0.5));
    }

  CompositeResult out;
  out.sample.image = std::move(bg);
  out.sample.label = placed;
  out.card_to_scene = h;
  return out;
}

// ---------------------------------------------------------------------------
// Augmentation
// ---------------------------------------------------------------------------

struct AugmentParams {
  double op_probability = 0.5;
  double crop_min_frac = 0.70, crop_max_frac = 0.95;
  double resize_min = 0.85, resize_max = 1.15;
  double rotation_max_rad = 0.436;  // ~25 degrees
  double perspective_frac = 0.06;
  double illum_min = 0.6, illum_max = 1.4;
  double noise_max = 8.0;  // of 255
};

// Apply one geometric map to pixels and label alike.
inline Sample transform_sample(const Sample& s, const Homography& h) {
  Sample out;
  out.image = warp_image(s.image, h, s.image.width, s.image.height);
  out.label = apply(h, s.label);
  out.class_id = s.class_id;
  out.seed = s.seed;
  return out;
}

namespace synth_detail {

inline bool corners_in_frame(const Quadrangle& q, int size, double margin = 0.5) {
  for (int i = 0; i < 4; ++i)
    if (q[i].x < margin || q[i].x > size - 1 - margin || q[i].y < margin ||
        q[i].y > size - 1 - margin)
      return false;
  return true;
}

}  // namespace synth_detail

// The six augmentations, each applied independently with probability 0.5 in
// a fixed order: crop, resize, rotation, perspective, illumination, noise.
// Geometric ops transform the label through the exact same homography as the
// pixels; parameters are resampled (up to 10 times) until all corners stay
// in frame, otherwise the op is skipped.
inline Sample augment(const Sample& input, Rng& rng, const AugmentParams& params = {},
                      std::vector<Homography>* applied_out = nullptr) {
  Sample s = input;
  const int size = s.image.width;

  auto try_geometric = [&](auto&& make_h) {
    for (int attempt = 0; attempt < 10; ++attempt) {
      Homography h = make_h();
      Quadrangle moved = apply(h, s.label);
      if (synth_detail::corners_in_frame(moved, size) && quad_is_simple(moved) &&
          quad_is_role_consistent(moved)) {
        s = transform_sample(s, h);
        if (applied_out) applied_out->push_back(h);
        return;
      }
    }
  };

  if (rng.bernoulli(params.op_probability)) {  // crop
    try_geometric([&] {
      const double f = rng.uniform(params.crop_min_frac, params.crop_max_frac);
      const double cw = f * size;
      const double ox = rng.uniform(0.0, size - cw);
      const double oy = rng.uniform(0.0, size - cw);
      return Homography::scale(size / cw, size / cw)
          .compose(Homography::translation(-ox, -oy));
    });
  }
  if (rng.bernoulli(params.op_probability)) {  // resize about the center
    try_geometric([&] {
      const double f = rng.uniform(params.resize_min, params.resize_max);
      const double c = (size - 1) / 2.0;
      return Homography::translation(c, c)
          .compose(Homography::scale(f, f))
          .compose(Homography::translation(-c, -c));
    });
  }
  if (rng.bernoulli(params.op_probability)) {  // rotation
    try_geometric([&] {
      const double a = rng.uniform(-params.rotation_max_rad, params.rotation_max_rad);
      return Homography::rotation_about((size - 1) / 2.0, (size - 1) / 2.0, a);
    });
  }
  if (rng.bernoulli(params.op_probability)) {  // perspective
    try_geometric([&] {
      const Quadrangle canvas = rect_quad(0, 0, size - 1, size - 1);
      Quadrangle jittered = canvas;
      const double j = params.perspective_frac * size;
      for (int i = 0; i < 4; ++i) {
        jittered[i].x += rng.uniform(-j, j);
        jittered[i].y += rng.uniform(-j, j);
      }
      return estimate_homography_dlt(canvas, jittered);
    });
  }
  if (rng.bernoulli(params.op_probability)) {  // global illumination scale
    const double k = rng.uniform(params.illum_min, params.illum_max);
    for (auto& p : s.image.px) p = (std::uint8_t)std::clamp((int)std::lround(p * k), 0, 255);
  }
  if (rng.bernoulli(params.op_probability)) {  // gaussian noise
    const double sigma = rng.uniform(0.0, params.noise_max);
    for (auto& p : s.image.px)
      p = (std::uint8_t)std::clamp((int)std::lround(p + rng.normal(0.0, sigma)), 0, 255);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Dataset generation and on-disk format
// ---------------------------------------------------------------------------

struct DatasetSplit {
  std::vector<Sample> train, validation, test;
};

struct GenerationConfig {
  int n = 1000;
  int size = 64;
  std::uint64_t seed = 0;
  double magnitude = 0.18;  // max perspective magnitude for placement
  std::vector<std::pair<std::string, double>> mix = default_class_mix();
};

namespace synth_detail {

// largest-remainder apportionment of n over the mix proportions
inline std::vector<int> apportion(const std::vector<std::pair<std::string, double>>& mix, int n) {
  double total = 0;
  for (auto& [id, p] : mix) total += p;
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument("class mix proportions must sum to 1");
  std::vector<int> counts(mix.size());
  std::vector<std::pair<double, std::size_t>> rema;
  int used = 0;
  for (std::size_t i = 0; i < mix.size(); ++i) {
    const double exact = mix[i].second * n;
    counts[i] = (int)exact;
    used += counts[i];
    rema.push_back({exact - counts[i], i});
  }
  std::stable_sort(rema.begin(), rema.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int k = 0; k < n - used; ++k) counts[rema[(std::size_t)k].second] += 1;
  return counts;
}

struct SplitCounts {
  int train, validation, test;
};

inline SplitCounts split_counts(int n_class) {
  SplitCounts c{};
  c.train = (int)std::lround(0.70 * n_class);
  c.validation = (int)std::lround(0.15 * n_class);
  c.test = n_class - c.train - c.validation;
  return c;
}

}  // namespace synth_detail

inline Sample generate_sample(const DocClassStyle& style, std::uint64_t sample_seed, int size,
                              double magnitude) {
  Image card = render_document(style, sample_seed);
  Rng mag_rng(sample_seed, 0x3A6);
  const double mag = magnitude * mag_rng.uniform(0.25, 1.0);
  auto comp = composite_scene(card, size, Rng::hash_combine(sample_seed, 0xB6), mag);
  comp.sample.class_id = style.class_id;
  comp.sample.seed = sample_seed;
  return std::move(comp.sample);
}

// Deterministic per-class 70/15/15 splits. Every sample is a pure function
// of its sample seed, which is derived from (dataset seed, class, index);
// indices are assigned train -> validation -> test.
inline std::map<std::string, DatasetSplit> generate_dataset(const GenerationConfig& cfg) {
  auto counts = synth_detail::apportion(cfg.mix, cfg.n);
  std::map<std::string, DatasetSplit> out;
  for (std::size_t ci = 0; ci < cfg.mix.size(); ++ci) {
    const auto& class_id = cfg.mix[ci].first;
    const auto& style = style_by_id(class_id);
    const int n_class = counts[ci];
    auto sc = synth_detail::split_counts(n_class);
    if (sc.train < 1 || sc.validation < 1 || sc.test < 1)
      throw std::invalid_argument("generate_dataset: n=" + std::to_string(cfg.n) +
                                  " leaves class " + class_id + " with an empty split");
    DatasetSplit split;
    for (int i = 0; i < n_class; ++i) {
      const std::uint64_t sample_seed = Rng::hash_combine(cfg.seed, ci, (std::uint64_t)i);
      Sample s = generate_sample(style, sample_seed, cfg.size, cfg.magnitude);
      if (i < sc.train)
        split.train.push_back(std::move(s));
      else if (i < sc.train + sc.validation)
        split.validation.push_back(std::move(s));
      else
        split.test.push_back(std::move(s));
    }
    out.emplace(class_id, std::move(split));
  }
  return out;
}

// Directory layout: <root>/<class>/<split>/NNNNNN.png plus one labels.jsonl
// per split and a manifest.json at the root.
inline void save_dataset(const std::map<std::string, DatasetSplit>& data, const std::string& root,
                         const GenerationConfig& cfg) {
  namespace fs = std::filesystem;
  nlohmann::json manifest;
  manifest["format_version"] = 1;
  manifest["n"] = cfg.n;
  manifest["size"] = cfg.size;
  manifest["seed"] = std::to_string(cfg.seed);
  manifest["magnitude"] = cfg.magnitude;
  for (auto& [id, p] : cfg.mix) manifest["mix"][id] = p;

  for (const auto& [class_id, split] : data) {
    const std::array<std::pair<const char*, const std::vector<Sample>*>, 3> parts = {
        {{"train", &split.train}, {"validation", &split.validation}, {"test", &split.test}}};
    for (auto& [part_name, samples] : parts) {
      const fs::path dir = fs::path(root) / class_id / part_name;
      fs::create_directories(dir);
      std::ofstream labels(dir / "labels.jsonl");
      if (!labels) throw std::runtime_error("save_dataset: cannot write " + dir.string());
      for (std::size_t i = 0; i < samples->size(); ++i) {
        char name[16];
        std::snprintf(name, sizeof name, "%06zu.png", i);
        save_png((dir / name).string(), (*samples)[i].image);
        nlohmann::json rec;
        rec["path"] = class_id + std::string("/") + part_name + "/" + name;
        rec["class"] = class_id;
        rec["seed"] = std::to_string((*samples)[i].seed);
        rec["quad"] = quad_to_json((*samples)[i].label);
        labels << rec.dump() << "\n";
      }
      manifest["counts"][class_id][part_name] = samples->size();
    }
  }
  std::ofstream mf(fs::path(root) / "manifest.json");
  if (!mf) throw std::runtime_error("save_dataset: cannot write manifest in " + root);
  mf << manifest.dump(2) << "\n";
}

inline std::map<std::string, DatasetSplit> load_dataset(const std::string& root) {
  namespace fs = std::filesystem;
  std::ifstream mf(fs::path(root) / "manifest.json");
  if (!mf) throw std::runtime_error("load_dataset: missing manifest.json in " + root);
  nlohmann::json manifest = nlohmann::json::parse(mf);
  if (manifest.value("format_version", 0) != 1)
    throw std::runtime_error("load_dataset: unsupported dataset format version");
  const int size = manifest.at("size").get<int>();

  std::map<std::string, DatasetSplit> out;
  for (auto& [class_id, class_counts] : manifest.at("counts").items()) {
    DatasetSplit split;
    const std::array<std::pair<const char*, std::vector<Sample>*>, 3> parts = {
        {{"train", &split.train}, {"validation", &split.validation}, {"test", &split.test}}};
    for (auto& [part_name, samples] : parts) {
      const fs::path dir = fs::path(root) / class_id / part_name;
      const fs::path labels_path = dir / "labels.jsonl";
      std::ifstream labels(labels_path);
      if (!labels) throw std::runtime_error("load_dataset: missing " + labels_path.string());
      std::string line;
      int line_no = 0;
      while (std::getline(labels, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = labels_path.string() + ":" + std::to_string(line_no);
        nlohmann::json rec;
        try {
          rec = nlohmann::json::parse(line);
        } catch (const std::exception& e) {
          throw std::runtime_error(where + ": malformed label record: " + e.what());
        }
        Sample s;
        s.class_id = rec.at("class").get<std::string>();
        s.seed = std::stoull(rec.at("seed").get<std::string>());
        s.label = quad_from_json(rec.at("quad"));
        for (int i = 0; i < 4; ++i)
          if (s.label[i].x < 0 || s.label[i].y < 0 || s.label[i].x > size - 1 ||
              s.label[i].y > size - 1)
            throw std::runtime_error(where + ": corner " + corner_name(i) +
                                     " out of image bounds");
        const fs::path img_path = fs::path(root) / rec.at("path").get<std::string>();
        if (!fs::exists(img_path))
          throw std::runtime_error(where + ": missing image " + img_path.string());
        s.image = load_png(img_path.string());
        if (s.image.width != size || s.image.height != size)
          throw std::runtime_error(where + ": image size does not match manifest");
        samples->push_back(std::move(s));
      }
      const std::size_t expected = class_counts.at(part_name).get<std::size_t>();
      if (samples->size() != expected)
        throw std::runtime_error("load_dataset: " + std::string(class_id) + "/" + part_name +
                                 " has " + std::to_string(samples->size()) + " records, manifest says " +
                                 std::to_string(expected));
    }
    out.emplace(class_id, std::move(split));
  }
  return out;
}

}  // namespace sdlnet
