#pragma once

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "sdlnet/training.hpp"

namespace sdlnet {

struct ExperimentResult {
  std::string id;
  std::string pretrain_classes;  // "+"-joined, or "scratch" / "all"
  std::string split;             // "generic", "0".."3", or "-" for pretrain rows
  int finetune_fraction = 0;     // 0 = no fine-tuning (pretrain evaluation row)
  EvalMetrics metrics;
  double train_seconds = 0;
  int epochs = 0;
};

namespace report_detail {

// shortest round-trip decimal; deterministic across runs
inline std::string fmt(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string fmt2(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace report_detail

inline void write_results_csv(std::vector<ExperimentResult> rows, const std::string& path) {
  std::sort(rows.begin(), rows.end(),
            [](const ExperimentResult& a, const ExperimentResult& b) { return a.id < b.id; });
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_results_csv: cannot open " + path);
  f << "experiment_id,pretrain_classes,split,finetune_fraction,iou_mean,iou_std,iou_median,"
       "score_mean,score_min_mean,invalid_count,train_seconds,epochs\n";
  using report_detail::fmt;
  for (const auto& r : rows) {
    f << r.id << ',' << r.pretrain_classes << ',' << r.split << ',' << r.finetune_fraction << ','
      << fmt(r.metrics.iou_mean) << ',' << fmt(r.metrics.iou_std) << ','
      << fmt(r.metrics.iou_median) << ',' << fmt(r.metrics.score_mean) << ','
      << fmt(r.metrics.score_min_mean) << ',' << r.metrics.invalid_count << ','
      << fmt(r.train_seconds) << ',' << r.epochs << "\n";
  }
  if (!f) throw std::runtime_error("write_results_csv: write failed for " + path);
}

// ---------------------------------------------------------------------------
// Small deterministic SVG plots
// ---------------------------------------------------------------------------

namespace svg {

struct Canvas {
  std::string body;
  int width, height;

  Canvas(int w, int h) : width(w), height(h) {}

  void line(double x1, double y1, double x2, double y2, const char* color, double sw = 1.0) {
    using report_detail::fmt2;
    body += "<line x1=\"" + fmt2(x1) + "\" y1=\"" + fmt2(y1) + "\" x2=\"" + fmt2(x2) +
            "\" y2=\"" + fmt2(y2) + "\" stroke=\"" + color + "\" stroke-width=\"" + fmt2(sw) +
            "\"/>\n";
  }
  void rect(double x, double y, double w, double h, const char* fill) {
    using report_detail::fmt2;
    body += "<rect x=\"" + fmt2(x) + "\" y=\"" + fmt2(y) + "\" width=\"" + fmt2(w) +
            "\" height=\"" + fmt2(h) + "\" fill=\"" + fill + "\"/>\n";
  }
  void circle(double x, double y, double r, const char* fill) {
    using report_detail::fmt2;
    body += "<circle cx=\"" + fmt2(x) + "\" cy=\"" + fmt2(y) + "\" r=\"" + fmt2(r) +
            "\" fill=\"" + fill + "\"/>\n";
  }
  void polyline(const std::vector<std::pair<double, double>>& pts, const char* color) {
    using report_detail::fmt2;
    body += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"";
    for (auto& [x, y] : pts) body += fmt2(x) + "," + fmt2(y) + " ";
    body += "\"/>\n";
  }
  void text(double x, double y, const std::string& s, int size = 11,
            const char* anchor = "middle") {
    using report_detail::fmt2;
    body += "<text x=\"" + fmt2(x) + "\" y=\"" + fmt2(y) + "\" font-family=\"sans-serif\" font-size=\"" +
            std::to_string(size) + "\" text-anchor=\"" + anchor + "\">" + s + "</text>\n";
  }

  void save(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("svg: cannot open " + path);
    f << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" "
         "width=\""
      << width << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " " << height
      << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << body << "</svg>\n";
  }
};

inline const char* series_color(std::size_t i) {
  static const char* colors[] = {"#4878b0", "#ee854a", "#6acc64", "#d65f5f",
                                 "#956cb4", "#8c613c", "#dc7ec0"};
  return colors[i % 7];
}

}  // namespace svg

// Median IoU per (holdout class x {generic, split 0..3}) as grouped bars.
inline void write_split_iou_svg(const std::vector<ExperimentResult>& rows,
                                const std::string& path) {
  std::map<std::string, std::map<std::string, double>> by_class;  // class -> split -> median
  for (const auto& r : rows) {
    auto pos = r.id.find("splits-");
    if (pos != 0) continue;
    auto rest = r.id.substr(7);
    auto dash = rest.find('-');
    by_class[rest.substr(0, dash)][r.split] = r.metrics.iou_median;
  }
  svg::Canvas c(680, 400);
  const double x0 = 60, y0 = 340, plot_w = 580, plot_h = 280;
  c.line(x0, y0, x0 + plot_w, y0, "#333");
  c.line(x0, y0, x0, y0 - plot_h, "#333");
  for (int t = 0; t <= 5; ++t) {
    const double v = t / 5.0;
    c.line(x0 - 3, y0 - v * plot_h, x0, y0 - v * plot_h, "#333");
    c.text(x0 - 8, y0 - v * plot_h + 4, report_detail::fmt2(v), 10, "end");
  }
  const std::vector<std::string> split_order = {"generic", "0", "1", "2", "3"};
  const double group_w = plot_w / std::max<std::size_t>(1, by_class.size());
  std::size_t gi = 0;
  for (const auto& [cls, vals] : by_class) {
    const double gx = x0 + gi * group_w;
    const double bar_w = group_w / 6.5;
    for (std::size_t si = 0; si < split_order.size(); ++si) {
      auto it = vals.find(split_order[si]);
      if (it == vals.end()) continue;
      const double h = it->second * plot_h;
      c.rect(gx + 6 + si * bar_w, y0 - h, bar_w - 2, h, svg::series_color(si));
    }
    c.text(gx + group_w / 2, y0 + 16, cls);
    ++gi;
  }
  for (std::size_t si = 0; si < split_order.size(); ++si) {
    c.rect(x0 + 90.0 * si, 20, 10, 10, svg::series_color(si));
    c.text(x0 + 90.0 * si + 40, 29, split_order[si] == "generic" ? "generic" : ("split " + split_order[si]), 11);
  }
  c.text(340, 385, "median IoU on the holdout test set, by encoder/decoder split");
  c.save(path);
}

// Mean fine-tune wall time per split (the training-time comparison).
inline void write_split_time_svg(const std::vector<ExperimentResult>& rows,
                                 const std::string& path) {
  std::map<std::string, std::pair<double, int>> agg;  // split -> (sum seconds, count)
  for (const auto& r : rows)
    if (r.id.rfind("splits-", 0) == 0 && r.split != "generic") {
      agg[r.split].first += r.train_seconds;
      agg[r.split].second += 1;
    }
  svg::Canvas c(480, 360);
  const double x0 = 70, y0 = 300, plot_w = 360, plot_h = 240;
  double maxv = 1e-9;
  for (auto& [s, p] : agg) maxv = std::max(maxv, p.first / std::max(1, p.second));
  c.line(x0, y0, x0 + plot_w, y0, "#333");
  c.line(x0, y0, x0, y0 - plot_h, "#333");
  std::size_t i = 0;
  for (const auto& [s, p] : agg) {
    const double v = p.first / std::max(1, p.second);
    const double h = v / maxv * (plot_h - 20);
    const double bw = plot_w / (double)agg.size();
    c.rect(x0 + i * bw + 12, y0 - h, bw - 24, h, svg::series_color(i));
    c.text(x0 + i * bw + bw / 2, y0 + 16, "split " + s);
    c.text(x0 + i * bw + bw / 2, y0 - h - 6, report_detail::fmt2(v) + "s", 10);
    ++i;
  }
  c.text(250, 340, "mean decoder fine-tune time by split");
  c.save(path);
}

// Median IoU against fine-tune fraction, one line per pre-train combination
// size, scratch as a dashed reference.
inline void write_generalization_svg(const std::vector<ExperimentResult>& rows,
                                     const std::string& path) {
  // size -> fraction -> pooled per-sample ious
  std::map<int, std::map<int, std::vector<double>>> pool;
  double scratch_median = -1;
  for (const auto& r : rows) {
    if (r.id.rfind("gen-", 0) != 0) continue;
    if (r.pretrain_classes == "scratch") {
      scratch_median = r.metrics.iou_median;
      continue;
    }
    int size;
    if (r.pretrain_classes == "all")
      size = 5;
    else
      size = 1 + (int)std::count(r.pretrain_classes.begin(), r.pretrain_classes.end(), '+');
    auto& bucket = pool[size][r.finetune_fraction];
    bucket.insert(bucket.end(), r.metrics.ious.begin(), r.metrics.ious.end());
  }
  svg::Canvas c(680, 420);
  const double x0 = 60, y0 = 340, plot_w = 560, plot_h = 280;
  c.line(x0, y0, x0 + plot_w, y0, "#333");
  c.line(x0, y0, x0, y0 - plot_h, "#333");
  for (int t = 0; t <= 5; ++t) {
    const double v = t / 5.0;
    c.line(x0 - 3, y0 - v * plot_h, x0, y0 - v * plot_h, "#333");
    c.text(x0 - 8, y0 - v * plot_h + 4, report_detail::fmt2(v), 10, "end");
  }
  auto fx = [&](int frac) { return x0 + plot_w * frac / 100.0; };
  for (int frac : {0, 20, 40, 60, 80, 100}) {
    c.line(fx(frac), y0, fx(frac), y0 + 3, "#333");
    c.text(fx(frac), y0 + 16, std::to_string(frac) + "%", 10);
  }
  std::size_t li = 0;
  for (const auto& [size, by_frac] : pool) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& [frac, ious] : by_frac)
      pts.push_back({fx(frac), y0 - train_detail::median(ious) * plot_h});
    std::sort(pts.begin(), pts.end());
    c.polyline(pts, svg::series_color(li));
    for (auto& [px, py] : pts) c.circle(px, py, 2.5, svg::series_color(li));
    const std::string label = size == 5 ? "all classes" : std::to_string(size) + " class" + (size > 1 ? "es" : "");
    c.rect(x0 + 120.0 * li, 20, 10, 10, svg::series_color(li));
    c.text(x0 + 120.0 * li + 55, 29, label, 11);
    ++li;
  }
  if (scratch_median >= 0) {
    const double y = y0 - scratch_median * plot_h;
    for (double x = x0; x < x0 + plot_w; x += 12) c.line(x, y, x + 6, y, "#888");
    c.text(x0 + plot_w - 4, y - 5, "scratch", 10, "end");
  }
  c.text(340, 400, "median holdout IoU vs fine-tune fraction, by pre-train combination size");
  c.save(path);
}

// results.csv plus the three figure analogs
inline void report(const std::vector<ExperimentResult>& rows, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  write_results_csv(rows, (fs::path(out_dir) / "results.csv").string());
  bool any_splits = false, any_gen = false;
  for (const auto& r : rows) {
    any_splits |= r.id.rfind("splits-", 0) == 0;
    any_gen |= r.id.rfind("gen-", 0) == 0;
  }
  if (any_splits) {
    write_split_iou_svg(rows, (fs::path(out_dir) / "fig_split_iou.svg").string());
    write_split_time_svg(rows, (fs::path(out_dir) / "fig_split_time.svg").string());
  }
  if (any_gen)
    write_generalization_svg(rows, (fs::path(out_dir) / "fig_generalization_iou.svg").string());
}

}  // namespace sdlnet
