#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdlnet/image.hpp"
#include "sdlnet/tensor.hpp"

namespace sdlnet {

struct Point2 {
  double x = 0;
  double y = 0;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double dist(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

// Corner roles are fixed: TL, TR, BL, BR. The role order is what carries
// document orientation; the polygon boundary is the TL->TR->BR->BL loop.
enum Corner : int { kTL = 0, kTR = 1, kBL = 2, kBR = 3 };

inline const char* corner_name(int i) {
  static const char* names[4] = {"tl", "tr", "bl", "br"};
  return names[i];
}

struct Quadrangle {
  std::array<Point2, 4> corners{};  // role order TL, TR, BL, BR

  Point2& operator[](int i) { return corners[(std::size_t)i]; }
  const Point2& operator[](int i) const { return corners[(std::size_t)i]; }

  std::array<Point2, 4> boundary() const {
    return {corners[kTL], corners[kTR], corners[kBR], corners[kBL]};
  }
};

inline Quadrangle make_quad(Point2 tl, Point2 tr, Point2 bl, Point2 br) {
  return Quadrangle{{tl, tr, bl, br}};
}

// axis-aligned rectangle spanning [x0,x1] x [y0,y1]
inline Quadrangle rect_quad(double x0, double y0, double x1, double y1) {
  return make_quad({x0, y0}, {x1, y0}, {x0, y1}, {x1, y1});
}

template <std::size_t N>
double polygon_area_signed(const std::array<Point2, N>& poly) {
  double s = 0;
  for (std::size_t i = 0; i < N; ++i) {
    const Point2& p = poly[i];
    const Point2& q = poly[(i + 1) % N];
    s += p.x * q.y - q.x * p.y;
  }
  return 0.5 * s;
}

inline double polygon_area_signed(const std::vector<Point2>& poly) {
  double s = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point2& p = poly[i];
    const Point2& q = poly[(i + 1) % poly.size()];
    s += p.x * q.y - q.x * p.y;
  }
  return 0.5 * s;
}

inline double quad_area(const Quadrangle& q) { return std::abs(polygon_area_signed(q.boundary())); }

namespace geo_detail {

// proper + improper segment intersection test
inline bool segments_intersect(Point2 a, Point2 b, Point2 c, Point2 d) {
  auto orient = [](Point2 p, Point2 q, Point2 r) {
    double v = cross(q - p, r - p);
    if (v > 1e-12) return 1;
    if (v < -1e-12) return -1;
    return 0;
  };
  auto on_seg = [](Point2 p, Point2 q, Point2 r) {
    return std::min(p.x, q.x) - 1e-12 <= r.x && r.x <= std::max(p.x, q.x) + 1e-12 &&
           std::min(p.y, q.y) - 1e-12 <= r.y && r.y <= std::max(p.y, q.y) + 1e-12;
  };
  int o1 = orient(a, b, c), o2 = orient(a, b, d), o3 = orient(c, d, a), o4 = orient(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_seg(a, b, c)) return true;
  if (o2 == 0 && on_seg(a, b, d)) return true;
  if (o3 == 0 && on_seg(c, d, a)) return true;
  if (o4 == 0 && on_seg(c, d, b)) return true;
  return false;
}

}  // namespace geo_detail

// Simple = the TL->TR->BR->BL loop does not self-intersect. Only the two
// pairs of non-adjacent edges can cross.
inline bool quad_is_simple(const Quadrangle& q) {
  auto b = q.boundary();
  if (geo_detail::segments_intersect(b[0], b[1], b[2], b[3])) return false;
  if (geo_detail::segments_intersect(b[1], b[2], b[3], b[0])) return false;
  return true;
}

inline bool quad_is_convex(const Quadrangle& q) {
  auto b = q.boundary();
  int sign = 0;
  for (int i = 0; i < 4; ++i) {
    double c = cross(b[(i + 1) % 4] - b[i], b[(i + 2) % 4] - b[(i + 1) % 4]);
    if (std::abs(c) < 1e-12) continue;
    int s = c > 0 ? 1 : -1;
    if (sign == 0)
      sign = s;
    else if (s != sign)
      return false;
  }
  return sign != 0;
}

inline bool quad_is_degenerate(const Quadrangle& q, double eps = 1e-9) {
  return quad_area(q) < eps;
}

// Role consistency: the TL->TR->BR->BL loop of a correctly-labelled quad has
// positive signed area in image coordinates (y down). Swapping TL and BR
// keeps the loop simple but reverses it, which this test catches.
inline bool quad_is_role_consistent(const Quadrangle& q) {
  return polygon_area_signed(q.boundary()) > 1e-12;
}

// ---------------------------------------------------------------------------
// Homography
// ---------------------------------------------------------------------------

struct Homography {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};  // row-major

  double& at(int r, int c) { return m[(std::size_t)(r * 3 + c)]; }
  double at(int r, int c) const { return m[(std::size_t)(r * 3 + c)]; }

  Point2 apply(Point2 p) const {
    double w = m[6] * p.x + m[7] * p.y + m[8];
    if (std::abs(w) < 1e-15) throw std::runtime_error("Homography: point maps to infinity");
    return {(m[0] * p.x + m[1] * p.y + m[2]) / w, (m[3] * p.x + m[4] * p.y + m[5]) / w};
  }

  Homography compose(const Homography& rhs) const {  // this * rhs
    Homography out;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) {
        double s = 0;
        for (int k = 0; k < 3; ++k) s += at(r, k) * rhs.at(k, c);
        out.at(r, c) = s;
      }
    out.normalize();
    return out;
  }

  Homography inverse() const {
    const auto& a = m;
    std::array<double, 9> adj = {
        a[4] * a[8] - a[5] * a[7], a[2] * a[7] - a[1] * a[8], a[1] * a[5] - a[2] * a[4],
        a[5] * a[6] - a[3] * a[8], a[0] * a[8] - a[2] * a[6], a[2] * a[3] - a[0] * a[5],
        a[3] * a[7] - a[4] * a[6], a[1] * a[6] - a[0] * a[7], a[0] * a[4] - a[1] * a[3]};
    double det = a[0] * adj[0] + a[1] * adj[3] + a[2] * adj[6];
    double scale = 0;
    for (double v : a) scale = std::max(scale, std::abs(v));
    if (std::abs(det) < 1e-12 * scale * scale * scale)
      throw std::runtime_error("Homography: singular, cannot invert");
    Homography out;
    for (int i = 0; i < 9; ++i) out.m[(std::size_t)i] = adj[(std::size_t)i] / det;
    out.normalize();
    return out;
  }

  void normalize() {
    if (std::abs(m[8]) > 1e-12)
      for (auto& v : m) v /= m[8];
  }

  static Homography translation(double tx, double ty) {
    Homography h;
    h.m = {1, 0, tx, 0, 1, ty, 0, 0, 1};
    return h;
  }
  static Homography scale(double sx, double sy) {
    Homography h;
    h.m = {sx, 0, 0, 0, sy, 0, 0, 0, 1};
    return h;
  }
  static Homography rotation_about(double cx, double cy, double radians) {
    double c = std::cos(radians), s = std::sin(radians);
    Homography h;
    h.m = {c, -s, cx - c * cx + s * cy, s, c, cy - s * cx - c * cy, 0, 0, 1};
    return h;
  }
};

inline Quadrangle apply(const Homography& h, const Quadrangle& q) {
  Quadrangle out;
  for (int i = 0; i < 4; ++i) out[i] = h.apply(q[i]);
  return out;
}

namespace geo_detail {

struct NormTransform {
  double s, cx, cy;  // p' = s*(p - c)
};

inline NormTransform hartley_normalize(const std::array<Point2, 4>& pts) {
  double cx = 0, cy = 0;
  for (const auto& p : pts) {
    cx += p.x;
    cy += p.y;
  }
  cx /= 4;
  cy /= 4;
  double mean_d = 0;
  for (const auto& p : pts) mean_d += std::hypot(p.x - cx, p.y - cy);
  mean_d /= 4;
  if (mean_d < 1e-12) throw std::invalid_argument("homography: coincident points");
  return {std::sqrt(2.0) / mean_d, cx, cy};
}

inline void check_no_collinear_triple(const std::array<Point2, 4>& pts, const char* which) {
  double scale = 0;
  for (const auto& p : pts)
    for (const auto& q : pts) scale = std::max(scale, dist(p, q));
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      for (int k = j + 1; k < 4; ++k) {
        double a = std::abs(cross(pts[(std::size_t)j] - pts[(std::size_t)i],
                                  pts[(std::size_t)k] - pts[(std::size_t)i]));
        if (a < 1e-9 * scale * scale)
          throw std::invalid_argument(std::string("homography: three ") + which +
                                      " points are collinear (degenerate configuration)");
      }
}

}  // namespace geo_detail

// Four-point DLT with Hartley normalization. Solves the 8x9 homogeneous
// system by full-pivot elimination; a vanishing pivot means a degenerate
// configuration the collinearity pre-check did not already name.
inline Homography estimate_homography_dlt(const std::array<Point2, 4>& src,
                                          const std::array<Point2, 4>& dst) {
  geo_detail::check_no_collinear_triple(src, "source");
  geo_detail::check_no_collinear_triple(dst, "destination");
  auto ns = geo_detail::hartley_normalize(src);
  auto nd = geo_detail::hartley_normalize(dst);

  double A[8][9] = {};
  for (int i = 0; i < 4; ++i) {
    double x = ns.s * (src[(std::size_t)i].x - ns.cx), y = ns.s * (src[(std::size_t)i].y - ns.cy);
    double u = nd.s * (dst[(std::size_t)i].x - nd.cx), v = nd.s * (dst[(std::size_t)i].y - nd.cy);
    double* r0 = A[2 * i];
    double* r1 = A[2 * i + 1];
    r0[0] = -x; r0[1] = -y; r0[2] = -1; r0[6] = u * x; r0[7] = u * y; r0[8] = u;
    r1[3] = -x; r1[4] = -y; r1[5] = -1; r1[6] = v * x; r1[7] = v * y; r1[8] = v;
  }

  int colperm[9];
  for (int i = 0; i < 9; ++i) colperm[i] = i;
  for (int step = 0; step < 8; ++step) {
    int pr = step, pc = step;
    double best = 0;
    for (int r = step; r < 8; ++r)
      for (int c = step; c < 9; ++c)
        if (std::abs(A[r][c]) > best) {
          best = std::abs(A[r][c]);
          pr = r;
          pc = c;
        }
    if (best < 1e-12)
      throw std::invalid_argument("homography: rank-deficient system (degenerate configuration)");
    if (pr != step)
      for (int c = 0; c < 9; ++c) std::swap(A[step][c], A[pr][c]);
    if (pc != step) {
      for (int r = 0; r < 8; ++r) std::swap(A[r][step], A[r][pc]);
      std::swap(colperm[step], colperm[pc]);
    }
    for (int r = step + 1; r < 8; ++r) {
      double f = A[r][step] / A[step][step];
      if (f == 0) continue;
      for (int c = step; c < 9; ++c) A[r][c] -= f * A[step][c];
    }
  }
  double xsol[9];
  xsol[8] = 1.0;
  for (int i = 7; i >= 0; --i) {
    double acc = 0;
    for (int j = i + 1; j < 9; ++j) acc += A[i][j] * xsol[j];
    xsol[i] = -acc / A[i][i];
  }
  Homography hn;
  for (int i = 0; i < 9; ++i) hn.m[(std::size_t)colperm[i]] = xsol[i];

  // denormalize: H = T_dst^-1 * Hn * T_src
  Homography tsrc = Homography::scale(ns.s, ns.s).compose(Homography::translation(-ns.cx, -ns.cy));
  Homography tdst_inv =
      Homography::translation(nd.cx, nd.cy).compose(Homography::scale(1.0 / nd.s, 1.0 / nd.s));
  Homography h = tdst_inv.compose(hn).compose(tsrc);
  h.normalize();
  return h;
}

inline Homography estimate_homography_dlt(const Quadrangle& src, const Quadrangle& dst) {
  return estimate_homography_dlt(src.corners, dst.corners);
}

// ---------------------------------------------------------------------------
// IoU: Sutherland-Hodgman clipping for convex pairs, rasterization fallback
// ---------------------------------------------------------------------------

inline double quad_iou_raster_oracle(const Quadrangle& a, const Quadrangle& b, int grid = 512) {
  auto ba = a.boundary();
  auto bb = b.boundary();
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& p : ba) {
    x0 = std::min(x0, p.x); x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y); y1 = std::max(y1, p.y);
  }
  for (const auto& p : bb) {
    x0 = std::min(x0, p.x); x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y); y1 = std::max(y1, p.y);
  }
  if (x1 <= x0 || y1 <= y0) return 0.0;

  auto inside = [](const std::array<Point2, 4>& poly, double px, double py) {
    bool in = false;
    for (int i = 0, j = 3; i < 4; j = i++) {
      const Point2& pi = poly[(std::size_t)i];
      const Point2& pj = poly[(std::size_t)j];
      if ((pi.y > py) != (pj.y > py) &&
          px < (pj.x - pi.x) * (py - pi.y) / (pj.y - pi.y) + pi.x)
        in = !in;
    }
    return in;
  };

  const double dx = (x1 - x0) / grid, dy = (y1 - y0) / grid;
  long long na = 0, nb = 0, nboth = 0;
  for (int gy = 0; gy < grid; ++gy) {
    const double py = y0 + (gy + 0.5) * dy;
    for (int gx = 0; gx < grid; ++gx) {
      const double px = x0 + (gx + 0.5) * dx;
      const bool ia = inside(ba, px, py);
      const bool ib = inside(bb, px, py);
      na += ia;
      nb += ib;
      nboth += ia && ib;
    }
  }
  const long long nunion = na + nb - nboth;
  if (nunion == 0) return 0.0;
  return (double)nboth / (double)nunion;
}

namespace geo_detail {

inline std::vector<Point2> clip_convex(std::vector<Point2> subject,
                                       std::array<Point2, 4> clip_ccw) {
  for (int e = 0; e < 4 && !subject.empty(); ++e) {
    const Point2 v1 = clip_ccw[(std::size_t)e];
    const Point2 v2 = clip_ccw[(std::size_t)((e + 1) % 4)];
    const Point2 dir = v2 - v1;
    std::vector<Point2> out;
    out.reserve(subject.size() + 2);
    for (std::size_t i = 0; i < subject.size(); ++i) {
      const Point2 p = subject[i];
      const Point2 q = subject[(i + 1) % subject.size()];
      const bool pin = cross(dir, p - v1) >= 0;
      const bool qin = cross(dir, q - v1) >= 0;
      if (pin != qin) {
        const double denom = cross(dir, q - p);
        const double t = denom != 0 ? cross(dir, v1 - p) / denom : 0.0;
        out.push_back(p + t * (q - p));
      }
      if (qin) out.push_back(q);
    }
    subject = std::move(out);
  }
  return subject;
}

inline std::array<Point2, 4> oriented_ccw(const Quadrangle& q) {
  auto b = q.boundary();
  if (polygon_area_signed(b) < 0) std::swap(b[1], b[3]);
  return b;
}

}  // namespace geo_detail

struct IouResult {
  double value = 0;
  bool degenerate = false;
};

namespace geo_detail {

inline bool quad_less(const Quadrangle& a, const Quadrangle& b) {
  for (int i = 0; i < 4; ++i) {
    if (a[i].x != b[i].x) return a[i].x < b[i].x;
    if (a[i].y != b[i].y) return a[i].y < b[i].y;
  }
  return false;
}

}  // namespace geo_detail

inline IouResult quad_iou_detail(const Quadrangle& a_in, const Quadrangle& b_in) {
  // canonical argument order makes quad_iou(a,b) bit-equal to quad_iou(b,a)
  const bool swap_args = geo_detail::quad_less(b_in, a_in);
  const Quadrangle& a = swap_args ? b_in : a_in;
  const Quadrangle& b = swap_args ? a_in : b_in;
  const double area_a = quad_area(a);
  const double area_b = quad_area(b);
  if (area_a < 1e-12 || area_b < 1e-12) return {0.0, true};
  if (!quad_is_simple(a) || !quad_is_simple(b))
    throw std::invalid_argument("quad_iou: inputs must be simple quadrangles");
  if (!(quad_is_convex(a) && quad_is_convex(b)))
    return {quad_iou_raster_oracle(a, b, 1024), false};

  auto clip = geo_detail::oriented_ccw(b);
  auto sub = geo_detail::oriented_ccw(a);
  auto poly = geo_detail::clip_convex({sub.begin(), sub.end()}, clip);
  double inter = poly.size() >= 3 ? std::abs(polygon_area_signed(poly)) : 0.0;
  inter = std::min(inter, std::min(area_a, area_b));
  const double uni = area_a + area_b - inter;
  return {std::clamp(inter / uni, 0.0, 1.0), false};
}

inline double quad_iou(const Quadrangle& a, const Quadrangle& b) {
  return quad_iou_detail(a, b).value;
}

// ---------------------------------------------------------------------------
// Heatmaps
// ---------------------------------------------------------------------------

inline double default_sigma(int size) { return std::max(1.5, 0.02 * size); }

// unnormalized Gaussian, peak 1 when the corner sits on a pixel center;
// pixel (x,y) has its center at coordinates (x,y)
inline Tensor<float> render_gaussian_heatmap(Point2 corner, int size, double sigma) {
  if (sigma <= 0) throw std::invalid_argument("render_gaussian_heatmap: sigma must be > 0");
  Tensor<float> map({(std::size_t)size, (std::size_t)size});
  const double inv = 1.0 / (2.0 * sigma * sigma);
  float* d = map.data();
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double dx = x - corner.x, dy = y - corner.y;
      d[(std::size_t)y * size + x] = (float)std::exp(-(dx * dx + dy * dy) * inv);
    }
  return map;
}

// [4,S,S], channel i renders the corner with role i (TL,TR,BL,BR)
inline Tensor<float> encode_targets(const Quadrangle& quad, int size, double sigma) {
  Tensor<float> stack({4, (std::size_t)size, (std::size_t)size});
  for (int c = 0; c < 4; ++c) {
    auto map = render_gaussian_heatmap(quad[c], size, sigma);
    std::copy(map.data(), map.data() + map.numel(),
              stack.data() + (std::size_t)c * size * size);
  }
  return stack;
}

struct Peak {
  Point2 pos;
  double score = 0;
};

// arg-max pixel center; ties break to the lowest row-major index; optional
// 3x3 quadratic refinement (off by default)
inline Peak extract_peak(const float* map, int w, int h, bool subpixel = false) {
  std::size_t best = 0;
  float best_v = map[0];
  const std::size_t n = (std::size_t)w * h;
  for (std::size_t i = 1; i < n; ++i)
    if (map[i] > best_v) {
      best_v = map[i];
      best = i;
    }
  const int x = (int)(best % (std::size_t)w);
  const int y = (int)(best / (std::size_t)w);
  Peak p{{(double)x, (double)y}, (double)best_v};
  if (subpixel && x > 0 && x < w - 1 && y > 0 && y < h - 1) {
    auto refine = [](float fm, float f0, float fp) {
      const double denom = (double)fm - 2.0 * f0 + fp;
      if (std::abs(denom) < 1e-12) return 0.0;
      return std::clamp(0.5 * ((double)fm - fp) / denom, -0.5, 0.5);
    };
    p.pos.x += refine(map[best - 1], map[best], map[best + 1]);
    p.pos.y += refine(map[best - (std::size_t)w], map[best], map[best + (std::size_t)w]);
  }
  return p;
}

inline Peak extract_peak(const Tensor<float>& map, bool subpixel = false) {
  if (map.rank() != 2) throw std::invalid_argument("extract_peak: map must be 2-d");
  return extract_peak(map.data(), (int)map.dim(1), (int)map.dim(0), subpixel);
}

struct Detection {
  Quadrangle quad;
  std::array<double, 4> scores{};
  bool valid = false;
};

// Validity requires every corner score at or above the threshold and a
// simple, role-consistent quadrangle (positive signed area of the
// TL->TR->BR->BL loop). Invalid detections still expose the raw peaks.
inline Detection decode_quadrangle(const Tensor<float>& stack, double score_threshold,
                                   bool subpixel = false) {
  if (stack.rank() != 3 || stack.dim(0) != 4)
    throw std::invalid_argument("decode_quadrangle: stack must be [4,S,S]");
  const int h = (int)stack.dim(1), w = (int)stack.dim(2);
  Detection det;
  bool above = true;
  for (int c = 0; c < 4; ++c) {
    Peak p = extract_peak(stack.data() + (std::size_t)c * w * h, w, h, subpixel);
    det.quad[c] = p.pos;
    det.scores[(std::size_t)c] = p.score;
    if (p.score < score_threshold) above = false;
  }
  det.valid = above && quad_is_simple(det.quad) && quad_is_role_consistent(det.quad) &&
              !quad_is_degenerate(det.quad);
  return det;
}

// ---------------------------------------------------------------------------
// Aspect ratio, warping, rectification
// ---------------------------------------------------------------------------

inline double estimate_aspect_ratio(const Quadrangle& q) {
  const double top = dist(q[kTL], q[kTR]);
  const double bottom = dist(q[kBL], q[kBR]);
  const double left = dist(q[kTL], q[kBL]);
  const double right = dist(q[kTR], q[kBR]);
  if (top < 1e-9 || bottom < 1e-9 || left < 1e-9 || right < 1e-9)
    throw std::invalid_argument("estimate_aspect_ratio: zero-length edge");
  const double ratio = (0.5 * (top + bottom)) / (0.5 * (left + right));
  return std::clamp(ratio, 0.2, 5.0);
}

// H maps source coordinates to output coordinates; sampling is done with
// the inverse map and bilinear interpolation, zero outside the source.
// supersample > 1 averages an n x n grid of taps per output pixel, which is
// the cheap anti-aliasing a minifying warp needs.
inline Image warp_image(const Image& src, const Homography& h, int out_w, int out_h,
                        int supersample = 1) {
  const Homography hinv = h.inverse();
  Image out(out_w, out_h, src.channels);
  double vals[4], acc[4];
  const int ss = std::max(1, supersample);
  const double step = 1.0 / ss;
  const double off = 0.5 * (step - 1.0);
  for (int y = 0; y < out_h; ++y)
    for (int x = 0; x < out_w; ++x) {
      for (int c = 0; c < src.channels; ++c) acc[c] = 0;
      for (int sy = 0; sy < ss; ++sy)
        for (int sx = 0; sx < ss; ++sx) {
          const Point2 s = hinv.apply({x + off + sx * step, y + off + sy * step});
          sample_bilinear(src, s.x, s.y, vals);
          for (int c = 0; c < src.channels; ++c) acc[c] += vals[c];
        }
      for (int c = 0; c < src.channels; ++c)
        out.at(x, y, c) =
            (std::uint8_t)std::min(255.0, std::max(0.0, acc[c] / (ss * ss) + 0.5));
    }
  return out;
}

struct RectifyResult {
  Image image;
  Homography h;   // quad -> rectangle
  double ratio = 1;
};

// Fig-1 style rectification: estimate the aspect ratio, map the quadrangle
// onto a target-height rectangle (TL to the rectangle's top-left), warp.
inline RectifyResult rectify_detail(const Image& img, const Quadrangle& quad, int target_height) {
  if (target_height < 2) throw std::invalid_argument("rectify: target height too small");
  if (!quad_is_simple(quad) || quad_is_degenerate(quad))
    throw std::invalid_argument("rectify: quadrangle is degenerate or self-intersecting");
  const double ratio = estimate_aspect_ratio(quad);
  const int out_h = target_height;
  const int out_w = std::max(2, (int)std::lround(ratio * target_height));
  const Quadrangle rect = rect_quad(0, 0, out_w - 1, out_h - 1);
  const Homography h = estimate_homography_dlt(quad, rect);
  return {warp_image(img, h, out_w, out_h), h, ratio};
}

inline Image rectify(const Image& img, const Quadrangle& quad, int target_height) {
  return rectify_detail(img, quad, target_height).image;
}

}  // namespace sdlnet
