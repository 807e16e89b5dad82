#include <catch2/catch.hpp>

#include "sdlnet/geometry.hpp"
#include "sdlnet/quad_json.hpp"
#include "sdlnet/rng.hpp"

using namespace sdlnet;

namespace {

// random convex quad by rejection: angle-sorted points around a center are
// only star-shaped in general, so keep drawing until the result is convex
// and fat enough to be numerically honest
Quadrangle random_convex_quad(Rng& rng, double cx, double cy, double rmin, double rmax) {
  for (;;) {
    std::array<double, 4> ang;
    for (auto& a : ang) a = rng.uniform(0, 6.28318530717958647);
    std::sort(ang.begin(), ang.end());
    std::array<Point2, 4> pts;
    for (int i = 0; i < 4; ++i) {
      double r = rng.uniform(rmin, rmax);
      pts[(std::size_t)i] = {cx + r * std::cos(ang[(std::size_t)i]),
                             cy + r * std::sin(ang[(std::size_t)i])};
    }
    // boundary order TL,TR,BR,BL -> roles TL,TR,BL,BR
    Quadrangle q = make_quad(pts[0], pts[1], pts[3], pts[2]);
    if (quad_is_convex(q) && quad_is_simple(q) && quad_area(q) > 0.5 * rmin * rmin) return q;
  }
}

Image smooth_test_image(int w, int h) {
  Image img(w, h, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      img.at(x, y, 0) = (std::uint8_t)(128 + 100 * std::sin(x * 0.11) * std::cos(y * 0.07));
      img.at(x, y, 1) = (std::uint8_t)(40 + 180.0 * x / w);
      img.at(x, y, 2) = (std::uint8_t)(200.0 * y / h + 20 * std::sin((x + y) * 0.05));
    }
  return img;
}

}  // namespace

TEST_CASE("gaussian heatmap values follow the formula") {
  SECTION("peak of 1 at a pixel-center corner") {
    auto map = render_gaussian_heatmap({10.0, 20.0}, 64, 2.0);
    REQUIRE(map(std::size_t(20), std::size_t(10)) == 1.0f);
  }
  SECTION("value exp(-1/2) at distance sigma") {
    auto map = render_gaussian_heatmap({10.0, 20.0}, 64, 3.0);
    REQUIRE(map(std::size_t(20), std::size_t(13)) == Approx(std::exp(-0.5)).epsilon(1e-6));
  }
  SECTION("corner far outside the frame leaves only the tail") {
    // distance from every pixel is > 6 sigma
    auto map = render_gaussian_heatmap({-14.0, -14.0}, 32, 2.0);
    float mx = 0;
    for (std::size_t i = 0; i < map.numel(); ++i) mx = std::max(mx, map[i]);
    REQUIRE(mx < 1e-7f);
  }
  SECTION("sigma must be positive") {
    REQUIRE_THROWS_AS(render_gaussian_heatmap({0, 0}, 8, 0.0), std::invalid_argument);
  }
}

TEST_CASE("encode_targets binds channels to corner roles") {
  Quadrangle q = make_quad({10, 12}, {50, 14}, {12, 40}, {52, 44});
  auto stack = encode_targets(q, 64, 2.0);
  REQUIRE(stack.shape() == std::vector<std::size_t>({4, 64, 64}));

  SECTION("swapping TL and TR swaps channels 0 and 1 exactly") {
    Quadrangle swapped = make_quad(q[kTR], q[kTL], q[kBL], q[kBR]);
    auto stack2 = encode_targets(swapped, 64, 2.0);
    const std::size_t plane = 64 * 64;
    for (std::size_t i = 0; i < plane; ++i) {
      REQUIRE(stack2[i] == stack[plane + i]);
      REQUIRE(stack2[plane + i] == stack[i]);
    }
    for (std::size_t i = 2 * plane; i < 4 * plane; ++i) REQUIRE(stack2[i] == stack[i]);
  }
  SECTION("cross-talk is bounded by the inter-corner Gaussian") {
    // at TL's pixel, channel sum is 1 + leakage from the other corners
    double sum = 0;
    for (int c = 0; c < 4; ++c) sum += stack(std::size_t(c), std::size_t(12), std::size_t(10));
    double bound = 1.0;
    for (int c = 1; c < 4; ++c) {
      double d = dist(q[kTL], q[c]);
      bound += std::exp(-d * d / (2 * 2.0 * 2.0)) + 1e-12;
    }
    REQUIRE(sum >= 1.0);
    REQUIRE(sum <= bound + 1e-9);
  }
}

TEST_CASE("extract_peak") {
  SECTION("one-hot map") {
    Tensor<float> map({16, 16});
    map(std::size_t(7), std::size_t(3)) = 1.0f;
    auto p = extract_peak(map);
    REQUIRE(p.pos.x == 3.0);
    REQUIRE(p.pos.y == 7.0);
    REQUIRE(p.score == 1.0);
  }
  SECTION("uniform map breaks ties at the lowest row-major index") {
    Tensor<float> map = Tensor<float>::full({8, 8}, 0.25f);
    auto p = extract_peak(map);
    REQUIRE(p.pos.x == 0.0);
    REQUIRE(p.pos.y == 0.0);
    REQUIRE(p.score == Approx(0.25));
  }
  SECTION("rendered gaussian peaks at its center") {
    auto map = render_gaussian_heatmap({10.0, 20.0}, 64, 2.0);
    auto p = extract_peak(map);
    REQUIRE(p.pos.x == 10.0);
    REQUIRE(p.pos.y == 20.0);
    REQUIRE(p.score == 1.0);
  }
  SECTION("quadratic sub-pixel refinement beats the raw argmax off-center") {
    Point2 truth{10.3, 20.6};
    auto map = render_gaussian_heatmap(truth, 64, 2.0);
    auto coarse = extract_peak(map, false);
    auto fine = extract_peak(map, true);
    REQUIRE(std::hypot(fine.pos.x - truth.x, fine.pos.y - truth.y) <
            std::hypot(coarse.pos.x - truth.x, coarse.pos.y - truth.y));
    REQUIRE(std::abs(fine.pos.x - truth.x) < 0.15);
    REQUIRE(std::abs(fine.pos.y - truth.y) < 0.15);
  }
}

TEST_CASE("decode_quadrangle") {
  Quadrangle q = make_quad({10, 12}, {50, 14}, {12, 40}, {52, 44});
  SECTION("round trip within half a pixel, valid") {
    auto det = decode_quadrangle(encode_targets(q, 64, 2.0), 0.3);
    REQUIRE(det.valid);
    for (int c = 0; c < 4; ++c) {
      REQUIRE(std::abs(det.quad[c].x - q[c].x) <= 0.5);
      REQUIRE(std::abs(det.quad[c].y - q[c].y) <= 0.5);
      REQUIRE(det.scores[(std::size_t)c] == Approx(1.0));
    }
  }
  SECTION("a channel below threshold invalidates the detection") {
    auto stack = encode_targets(q, 64, 2.0);
    for (std::size_t i = 0; i < 64 * 64; ++i) stack[i] *= 0.05f;  // flatten TL channel
    auto det = decode_quadrangle(stack, 0.3);
    REQUIRE_FALSE(det.valid);
    REQUIRE(det.scores[0] < 0.3);
    REQUIRE(det.scores[1] == Approx(1.0));  // raw peaks still reported
  }
  SECTION("crossed corners fail the simple-polygon check") {
    Quadrangle crossed = make_quad(q[kBR], q[kTR], q[kBL], q[kTL]);  // TL and BR swapped
    auto det = decode_quadrangle(encode_targets(crossed, 64, 2.0), 0.3);
    REQUIRE_FALSE(det.valid);
  }
}

TEST_CASE("quad_iou exact cases") {
  Quadrangle unit = rect_quad(0, 0, 1, 1);
  SECTION("identical quads give 1") {
    REQUIRE(quad_iou(unit, unit) == 1.0);
  }
  SECTION("disjoint squares give 0") {
    REQUIRE(quad_iou(unit, rect_quad(5, 5, 6, 6)) == 0.0);
  }
  SECTION("half-overlapping unit squares give 1/3") {
    Quadrangle shifted = rect_quad(0.5, 0, 1.5, 1);
    REQUIRE(quad_iou(unit, shifted) == Approx(1.0 / 3.0).margin(1e-6));
    REQUIRE(quad_iou_raster_oracle(unit, shifted, 2048) == Approx(1.0 / 3.0).margin(1e-3));
  }
  SECTION("degenerate input reports zero with the flag set") {
    Quadrangle line = make_quad({0, 0}, {1, 0}, {0, 0}, {1, 0});
    auto r = quad_iou_detail(line, unit);
    REQUIRE(r.value == 0.0);
    REQUIRE(r.degenerate);
  }
  SECTION("raster oracle trivial cases") {
    REQUIRE(quad_iou_raster_oracle(unit, unit, 128) == 1.0);
    REQUIRE(quad_iou_raster_oracle(unit, rect_quad(3, 3, 4, 4), 128) == 0.0);
  }
}

TEST_CASE("quad_iou properties and oracle agreement") {
  Rng rng(2024);
  int checked = 0;
  while (checked < 100) {
    Quadrangle a = random_convex_quad(rng, rng.uniform(-2, 2), rng.uniform(-2, 2), 0.8, 2.0);
    Quadrangle b = random_convex_quad(rng, rng.uniform(-2, 2), rng.uniform(-2, 2), 0.8, 2.0);
    double iou = quad_iou(a, b);
    double oracle = quad_iou_raster_oracle(a, b, 512);

    REQUIRE(iou >= 0.0);
    REQUIRE(iou <= 1.0);
    REQUIRE(iou == quad_iou(b, a));
    REQUIRE(std::abs(iou - oracle) < 1e-2);

    // translation invariance of the clipping path
    Point2 t{rng.uniform(-40, 40), rng.uniform(-40, 40)};
    Quadrangle at = a, bt = b;
    for (int i = 0; i < 4; ++i) {
      at[i] = at[i] + t;
      bt[i] = bt[i] + t;
    }
    REQUIRE(quad_iou(at, bt) == Approx(iou).margin(1e-12));
    ++checked;
  }
}

TEST_CASE("DLT homography estimation") {
  SECTION("identity for src == dst") {
    Quadrangle q = rect_quad(3, 4, 20, 15);
    auto h = estimate_homography_dlt(q, q);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        REQUIRE(h.at(r, c) == Approx(r == c ? 1.0 : 0.0).margin(1e-10));
  }
  SECTION("pure translation") {
    Quadrangle q = rect_quad(0, 0, 10, 6);
    Quadrangle d = q;
    for (int i = 0; i < 4; ++i) d[i] = d[i] + Point2{5, 7};
    auto h = estimate_homography_dlt(q, d);
    REQUIRE(h.at(0, 2) == Approx(5.0).margin(1e-9));
    REQUIRE(h.at(1, 2) == Approx(7.0).margin(1e-9));
    REQUIRE(h.at(0, 0) == Approx(1.0).margin(1e-9));
    REQUIRE(h.at(2, 0) == Approx(0.0).margin(1e-12));
  }
  SECTION("100 random quads map onto the unit square within 1e-8") {
    Rng rng(11);
    Quadrangle unit = rect_quad(0, 0, 1, 1);
    for (int trial = 0; trial < 100; ++trial) {
      Quadrangle src = random_convex_quad(rng, rng.uniform(-50, 50), rng.uniform(-50, 50), 5, 60);
      auto h = estimate_homography_dlt(src, unit);
      for (int i = 0; i < 4; ++i) {
        Point2 p = h.apply(src[i]);
        REQUIRE(std::abs(p.x - unit[i].x) < 1e-8);
        REQUIRE(std::abs(p.y - unit[i].y) < 1e-8);
      }
    }
  }
  SECTION("collinear points are rejected with a diagnostic") {
    Quadrangle bad = make_quad({0, 0}, {1, 1}, {3, 3}, {0, 5});  // TL,TR,BL collinear
    REQUIRE_THROWS_WITH(estimate_homography_dlt(bad, rect_quad(0, 0, 1, 1)),
                        Catch::Contains("collinear"));
  }
}

TEST_CASE("aspect ratio estimation") {
  SECTION("axis-aligned 200x100 rectangle") {
    REQUIRE(estimate_aspect_ratio(rect_quad(10, 20, 210, 120)) == Approx(2.0));
  }
  SECTION("rotation preserves the ratio of a square") {
    Quadrangle sq = rect_quad(-1, -1, 1, 1);
    auto rot = Homography::rotation_about(0, 0, 0.7);
    REQUIRE(estimate_aspect_ratio(apply(rot, sq)) == Approx(1.0).margin(1e-12));
  }
  SECTION("mild perspective stays within 10% of truth") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
      const double ratio = rng.uniform(0.6, 2.4);
      const double h = 100, w = ratio * h;
      Quadrangle rect = rect_quad(0, 0, w, h);
      Quadrangle jittered = rect;
      const double mag = 0.05 * std::min(w, h);
      for (int i = 0; i < 4; ++i)
        jittered[i] = jittered[i] + Point2{rng.uniform(-mag, mag), rng.uniform(-mag, mag)};
      double est = estimate_aspect_ratio(jittered);
      REQUIRE(est == Approx(ratio).epsilon(0.10));
    }
  }
  SECTION("zero-length edge rejected") {
    REQUIRE_THROWS_AS(estimate_aspect_ratio(make_quad({0, 0}, {0, 0}, {0, 1}, {0, 1})),
                      std::invalid_argument);
  }
}

TEST_CASE("warp_image") {
  Image img = smooth_test_image(48, 40);
  SECTION("identity homography reproduces the image") {
    auto out = warp_image(img, Homography{}, 48, 40);
    REQUIRE(out == img);
  }
  SECTION("integer translation is bit-exact in the overlap") {
    auto out = warp_image(img, Homography::translation(5, 3), 48, 40);
    for (int y = 3; y < 40; ++y)
      for (int x = 5; x < 48; ++x)
        for (int c = 0; c < 3; ++c) REQUIRE(out.at(x, y, c) == img.at(x - 5, y - 3, c));
  }
  SECTION("warp by H then H^-1 keeps interior PSNR above 30 dB") {
    Homography h;
    h.m = {0.95, 0.08, 3.0, -0.06, 1.02, 2.0, 2e-4, -1e-4, 1.0};
    auto fwd = warp_image(img, h, 48, 40);
    auto back = warp_image(fwd, h.inverse(), 48, 40);
    // interior: pixels whose bilinear taps in fwd were all filled from the
    // source (no zero-fill leaking into the comparison)
    auto hinv = h.inverse();
    auto fwd_valid = [&](int qx, int qy) {
      if (qx < 0 || qy < 0 || qx >= 48 || qy >= 40) return false;
      Point2 s = hinv.apply({(double)qx, (double)qy});
      return s.x >= 0 && s.y >= 0 && s.x <= 47 && s.y <= 39;
    };
    double se = 0;
    long n = 0;
    for (int y = 0; y < 40; ++y)
      for (int x = 0; x < 48; ++x) {
        Point2 p = h.apply({(double)x, (double)y});
        int qx = (int)std::floor(p.x), qy = (int)std::floor(p.y);
        if (!(fwd_valid(qx, qy) && fwd_valid(qx + 1, qy) && fwd_valid(qx, qy + 1) &&
              fwd_valid(qx + 1, qy + 1)))
          continue;
        for (int c = 0; c < 3; ++c) {
          double d = (double)back.at(x, y, c) - img.at(x, y, c);
          se += d * d;
          ++n;
        }
      }
    REQUIRE(n > 1000);
    double mse = se / n;
    REQUIRE(10 * std::log10(255.0 * 255.0 / mse) > 30.0);
  }
  SECTION("singular homography is rejected") {
    Homography h;
    h.m = {1, 0, 0, 2, 0, 0, 0, 0, 1};  // rank 2
    REQUIRE_THROWS_AS(warp_image(img, h, 8, 8), std::runtime_error);
  }
}

TEST_CASE("rectify") {
  Image img = smooth_test_image(96, 80);
  SECTION("axis-aligned label equals crop plus resize") {
    Quadrangle label = rect_quad(12, 10, 75, 52);  // 64 x 43 px region
    auto res = rectify_detail(img, label, 50);
    REQUIRE(res.ratio == Approx(63.0 / 42.0));
    // oracle: integer crop then align-corners resize
    Image crop(64, 43, 3);
    for (int y = 0; y < 43; ++y)
      for (int x = 0; x < 64; ++x)
        for (int c = 0; c < 3; ++c) crop.at(x, y, c) = img.at(x + 12, y + 10, c);
    Image ref = resize_bilinear(crop, res.image.width, res.image.height, true);
    REQUIRE(psnr(res.image, ref) > 35.0);
  }
  SECTION("card placed by a known homography lands on the rectangle corners") {
    // synthesize: card -> scene with known H, then rectify the scene back
    Image card = smooth_test_image(60, 40);
    Quadrangle card_rect = rect_quad(0, 0, 59, 39);
    Quadrangle target = make_quad({20, 16}, {72, 12}, {24, 58}, {78, 52});
    auto hs = estimate_homography_dlt(card_rect, target);
    Image scene = warp_image(card, hs, 96, 80);
    auto res = rectify_detail(scene, target, 40);
    // rectangle corners must map back onto the labelled quad within 1 px
    auto hinv = res.h.inverse();
    Quadrangle rect = rect_quad(0, 0, res.image.width - 1, res.image.height - 1);
    for (int i = 0; i < 4; ++i) {
      Point2 p = hinv.apply(rect[i]);
      REQUIRE(std::abs(p.x - target[i].x) < 1.0);
      REQUIRE(std::abs(p.y - target[i].y) < 1.0);
    }
  }
  SECTION("180-degree role rotation rectifies to the rotated image") {
    Quadrangle label = rect_quad(12, 10, 75, 52);
    auto a = rectify(img, label, 40);
    Quadrangle rotated = make_quad(label[kBR], label[kBL], label[kTR], label[kTL]);
    auto b = rectify(img, rotated, 40);
    REQUIRE(a.width == b.width);
    REQUIRE(a.height == b.height);
    Image b_rot(b.width, b.height, 3);
    for (int y = 0; y < b.height; ++y)
      for (int x = 0; x < b.width; ++x)
        for (int c = 0; c < 3; ++c)
          b_rot.at(x, y, c) = b.at(b.width - 1 - x, b.height - 1 - y, c);
    REQUIRE(psnr(a, b_rot) > 40.0);
  }
}

TEST_CASE("png round trip") {
  Image img = smooth_test_image(33, 21);
  auto bytes = encode_png(img);
  auto back = decode_png(bytes);
  REQUIRE(back == img);

  SECTION("grayscale") {
    Image g(9, 7, 1);
    for (std::size_t i = 0; i < g.px.size(); ++i) g.px[i] = (std::uint8_t)(i * 13);
    REQUIRE(decode_png(encode_png(g)) == g);
  }
  SECTION("truncated stream rejected") {
    bytes.resize(bytes.size() / 2);
    REQUIRE_THROWS_WITH(decode_png(bytes), Catch::Contains("truncated"));
  }
  SECTION("garbage rejected") {
    std::vector<std::uint8_t> junk(100, 42);
    REQUIRE_THROWS_WITH(decode_png(junk), Catch::Contains("not a PNG"));
  }
}

TEST_CASE("quadrangle json form") {
  Quadrangle q = make_quad({1.5, 2}, {3, 4}, {5, 6}, {7, 8.25});
  auto j = quad_to_json(q);
  REQUIRE(j["tl"][0] == 1.5);
  REQUIRE(j["br"][1] == 8.25);
  Quadrangle back = quad_from_json(j);
  for (int i = 0; i < 4; ++i) {
    REQUIRE(back[i].x == q[i].x);
    REQUIRE(back[i].y == q[i].y);
  }
  REQUIRE_THROWS_AS(quad_from_json(nlohmann::json{{"tl", {1, 2}}}), std::invalid_argument);
}
