#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdlnet/adam.hpp"
#include "sdlnet/autodiff.hpp"
#include "sdlnet/rng.hpp"
#include "sdlnet/tensor.hpp"

namespace sdlnet {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

// Reference channel plan scaled by the width multiplier; channels never go
// below 4. Five stride-2 stages (stem + 4 inverted-residual stages) need the
// input divisible by 32 so the four upsamplers and the head invert exactly.
struct ModelConfig {
  int input_size = 64;
  double width_multiplier = 0.25;
  std::vector<int> backbone_channels;   // {stem, s1, s2, s3, s4}
  std::vector<int> upsampler_channels;  // {u1, u2, u3, u4}
  int out_channels = 4;                 // one heatmap per corner, fixed

  static constexpr std::array<int, 5> kRefBackbone{32, 16, 24, 32, 64};
  static constexpr std::array<int, 4> kRefUpsampler{48, 32, 24, 16};
  static constexpr std::array<int, 4> kStageExpansion{1, 6, 6, 6};

  void resolve() {
    auto scaled = [this](int ref) {
      return std::max(4, (int)std::lround(ref * width_multiplier));
    };
    if (backbone_channels.empty())
      for (int ref : kRefBackbone) backbone_channels.push_back(scaled(ref));
    if (upsampler_channels.empty())
      for (int ref : kRefUpsampler) upsampler_channels.push_back(scaled(ref));
  }

  void validate() const {
    if (input_size < 32 || input_size % 32 != 0)
      throw std::invalid_argument("ModelConfig: input_size must be a positive multiple of 32, got " +
                                  std::to_string(input_size));
    if (out_channels != 4)
      throw std::invalid_argument("ModelConfig: out_channels is fixed to 4");
    if (backbone_channels.size() != 5 || upsampler_channels.size() != 4)
      throw std::invalid_argument("ModelConfig: expected 5 backbone and 4 upsampler channels");
    for (int c : backbone_channels)
      if (c < 1) throw std::invalid_argument("ModelConfig: non-positive backbone channel");
    for (int c : upsampler_channels)
      if (c < 1) throw std::invalid_argument("ModelConfig: non-positive upsampler channel");
  }

  std::string to_text() const {
    std::ostringstream os;
    os << "input_size=" << input_size << "\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", width_multiplier);
    os << "width_multiplier=" << buf << "\n";
    os << "backbone_channels=";
    for (std::size_t i = 0; i < backbone_channels.size(); ++i)
      os << (i ? "," : "") << backbone_channels[i];
    os << "\nupsampler_channels=";
    for (std::size_t i = 0; i < upsampler_channels.size(); ++i)
      os << (i ? "," : "") << upsampler_channels[i];
    os << "\nout_channels=" << out_channels << "\n";
    return os.str();
  }

  static ModelConfig from_text(const std::string& text) {
    ModelConfig cfg;
    cfg.backbone_channels.clear();
    cfg.upsampler_channels.clear();
    std::istringstream is(text);
    std::string line;
    auto parse_list = [](const std::string& s) {
      std::vector<int> out;
      std::istringstream ls(s);
      std::string item;
      while (std::getline(ls, item, ',')) out.push_back(std::stoi(item));
      return out;
    };
    while (std::getline(is, line)) {
      auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(0, eq), val = line.substr(eq + 1);
      if (key == "input_size") cfg.input_size = std::stoi(val);
      else if (key == "width_multiplier") cfg.width_multiplier = std::stod(val);
      else if (key == "backbone_channels") cfg.backbone_channels = parse_list(val);
      else if (key == "upsampler_channels") cfg.upsampler_channels = parse_list(val);
      else if (key == "out_channels") cfg.out_channels = std::stoi(val);
    }
    return cfg;
  }

  bool operator==(const ModelConfig& o) const {
    return input_size == o.input_size && width_multiplier == o.width_multiplier &&
           backbone_channels == o.backbone_channels &&
           upsampler_channels == o.upsampler_channels && out_channels == o.out_channels;
  }
};

// Number of upsampler blocks living on the encoder side.
enum class SplitPoint : int { kMiddle0 = 0, kUp1 = 1, kUp2 = 2, kUp3 = 3 };

inline int split_index(SplitPoint sp) { return static_cast<int>(sp); }

inline SplitPoint split_from_index(int i) {
  if (i < 0 || i > 3)
    throw std::invalid_argument("split must be one of 0 (Middle), 1, 2, 3; got " +
                                std::to_string(i));
  return static_cast<SplitPoint>(i);
}

inline const char* split_name(SplitPoint sp) {
  static const char* names[4] = {"middle0", "up1", "up2", "up3"};
  return names[split_index(sp)];
}

// ---------------------------------------------------------------------------
// Tape: per-forward bookkeeping of parameter leaves
// ---------------------------------------------------------------------------

struct Tape {
  bool training = false;  // batch-norm mode
  bool record = true;     // false: inference only, no backward graph
  std::vector<std::pair<ParamPtr<float>, Var<float>>> params;

  Var<float> var(const ParamPtr<float>& p) {
    for (auto& e : params)
      if (e.first == p) return e.second;
    auto v = make_leaf(p->value, record && p->trainable);
    params.emplace_back(p, v);
    return v;
  }

  // accumulate tape gradients back into the parameters
  void harvest() {
    for (auto& [p, v] : params) {
      if (!v->needs_grad || !v->grad.same_shape(p->value)) continue;
      for (std::size_t i = 0; i < p->grad.numel(); ++i) p->grad[i] += v->grad[i];
    }
  }
};

// ---------------------------------------------------------------------------
// Layers
// ---------------------------------------------------------------------------

namespace layers {

inline ParamPtr<float> conv_param(const std::string& name, int cout, int cin, int k, Rng& rng) {
  const double stddev = std::sqrt(2.0 / (cin * k * k));
  auto t = Tensor<float>::random_normal({(std::size_t)cout, (std::size_t)cin, (std::size_t)k,
                                         (std::size_t)k},
                                        rng, 0.0f, (float)stddev);
  return std::make_shared<Parameter<float>>(name, std::move(t));
}

struct Conv2d {
  ParamPtr<float> w;
  int stride = 1, pad = 0;

  Conv2d() = default;
  Conv2d(const std::string& name, int cin, int cout, int k, int stride_, int pad_, Rng& rng)
      : w(conv_param(name + ".w", cout, cin, k, rng)), stride(stride_), pad(pad_) {}

  Var<float> operator()(Tape& t, const Var<float>& x) const {
    return conv2d(x, t.var(w), stride, pad);
  }
};

struct DwConv2d {
  ParamPtr<float> w;
  int stride = 1, pad = 1;

  DwConv2d() = default;
  DwConv2d(const std::string& name, int ch, int k, int stride_, int pad_, Rng& rng)
      : stride(stride_), pad(pad_) {
    const double stddev = std::sqrt(2.0 / (k * k));
    auto t = Tensor<float>::random_normal({(std::size_t)ch, 1, (std::size_t)k, (std::size_t)k},
                                          rng, 0.0f, (float)stddev);
    w = std::make_shared<Parameter<float>>(name + ".w", std::move(t));
  }

  Var<float> operator()(Tape& t, const Var<float>& x) const {
    return depthwise_conv2d(x, t.var(w), stride, pad);
  }
};

struct ConvT2d {
  ParamPtr<float> w;  // [Cin, Cout, 4, 4]
  int stride = 2;

  ConvT2d() = default;
  ConvT2d(const std::string& name, int cin, int cout, Rng& rng) {
    const int k = 4;
    const double stddev = std::sqrt(2.0 / (cin * k * k));
    auto t = Tensor<float>::random_normal({(std::size_t)cin, (std::size_t)cout, (std::size_t)k,
                                           (std::size_t)k},
                                          rng, 0.0f, (float)stddev);
    w = std::make_shared<Parameter<float>>(name + ".w", std::move(t));
  }

  Var<float> operator()(Tape& t, const Var<float>& x) const {
    return conv2d_transpose(x, t.var(w), stride);
  }
};

struct BatchNorm2d {
  ParamPtr<float> gamma, beta;
  Tensor<float> running_mean, running_var;
  std::string name;
  bool frozen_stats = false;
  float momentum = 0.1f, eps = 1e-5f;

  BatchNorm2d() = default;
  BatchNorm2d(const std::string& name_, int ch)
      : gamma(std::make_shared<Parameter<float>>(name_ + ".gamma",
                                                 Tensor<float>::full({(std::size_t)ch}, 1.0f))),
        beta(std::make_shared<Parameter<float>>(name_ + ".beta", Tensor<float>({(std::size_t)ch}))),
        running_mean({(std::size_t)ch}),
        running_var(Tensor<float>::full({(std::size_t)ch}, 1.0f)),
        name(name_) {}

  Var<float> operator()(Tape& t, const Var<float>& x) {
    const bool train_mode = t.training && !frozen_stats;
    return batch_norm(x, t.var(gamma), t.var(beta), running_mean, running_var, train_mode,
                      momentum, eps);
  }

  void freeze() {
    frozen_stats = true;
    gamma->trainable = false;
    beta->trainable = false;
  }
};

// MobileNetV2-style block: 1x1 expand -> 3x3 depthwise (stride 2) ->
// 1x1 project. Every stage here downsamples, so there is no residual path.
struct InvertedResidual {
  std::optional<Conv2d> expand;
  std::optional<BatchNorm2d> bn1;
  DwConv2d dw;
  BatchNorm2d bn2;
  Conv2d project;
  BatchNorm2d bn3;

  InvertedResidual() = default;
  InvertedResidual(const std::string& name, int cin, int cout, int expansion, Rng& rng) {
    const int mid = cin * expansion;
    if (expansion != 1) {
      expand.emplace(name + ".expand", cin, mid, 1, 1, 0, rng);
      bn1.emplace(name + ".bn1", mid);
    }
    dw = DwConv2d(name + ".dw", mid, 3, 2, 1, rng);
    bn2 = BatchNorm2d(name + ".bn2", mid);
    project = Conv2d(name + ".project", mid, cout, 1, 1, 0, rng);
    bn3 = BatchNorm2d(name + ".bn3", cout);
  }

  Var<float> operator()(Tape& t, Var<float> x) {
    if (expand) x = relu6((*bn1)(t, (*expand)(t, x)));
    x = relu6(bn2(t, dw(t, x)));
    return bn3(t, project(t, x));  // linear bottleneck: no activation
  }

  template <typename F>
  void for_each_bn(F&& f) {
    if (bn1) f(*bn1);
    f(bn2);
    f(bn3);
  }

  void append_params(std::vector<ParamPtr<float>>& out) const {
    if (expand) {
      out.push_back(expand->w);
      out.push_back(bn1->gamma);
      out.push_back(bn1->beta);
    }
    out.push_back(dw.w);
    out.push_back(bn2.gamma);
    out.push_back(bn2.beta);
    out.push_back(project.w);
    out.push_back(bn3.gamma);
    out.push_back(bn3.beta);
  }
};

// Upsampler block: transposed conv (x2) -> concat skip -> 1x1 conv -> BN ->
// relu6.
struct Upsampler {
  ConvT2d up;
  Conv2d pw;
  BatchNorm2d bn;

  Upsampler() = default;
  Upsampler(const std::string& name, int cin, int skip_ch, int cout, Rng& rng)
      : up(name + ".up", cin, cout, rng),
        pw(name + ".pw", cout + skip_ch, cout, 1, 1, 0, rng),
        bn(name + ".bn", cout) {}

  Var<float> operator()(Tape& t, const Var<float>& x, const Var<float>& skip) {
    auto u = up(t, x);
    auto c = concat_channels(u, skip);
    return relu6(bn(t, pw(t, c)));
  }

  void append_params(std::vector<ParamPtr<float>>& out) const {
    out.push_back(up.w);
    out.push_back(pw.w);
    out.push_back(bn.gamma);
    out.push_back(bn.beta);
  }
};

}  // namespace layers

// ---------------------------------------------------------------------------
// SDL-Net
// ---------------------------------------------------------------------------

class SDLNet {
 public:
  SDLNet() = default;
  SDLNet(const SDLNet&) = delete;  // parameters are uniquely owned; use clone()
  SDLNet& operator=(const SDLNet&) = delete;
  SDLNet(SDLNet&&) = default;
  SDLNet& operator=(SDLNet&&) = default;

  static SDLNet build(ModelConfig cfg, std::uint64_t seed) {
    cfg.resolve();
    cfg.validate();
    SDLNet m;
    m.cfg_ = cfg;
    Rng rng(seed, 0x5D1);
    const auto& bc = cfg.backbone_channels;
    const auto& uc = cfg.upsampler_channels;
    m.stem_ = layers::Conv2d("stem", 3, bc[0], 3, 2, 1, rng);
    m.stem_bn_ = layers::BatchNorm2d("stem.bn", bc[0]);
    for (int s = 0; s < 4; ++s)
      m.stages_[(std::size_t)s] =
          layers::InvertedResidual("stage" + std::to_string(s + 1), bc[(std::size_t)s],
                                   bc[(std::size_t)s + 1], ModelConfig::kStageExpansion[(std::size_t)s], rng);
    // skips, bottom-up: stage3 out, stage2 out, stage1 out, stem out
    const int skip_ch[4] = {bc[3], bc[2], bc[1], bc[0]};
    int in_ch = bc[4];
    for (int u = 0; u < 4; ++u) {
      m.ups_[(std::size_t)u] = layers::Upsampler("up" + std::to_string(u + 1), in_ch,
                                                 skip_ch[u], uc[(std::size_t)u], rng);
      in_ch = uc[(std::size_t)u];
    }
    m.head_ = layers::ConvT2d("head", in_ch, cfg.out_channels, rng);
    // bias so the initial sigmoid output sits near the mostly-zero targets
    const float p0 = 0.01f;
    auto bias = Tensor<float>::full({(std::size_t)cfg.out_channels}, std::log(p0 / (1.0f - p0)));
    m.head_bias_ = std::make_shared<Parameter<float>>("head.b", std::move(bias));
    return m;
  }

  const ModelConfig& config() const { return cfg_; }

  Var<float> forward(Tape& t, const Var<float>& input) {
    check_input(input->value);
    auto x0 = relu6(stem_bn_(t, stem_(t, input)));   // S/2
    auto x1 = stages_[0](t, x0);                     // S/4
    auto x2 = stages_[1](t, x1);                     // S/8
    auto x3 = stages_[2](t, x2);                     // S/16
    auto x4 = stages_[3](t, x3);                     // S/32
    auto u1 = ups_[0](t, x4, x3);                    // S/16
    auto u2 = ups_[1](t, u1, x2);                    // S/8
    auto u3 = ups_[2](t, u2, x1);                    // S/4
    auto u4 = ups_[3](t, u3, x0);                    // S/2
    return sigmoid(bias_add(head_(t, u4), t.var(head_bias_)));  // S, 4 channels
  }

  // inference without graph recording; batch norm in eval mode
  Tensor<float> forward_eval(const Tensor<float>& input) {
    Tape t;
    t.training = false;
    t.record = false;
    return forward(t, make_constant(input))->value;
  }

  // eval-mode activation at the encoder/decoder boundary of a split
  Tensor<float> forward_to_split(const Tensor<float>& input, SplitPoint sp) {
    check_input(input);
    Tape t;
    t.training = false;
    t.record = false;
    auto x0 = relu6(stem_bn_(t, stem_(t, make_constant(input))));
    std::array<Var<float>, 4> skips;
    auto x = x0;
    skips[3] = x0;
    for (int s = 0; s < 4; ++s) {
      x = stages_[(std::size_t)s](t, x);
      if (s < 3) skips[(std::size_t)(2 - s)] = x;
    }
    const int k = split_index(sp);
    for (int u = 0; u < k; ++u) x = ups_[(std::size_t)u](t, x, skips[(std::size_t)u]);
    return x->value;
  }

  // {backbone, up1, up2, up3, up4, head} in deterministic order
  std::vector<std::vector<ParamPtr<float>>> parameter_groups() const {
    std::vector<std::vector<ParamPtr<float>>> groups(6);
    auto& bb = groups[0];
    bb.push_back(stem_.w);
    bb.push_back(stem_bn_.gamma);
    bb.push_back(stem_bn_.beta);
    for (const auto& st : stages_) st.append_params(bb);
    for (int u = 0; u < 4; ++u) ups_[(std::size_t)u].append_params(groups[(std::size_t)u + 1]);
    groups[5].push_back(head_.w);
    groups[5].push_back(head_bias_);
    return groups;
  }

  std::vector<ParamPtr<float>> parameters() const {
    std::vector<ParamPtr<float>> out;
    for (auto& g : parameter_groups()) out.insert(out.end(), g.begin(), g.end());
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : parameters()) n += p->value.numel();
    return n;
  }

  // named running statistics, deterministic order
  std::vector<std::pair<std::string, Tensor<float>*>> buffers() {
    std::vector<std::pair<std::string, Tensor<float>*>> out;
    auto add = [&out](layers::BatchNorm2d& bn) {
      out.emplace_back(bn.name + ".running_mean", &bn.running_mean);
      out.emplace_back(bn.name + ".running_var", &bn.running_var);
    };
    add(stem_bn_);
    for (auto& st : stages_) st.for_each_bn(add);
    for (auto& up : ups_) add(up.bn);
    return out;
  }

  // encoder = backbone plus the first k upsamplers; decoder = the rest
  std::pair<std::vector<ParamPtr<float>>, std::vector<ParamPtr<float>>> split_parameters(
      SplitPoint sp) const {
    auto groups = parameter_groups();
    const int k = split_index(sp);
    std::pair<std::vector<ParamPtr<float>>, std::vector<ParamPtr<float>>> out;
    for (int g = 0; g < 6; ++g) {
      auto& dst = (g == 0 || g <= k) ? out.first : out.second;
      dst.insert(dst.end(), groups[(std::size_t)g].begin(), groups[(std::size_t)g].end());
    }
    return out;
  }

  // Freeze every encoder-side parameter and force the encoder batch norms
  // to eval mode so the encoder becomes a pure function of its input.
  void freeze_encoder(SplitPoint sp) {
    auto [enc, dec] = split_parameters(sp);
    (void)dec;
    for (auto& p : enc) p->trainable = false;
    stem_bn_.freeze();
    for (auto& st : stages_) st.for_each_bn([](layers::BatchNorm2d& bn) { bn.freeze(); });
    for (int u = 0; u < split_index(sp); ++u) ups_[(std::size_t)u].bn.freeze();
  }

  // copy all parameters and running stats from another model (same config)
  void init_from(const SDLNet& src) {
    if (!(cfg_ == src.cfg_))
      throw std::invalid_argument("init_from: model configurations differ");
    auto dst_p = parameters();
    auto src_p = src.parameters();
    for (std::size_t i = 0; i < dst_p.size(); ++i) dst_p[i]->value = src_p[i]->value;
    auto dst_b = buffers();
    auto src_b = const_cast<SDLNet&>(src).buffers();
    for (std::size_t i = 0; i < dst_b.size(); ++i) *dst_b[i].second = *src_b[i].second;
  }

  SDLNet clone() const {
    SDLNet m = build(cfg_, 0);
    m.init_from(*this);
    return m;
  }

 private:
  void check_input(const Tensor<float>& x) const {
    if (x.rank() != 4 || x.dim(1) != 3 || (int)x.dim(2) != cfg_.input_size ||
        (int)x.dim(3) != cfg_.input_size)
      throw std::invalid_argument("SDLNet: input must be [B,3," +
                                  std::to_string(cfg_.input_size) + "," +
                                  std::to_string(cfg_.input_size) + "], got " + x.shape_string());
  }

  ModelConfig cfg_;
  layers::Conv2d stem_;
  layers::BatchNorm2d stem_bn_;
  std::array<layers::InvertedResidual, 4> stages_;
  std::array<layers::Upsampler, 4> ups_;
  layers::ConvT2d head_;
  ParamPtr<float> head_bias_;
};

// ---------------------------------------------------------------------------
// Checkpoint I/O: little-endian binary, magic "SDLN", versioned header with
// the config as key=value text and an FNV-1a checksum of the payload.
// ---------------------------------------------------------------------------

namespace ckpt_detail {

constexpr std::uint32_t kVersion = 1;

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back((char)((v >> (8 * i)) & 0xFF));
}
inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back((char)((v >> (8 * i)) & 0xFF));
}
inline void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;
  const std::string& what;

  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw std::runtime_error(what + ": truncated checkpoint");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= (std::uint32_t)(std::uint8_t)buf[pos++] << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= (std::uint64_t)(std::uint8_t)buf[pos++] << (8 * i);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

inline std::uint64_t fnv1a(const std::string& s, std::size_t from) {
  std::uint64_t h = 1469598103934665603ull;
  for (std::size_t i = from; i < s.size(); ++i) {
    h ^= (std::uint8_t)s[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline void append_record(std::string& out, const std::string& name, const Tensor<float>& t) {
  put_u32(out, (std::uint32_t)name.size());
  out += name;
  put_u32(out, (std::uint32_t)t.rank());
  for (std::size_t d = 0; d < t.rank(); ++d) put_u64(out, t.dim(d));
  for (std::size_t i = 0; i < t.numel(); ++i) put_f32(out, t[i]);
}

}  // namespace ckpt_detail

inline void save_checkpoint(SDLNet& model, const std::string& path) {
  using namespace ckpt_detail;
  std::string payload;
  std::uint32_t count = 0;
  for (const auto& p : model.parameters()) {
    append_record(payload, p->name, p->value);
    ++count;
  }
  for (auto& [name, buf] : model.buffers()) {
    append_record(payload, name, *buf);
    ++count;
  }

  std::string out = "SDLN";
  put_u32(out, kVersion);
  const std::string cfg = model.config().to_text();
  put_u32(out, (std::uint32_t)cfg.size());
  out += cfg;
  put_u32(out, count);
  put_u64(out, fnv1a(payload, 0));
  out += payload;

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_checkpoint: cannot open " + path);
  f.write(out.data(), (std::streamsize)out.size());
  if (!f) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

inline SDLNet load_checkpoint(const std::string& path) {
  using namespace ckpt_detail;
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_checkpoint: cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  Reader r{buf, 0, path};

  if (r.bytes(4) != "SDLN") throw std::runtime_error(path + ": not an SDLN checkpoint");
  const std::uint32_t version = r.u32();
  if (version != kVersion)
    throw std::runtime_error(path + ": unsupported checkpoint version " +
                             std::to_string(version));
  const std::uint32_t cfg_len = r.u32();
  ModelConfig cfg = ModelConfig::from_text(r.bytes(cfg_len));
  const std::uint32_t count = r.u32();
  const std::uint64_t checksum = r.u64();
  if (fnv1a(buf, r.pos) != checksum)
    throw std::runtime_error(path + ": checkpoint checksum mismatch");

  std::map<std::string, Tensor<float>> records;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = r.u32();
    const std::string name = r.bytes(name_len);
    const std::uint32_t rank = r.u32();
    std::vector<std::size_t> shape;
    std::size_t numel = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      shape.push_back((std::size_t)r.u64());
      numel *= shape.back();
    }
    Tensor<float> t(shape);
    for (std::size_t j = 0; j < numel; ++j) t[j] = r.f32();
    records.emplace(name, std::move(t));
  }

  SDLNet model = SDLNet::build(cfg, 0);
  for (auto& p : model.parameters()) {
    auto it = records.find(p->name);
    if (it == records.end())
      throw std::runtime_error(path + ": checkpoint missing parameter " + p->name);
    if (!it->second.same_shape(p->value))
      throw std::runtime_error(path + ": shape mismatch for " + p->name);
    p->value = it->second;
  }
  for (auto& [name, bufp] : model.buffers()) {
    auto it = records.find(name);
    if (it == records.end())
      throw std::runtime_error(path + ": checkpoint missing buffer " + name);
    *bufp = it->second;
  }
  return model;
}

inline void init_from_checkpoint(SDLNet& target, const std::string& path) {
  SDLNet src = load_checkpoint(path);
  if (!(src.config() == target.config()))
    throw std::invalid_argument("init_from: checkpoint config does not match model (" + path +
                                ")");
  target.init_from(src);
}

}  // namespace sdlnet
