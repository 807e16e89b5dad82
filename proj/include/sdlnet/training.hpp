#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdlnet/geometry.hpp"
#include "sdlnet/model.hpp"
#include "sdlnet/synthdocs.hpp"

namespace sdlnet {

struct TrainConfig {
  float lr = 2e-4f;
  int batch_size = 16;
  int max_epochs = 100;    // full-scale reference budget is 1000 with early stopping
  int patience = 20;
  std::uint64_t seed = 0;
  double sigma = 0;        // <= 0: max(1.5, 0.02 * input_size)
  int input_size = 64;
  double score_threshold = 0.3;
};

struct EpochStats {
  double train_loss = 0;
  double val_loss = 0;
  double seconds = 0;
};

struct History {
  std::vector<EpochStats> epochs;
  int best_epoch = 0;  // 1-based
  double best_val_loss = std::numeric_limits<double>::infinity();
  double total_seconds = 0;

  int epochs_run() const { return (int)epochs.size(); }
};

namespace train_detail {

struct Prepared {
  std::vector<Tensor<float>> inputs;   // [3,S,S] each
  std::vector<Tensor<float>> targets;  // [4,S,S] each
};

inline Prepared prepare(const std::vector<Sample>& samples, int size, double sigma) {
  Prepared out;
  out.inputs.reserve(samples.size());
  out.targets.reserve(samples.size());
  for (const auto& s : samples) {
    if (s.image.width != size || s.image.height != size)
      throw std::invalid_argument("train: sample image is " + std::to_string(s.image.width) +
                                  "px, model expects " + std::to_string(size));
    out.inputs.push_back(s.image.to_tensor());
    out.targets.push_back(encode_targets(s.label, size, sigma));
  }
  return out;
}

inline Tensor<float> gather(const std::vector<Tensor<float>>& items,
                            const std::vector<int>& order, std::size_t from, std::size_t to) {
  const auto& shape = items[(std::size_t)order[from]].shape();
  std::vector<std::size_t> bshape = {to - from};
  bshape.insert(bshape.end(), shape.begin(), shape.end());
  Tensor<float> batch(bshape);
  const std::size_t stride = items[(std::size_t)order[from]].numel();
  for (std::size_t i = from; i < to; ++i)
    std::memcpy(batch.data() + (i - from) * stride, items[(std::size_t)order[i]].data(),
                stride * sizeof(float));
  return batch;
}

struct Snapshot {
  std::vector<Tensor<float>> params;
  std::vector<Tensor<float>> buffers;

  static Snapshot take(SDLNet& m) {
    Snapshot s;
    for (const auto& p : m.parameters()) s.params.push_back(p->value);
    for (auto& [name, buf] : m.buffers()) s.buffers.push_back(*buf);
    return s;
  }
  void restore(SDLNet& m) const {
    auto ps = m.parameters();
    for (std::size_t i = 0; i < ps.size(); ++i) ps[i]->value = params[i];
    auto bs = m.buffers();
    for (std::size_t i = 0; i < bs.size(); ++i) *bs[i].second = buffers[i];
  }
};

}  // namespace train_detail

using EpochCallback = std::function<void(int epoch, const EpochStats&)>;

// MSE training over heatmap targets with per-epoch seeded shuffling, Adam on
// the given parameter selection, early stopping on validation loss, and
// best-weights restoration. Aborts on a non-finite loss, naming the batch.
inline History train(SDLNet& model, const std::vector<ParamPtr<float>>& selection,
                     const std::vector<Sample>& train_set, const std::vector<Sample>& val_set,
                     const TrainConfig& cfg, const EpochCallback& on_epoch = nullptr) {
  if (train_set.empty() || val_set.empty())
    throw std::invalid_argument("train: train and validation sets must be non-empty");
  if (cfg.batch_size < 1 || cfg.max_epochs < 1 || cfg.patience < 1 || cfg.lr <= 0)
    throw std::invalid_argument("train: bad config (batch, epochs, patience, lr)");
  const int S = model.config().input_size;
  const double sigma = cfg.sigma > 0 ? cfg.sigma : default_sigma(S);

  auto tr = train_detail::prepare(train_set, S, sigma);
  auto va = train_detail::prepare(val_set, S, sigma);

  AdamState<float> adam(selection, cfg.lr);
  History hist;
  const auto t_start = std::chrono::steady_clock::now();

  std::vector<int> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[(std::size_t)i] = (int)i;
  std::vector<int> val_order(val_set.size());
  for (std::size_t i = 0; i < val_order.size(); ++i) val_order[(std::size_t)i] = (int)i;

  train_detail::Snapshot best;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto t_epoch = std::chrono::steady_clock::now();
    Rng shuffle_rng(cfg.seed, 0xE70C000 + (std::uint64_t)epoch);
    shuffle_rng.shuffle(order.begin(), order.end());

    double loss_sum = 0;
    for (std::size_t from = 0; from < order.size(); from += (std::size_t)cfg.batch_size) {
      const std::size_t to = std::min(order.size(), from + (std::size_t)cfg.batch_size);
      Tape tape;
      tape.training = true;
      auto out = model.forward(tape, make_constant(train_detail::gather(tr.inputs, order, from, to)));
      auto loss = mse_loss(out, make_constant(train_detail::gather(tr.targets, order, from, to)));
      const double lv = loss->value[0];
      if (!std::isfinite(lv))
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                 ", batch " + std::to_string(from / (std::size_t)cfg.batch_size));
      backward(loss);
      for (const auto& p : selection) p->zero_grad();
      tape.harvest();
      adam_step(adam);
      loss_sum += lv * (double)(to - from);
    }

    double val_sum = 0;
    for (std::size_t from = 0; from < val_order.size(); from += (std::size_t)cfg.batch_size) {
      const std::size_t to = std::min(val_order.size(), from + (std::size_t)cfg.batch_size);
      auto out = model.forward_eval(train_detail::gather(va.inputs, val_order, from, to));
      val_sum += (double)kernels::mse_loss(out, train_detail::gather(va.targets, val_order, from, to)) *
                 (double)(to - from);
    }

    EpochStats st;
    st.train_loss = loss_sum / (double)order.size();
    st.val_loss = val_sum / (double)val_order.size();
    st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_epoch).count();
    hist.epochs.push_back(st);
    if (on_epoch) on_epoch(epoch, st);

    if (st.val_loss < hist.best_val_loss) {
      hist.best_val_loss = st.val_loss;
      hist.best_epoch = epoch;
      best = train_detail::Snapshot::take(model);
    }
    if (epoch - hist.best_epoch >= cfg.patience) break;
  }
  if (hist.best_epoch > 0) best.restore(model);
  hist.total_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return hist;
}

// convenience selections
inline History train_all(SDLNet& model, const std::vector<Sample>& train_set,
                         const std::vector<Sample>& val_set, const TrainConfig& cfg,
                         const EpochCallback& on_epoch = nullptr) {
  return train(model, model.parameters(), train_set, val_set, cfg, on_epoch);
}

// Freeze the encoder at the split and fine-tune only the decoder side.
inline History finetune_decoder(SDLNet& model, SplitPoint split,
                                const std::vector<Sample>& train_set,
                                const std::vector<Sample>& val_set, const TrainConfig& cfg,
                                const EpochCallback& on_epoch = nullptr) {
  model.freeze_encoder(split);
  auto [enc, dec] = model.split_parameters(split);
  (void)enc;
  return train(model, dec, train_set, val_set, cfg, on_epoch);
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

struct EvalMetrics {
  std::vector<double> ious;  // one per sample; invalid detections contribute 0
  double iou_mean = 0, iou_std = 0, iou_median = 0;
  std::array<double, 4> corner_score_mean{};
  double score_mean = 0;        // over all corners and samples
  double score_min_mean = 0;    // document score: min over the 4 corners
  double score_min_median = 0;
  int invalid_count = 0;
};

namespace train_detail {

inline double median(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace train_detail

// Score a list of (heatmap stack, label) pairs. Exposed separately so tests
// can feed targets straight through as if the model had produced them.
inline EvalMetrics evaluate_stacks(const std::vector<std::pair<Tensor<float>, Quadrangle>>& items,
                                   double score_threshold) {
  EvalMetrics m;
  std::vector<double> mins;
  for (const auto& [stack, label] : items) {
    Detection det = decode_quadrangle(stack, score_threshold);
    double iou = 0;
    if (det.valid)
      iou = quad_iou(label, det.quad);
    else
      m.invalid_count += 1;
    m.ious.push_back(iou);
    double mn = 1e300;
    for (int c = 0; c < 4; ++c) {
      m.corner_score_mean[(std::size_t)c] += det.scores[(std::size_t)c];
      m.score_mean += det.scores[(std::size_t)c];
      mn = std::min(mn, det.scores[(std::size_t)c]);
    }
    mins.push_back(mn);
  }
  const double n = (double)items.size();
  if (n > 0) {
    for (auto& s : m.corner_score_mean) s /= n;
    m.score_mean /= 4 * n;
    for (double v : mins) m.score_min_mean += v / n;
    m.score_min_median = train_detail::median(mins);
    double mean = 0;
    for (double v : m.ious) mean += v / n;
    m.iou_mean = mean;
    double var = 0;
    for (double v : m.ious) var += (v - mean) * (v - mean) / n;
    m.iou_std = std::sqrt(var);
    m.iou_median = train_detail::median(m.ious);
  }
  return m;
}

inline EvalMetrics evaluate(SDLNet& model, const std::vector<Sample>& test,
                            double score_threshold, int batch_size = 16) {
  const int S = model.config().input_size;
  std::vector<std::pair<Tensor<float>, Quadrangle>> items;
  items.reserve(test.size());
  for (std::size_t from = 0; from < test.size(); from += (std::size_t)batch_size) {
    const std::size_t to = std::min(test.size(), from + (std::size_t)batch_size);
    Tensor<float> batch({to - from, 3, (std::size_t)S, (std::size_t)S});
    for (std::size_t i = from; i < to; ++i) {
      auto t = test[i].image.to_tensor();
      std::memcpy(batch.data() + (i - from) * t.numel(), t.data(), t.numel() * sizeof(float));
    }
    auto out = model.forward_eval(batch);
    const std::size_t plane = (std::size_t)4 * S * S;
    for (std::size_t i = from; i < to; ++i) {
      Tensor<float> stack({4, (std::size_t)S, (std::size_t)S});
      std::memcpy(stack.data(), out.data() + (i - from) * plane, plane * sizeof(float));
      items.emplace_back(std::move(stack), test[i].label);
    }
  }
  return evaluate_stacks(items, score_threshold);
}

}  // namespace sdlnet
