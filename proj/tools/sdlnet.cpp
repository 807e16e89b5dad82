// sdlnet command-line tool: dataset generation, training, fine-tuning,
// evaluation, rectification, and the two experiment protocols.
//
// Exit codes: 0 success, 1 input/config error, 2 run succeeded but the
// detection fell below the confidence threshold.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "sdlnet/experiments.hpp"
#include "sdlnet/quad_json.hpp"

namespace fs = std::filesystem;
using namespace sdlnet;

namespace {

std::vector<std::string> split_csv_list(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string item;
  while (std::getline(is, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// the resolved configuration a run can be reproduced from
void write_resolved_config(CLI::App& app, const fs::path& path) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream f(path);
  f << app.config_to_str(true, false);
}

void print_metrics(const EvalMetrics& m) {
  std::printf("samples:        %zu\n", m.ious.size());
  std::printf("iou mean/std:   %.4f / %.4f\n", m.iou_mean, m.iou_std);
  std::printf("iou median:     %.4f\n", m.iou_median);
  std::printf("score mean:     %.4f\n", m.score_mean);
  std::printf("doc score mean: %.4f (min over the 4 corners)\n", m.score_min_mean);
  std::printf("invalid:        %d\n", m.invalid_count);
}

EpochCallback progress_printer(int every) {
  return [every](int epoch, const EpochStats& st) {
    if (epoch % every == 0)
      std::fprintf(stderr, "epoch %4d  train %.6f  val %.6f  (%.2fs)\n", epoch, st.train_loss,
                   st.val_loss, st.seconds);
  };
}

std::vector<Sample> class_part(const std::map<std::string, DatasetSplit>& data,
                               const std::string& class_id, const std::string& part) {
  if (!data.count(class_id))
    throw std::runtime_error("class \"" + class_id + "\" not present in the dataset");
  const auto& split = data.at(class_id);
  if (part == "train") return split.train;
  if (part == "validation") return split.validation;
  if (part == "test") return split.test;
  throw std::runtime_error("unknown dataset part \"" + part + "\"");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SDL-Net: structured document localization at desk scale"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key = value config file; # comments allowed");
  app.get_config_formatter_base()->comment('#');

  // ---- gen-data -----------------------------------------------------------
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic document dataset");
  struct {
    std::string out;
    int n = 1000;
    std::uint64_t seed = 0;
    int size = 64;
    double magnitude = 0.18;
  } g;
  gen->add_option("--out", g.out, "output dataset directory")->required();
  gen->add_option("--n", g.n, "total number of samples");
  gen->add_option("--seed", g.seed, "generation seed")->envname("SDLNET_SEED");
  gen->add_option("--size", g.size, "image size in pixels");
  gen->add_option("--magnitude", g.magnitude, "max perspective magnitude in [0,0.25]");

  // ---- train --------------------------------------------------------------
  auto* tr = app.add_subcommand("train", "train a full model from scratch");
  struct {
    std::string data, out, classes;
    TrainConfig cfg;
    double width_mult = 0.25;
    std::uint64_t model_seed = 0;
  } t;
  tr->add_option("--data", t.data, "dataset directory")->required();
  tr->add_option("--out", t.out, "output checkpoint path")->required();
  tr->add_option("--classes", t.classes, "comma-separated class list (default: all)");
  tr->add_option("--epochs", t.cfg.max_epochs, "max epochs");
  tr->add_option("--batch", t.cfg.batch_size, "batch size");
  tr->add_option("--lr", t.cfg.lr, "learning rate");
  tr->add_option("--patience", t.cfg.patience, "early-stop patience");
  tr->add_option("--sigma", t.cfg.sigma, "heatmap sigma in pixels (0 = auto)");
  tr->add_option("--seed", t.cfg.seed, "training/init seed")->envname("SDLNET_SEED");
  tr->add_option("--width-mult", t.width_mult, "model width multiplier");

  // ---- finetune -----------------------------------------------------------
  auto* ft = app.add_subcommand("finetune", "fine-tune the decoder on one class");
  struct {
    std::string init, data, out, cls;
    int split = 1;
    int fraction = 100;
    TrainConfig cfg;
  } f;
  ft->add_option("--init", f.init, "pre-trained checkpoint")->required();
  ft->add_option("--data", f.data, "dataset directory")->required();
  ft->add_option("--out", f.out, "output checkpoint path")->required();
  ft->add_option("--class", f.cls, "document class to fine-tune on")->required();
  ft->add_option("--split", f.split, "encoder/decoder split: 0 (middle), 1, 2 or 3");
  ft->add_option("--fraction", f.fraction, "percent of the class train set to use")
      ->check(CLI::Range(1, 100));
  ft->add_option("--epochs", f.cfg.max_epochs, "max epochs");
  ft->add_option("--batch", f.cfg.batch_size, "batch size");
  ft->add_option("--lr", f.cfg.lr, "learning rate");
  ft->add_option("--patience", f.cfg.patience, "early-stop patience");
  ft->add_option("--sigma", f.cfg.sigma, "heatmap sigma in pixels (0 = auto)");
  ft->add_option("--seed", f.cfg.seed, "training seed")->envname("SDLNET_SEED");

  // ---- eval ---------------------------------------------------------------
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset class");
  struct {
    std::string model, data, cls, part = "test", csv;
    double threshold = 0.3;
  } e;
  ev->add_option("--model", e.model, "checkpoint path")->required();
  ev->add_option("--data", e.data, "dataset directory")->required();
  ev->add_option("--class", e.cls, "document class")->required();
  ev->add_option("--part", e.part, "train | validation | test");
  ev->add_option("--csv", e.csv, "metrics CSV output path (default: <model>.eval.csv)");
  ev->add_option("--threshold", e.threshold, "corner score threshold");

  // ---- rectify ------------------------------------------------------------
  auto* rc = app.add_subcommand("rectify", "detect a document and rectify it");
  struct {
    std::string model, image, out, quad;
    int height = 0;  // 0: derived from the detected quadrangle
    double threshold = 0.3;
  } r;
  rc->add_option("--model", r.model, "checkpoint path (unless --quad is given)");
  rc->add_option("--image", r.image, "input image (PNG)")->required();
  rc->add_option("--out", r.out, "rectified PNG output path")->required();
  rc->add_option("--quad", r.quad, "quadrangle JSON {\"tl\":[x,y],...} to skip detection");
  rc->add_option("--height", r.height, "target rectangle height (0 = natural)");
  rc->add_option("--threshold", r.threshold, "corner score threshold");

  // ---- experiment ---------------------------------------------------------
  auto* ex = app.add_subcommand("experiment", "run a full study and emit results.csv + figures");
  struct {
    std::string mode, data;
    ExperimentConfig cfg;
    bool no_resume = false;
  } x;
  ex->add_option("mode", x.mode, "splits | generalization")
      ->required()
      ->check(CLI::IsMember({"splits", "generalization"}));
  ex->add_option("--data", x.data, "dataset directory")->required();
  ex->add_option("--out", x.cfg.out_dir, "output directory")->required();
  ex->add_option("--pretrain-epochs", x.cfg.pretrain_epochs, "pre-train epoch budget");
  ex->add_option("--finetune-epochs", x.cfg.finetune_epochs, "fine-tune epoch budget");
  ex->add_option("--patience", x.cfg.patience, "early-stop patience");
  ex->add_option("--lr", x.cfg.lr, "learning rate");
  ex->add_option("--batch", x.cfg.batch_size, "batch size");
  ex->add_option("--seed", x.cfg.seed, "experiment seed")->envname("SDLNET_SEED");
  ex->add_option("--sigma", x.cfg.sigma, "heatmap sigma (0 = auto)");
  ex->add_option("--threshold", x.cfg.score_threshold, "corner score threshold");
  ex->add_option("--split", x.cfg.gen_split, "split used by the generalization study")
      ->check(CLI::Range(0, 3));
  ex->add_option("--holdout", x.cfg.holdout_class, "holdout class for generalization");
  ex->add_option("--width-mult", x.cfg.width_multiplier, "model width multiplier");
  ex->add_option("--jobs", x.cfg.jobs, "parallel experiment cells")->check(CLI::Range(1, 64));
  ex->add_flag("--no-resume", x.no_resume, "recompute cells even if cached");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      GenerationConfig cfg;
      cfg.n = g.n;
      cfg.size = g.size;
      cfg.seed = g.seed;
      cfg.magnitude = g.magnitude;
      auto data = generate_dataset(cfg);
      save_dataset(data, g.out, cfg);
      write_resolved_config(app, fs::path(g.out) / "run_config.ini");
      std::size_t total = 0;
      for (auto& [id, split] : data)
        total += split.train.size() + split.validation.size() + split.test.size();
      std::printf("wrote %zu samples to %s\n", total, g.out.c_str());
      return 0;
    }

    if (*tr) {
      auto data = load_dataset(t.data);
      std::vector<std::string> classes =
          t.classes.empty() ? std::vector<std::string>{} : split_csv_list(t.classes);
      if (classes.empty())
        for (auto& [id, split] : data) classes.push_back(id);
      std::vector<Sample> train_set, val_set;
      for (const auto& c : classes) {
        auto tr_part = class_part(data, c, "train");
        auto va_part = class_part(data, c, "validation");
        train_set.insert(train_set.end(), tr_part.begin(), tr_part.end());
        val_set.insert(val_set.end(), va_part.begin(), va_part.end());
      }
      if (train_set.empty()) throw std::runtime_error("no training samples selected");
      ModelConfig mc;
      mc.input_size = train_set.front().image.width;
      mc.width_multiplier = t.width_mult;
      t.cfg.input_size = mc.input_size;
      auto model = SDLNet::build(mc, t.cfg.seed);
      auto hist = train_all(model, train_set, val_set, t.cfg, progress_printer(10));
      save_checkpoint(model, t.out);
      write_resolved_config(app, t.out + ".config");
      std::printf("trained %d epochs (best %d, val %.6f), checkpoint: %s\n", hist.epochs_run(),
                  hist.best_epoch, hist.best_val_loss, t.out.c_str());
      return 0;
    }

    if (*ft) {
      auto data = load_dataset(f.data);
      auto model = load_checkpoint(f.init);
      f.cfg.input_size = model.config().input_size;
      auto train_full = class_part(data, f.cls, "train");
      auto subset = exp_detail::fraction_prefix(train_full, f.fraction, f.cfg.seed);
      auto hist = finetune_decoder(model, split_from_index(f.split), subset,
                                   class_part(data, f.cls, "validation"), f.cfg,
                                   progress_printer(10));
      save_checkpoint(model, f.out);
      write_resolved_config(app, f.out + ".config");
      std::printf("fine-tuned %d epochs on %zu samples (best %d), checkpoint: %s\n",
                  hist.epochs_run(), subset.size(), hist.best_epoch, f.out.c_str());
      return 0;
    }

    if (*ev) {
      auto data = load_dataset(e.data);
      auto model = load_checkpoint(e.model);
      auto m = evaluate(model, class_part(data, e.cls, e.part), e.threshold);
      print_metrics(m);
      ExperimentResult row;
      row.id = "eval-" + e.cls + "-" + e.part;
      row.pretrain_classes = "-";
      row.split = "-";
      row.metrics = m;
      const std::string csv_path = e.csv.empty() ? e.model + ".eval.csv" : e.csv;
      write_results_csv({row}, csv_path);
      write_resolved_config(app, csv_path + ".config");
      return 0;
    }

    if (*rc) {
      Image img = load_png(r.image);
      Quadrangle quad;
      std::array<double, 4> scores{1, 1, 1, 1};
      bool valid = true;
      if (!r.quad.empty()) {
        quad = quad_from_json(nlohmann::json::parse(r.quad));
      } else {
        if (r.model.empty())
          throw std::runtime_error("rectify needs --model or an explicit --quad");
        auto model = load_checkpoint(r.model);
        const int S = model.config().input_size;
        Image small = (img.width == S && img.height == S)
                          ? img
                          : resize_bilinear(img, S, S, false);
        Tensor<float> x({1, 3, (std::size_t)S, (std::size_t)S});
        auto tin = small.to_tensor();
        std::memcpy(x.data(), tin.data(), tin.numel() * sizeof(float));
        auto out = model.forward_eval(x);
        Tensor<float> stack({4, (std::size_t)S, (std::size_t)S});
        std::memcpy(stack.data(), out.data(), stack.numel() * sizeof(float));
        Detection det = decode_quadrangle(stack, r.threshold);
        valid = det.valid;
        scores = det.scores;
        // map peaks from model resolution back to the original image
        for (int i = 0; i < 4; ++i) {
          quad[i].x = (det.quad[i].x + 0.5) * img.width / S - 0.5;
          quad[i].y = (det.quad[i].y + 0.5) * img.height / S - 0.5;
        }
      }

      nlohmann::json sidecar;
      sidecar["quad"] = quad_to_json(quad);
      sidecar["scores"] = scores;
      sidecar["valid"] = valid;

      int code = 0;
      if (valid) {
        int height = r.height;
        if (height <= 0)
          height = std::max(2, (int)std::lround(0.5 * (dist(quad[kTL], quad[kBL]) +
                                                       dist(quad[kTR], quad[kBR]))));
        auto res = rectify_detail(img, quad, height);
        save_png(r.out, res.image);
        sidecar["aspect_ratio"] = res.ratio;
        std::printf("rectified %s -> %s (%dx%d)\n", r.image.c_str(), r.out.c_str(),
                    res.image.width, res.image.height);
      } else {
        std::fprintf(stderr, "detection below threshold; no rectified image written\n");
        code = 2;
      }
      std::ofstream sc(r.out + ".json");
      sc << sidecar.dump(2) << "\n";
      write_resolved_config(app, r.out + ".config");
      return code;
    }

    if (*ex) {
      auto data = load_dataset(x.data);
      x.cfg.resume = !x.no_resume;
      fs::create_directories(x.cfg.out_dir);
      write_resolved_config(app, fs::path(x.cfg.out_dir) / "run_config.ini");
      auto rows = x.mode == "splits" ? run_split_experiment(data, x.cfg)
                                     : run_generalization_experiment(data, x.cfg);
      std::printf("wrote %zu result rows to %s/results.csv\n", rows.size(),
                  x.cfg.out_dir.c_str());
      return 0;
    }
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 1;
  }
  return 1;
}
