#include "advseg/cli/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "advseg/core/binio.hpp"
#include "advseg/core/ops.hpp"
#include "advseg/data/dataset.hpp"
#include "advseg/data/png_io.hpp"
#include "advseg/data/split.hpp"
#include "advseg/eval/metrics.hpp"
#include "advseg/nn/checkpoint.hpp"
#include "advseg/train/trainer.hpp"

namespace advseg::cli {

namespace fs = std::filesystem;

namespace {

const std::vector<double> kReportThresholds = {0.0, 0.1, 0.2, 0.3, 1.0};

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

bool non_empty_dir(const fs::path& p) {
  return fs::exists(p) && (!fs::is_directory(p) || !fs::is_empty(p));
}

/// Refuses to clobber a non-empty path unless forced; leaves an empty dir.
void prepare_out_dir(const fs::path& out, bool force) {
  if (non_empty_dir(out)) {
    if (!force) {
      throw Error(ErrorKind::InvalidConfig, out.string() + " exists and is not empty (use --force)");
    }
    fs::remove_all(out);
  }
  fs::create_directories(out);
}

void write_text(const fs::path& path, const std::string& text) { write_file_atomic(path, text); }

Dataset load_dataset_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw Error(ErrorKind::InvalidInput, "data directory not found: " + dir.string());
  }
  return load_folder_dataset(dir);
}

std::pair<int, int> parse_size(const std::string& s) {
  int h = 0, w = 0;
  char x = 0;
  std::istringstream in(s);
  if (s.find('x') != std::string::npos) {
    in >> h >> x >> w;
  } else {
    in >> h;
    w = h;
  }
  if (in.fail() || !in.eof() || h < 1 || w < 1) {
    throw Error(ErrorKind::InvalidConfig, "bad --size '" + s + "' (expected N or HxW)");
  }
  return {h, w};
}

struct TrainedModel {
  SegNetConfig seg_cfg;
  NetParams<float> seg;
  std::optional<DiscNetConfig> disc_cfg;
  NetParams<float> disc;
};

TrainedModel load_model(const fs::path& path) {
  if (!fs::is_regular_file(path)) {
    throw Error(ErrorKind::Checkpoint, "checkpoint not found: " + path.string());
  }
  char magic[8] = {};
  {
    std::ifstream in(path, std::ios::binary);
    in.read(magic, sizeof(magic));
  }
  TrainedModel m;
  if (std::string(magic, 8) == "ADVSEGCK") {
    LoadedCheckpoint c = load_checkpoint(path);
    m.seg_cfg = c.config.seg;
    m.seg = std::move(c.state.seg);
    if (c.config.hp.uses_discriminator()) {
      m.disc_cfg = c.config.disc;
      m.disc = std::move(c.state.disc);
    }
  } else {
    LoadedSegNet s = load_seg_net(path);
    m.seg_cfg = s.config;
    m.seg = std::move(s.params);
  }
  return m;
}

bool disc_accepts(const DiscNetConfig& cfg, const Dataset& data) {
  if (cfg.fully_convolutional) return true;
  return std::all_of(data.samples.begin(), data.samples.end(), [&](const Sample& s) {
    return s.image.height() == cfg.input_height && s.image.width() == cfg.input_width;
  });
}

/// metrics.csv, summary.json, exports/ and (with a discriminator)
/// selected_pixels.csv. Returns the mean IU.
double write_eval_outputs(const fs::path& dir, const TrainedModel& m, const Dataset& data) {
  fs::create_directories(dir / "exports");
  const auto palette = voc_palette();
  const ConfusionMatrix cm = evaluate_segmentation(
      m.seg, m.seg_cfg, data, [&](std::size_t i, const ProbabilityMap<float>& prob) {
        export_prediction_png(argmax_labels(prob), palette,
                              dir / "exports" / (data.samples[i].id + "_pred.png"));
        if (m.disc_cfg && disc_accepts(*m.disc_cfg, data)) {
          export_confidence_png(disc_confidence<float>(m.disc, *m.disc_cfg, prob, nullptr),
                                dir / "exports" / (data.samples[i].id + "_conf.png"));
        }
      });
  const IouReport iou = mean_iou(cm);
  write_text(dir / "metrics.csv", metrics_csv(iou));
  write_text(dir / "summary.json", metrics_summary_json(iou, cm));
  if (m.disc_cfg && disc_accepts(*m.disc_cfg, data)) {
    const auto report =
        selected_pixel_report(m.seg, m.seg_cfg, m.disc, *m.disc_cfg, data, kReportThresholds);
    write_text(dir / "selected_pixels.csv", selected_pixel_csv(report));
  }
  return iou.mean;
}

/// Desk defaults or a config file, with the dataset's class count and the
/// command-line overrides applied.
TrainConfig base_config(const std::optional<fs::path>& config_path, const Dataset& data,
                        std::optional<std::uint64_t> seed, std::optional<std::int64_t> iterations) {
  TrainConfig cfg;
  if (config_path) {
    cfg = load_train_config(config_path->string());
    if (cfg.seg.class_count != data.class_count) {
      throw Error(ErrorKind::ConfigMismatch,
                  "config expects " + std::to_string(cfg.seg.class_count) +
                      " classes, dataset has " + std::to_string(data.class_count));
    }
  } else {
    cfg = TrainConfig::desk();
    cfg.seg.class_count = data.class_count;
    cfg.disc.class_count = data.class_count;
  }
  if (seed) cfg.seed = *seed;
  if (iterations) {
    cfg.max_iterations = *iterations;
    cfg.warm_up_iterations = std::min(cfg.warm_up_iterations, cfg.max_iterations);
  }
  return cfg;
}

std::pair<int, int> train_input_size(const TrainConfig& cfg, const Dataset& data) {
  if (cfg.augment) return {cfg.augmentation.crop_h, cfg.augmentation.crop_w};
  if (data.empty()) throw Error(ErrorKind::InvalidInput, "empty dataset");
  return {data.samples.front().image.height(), data.samples.front().image.width()};
}

struct RunOutcome {
  TrainResult result;
  DatasetSplit split;
  double mean_iu = 0.0;
};

/// Trains into `dir` (config.snapshot, train_log.csv, checkpoints/) and
/// evaluates on `eval_set` into the same directory.
RunOutcome train_and_evaluate(const TrainConfig& cfg, const Dataset& data, const Fraction& fraction,
                              const Dataset& eval_set, const fs::path& dir, bool quiet) {
  cfg.validate();
  RunOutcome out;
  out.split = split_labeled(data, fraction, cfg.seed);
  write_text(dir / "config.snapshot", cfg.to_text());
  TrainOptions opts;
  opts.checkpoint_dir = dir / "checkpoints";
  if (!quiet) {
    opts.on_record = [&](const LogRecord& r) {
      if ((r.iter + 1) % 100 == 0 || r.iter + 1 == cfg.max_iterations) {
        std::cout << "iter " << r.iter + 1 << "/" << cfg.max_iterations << "  "
                  << TrainLog::csv_line(r) << '\n'
                  << std::flush;
      }
    };
  }
  out.result = train(data, out.split, cfg, std::move(opts));
  out.result.log.write_csv(dir / "train_log.csv");

  TrainedModel m;
  m.seg_cfg = cfg.seg;
  m.seg = out.result.state.seg;
  if (cfg.hp.uses_discriminator()) {
    m.disc_cfg = cfg.disc;
    m.disc = out.result.state.disc;
  }
  out.mean_iu = write_eval_outputs(dir, m, eval_set);
  return out;
}

}  // namespace

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidLabel:
    case ErrorKind::InvalidThreshold:
    case ErrorKind::InvalidConfig:
    case ErrorKind::InvalidInput:
    case ErrorKind::Ingestion:
    case ErrorKind::InputTooSmall:
    case ErrorKind::ConfigMismatch:
    case ErrorKind::Checkpoint:
      return kExitUsage;
    default:
      return kExitRuntime;
  }
}

TrainConfig apply_ablation(TrainConfig cfg, const Ablation& ab, int input_h, int input_w) {
  if (ab.no_adv && !ab.no_semi && !ab.allow_degenerate) {
    throw Error(ErrorKind::InvalidConfig,
                "--no-adv without --no-semi trains the semi loss on an untrained confidence "
                "signal; pass --allow-degenerate to run it anyway");
  }
  if (ab.no_adv) {
    cfg.hp.lambda_adv_labeled = 0.0;
    cfg.hp.lambda_adv_unlabeled = 0.0;
  }
  if (ab.no_semi) {
    cfg.hp.lambda_semi = 0.0;
    cfg.warm_up_iterations = cfg.max_iterations;
  }
  if (ab.global_disc) {
    cfg.disc.fully_convolutional = false;
    cfg.disc.input_height = input_h;
    cfg.disc.input_width = input_w;
  }
  return cfg;
}

void cmd_gen_data(const GenDataArgs& a) {
  if (a.n < 0) throw Error(ErrorKind::InvalidConfig, "--n must be >= 0");
  const Dataset d = generate_shapes_dataset(a.n, a.height, a.width, a.classes, a.seed);
  prepare_out_dir(a.out, a.force);
  save_folder_dataset(d, a.out);
}

double cmd_train(const TrainArgs& a) {
  const Dataset data = load_dataset_dir(a.data);
  const std::optional<Dataset> val =
      a.val ? std::optional<Dataset>(load_dataset_dir(*a.val)) : std::nullopt;
  TrainConfig cfg = base_config(a.config, data, a.seed, a.iterations);
  const auto [in_h, in_w] = train_input_size(cfg, data);
  cfg = apply_ablation(cfg, a.ablation, in_h, in_w);
  const Fraction fraction = Fraction::parse(a.fraction);
  cfg.validate();
  if (val && val->class_count != data.class_count) {
    throw Error(ErrorKind::ConfigMismatch, "validation and training class counts differ");
  }

  prepare_out_dir(a.out, a.force);
  const Dataset& eval_set = val ? *val : data;
  const RunOutcome run = train_and_evaluate(cfg, data, fraction, eval_set, a.out, a.quiet);

  nlohmann::json m;
  const std::string cfg_text = cfg.to_text();
  m["run_id"] = hex64(mix_seed(fnv1a(reinterpret_cast<const unsigned char*>(cfg_text.data()),
                                     cfg_text.size()),
                               data.fingerprint() ^ mix_seed(fraction.num, fraction.den)));
  m["config_snapshot"] = "config.snapshot";
  m["config"] = cfg_text;
  m["dataset"] = {{"path", a.data.string()}, {"fingerprint", hex64(data.fingerprint())},
                  {"samples", data.size()}, {"class_count", data.class_count}};
  m["eval_set"] = val ? nlohmann::json{{"path", a.val->string()},
                                       {"fingerprint", hex64(val->fingerprint())}}
                      : nlohmann::json{{"path", a.data.string()}, {"note", "training data"}};
  m["seeds"] = {cfg.seed};
  m["fraction"] = fraction.to_string();
  m["labeled_ids"] = run.split.labeled_ids;
  m["unlabeled_count"] = run.split.unlabeled_ids.size();
  m["ablation"] = {{"no_adv", a.ablation.no_adv},
                   {"no_semi", a.ablation.no_semi},
                   {"global_disc", a.ablation.global_disc}};
  m["mean_iu"] = run.mean_iu;
  m["layout"] = {"config.snapshot", "train_log.csv", "checkpoints/", "metrics.csv",
                 "summary.json", "exports/", "manifest.json"};
  write_text(a.out / "manifest.json", m.dump(2) + '\n');
  std::cout << "mean_iu " << fmt(run.mean_iu) << '\n';
  return run.mean_iu;
}

double cmd_eval(const EvalArgs& a) {
  const TrainedModel model = load_model(a.checkpoint);
  const Dataset data = load_dataset_dir(a.data);
  if (data.class_count != model.seg_cfg.class_count) {
    throw Error(ErrorKind::ConfigMismatch, "checkpoint has " +
                                               std::to_string(model.seg_cfg.class_count) +
                                               " classes, data has " +
                                               std::to_string(data.class_count));
  }
  if (non_empty_dir(a.out) && !a.force) {
    throw Error(ErrorKind::InvalidConfig, a.out.string() + " exists and is not empty (use --force)");
  }
  // Build everything next to the target and rename it into place.
  fs::path tmp = a.out;
  tmp += ".tmp";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  const double mean = write_eval_outputs(tmp, model, data);
  fs::remove_all(a.out);
  if (a.out.has_parent_path()) fs::create_directories(a.out.parent_path());
  fs::rename(tmp, a.out);
  std::cout << "mean_iu " << fmt(mean) << '\n';
  return mean;
}

void cmd_sweep(const SweepArgs& a) {
  if (a.param != "lambda_semi" && a.param != "t_semi" && a.param != "lambda_adv") {
    throw Error(ErrorKind::InvalidConfig, "--param must be lambda_semi, t_semi or lambda_adv");
  }
  if (a.values.empty()) throw Error(ErrorKind::InvalidConfig, "--values is empty");
  if (a.seeds < 1) throw Error(ErrorKind::InvalidConfig, "--seeds must be >= 1");
  const Dataset data = load_dataset_dir(a.data);
  const Dataset val = load_dataset_dir(a.val);
  const Fraction fraction = Fraction::parse(a.fraction);
  const TrainConfig base = base_config(a.config, data, std::nullopt, a.iterations);
  for (double v : a.values) {
    TrainConfig probe = base;
    if (a.param == "t_semi") probe.hp.t_semi = v;
    if (a.param == "lambda_semi") probe.hp.lambda_semi = v;
    if (a.param == "lambda_adv") probe.hp.lambda_adv_labeled = v;
    probe.validate();
  }
  prepare_out_dir(a.out, a.force);

  std::string table = "data_amount,lambda_adv,lambda_semi,t_semi,mean_iu,seeds\n";
  std::optional<TrainedModel> first_model;
  for (double v : a.values) {
    TrainConfig cfg = base;
    if (a.param == "t_semi") cfg.hp.t_semi = v;
    if (a.param == "lambda_semi") cfg.hp.lambda_semi = v;
    if (a.param == "lambda_adv") cfg.hp.lambda_adv_labeled = v;
    double sum = 0.0;
    for (int s = 0; s < a.seeds; ++s) {
      cfg.seed = base.seed + static_cast<std::uint64_t>(s);
      const fs::path dir = a.out / "runs" / (a.param + "_" + fmt(v)) / ("seed" + std::to_string(s));
      fs::create_directories(dir);
      const RunOutcome run = train_and_evaluate(cfg, data, fraction, val, dir, a.quiet);
      sum += run.mean_iu;
      if (!first_model && cfg.hp.uses_discriminator()) {
        first_model = TrainedModel{cfg.seg, run.result.state.seg, cfg.disc, run.result.state.disc};
      }
      std::cout << a.param << "=" << fmt(v) << " seed " << cfg.seed << " mean_iu "
                << fmt(run.mean_iu) << '\n';
    }
    table += fraction.to_string() + ',' + fmt(cfg.hp.lambda_adv_labeled) + ',' +
             fmt(cfg.hp.lambda_semi) + ',' + fmt(cfg.hp.t_semi) + ',' + fmt(sum / a.seeds) + ',' +
             std::to_string(a.seeds) + '\n';
  }
  if (a.seeds == 1) table += "# single seed: mean_iu is not averaged\n";
  write_text(a.out / "sweep.csv", table);

  if (a.param == "t_semi" && first_model && disc_accepts(*first_model->disc_cfg, val)) {
    std::vector<double> ts = a.values;
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    const auto report = selected_pixel_report(first_model->seg, first_model->seg_cfg,
                                              first_model->disc, *first_model->disc_cfg, val, ts);
    write_text(a.out / "selected_pixels.csv", selected_pixel_csv(report));
  }
  std::cout << table;
}

void cmd_confidence(const ConfidenceArgs& a) {
  const TrainedModel m = load_model(a.checkpoint);
  if (!m.disc_cfg) {
    throw Error(ErrorKind::InvalidInput, "checkpoint has no trained discriminator");
  }
  if (!fs::is_regular_file(a.image)) {
    throw Error(ErrorKind::InvalidInput, "image not found: " + a.image.string());
  }
  const Image img = read_png_rgb(a.image);
  if (!m.disc_cfg->fully_convolutional &&
      (img.height() != m.disc_cfg->input_height || img.width() != m.disc_cfg->input_width)) {
    throw Error(ErrorKind::InvalidInput, "the global discriminator needs " +
                                             std::to_string(m.disc_cfg->input_height) + "x" +
                                             std::to_string(m.disc_cfg->input_width) + " input");
  }
  const ProbabilityMap<float> prob = seg_forward<float>(m.seg, m.seg_cfg, img, nullptr);
  const ConfidenceMap<float> conf = disc_confidence<float>(m.disc, *m.disc_cfg, prob, nullptr);
  prepare_out_dir(a.out, a.force);
  export_prediction_png(argmax_labels(prob), voc_palette(), a.out / "prediction.png");
  export_confidence_png(conf, a.out / "confidence.png");
}

// "0,0.1,0.2" -> {0, 0.1, 0.2}; empty lists and empty or malformed items are
// usage errors.
static std::vector<double> parse_value_list(const std::string& text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find(',', start), text.size());
    const std::string item = text.substr(start, end - start);
    double v = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc{} || ptr != item.data() + item.size()) {
      throw Error(ErrorKind::InvalidConfig, "--values: cannot parse '" + item + "'");
    }
    out.push_back(v);
    start = end + 1;
  }
  return out;
}

int run(int argc, const char* const* argv) {
  CLI::App app{"Adversarial semi-supervised semantic segmentation toolkit"};
  app.require_subcommand(1);

  GenDataArgs gen;
  std::string gen_size = "64";
  auto* g = app.add_subcommand("gen-data", "Generate a synthetic shapes dataset folder");
  g->add_option("--out", gen.out, "Output folder")->required();
  g->add_option("--n", gen.n, "Number of images")->capture_default_str();
  g->add_option("--size", gen_size, "Image size, N or HxW")->capture_default_str();
  g->add_option("--classes", gen.classes, "Class count including background")->capture_default_str();
  g->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
  g->add_flag("--force", gen.force, "Replace a non-empty output folder");

  TrainArgs tr;
  std::string tr_val, tr_config;
  std::uint64_t tr_seed = 0;
  std::int64_t tr_iters = 0;
  auto* t = app.add_subcommand("train", "Train a segmentation network (and discriminator)");
  t->add_option("--data", tr.data, "Training dataset folder")->required();
  auto* t_val = t->add_option("--val", tr_val, "Validation dataset folder for metrics");
  auto* t_cfg = t->add_option("--config", tr_config, "Training config file (key = value)");
  t->add_option("--fraction", tr.fraction, "Labeled fraction, e.g. 1/8 or 0.125")
      ->capture_default_str();
  auto* t_seed = t->add_option("--seed", tr_seed, "Seed (overrides the config)");
  auto* t_iters = t->add_option("--iterations", tr_iters, "Max iterations (overrides the config)");
  t->add_option("--out", tr.out, "Run directory")->required();
  t->add_flag("--no-adv", tr.ablation.no_adv, "Drop the adversarial loss");
  t->add_flag("--no-semi", tr.ablation.no_semi, "Drop the semi-supervised loss and unlabeled data");
  t->add_flag("--global-disc", tr.ablation.global_disc,
              "Use the image-level discriminator instead of the fully convolutional one");
  t->add_flag("--allow-degenerate", tr.ablation.allow_degenerate,
              "Permit --no-adv without --no-semi");
  t->add_flag("--force", tr.force, "Replace a non-empty run directory");
  t->add_flag("--quiet", tr.quiet, "No progress output");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset folder");
  e->add_option("--checkpoint", ev.checkpoint, "Training checkpoint or segmentation net")
      ->required();
  e->add_option("--data", ev.data, "Dataset folder with labels")->required();
  e->add_option("--out", ev.out, "Output directory (written atomically)")->required();
  e->add_flag("--force", ev.force, "Replace an existing output directory");

  SweepArgs sw;
  std::string sw_config;
  std::int64_t sw_iters = 0;
  auto* s = app.add_subcommand("sweep", "Hyper-parameter sweep averaged over seeds");
  s->add_option("--param", sw.param, "lambda_semi, t_semi or lambda_adv")
      ->required()
      ->check(CLI::IsMember({"lambda_semi", "t_semi", "lambda_adv"}));
  std::string sw_values;
  s->add_option("--values", sw_values, "Comma-separated values")->required();
  s->add_option("--seeds", sw.seeds, "Seeds per grid point")->capture_default_str();
  s->add_option("--data", sw.data, "Training dataset folder")->required();
  s->add_option("--val", sw.val, "Validation dataset folder")->required();
  auto* s_cfg = s->add_option("--config", sw_config, "Training config file");
  s->add_option("--fraction", sw.fraction, "Labeled fraction")->capture_default_str();
  auto* s_iters = s->add_option("--iterations", sw_iters, "Max iterations per run");
  s->add_option("--out", sw.out, "Sweep output directory")->required();
  s->add_flag("--force", sw.force, "Replace a non-empty output directory");
  s->add_flag("--quiet", sw.quiet, "No per-iteration progress output");

  ConfidenceArgs cf;
  auto* c = app.add_subcommand("confidence", "Export prediction and confidence PNGs for an image");
  c->add_option("--checkpoint", cf.checkpoint, "Training checkpoint")->required();
  c->add_option("--image", cf.image, "Input PNG")->required();
  c->add_option("--out", cf.out, "Output directory")->required();
  c->add_flag("--force", cf.force, "Replace a non-empty output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*g) {
      std::tie(gen.height, gen.width) = parse_size(gen_size);
      cmd_gen_data(gen);
    } else if (*t) {
      if (*t_val) tr.val = tr_val;
      if (*t_cfg) tr.config = tr_config;
      if (*t_seed) tr.seed = tr_seed;
      if (*t_iters) tr.iterations = tr_iters;
      cmd_train(tr);
    } else if (*e) {
      cmd_eval(ev);
    } else if (*s) {
      sw.values = parse_value_list(sw_values);
      if (*s_cfg) sw.config = sw_config;
      if (*s_iters) sw.iterations = sw_iters;
      cmd_sweep(sw);
    } else if (*c) {
      cmd_confidence(cf);
    }
  } catch (const Error& err) {
    std::cerr << "error (" << to_string(err.kind()) << "): " << err.what() << '\n';
    return exit_code_for(err.kind());
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace advseg::cli
