#include "advseg/train/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <random>

#include "advseg/core/binio.hpp"
#include "advseg/data/augment.hpp"
#include "advseg/nn/checkpoint.hpp"
#include "advseg/train/objective.hpp"
#include "advseg/train/schedule.hpp"

namespace advseg {

namespace {

constexpr char kCheckpointMagic[8] = {'A', 'D', 'V', 'S', 'E', 'G', 'C', 'K'};
constexpr std::uint32_t kCheckpointVersion = 1;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void put_field(std::string& s, const std::optional<double>& v) {
  s += ',';
  if (v) s += fmt17(*v);
}

double finite_or_throw(double v, const char* what) {
  if (!std::isfinite(v)) throw Error(ErrorKind::NonFinite, std::string("non-finite ") + what);
  return v;
}

void check_params(const NetParams<float>& p, const char* what) {
  if (!p.all_finite()) throw Error(ErrorKind::NonFinite, std::string("non-finite ") + what);
}

void put_params(BinWriter& w, const NetParams<float>& p) {
  w.put(p.seed);
  w.put(static_cast<std::uint32_t>(p.arrays.size()));
  for (const auto& a : p.arrays) {
    w.put_string(a.name);
    w.put_vector(a.shape);
    w.put_vector(a.values);
  }
}

NetParams<float> get_params(BinReader& r) {
  NetParams<float> p;
  p.seed = r.get<std::uint64_t>();
  const auto n = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n; ++i) {
    ParamArray<float> a;
    a.name = r.get_string();
    a.shape = r.get_vector<int>();
    a.values = r.get_vector<float>();
    p.arrays.push_back(std::move(a));
  }
  return p;
}

// Optimizer buffers are either empty (not used yet) or laid out like params.
void check_buffer(const NetParams<float>& buf, const NetParams<float>& params) {
  if (!buf.arrays.empty() && !buf.same_layout(params)) {
    throw Error(ErrorKind::Checkpoint, "optimizer state disagrees with parameters");
  }
}

std::string iter_name(std::int64_t it) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "iter_%06lld.ckpt", static_cast<long long>(it));
  return buf;
}

}  // namespace

std::string TrainLog::csv_line(const LogRecord& r) {
  std::string s = std::to_string(r.iter);
  s += ',';
  s += to_string(r.tag);
  put_field(s, r.l_ce);
  put_field(s, r.l_adv);
  put_field(s, r.l_semi);
  put_field(s, r.l_d);
  s += ',' + fmt17(r.lr_seg) + ',' + fmt17(r.lr_disc);
  return s;
}

std::string TrainLog::to_csv() const {
  std::string s = std::string(kHeader) + '\n';
  for (const auto& r : records_) s += csv_line(r) + '\n';
  return s;
}

void TrainLog::write_csv(const std::filesystem::path& path) const {
  write_file_atomic(path, to_csv());
}

TrainState initial_state(const TrainConfig& cfg) {
  TrainState s;
  s.seg = init_params<float>(cfg.seg, mix_seed(cfg.seed, 0x5e6));
  s.disc = init_params<float>(cfg.disc, mix_seed(cfg.seed, 0xd15));
  return s;
}

TrainBatch materialize_batch(const Dataset& data, const Batch& batch, const TrainConfig& cfg,
                             std::int64_t iteration, std::uint64_t nonce) {
  TrainBatch out;
  out.tag = batch.tag;
  const std::uint64_t base =
      mix_seed(mix_seed(cfg.seed, 0xa06) ^ nonce, static_cast<std::uint64_t>(iteration));
  for (std::size_t pos = 0; pos < batch.ids.size(); ++pos) {
    const Sample& src = data.samples[data.index_of(batch.ids[pos])];
    if (batch.tag == BatchTag::Labeled && !src.label) {
      throw Error(ErrorKind::Contract, "labeled batch contains unlabeled sample " + src.id);
    }
    if (cfg.augment) {
      Sample s = augment(src, cfg.augmentation, mix_seed(base, pos));
      out.images.push_back(std::move(s.image));
      if (batch.tag == BatchTag::Labeled) out.labels.push_back(std::move(*s.label));
    } else {
      out.images.push_back(src.image);
      if (batch.tag == BatchTag::Labeled) out.labels.push_back(*src.label);
    }
  }
  return out;
}

namespace {

LogRecord start_record(const TrainState& state, const TrainConfig& cfg, BatchTag tag) {
  if (state.iteration >= cfg.max_iterations) {
    throw Error(ErrorKind::Schedule, "iteration past max_iterations");
  }
  LogRecord r;
  r.iter = state.iteration;
  r.tag = tag;
  r.lr_seg = poly_lr(cfg.seg_lr0, state.iteration, cfg.max_iterations, cfg.poly_power);
  r.lr_disc = poly_lr(cfg.disc_lr0, state.iteration, cfg.max_iterations, cfg.poly_power);
  return r;
}

SgdOptions sgd_options(const TrainConfig& cfg, double lr) {
  return {lr, cfg.momentum, cfg.weight_decay, cfg.nesterov};
}

}  // namespace

LogRecord train_step_labeled(TrainState& state, const TrainConfig& cfg, const TrainBatch& batch) {
  if (batch.tag != BatchTag::Labeled || batch.labels.size() != batch.images.size()) {
    throw Error(ErrorKind::Contract, "train_step_labeled needs a labeled batch");
  }
  LogRecord rec = start_record(state, cfg, BatchTag::Labeled);
  const bool use_disc = cfg.hp.uses_discriminator();

  NetParams<float> seg_grad = state.seg.zeros_like();
  const LabeledPass<float> pass =
      labeled_seg_pass<float>(state.seg, cfg.seg, use_disc ? &state.disc : nullptr, cfg.disc,
                              batch.images, batch.labels, cfg.hp, &seg_grad);
  rec.l_ce = finite_or_throw(pass.ce.value, "cross-entropy loss");
  if (pass.adv) rec.l_adv = finite_or_throw(pass.adv->value, "adversarial loss");

  sgd_step(state.seg, seg_grad, state.seg_opt, sgd_options(cfg, rec.lr_seg));
  check_params(state.seg, "segmentation parameters");

  if (use_disc) {
    NetParams<float> disc_grad = state.disc.zeros_like();
    const LossValue ld = disc_pass<float>(state.disc, cfg.disc, pass, cfg.scale_alpha, &disc_grad);
    rec.l_d = finite_or_throw(ld.value, "discriminator loss");
    adam_step(state.disc, disc_grad, state.disc_opt,
              {rec.lr_disc, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps});
    check_params(state.disc, "discriminator parameters");
  }
  ++state.iteration;
  return rec;
}

LogRecord train_step_unlabeled(TrainState& state, const TrainConfig& cfg, const TrainBatch& batch) {
  if (batch.tag != BatchTag::Unlabeled) {
    throw Error(ErrorKind::Contract, "train_step_unlabeled needs an unlabeled batch");
  }
  if (state.iteration < cfg.warm_up_iterations) {
    throw Error(ErrorKind::Schedule, "unlabeled batch before the end of warm-up");
  }
  LogRecord rec = start_record(state, cfg, BatchTag::Unlabeled);
  if (cfg.hp.lambda_adv_unlabeled == 0 && cfg.hp.lambda_semi == 0) {
    ++state.iteration;
    return rec;
  }

  NetParams<float> seg_grad = state.seg.zeros_like();
  const UnlabeledPass<float> pass = unlabeled_seg_pass<float>(
      state.seg, cfg.seg, state.disc, cfg.disc, batch.images, cfg.hp, &seg_grad);
  rec.l_adv = finite_or_throw(pass.adv.value, "adversarial loss");
  rec.l_semi = finite_or_throw(pass.semi.value, "semi-supervised loss");

  sgd_step(state.seg, seg_grad, state.seg_opt, sgd_options(cfg, rec.lr_seg));
  check_params(state.seg, "segmentation parameters");
  ++state.iteration;
  return rec;
}

TrainResult train(const Dataset& data, const DatasetSplit& split, const TrainConfig& cfg,
                  TrainOptions options) {
  cfg.validate();
  if (split.labeled_ids.empty()) {
    throw Error(ErrorKind::InvalidInput, "invalid split: no labeled samples");
  }
  if (data.class_count != cfg.seg.class_count) {
    throw Error(ErrorKind::ConfigMismatch,
                "dataset has " + std::to_string(data.class_count) + " classes, config expects " +
                    std::to_string(cfg.seg.class_count));
  }

  TrainResult result;
  result.state = options.resume ? std::move(*options.resume) : initial_state(cfg);
  TrainState& state = result.state;
  const std::int64_t stop = options.stop_at.value_or(cfg.max_iterations);
  if (stop > cfg.max_iterations || stop < state.iteration) {
    throw Error(ErrorKind::InvalidConfig, "stop iteration outside [resume point, max_iterations]");
  }

  BatchStream stream(split, cfg.batch_size, mix_seed(cfg.seed, 0xb5));
  const bool unlabeled_active = stream.has_unlabeled() &&
                                (cfg.hp.lambda_adv_unlabeled > 0 || cfg.hp.lambda_semi > 0);
  const auto allow_unlabeled = [&](std::int64_t it) {
    return unlabeled_active && it >= cfg.warm_up_iterations;
  };
  // Replaying the stream is cheap and keeps resumed runs on the same batches.
  for (std::int64_t it = 0; it < state.iteration; ++it) stream.next(allow_unlabeled(it));

  const std::uint64_t nonce =
      cfg.deterministic ? 0 : (static_cast<std::uint64_t>(std::random_device{}()) << 32) ^
                                  std::random_device{}();

  if (!options.checkpoint_dir.empty()) std::filesystem::create_directories(options.checkpoint_dir);

  while (state.iteration < stop) {
    const std::int64_t it = state.iteration;
    const Batch batch = stream.next(allow_unlabeled(it));
    const TrainBatch tb = materialize_batch(data, batch, cfg, it, nonce);
    const LogRecord rec = batch.tag == BatchTag::Labeled ? train_step_labeled(state, cfg, tb)
                                                         : train_step_unlabeled(state, cfg, tb);
    result.log.append(rec);
    if (options.on_record) options.on_record(rec);
    if (!options.checkpoint_dir.empty() && cfg.checkpoint_every > 0 &&
        state.iteration % cfg.checkpoint_every == 0 && state.iteration < stop) {
      save_checkpoint(options.checkpoint_dir / iter_name(state.iteration), cfg, state);
    }
  }
  if (!options.checkpoint_dir.empty()) {
    save_checkpoint(options.checkpoint_dir / "final.ckpt", cfg, state);
  }
  return result;
}

void save_checkpoint(const std::filesystem::path& path, const TrainConfig& cfg,
                     const TrainState& state) {
  BinWriter w;
  w.put_bytes(kCheckpointMagic, sizeof(kCheckpointMagic));
  w.put(kCheckpointVersion);
  w.put(state.iteration);
  w.put_string(cfg.to_text());
  write_net(w, NetKind::Segmentation, cfg.seg.to_text(), state.seg);
  write_net(w, NetKind::Discriminator, cfg.disc.to_text(), state.disc);
  put_params(w, state.seg_opt.momentum);
  put_params(w, state.disc_opt.m);
  put_params(w, state.disc_opt.v);
  w.put(state.disc_opt.step);
  w.save(path);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  BinReader r = BinReader::load(path);
  char magic[8];
  r.get_bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw Error(ErrorKind::Checkpoint, path.string() + " is not a training checkpoint");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw Error(ErrorKind::Checkpoint, "unsupported checkpoint version " + std::to_string(version));
  }
  LoadedCheckpoint out;
  out.state.iteration = r.get<std::int64_t>();
  out.config = TrainConfig::from_text(r.get_string());
  std::string seg_text, disc_text;
  out.state.seg = read_net(r, NetKind::Segmentation, seg_text);
  out.state.disc = read_net(r, NetKind::Discriminator, disc_text);
  if (SegNetConfig::from_text(seg_text) != out.config.seg ||
      DiscNetConfig::from_text(disc_text) != out.config.disc) {
    throw Error(ErrorKind::Checkpoint, "network blocks disagree with stored training config");
  }
  if (!out.state.seg.same_layout(init_params<float>(out.config.seg, 0)) ||
      !out.state.disc.same_layout(init_params<float>(out.config.disc, 0))) {
    throw Error(ErrorKind::Checkpoint, "parameters disagree with stored config");
  }
  out.state.seg_opt.momentum = get_params(r);
  out.state.disc_opt.m = get_params(r);
  out.state.disc_opt.v = get_params(r);
  out.state.disc_opt.step = r.get<std::int64_t>();
  if (!r.at_end()) throw Error(ErrorKind::Checkpoint, "trailing bytes in checkpoint");
  check_buffer(out.state.seg_opt.momentum, out.state.seg);
  check_buffer(out.state.disc_opt.m, out.state.disc);
  check_buffer(out.state.disc_opt.v, out.state.disc);
  if (out.state.iteration < 0 || out.state.iteration > out.config.max_iterations) {
    throw Error(ErrorKind::Checkpoint, "stored iteration out of range");
  }
  return out;
}

TrainState load_checkpoint(const std::filesystem::path& path, const TrainConfig& expected) {
  LoadedCheckpoint c = load_checkpoint(path);
  if (c.config.seg.class_count != expected.seg.class_count ||
      c.config.disc.class_count != expected.disc.class_count) {
    throw Error(ErrorKind::ConfigMismatch,
                "checkpoint has " + std::to_string(c.config.seg.class_count) +
                    " classes, expected " + std::to_string(expected.seg.class_count));
  }
  if (c.config.seg != expected.seg || c.config.disc != expected.disc) {
    throw Error(ErrorKind::ConfigMismatch, "checkpoint network architecture differs");
  }
  return std::move(c.state);
}

}  // namespace advseg
