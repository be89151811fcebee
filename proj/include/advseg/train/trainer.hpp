#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "advseg/data/batches.hpp"
#include "advseg/data/dataset.hpp"
#include "advseg/data/split.hpp"
#include "advseg/train/config.hpp"
#include "advseg/train/optim.hpp"

namespace advseg {

/// One line of the training log. Losses that were not evaluated in an
/// iteration are absent (empty CSV fields).
struct LogRecord {
  std::int64_t iter = 0;
  BatchTag tag = BatchTag::Labeled;
  std::optional<double> l_ce;
  std::optional<double> l_adv;
  std::optional<double> l_semi;
  std::optional<double> l_d;
  double lr_seg = 0.0;
  double lr_disc = 0.0;

  bool operator==(const LogRecord&) const = default;
};

class TrainLog {
 public:
  static constexpr const char* kHeader = "iter,tag,l_ce,l_adv,l_semi,l_d,lr_seg,lr_disc";

  void append(const LogRecord& r) { records_.push_back(r); }
  const std::vector<LogRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }

  std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;
  static std::string csv_line(const LogRecord& r);

 private:
  std::vector<LogRecord> records_;
};

/// Everything that changes while training. `iteration` counts completed
/// iterations; the next step runs iteration index `iteration` (0-based).
struct TrainState {
  std::int64_t iteration = 0;
  NetParams<float> seg;
  NetParams<float> disc;
  SgdState seg_opt;
  AdamState disc_opt;
};

/// Fresh networks initialised from cfg.seed.
TrainState initial_state(const TrainConfig& cfg);

/// A batch ready for a step: images, plus labels for labeled batches.
struct TrainBatch {
  BatchTag tag = BatchTag::Labeled;
  std::vector<Image> images;
  std::vector<LabelMap> labels;
};

/// Looks the ids up and applies augmentation (if enabled) with seeds derived
/// from (seed, iteration, position in batch).
TrainBatch materialize_batch(const Dataset& data, const Batch& batch, const TrainConfig& cfg,
                             std::int64_t iteration, std::uint64_t nonce = 0);

/// S step on ce + lambda_adv_labeled * adv with D frozen, then a D step on the
/// same batch using the pre-update prediction. Advances state.iteration.
LogRecord train_step_labeled(TrainState& state, const TrainConfig& cfg, const TrainBatch& batch);

/// S step on lambda_adv_unlabeled * adv + lambda_semi * semi; D untouched.
/// Throws Schedule before warm-up. Advances state.iteration.
LogRecord train_step_unlabeled(TrainState& state, const TrainConfig& cfg, const TrainBatch& batch);

struct TrainOptions {
  /// Directory for iter_NNNNNN.ckpt and final.ckpt; empty disables writing.
  std::filesystem::path checkpoint_dir;
  /// Continue from a saved state instead of starting fresh.
  std::optional<TrainState> resume;
  /// Stop after this many completed iterations (default: max_iterations).
  std::optional<std::int64_t> stop_at;
  std::function<void(const LogRecord&)> on_record;
};

struct TrainResult {
  TrainState state;
  TrainLog log;
};

/// Runs iterations state.iteration .. stop. Iterations below the warm-up use
/// labeled batches only; afterwards batches come from the interleaved stream.
/// Unlabeled batches are not drawn at all when both unlabeled weights are 0.
TrainResult train(const Dataset& data, const DatasetSplit& split, const TrainConfig& cfg,
                  TrainOptions options = {});

void save_checkpoint(const std::filesystem::path& path, const TrainConfig& cfg,
                     const TrainState& state);

struct LoadedCheckpoint {
  TrainConfig config;
  TrainState state;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

/// Loads and checks that the stored networks match `expected`; throws
/// ConfigMismatch otherwise (e.g. a different class count).
TrainState load_checkpoint(const std::filesystem::path& path, const TrainConfig& expected);

}  // namespace advseg
