#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "advseg/train/config.hpp"

namespace advseg::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Parses argv and runs one subcommand; returns the process exit code.
int run(int argc, const char* const* argv);

/// Maps an error kind to an exit code (usage/config/input problems are 2).
int exit_code_for(ErrorKind kind);

struct GenDataArgs {
  std::filesystem::path out;
  int n = 200;
  int height = 64;
  int width = 64;
  int classes = 4;
  std::uint64_t seed = 0;
  bool force = false;
};

struct Ablation {
  bool no_adv = false;
  bool no_semi = false;
  bool global_disc = false;
  bool allow_degenerate = false;
};

struct TrainArgs {
  std::filesystem::path data;
  std::optional<std::filesystem::path> val;
  std::optional<std::filesystem::path> config;
  std::string fraction = "1";
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> iterations;
  std::filesystem::path out;
  Ablation ablation;
  bool force = false;
  bool quiet = false;
};

struct EvalArgs {
  std::filesystem::path checkpoint;
  std::filesystem::path data;
  std::filesystem::path out;
  bool force = false;
};

struct SweepArgs {
  std::string param;
  std::vector<double> values;
  int seeds = 3;
  std::filesystem::path data;
  std::filesystem::path val;
  std::optional<std::filesystem::path> config;
  std::string fraction = "1/8";
  std::optional<std::int64_t> iterations;
  std::filesystem::path out;
  bool force = false;
  bool quiet = false;
};

struct ConfidenceArgs {
  std::filesystem::path checkpoint;
  std::filesystem::path image;
  std::filesystem::path out;
  bool force = false;
};

// Each command throws advseg::Error on failure.
void cmd_gen_data(const GenDataArgs& a);
/// Returns the mean IU on the evaluation set.
double cmd_train(const TrainArgs& a);
double cmd_eval(const EvalArgs& a);
void cmd_sweep(const SweepArgs& a);
void cmd_confidence(const ConfidenceArgs& a);

/// Applies the ablation flags to a config. `--no-adv` without `--no-semi`
/// is refused unless allow_degenerate is set. `--global-disc` sizes the
/// dense discriminator for `input_h` x `input_w` inputs.
TrainConfig apply_ablation(TrainConfig cfg, const Ablation& ab, int input_h, int input_w);

}  // namespace advseg::cli
