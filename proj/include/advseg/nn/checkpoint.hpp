#pragma once

#include <filesystem>

#include "advseg/core/binio.hpp"
#include "advseg/nn/discnet.hpp"
#include "advseg/nn/segnet.hpp"

namespace advseg {

inline constexpr std::uint32_t kNetFormatVersion = 1;

enum class NetKind : std::uint32_t { Segmentation = 1, Discriminator = 2 };

/// One network block: magic "ADVSEGNT", version, kind, config text, seed,
/// then each named float32 array with its shape.
void write_net(BinWriter& out, NetKind kind, const std::string& config_text,
               const NetParams<float>& params);
NetParams<float> read_net(BinReader& in, NetKind kind, std::string& config_text);

void save_net(const std::filesystem::path& path, const SegNetConfig& cfg,
              const NetParams<float>& params);
void save_net(const std::filesystem::path& path, const DiscNetConfig& cfg,
              const NetParams<float>& params);

struct LoadedSegNet {
  SegNetConfig config;
  NetParams<float> params;
};
struct LoadedDiscNet {
  DiscNetConfig config;
  NetParams<float> params;
};

LoadedSegNet load_seg_net(const std::filesystem::path& path);
LoadedDiscNet load_disc_net(const std::filesystem::path& path);

}  // namespace advseg
