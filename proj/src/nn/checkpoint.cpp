#include "advseg/nn/checkpoint.hpp"

namespace advseg {

namespace {
constexpr char kNetMagic[8] = {'A', 'D', 'V', 'S', 'E', 'G', 'N', 'T'};
}

void write_net(BinWriter& out, NetKind kind, const std::string& config_text,
               const NetParams<float>& params) {
  out.put_bytes(kNetMagic, sizeof(kNetMagic));
  out.put(kNetFormatVersion);
  out.put(static_cast<std::uint32_t>(kind));
  out.put_string(config_text);
  out.put(params.seed);
  out.put(static_cast<std::uint32_t>(params.arrays.size()));
  for (const auto& a : params.arrays) {
    out.put_string(a.name);
    out.put(static_cast<std::uint32_t>(a.shape.size()));
    for (int d : a.shape) out.put(static_cast<std::int32_t>(d));
    out.put_vector(a.values);
  }
}

NetParams<float> read_net(BinReader& in, NetKind kind, std::string& config_text) {
  char magic[8];
  in.get_bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kNetMagic, sizeof(magic)) != 0) {
    throw Error(ErrorKind::Checkpoint, "not a network block");
  }
  const auto version = in.get<std::uint32_t>();
  if (version != kNetFormatVersion) {
    throw Error(ErrorKind::Checkpoint, "unsupported network format version " +
                                           std::to_string(version));
  }
  const auto stored_kind = in.get<std::uint32_t>();
  if (stored_kind != static_cast<std::uint32_t>(kind)) {
    throw Error(ErrorKind::ConfigMismatch, "checkpoint holds a different network kind");
  }
  config_text = in.get_string();
  NetParams<float> p;
  p.seed = in.get<std::uint64_t>();
  const auto count = in.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    ParamArray<float> a;
    a.name = in.get_string();
    const auto ndim = in.get<std::uint32_t>();
    if (ndim > 8) throw Error(ErrorKind::Checkpoint, "implausible tensor rank");
    std::size_t n = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      a.shape.push_back(in.get<std::int32_t>());
      n *= static_cast<std::size_t>(a.shape.back());
    }
    a.values = in.get_vector<float>();
    if (a.values.size() != n) throw Error(ErrorKind::Checkpoint, "array size disagrees with shape");
    p.arrays.push_back(std::move(a));
  }
  return p;
}

void save_net(const std::filesystem::path& path, const SegNetConfig& cfg,
              const NetParams<float>& params) {
  BinWriter w;
  write_net(w, NetKind::Segmentation, cfg.to_text(), params);
  w.save(path);
}

void save_net(const std::filesystem::path& path, const DiscNetConfig& cfg,
              const NetParams<float>& params) {
  BinWriter w;
  write_net(w, NetKind::Discriminator, cfg.to_text(), params);
  w.save(path);
}

LoadedSegNet load_seg_net(const std::filesystem::path& path) {
  BinReader r = BinReader::load(path);
  std::string text;
  LoadedSegNet out;
  out.params = read_net(r, NetKind::Segmentation, text);
  out.config = SegNetConfig::from_text(text);
  if (!out.params.same_layout(init_params<float>(out.config, 0))) {
    throw Error(ErrorKind::Checkpoint, "segmentation parameters disagree with stored config");
  }
  return out;
}

LoadedDiscNet load_disc_net(const std::filesystem::path& path) {
  BinReader r = BinReader::load(path);
  std::string text;
  LoadedDiscNet out;
  out.params = read_net(r, NetKind::Discriminator, text);
  out.config = DiscNetConfig::from_text(text);
  if (!out.params.same_layout(init_params<float>(out.config, 0))) {
    throw Error(ErrorKind::Checkpoint, "discriminator parameters disagree with stored config");
  }
  return out;
}

}  // namespace advseg
