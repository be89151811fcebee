#include "advseg/nn/segnet.hpp"

#include <cmath>

#include "advseg/core/kvtext.hpp"
#include "advseg/core/ops.hpp"
#include "advseg/core/rng.hpp"

namespace advseg {

void SegNetConfig::validate() const {
  if (class_count < 2 || class_count > 254) {
    throw Error(ErrorKind::InvalidConfig, "segmentation class count must be in [2, 254]");
  }
  if (base_channels < 1) throw Error(ErrorKind::InvalidConfig, "base_channels must be >= 1");
  if (block_strides.size() != block_dilations.size() || block_strides.empty()) {
    throw Error(ErrorKind::InvalidConfig, "block_strides and block_dilations must pair up");
  }
  if (pyramid_dilations.empty()) {
    throw Error(ErrorKind::InvalidConfig, "pyramid_dilations must be non-empty");
  }
  int stride = stem_stride;
  for (int s : block_strides) {
    if (s < 1) throw Error(ErrorKind::InvalidConfig, "block strides must be >= 1");
    stride *= s;
  }
  if (stride != kOutputStride) {
    throw Error(ErrorKind::InvalidConfig, "backbone output stride must be 8, got " +
                                              std::to_string(stride));
  }
  for (int d : block_dilations)
    if (d < 1) throw Error(ErrorKind::InvalidConfig, "dilations must be >= 1");
  for (int d : pyramid_dilations)
    if (d < 1) throw Error(ErrorKind::InvalidConfig, "dilations must be >= 1");
}

std::vector<nn::ConvSpec> SegNetConfig::backbone_layers() const {
  std::vector<nn::ConvSpec> layers;
  layers.push_back({3, base_channels, 3, stem_stride, 1, 1});
  int in = base_channels;
  for (std::size_t i = 0; i < block_strides.size(); ++i) {
    const int out = i == 0 ? base_channels : 2 * base_channels;
    const int d = block_dilations[i];
    layers.push_back({in, out, 3, block_strides[i], d, d});
    in = out;
  }
  return layers;
}

std::vector<nn::ConvSpec> SegNetConfig::head_layers() const {
  const int in = backbone_layers().back().out_channels;
  std::vector<nn::ConvSpec> heads;
  for (int d : pyramid_dilations) heads.push_back({in, class_count, 3, 1, d, d});
  return heads;
}

std::string SegNetConfig::to_text() const {
  KvWriter w;
  w.write("seg.class_count", class_count);
  w.write("seg.base_channels", base_channels);
  w.write("seg.stem_stride", stem_stride);
  w.write("seg.block_strides", block_strides);
  w.write("seg.block_dilations", block_dilations);
  w.write("seg.pyramid_dilations", pyramid_dilations);
  return w.str();
}

SegNetConfig SegNetConfig::from_text(const std::string& text) {
  KvReader r(text);
  SegNetConfig c;
  r.read("seg.class_count", c.class_count);
  r.read("seg.base_channels", c.base_channels);
  r.read("seg.stem_stride", c.stem_stride);
  r.read("seg.block_strides", c.block_strides);
  r.read("seg.block_dilations", c.block_dilations);
  r.read("seg.pyramid_dilations", c.pyramid_dilations);
  r.finish();
  c.validate();
  return c;
}

namespace {

template <typename T>
void init_conv(NetParams<T>& p, const std::string& name, const nn::ConvSpec& s, double stddev,
               Rng& rng) {
  p.add(name + ".weight", {s.out_channels, s.in_channels, s.kernel, s.kernel});
  for (auto& v : p.arrays.back().values) v = static_cast<T>(stddev * rng.normal());
  p.add(name + ".bias", {s.out_channels});
}

template <typename T>
void check_layout(const NetParams<T>& params, const SegNetConfig& cfg) {
  const std::size_t expected = 2 * (cfg.backbone_layers().size() + cfg.pyramid_dilations.size());
  if (params.arrays.size() != expected) {
    throw Error(ErrorKind::ConfigMismatch, "segmentation parameters do not match config");
  }
  if (params.arrays.back().size() != static_cast<std::size_t>(cfg.class_count)) {
    throw Error(ErrorKind::ConfigMismatch, "segmentation head class count does not match config");
  }
}

}  // namespace

template <typename T>
NetParams<T> init_params(const SegNetConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(mix_seed(seed, 0x5e6ULL));
  NetParams<T> p;
  p.seed = seed;
  const auto backbone = cfg.backbone_layers();
  for (std::size_t i = 0; i < backbone.size(); ++i) {
    const std::string name = i == 0 ? "stem" : "block" + std::to_string(i);
    init_conv(p, name, backbone[i], std::sqrt(2.0 / backbone[i].fan_in()), rng);
  }
  const auto heads = cfg.head_layers();
  for (std::size_t i = 0; i < heads.size(); ++i) {
    init_conv(p, "head_d" + std::to_string(cfg.pyramid_dilations[i]), heads[i],
              std::sqrt(1.0 / (heads[i].fan_in() * static_cast<double>(heads.size()))), rng);
  }
  return p;
}

template <typename T>
ProbabilityMap<T> seg_forward(const NetParams<T>& params, const SegNetConfig& cfg,
                              const Image& image, SegTape<T>* tape) {
  if (image.height() < SegNetConfig::kOutputStride || image.width() < SegNetConfig::kOutputStride) {
    throw Error(ErrorKind::InputTooSmall, "segmentation input must be at least 8x8, got " +
                                              std::to_string(image.height()) + "x" +
                                              std::to_string(image.width()));
  }
  check_layout(params, cfg);
  const auto backbone = cfg.backbone_layers();
  const auto heads = cfg.head_layers();
  if (tape) {
    tape->in_h = image.height();
    tape->in_w = image.width();
    tape->backbone_cols.assign(backbone.size(), {});
    tape->backbone_acts.assign(backbone.size(), {});
    tape->head_cols.assign(heads.size(), {});
  }

  Planar<T> x = image.template cast<T>();
  std::size_t k = 0;
  for (std::size_t i = 0; i < backbone.size(); ++i, k += 2) {
    x = nn::conv2d_forward(backbone[i], params[k].values.data(), params[k + 1].values.data(), x,
                           tape ? &tape->backbone_cols[i] : nullptr);
    nn::leaky_relu_inplace(x, T{0});
    if (tape) tape->backbone_acts[i] = x;
  }

  Planar<T> logits;
  for (std::size_t i = 0; i < heads.size(); ++i, k += 2) {
    Planar<T> branch = nn::conv2d_forward(heads[i], params[k].values.data(),
                                          params[k + 1].values.data(), x,
                                          tape ? &tape->head_cols[i] : nullptr);
    if (i == 0) {
      logits = std::move(branch);
    } else {
      for (std::size_t j = 0; j < logits.size(); ++j) logits.data()[j] += branch.data()[j];
    }
  }

  ProbabilityMap<T> prob(
      nn::softmax_channels(bilinear_resize(logits, image.height(), image.width())));
  if (tape) {
    tape->logits = std::move(logits);
    tape->prob = prob;
  }
  return prob;
}

template <typename T>
void seg_backward(const NetParams<T>& params, const SegNetConfig& cfg, const SegTape<T>& tape,
                  const Planar<T>* grad_prob, const Planar<T>* grad_logits, NetParams<T>& grads) {
  if (!grads.same_layout(params)) {
    throw Error(ErrorKind::ConfigMismatch, "gradient buffer does not match parameters");
  }
  const auto backbone = cfg.backbone_layers();
  const auto heads = cfg.head_layers();

  Planar<T> g_up(tape.prob.channels(), tape.in_h, tape.in_w, T{0});
  if (grad_prob) g_up = nn::softmax_backward(tape.prob, *grad_prob);
  if (grad_logits) {
    for (std::size_t j = 0; j < g_up.size(); ++j) g_up.data()[j] += grad_logits->data()[j];
  }
  const Planar<T> g_logits =
      bilinear_resize_backward(g_up, tape.logits.height(), tape.logits.width());

  const Planar<T>& feat = tape.backbone_acts.back();
  Planar<T> g_feat(feat.channels(), feat.height(), feat.width(), T{0});
  std::size_t k = 2 * backbone.size();
  for (std::size_t i = 0; i < heads.size(); ++i, k += 2) {
    Planar<T> g_in;
    nn::conv2d_backward(heads[i], params[k].values.data(), feat.height(), feat.width(),
                        tape.head_cols[i], g_logits, grads[k].values.data(),
                        grads[k + 1].values.data(), &g_in);
    for (std::size_t j = 0; j < g_feat.size(); ++j) g_feat.data()[j] += g_in.data()[j];
  }

  Planar<T> g = std::move(g_feat);
  for (std::size_t i = backbone.size(); i-- > 0;) {
    k = 2 * i;
    nn::leaky_relu_backward_inplace(tape.backbone_acts[i], g, T{0});
    const int in_h = i == 0 ? tape.in_h : tape.backbone_acts[i - 1].height();
    const int in_w = i == 0 ? tape.in_w : tape.backbone_acts[i - 1].width();
    Planar<T> g_in;
    nn::conv2d_backward(backbone[i], params[k].values.data(), in_h, in_w, tape.backbone_cols[i], g,
                        grads[k].values.data(), grads[k + 1].values.data(),
                        i == 0 ? nullptr : &g_in);
    g = std::move(g_in);
  }
}

#define ADVSEG_INSTANTIATE_SEG(T)                                                            \
  template NetParams<T> init_params<T>(const SegNetConfig&, std::uint64_t);                  \
  template ProbabilityMap<T> seg_forward<T>(const NetParams<T>&, const SegNetConfig&,         \
                                            const Image&, SegTape<T>*);                      \
  template void seg_backward<T>(const NetParams<T>&, const SegNetConfig&, const SegTape<T>&,  \
                                const Planar<T>*, const Planar<T>*, NetParams<T>&);

ADVSEG_INSTANTIATE_SEG(float)
ADVSEG_INSTANTIATE_SEG(double)

#undef ADVSEG_INSTANTIATE_SEG

}  // namespace advseg
