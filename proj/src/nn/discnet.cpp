#include "advseg/nn/discnet.hpp"

#include <cmath>

#include "advseg/core/kvtext.hpp"
#include "advseg/core/ops.hpp"
#include "advseg/core/rng.hpp"

namespace advseg {

void DiscNetConfig::validate() const {
  if (class_count < 1) throw Error(ErrorKind::InvalidConfig, "discriminator class count must be >= 1");
  if (channels.size() != 5) {
    throw Error(ErrorKind::InvalidConfig, "discriminator needs exactly 5 convolution stages");
  }
  for (int c : channels)
    if (c < 1) throw Error(ErrorKind::InvalidConfig, "discriminator channels must be >= 1");
  if (channels.back() != 1) {
    throw Error(ErrorKind::InvalidConfig, "last discriminator stage must have 1 channel");
  }
  if (kernel != 4 || stride != 2 || padding != 1) {
    throw Error(ErrorKind::InvalidConfig, "discriminator uses 4x4 kernels, stride 2, padding 1");
  }
  if (!(leaky_slope >= 0.0 && leaky_slope < 1.0)) {
    throw Error(ErrorKind::InvalidConfig, "leaky slope must be in [0, 1)");
  }
  if (!fully_convolutional &&
      (input_height < kMinInput || input_width < kMinInput)) {
    throw Error(ErrorKind::InvalidConfig,
                "global discriminator needs a fixed input size of at least 32x32");
  }
}

std::vector<nn::ConvSpec> DiscNetConfig::conv_layers() const {
  std::vector<nn::ConvSpec> layers;
  int in = class_count;
  const std::size_t stages = fully_convolutional ? channels.size() : channels.size() - 1;
  for (std::size_t i = 0; i < stages; ++i) {
    layers.push_back({in, channels[i], kernel, stride, padding, 1});
    in = channels[i];
  }
  return layers;
}

int DiscNetConfig::dense_inputs() const {
  int h = input_height, w = input_width;
  const auto layers = conv_layers();
  for (const auto& l : layers) {
    h = l.out_size(h);
    w = l.out_size(w);
  }
  return layers.back().out_channels * h * w;
}

std::string DiscNetConfig::to_text() const {
  KvWriter w;
  w.write("disc.class_count", class_count);
  w.write("disc.channels", channels);
  w.write("disc.leaky_slope", leaky_slope);
  w.write("disc.fully_convolutional", fully_convolutional);
  w.write("disc.input_height", input_height);
  w.write("disc.input_width", input_width);
  return w.str();
}

DiscNetConfig DiscNetConfig::from_text(const std::string& text) {
  KvReader r(text);
  DiscNetConfig c;
  r.read("disc.class_count", c.class_count);
  r.read("disc.channels", c.channels);
  r.read("disc.leaky_slope", c.leaky_slope);
  r.read("disc.fully_convolutional", c.fully_convolutional);
  r.read("disc.input_height", c.input_height);
  r.read("disc.input_width", c.input_width);
  r.finish();
  c.validate();
  return c;
}

template <typename T>
NetParams<T> init_params(const DiscNetConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(mix_seed(seed, 0xd15cULL));
  NetParams<T> p;
  p.seed = seed;
  const auto layers = cfg.conv_layers();
  const double slope = cfg.leaky_slope;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& s = layers[i];
    const bool last = cfg.fully_convolutional && i + 1 == layers.size();
    const double stddev = last ? std::sqrt(1.0 / s.fan_in())
                               : std::sqrt(2.0 / ((1.0 + slope * slope) * s.fan_in()));
    const std::string name = "conv" + std::to_string(i + 1);
    p.add(name + ".weight", {s.out_channels, s.in_channels, s.kernel, s.kernel});
    for (auto& v : p.arrays.back().values) v = static_cast<T>(stddev * rng.normal());
    p.add(name + ".bias", {s.out_channels});
  }
  if (!cfg.fully_convolutional) {
    const int n = cfg.dense_inputs();
    p.add("fc.weight", {1, n});
    for (auto& v : p.arrays.back().values) v = static_cast<T>(std::sqrt(1.0 / n) * rng.normal());
    p.add("fc.bias", {1});
  }
  return p;
}

namespace {

template <typename T>
void check_input(const NetParams<T>& params, const DiscNetConfig& cfg, const Planar<T>& input) {
  if (input.channels() != cfg.class_count) {
    throw Error(ErrorKind::ConfigMismatch, "discriminator expects " +
                                               std::to_string(cfg.class_count) +
                                               " input channels, got " +
                                               std::to_string(input.channels()));
  }
  if (input.height() < DiscNetConfig::kMinInput || input.width() < DiscNetConfig::kMinInput) {
    throw Error(ErrorKind::InputTooSmall, "discriminator input must be at least 32x32");
  }
  const std::size_t expected = 2 * cfg.conv_layers().size() + (cfg.fully_convolutional ? 0 : 2);
  if (params.arrays.size() != expected) {
    throw Error(ErrorKind::ConfigMismatch, "discriminator parameters do not match config");
  }
}

// Shared stages: every convolution followed by Leaky-ReLU except the last
// one of the fully convolutional variant.
template <typename T>
Planar<T> run_convs(const NetParams<T>& params, const DiscNetConfig& cfg, const Planar<T>& input,
                    DiscTape<T>* tape) {
  const auto layers = cfg.conv_layers();
  if (tape) {
    tape->in_h = input.height();
    tape->in_w = input.width();
    tape->cols.assign(layers.size(), {});
    tape->acts.assign(layers.size(), {});
  }
  const T slope = static_cast<T>(cfg.leaky_slope);
  Planar<T> x = nn::conv2d_forward(layers[0], params[0].values.data(), params[1].values.data(),
                                   input, tape ? &tape->cols[0] : nullptr);
  for (std::size_t i = 0;; ++i) {
    const bool last_conv = cfg.fully_convolutional && i + 1 == layers.size();
    if (!last_conv) nn::leaky_relu_inplace(x, slope);
    if (tape) tape->acts[i] = x;
    if (i + 1 == layers.size()) break;
    x = nn::conv2d_forward(layers[i + 1], params[2 * (i + 1)].values.data(),
                           params[2 * (i + 1) + 1].values.data(), x,
                           tape ? &tape->cols[i + 1] : nullptr);
  }
  return x;
}

}  // namespace

template <typename T>
ConfidenceMap<T> disc_forward(const NetParams<T>& params, const DiscNetConfig& cfg,
                              const Planar<T>& input, DiscTape<T>* tape) {
  if (!cfg.fully_convolutional) {
    throw Error(ErrorKind::ConfigMismatch, "disc_forward needs a fully convolutional config");
  }
  check_input(params, cfg, input);
  Planar<T> z = run_convs(params, cfg, input, tape);
  for (T& v : z.values()) v = nn::sigmoid(v);
  ConfidenceMap<T> conf(bilinear_resize(z, input.height(), input.width()));
  if (tape) tape->sig = std::move(z);
  return conf;
}

template <typename T>
T disc_forward_global(const NetParams<T>& params, const DiscNetConfig& cfg,
                      const Planar<T>& input, DiscTape<T>* tape) {
  if (cfg.fully_convolutional) {
    throw Error(ErrorKind::ConfigMismatch, "disc_forward_global needs the global config");
  }
  check_input(params, cfg, input);
  if (input.height() != cfg.input_height || input.width() != cfg.input_width) {
    throw Error(ErrorKind::Shape, "global discriminator built for " +
                                      std::to_string(cfg.input_height) + "x" +
                                      std::to_string(cfg.input_width) + ", got " +
                                      std::to_string(input.height()) + "x" +
                                      std::to_string(input.width()));
  }
  const Planar<T> x = run_convs(params, cfg, input, tape);
  const auto& w = params.arrays[params.arrays.size() - 2].values;
  T z = params.arrays.back().values[0];
  for (std::size_t i = 0; i < x.size(); ++i) z += w[i] * x.data()[i];
  const T p = nn::sigmoid(z);
  if (tape) tape->global_prob = p;
  return p;
}

template <typename T>
ConfidenceMap<T> disc_confidence(const NetParams<T>& params, const DiscNetConfig& cfg,
                                 const Planar<T>& input, DiscTape<T>* tape) {
  if (cfg.fully_convolutional) return disc_forward(params, cfg, input, tape);
  const T p = disc_forward_global(params, cfg, input, tape);
  return ConfidenceMap<T>(input.height(), input.width(), p);
}

template <typename T>
void disc_backward(const NetParams<T>& params, const DiscNetConfig& cfg, const DiscTape<T>& tape,
                   const Planar<T>& grad_conf, NetParams<T>* grads, Planar<T>* grad_input) {
  const auto layers = cfg.conv_layers();
  const T slope = static_cast<T>(cfg.leaky_slope);
  auto gw = [&](std::size_t k) { return grads ? grads->arrays[k].values.data() : nullptr; };

  Planar<T> g;
  if (cfg.fully_convolutional) {
    g = bilinear_resize_backward(grad_conf, tape.sig.height(), tape.sig.width());
    for (std::size_t j = 0; j < g.size(); ++j) {
      const T s = tape.sig.data()[j];
      g.data()[j] *= s * (T{1} - s);
    }
  } else {
    T g_prob{0};
    for (T v : grad_conf.values()) g_prob += v;
    const T p = tape.global_prob;
    const T g_z = g_prob * p * (T{1} - p);
    const std::size_t kw = params.arrays.size() - 2;
    const auto& w = params.arrays[kw].values;
    const Planar<T>& x = tape.acts.back();
    if (grads) {
      auto& gwv = grads->arrays[kw].values;
      for (std::size_t i = 0; i < x.size(); ++i) gwv[i] += g_z * x.data()[i];
      grads->arrays[kw + 1].values[0] += g_z;
    }
    g = Planar<T>(x.channels(), x.height(), x.width());
    for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] = g_z * w[i];
    nn::leaky_relu_backward_inplace(x, g, slope);
  }

  for (std::size_t i = layers.size(); i-- > 0;) {
    const int in_h = i == 0 ? tape.in_h : tape.acts[i - 1].height();
    const int in_w = i == 0 ? tape.in_w : tape.acts[i - 1].width();
    const bool need_input = i > 0 || grad_input != nullptr;
    Planar<T> g_in;
    nn::conv2d_backward(layers[i], params[2 * i].values.data(), in_h, in_w, tape.cols[i], g,
                        gw(2 * i), gw(2 * i + 1), need_input ? &g_in : nullptr);
    if (i == 0) {
      if (grad_input) *grad_input = std::move(g_in);
      break;
    }
    nn::leaky_relu_backward_inplace(tape.acts[i - 1], g_in, slope);
    g = std::move(g_in);
  }
}

#define ADVSEG_INSTANTIATE_DISC(T)                                                               \
  template NetParams<T> init_params<T>(const DiscNetConfig&, std::uint64_t);                     \
  template ConfidenceMap<T> disc_forward<T>(const NetParams<T>&, const DiscNetConfig&,            \
                                            const Planar<T>&, DiscTape<T>*);                     \
  template T disc_forward_global<T>(const NetParams<T>&, const DiscNetConfig&, const Planar<T>&,  \
                                    DiscTape<T>*);                                               \
  template ConfidenceMap<T> disc_confidence<T>(const NetParams<T>&, const DiscNetConfig&,         \
                                               const Planar<T>&, DiscTape<T>*);                  \
  template void disc_backward<T>(const NetParams<T>&, const DiscNetConfig&, const DiscTape<T>&,   \
                                 const Planar<T>&, NetParams<T>*, Planar<T>*);

ADVSEG_INSTANTIATE_DISC(float)
ADVSEG_INSTANTIATE_DISC(double)

#undef ADVSEG_INSTANTIATE_DISC

}  // namespace advseg
