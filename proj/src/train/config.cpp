#include "advseg/train/config.hpp"

#include <fstream>
#include <sstream>

#include "advseg/core/kvtext.hpp"

namespace advseg {

TrainConfig TrainConfig::pascal_style() {
  TrainConfig c;
  c.max_iterations = 20000;
  c.batch_size = 10;
  c.augmentation = {321, 321, 0.5, 1.5, true};
  c.seg.class_count = 21;
  c.disc.class_count = 21;
  return c;
}

TrainConfig TrainConfig::cityscapes_style() {
  TrainConfig c;
  c.max_iterations = 40000;
  c.batch_size = 2;
  c.augmentation = {512, 1024, 1.0, 1.0, false};
  c.seg.class_count = 19;
  c.disc.class_count = 19;
  return c;
}

TrainConfig TrainConfig::desk() {
  TrainConfig c;
  c.max_iterations = 2000;
  c.warm_up_iterations = 500;
  c.batch_size = 8;
  // Trained from scratch rather than fine-tuned, so the segmentation
  // network needs a larger step than the pretrained-backbone default.
  c.seg_lr0 = 0.08;
  c.augmentation = {64, 64, 0.75, 1.25, true};
  c.seg.class_count = 4;
  c.seg.base_channels = 32;
  c.disc.class_count = 4;
  return c;
}

void TrainConfig::validate() const {
  if (max_iterations < 1) throw Error(ErrorKind::InvalidConfig, "max_iterations must be >= 1");
  if (batch_size < 1) throw Error(ErrorKind::InvalidConfig, "batch_size must be >= 1");
  if (warm_up_iterations < 0 || warm_up_iterations > max_iterations) {
    throw Error(ErrorKind::InvalidConfig, "warm_up_iterations must lie in [0, max_iterations]");
  }
  if (!(seg_lr0 >= 0) || !(disc_lr0 >= 0)) {
    throw Error(ErrorKind::InvalidConfig, "learning rates must be >= 0");
  }
  if (!(momentum >= 0 && momentum < 1)) throw Error(ErrorKind::InvalidConfig, "momentum in [0,1)");
  if (!(weight_decay >= 0)) throw Error(ErrorKind::InvalidConfig, "weight_decay must be >= 0");
  if (!(poly_power >= 0)) throw Error(ErrorKind::InvalidConfig, "poly_power must be >= 0");
  if (!(adam_beta1 >= 0 && adam_beta1 < 1 && adam_beta2 >= 0 && adam_beta2 < 1)) {
    throw Error(ErrorKind::InvalidConfig, "adam betas must lie in [0,1)");
  }
  if (!(scale_alpha >= 0 && scale_alpha <= 1)) {
    throw Error(ErrorKind::InvalidConfig, "scale_alpha must lie in [0,1]");
  }
  if (checkpoint_every < 0) throw Error(ErrorKind::InvalidConfig, "checkpoint_every must be >= 0");
  hp.validate();
  if (augment) augmentation.validate();
  seg.validate();
  disc.validate();
  if (seg.class_count != disc.class_count) {
    throw Error(ErrorKind::ConfigMismatch, "segmentation and discriminator class counts differ");
  }
}

std::string TrainConfig::to_text() const {
  KvWriter w;
  w.write("max_iterations", max_iterations);
  w.write("batch_size", batch_size);
  w.write("seg_lr0", seg_lr0);
  w.write("disc_lr0", disc_lr0);
  w.write("momentum", momentum);
  w.write("nesterov", nesterov);
  w.write("weight_decay", weight_decay);
  w.write("poly_power", poly_power);
  w.write("adam_beta1", adam_beta1);
  w.write("adam_beta2", adam_beta2);
  w.write("adam_eps", adam_eps);
  w.write("warm_up_iterations", warm_up_iterations);
  w.write("lambda_adv_labeled", hp.lambda_adv_labeled);
  w.write("lambda_adv_unlabeled", hp.lambda_adv_unlabeled);
  w.write("lambda_semi", hp.lambda_semi);
  w.write("t_semi", hp.t_semi);
  w.write("scale_alpha", scale_alpha);
  w.write("seed", seed);
  w.write("checkpoint_every", checkpoint_every);
  w.write("deterministic", deterministic);
  w.write("augment", augment);
  w.write("crop_h", augmentation.crop_h);
  w.write("crop_w", augmentation.crop_w);
  w.write("scale_min", augmentation.scale_min);
  w.write("scale_max", augmentation.scale_max);
  w.write("enable_scale", augmentation.enable_scale);
  return w.str() + seg.to_text() + disc.to_text();
}

TrainConfig TrainConfig::from_text(const std::string& text) {
  KvReader r(text);
  TrainConfig c = desk();
  r.read("max_iterations", c.max_iterations);
  r.read("batch_size", c.batch_size);
  r.read("seg_lr0", c.seg_lr0);
  r.read("disc_lr0", c.disc_lr0);
  r.read("momentum", c.momentum);
  r.read("nesterov", c.nesterov);
  r.read("weight_decay", c.weight_decay);
  r.read("poly_power", c.poly_power);
  r.read("adam_beta1", c.adam_beta1);
  r.read("adam_beta2", c.adam_beta2);
  r.read("adam_eps", c.adam_eps);
  r.read("warm_up_iterations", c.warm_up_iterations);
  r.read("lambda_adv_labeled", c.hp.lambda_adv_labeled);
  r.read("lambda_adv_unlabeled", c.hp.lambda_adv_unlabeled);
  r.read("lambda_semi", c.hp.lambda_semi);
  r.read("t_semi", c.hp.t_semi);
  r.read("scale_alpha", c.scale_alpha);
  r.read("seed", c.seed);
  r.read("checkpoint_every", c.checkpoint_every);
  r.read("deterministic", c.deterministic);
  r.read("augment", c.augment);
  r.read("crop_h", c.augmentation.crop_h);
  r.read("crop_w", c.augmentation.crop_w);
  r.read("scale_min", c.augmentation.scale_min);
  r.read("scale_max", c.augmentation.scale_max);
  r.read("enable_scale", c.augmentation.enable_scale);
  r.read("seg.class_count", c.seg.class_count);
  r.read("seg.base_channels", c.seg.base_channels);
  r.read("seg.stem_stride", c.seg.stem_stride);
  r.read("seg.block_strides", c.seg.block_strides);
  r.read("seg.block_dilations", c.seg.block_dilations);
  r.read("seg.pyramid_dilations", c.seg.pyramid_dilations);
  r.read("disc.class_count", c.disc.class_count);
  r.read("disc.channels", c.disc.channels);
  r.read("disc.leaky_slope", c.disc.leaky_slope);
  r.read("disc.fully_convolutional", c.disc.fully_convolutional);
  r.read("disc.input_height", c.disc.input_height);
  r.read("disc.input_width", c.disc.input_width);
  r.finish();
  c.validate();
  return c;
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidConfig, "cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return TrainConfig::from_text(ss.str());
}

}  // namespace advseg
