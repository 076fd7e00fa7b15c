#pragma once

#include "smaug/trainer/config.hpp"

namespace smaug::testing {

/// A configuration small enough for unit tests to train in milliseconds.
inline trainer::TrainConfig tiny_config() {
  trainer::TrainConfig c;
  c.seed = 5;
  c.epochs = 2;
  c.batch_size = 4;
  c.base_lr = 1e-3;
  c.n_pairs = 10;
  c.n_train = 8;
  c.n_concepts = 6;
  c.frames = 1;
  c.height = 16;
  c.width = 16;
  c.patch_size = 4;
  c.dim = 8;
  c.heads = 2;
  c.mlp_ratio = 2;
  c.depth = 2;
  c.sparsify_layers = {1};
  c.decoder_depth = 1;
  c.decoder_dim = 8;
  c.text_depth = 1;
  c.fusion_depth = 1;
  c.selector_blocks = 1;
  c.selector_hidden = 16;
  c.vtc_dim = 8;
  return c;
}

}  // namespace smaug::testing
