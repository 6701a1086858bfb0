#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "cfanet/tensor.hpp"

namespace cfanet {

enum class OptimizerKind { sgd_clip, adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  Real learning_rate = 1e-5;
  /// Global L2 norm ceiling for sgd-clip. Infinity disables clipping.
  Real clip_threshold = 1.0;
  Real beta1 = 0.9;
  Real beta2 = 0.999;
  Real adam_epsilon = 1e-8;
};

/// One trainable tensor together with its gradient.
struct ParamRef {
  std::string name;
  std::span<Real> value;
  std::span<const Real> grad;
  Real lr_scale = 1;
};

/// Mutable state carried across optimizer steps. Adam moments are allocated
/// lazily on the first step and must keep matching the parameter list.
struct OptimizerState {
  OptimizerConfig config;
  std::uint64_t step = 0;
  std::vector<std::vector<Real>> first_moment;
  std::vector<std::vector<Real>> second_moment;

  OptimizerState() = default;
  explicit OptimizerState(OptimizerConfig cfg) : config(cfg) {}
};

/// Applies one update. Throws NumericError (leaving parameters untouched)
/// when any gradient is non-finite, and ShapeError when the parameter list
/// no longer matches the stored moments.
void optimizer_step(std::span<const ParamRef> params, OptimizerState& state);

const char* to_string(OptimizerKind kind);
OptimizerKind parse_optimizer_kind(const std::string& name);

}  // namespace cfanet
