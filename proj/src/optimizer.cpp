#include "cfanet/optimizer.hpp"

#include <cmath>

#include "cfanet/errors.hpp"

namespace cfanet {
namespace {

void check_finite(std::span<const ParamRef> params) {
  for (const ParamRef& p : params) {
    if (p.value.size() != p.grad.size()) {
      throw ShapeError("optimizer: parameter '" + p.name + "' has " +
                       std::to_string(p.value.size()) + " values but " +
                       std::to_string(p.grad.size()) + " gradients");
    }
    for (std::size_t i = 0; i < p.grad.size(); ++i) {
      if (!std::isfinite(p.grad[i])) {
        throw NumericError("optimizer: non-finite gradient " + std::to_string(p.grad[i]) +
                           " in parameter '" + p.name + "' at element " + std::to_string(i));
      }
    }
  }
}

void sgd_clip_step(std::span<const ParamRef> params, OptimizerState& state) {
  Real norm_sq = 0;
  for (const ParamRef& p : params) {
    for (Real g : p.grad) norm_sq += g * g;
  }
  const Real norm = std::sqrt(norm_sq);
  Real clip = 1;
  if (std::isfinite(state.config.clip_threshold) && norm > state.config.clip_threshold) {
    clip = state.config.clip_threshold / norm;
  }
  for (const ParamRef& p : params) {
    const Real lr = state.config.learning_rate * p.lr_scale;
    for (std::size_t i = 0; i < p.value.size(); ++i) p.value[i] -= lr * clip * p.grad[i];
  }
}

void adam_step(std::span<const ParamRef> params, OptimizerState& state) {
  if (state.first_moment.empty()) {
    for (const ParamRef& p : params) {
      state.first_moment.emplace_back(p.value.size(), Real(0));
      state.second_moment.emplace_back(p.value.size(), Real(0));
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw ShapeError("optimizer: state tracks " + std::to_string(state.first_moment.size()) +
                     " parameters but step received " + std::to_string(params.size()));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (state.first_moment[k].size() != params[k].value.size() ||
        state.second_moment[k].size() != params[k].value.size()) {
      throw ShapeError("optimizer: moment shape mismatch for parameter '" + params[k].name + "'");
    }
  }

  const OptimizerConfig& cfg = state.config;
  const auto t = static_cast<Real>(state.step + 1);
  const Real correction1 = 1 - std::pow(cfg.beta1, t);
  const Real correction2 = 1 - std::pow(cfg.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    const ParamRef& p = params[k];
    std::vector<Real>& m = state.first_moment[k];
    std::vector<Real>& v = state.second_moment[k];
    const Real lr = cfg.learning_rate * p.lr_scale;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const Real g = p.grad[i];
      m[i] = cfg.beta1 * m[i] + (1 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1 - cfg.beta2) * g * g;
      const Real m_hat = m[i] / correction1;
      const Real v_hat = v[i] / correction2;
      p.value[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.adam_epsilon);
    }
  }
}

}  // namespace

void optimizer_step(std::span<const ParamRef> params, OptimizerState& state) {
  check_finite(params);
  switch (state.config.kind) {
    case OptimizerKind::sgd_clip:
      sgd_clip_step(params, state);
      break;
    case OptimizerKind::adam:
      adam_step(params, state);
      break;
  }
  ++state.step;
}

const char* to_string(OptimizerKind kind) {
  return kind == OptimizerKind::adam ? "adam" : "sgd-clip";
}

OptimizerKind parse_optimizer_kind(const std::string& name) {
  if (name == "adam") return OptimizerKind::adam;
  if (name == "sgd-clip" || name == "sgd") return OptimizerKind::sgd_clip;
  throw ConfigError("unknown optimizer '" + name + "' (expected adam or sgd-clip)");
}

}  // namespace cfanet
