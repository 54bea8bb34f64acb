#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "mrc/autodiff.hpp"

namespace mrc {

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamMoments {
  Tensor first;
  Tensor second;
};

// Adam with bias correction. Moments are created lazily the first time a
// parameter receives a gradient; parameters absent from a GradientMap are
// left untouched (their moments do not decay either).
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  void step(ParamStore& params, const GradientMap& grads);

  const AdamConfig& config() const noexcept { return config_; }
  std::uint64_t steps() const noexcept { return steps_; }
  const std::map<std::string, AdamMoments>& moments() const noexcept { return moments_; }

  // Used by checkpoint loading.
  void restore(std::uint64_t steps, std::map<std::string, AdamMoments> moments);

 private:
  AdamConfig config_;
  std::uint64_t steps_ = 0;
  std::map<std::string, AdamMoments> moments_;
};

}  // namespace mrc
