#include "mrc/optim.hpp"

#include <cmath>

#include "mrc/errors.hpp"

namespace mrc {

void Adam::step(ParamStore& params, const GradientMap& grads) {
  for (const auto& [name, g] : grads) {
    const Parameter* p = params.find(name);
    if (!p) throw ContractError("adam: gradient for unknown parameter " + name);
    if (!p->requires_grad) throw ContractError("adam: gradient for frozen parameter " + name);
    if (!g.same_shape(p->value)) {
      throw ShapeError("adam: gradient shape " + shape_str(g.shape()) + " differs from parameter " +
                       name + " " + shape_str(p->value.shape()));
    }
    auto it = moments_.find(name);
    if (it != moments_.end() &&
        (!it->second.first.same_shape(p->value) || !it->second.second.same_shape(p->value))) {
      throw StateError("adam: moment shapes for " + name + " do not match the parameter");
    }
  }

  ++steps_;
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  for (const auto& [name, g] : grads) {
    Parameter& p = params.at(name);
    auto [it, fresh] = moments_.try_emplace(name);
    if (fresh) {
      it->second.first = Tensor(p.value.shape());
      it->second.second = Tensor(p.value.shape());
    }
    auto m = it->second.first.data();
    auto v = it->second.second.data();
    auto w = p.value.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      w[i] = storage_round(w[i] - config_.lr * m_hat / (std::sqrt(v_hat) + config_.epsilon));
    }
  }
}

void Adam::restore(std::uint64_t steps, std::map<std::string, AdamMoments> moments) {
  steps_ = steps;
  moments_ = std::move(moments);
}

}  // namespace mrc
