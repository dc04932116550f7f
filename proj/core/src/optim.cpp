#include "crossview/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace crossview {

void AdamState::init(const std::vector<Tensor*>& params) {
  step = 0;
  m.clear();
  v.clear();
  m.reserve(params.size());
  v.reserve(params.size());
  for (const Tensor* p : params) {
    m.emplace_back(p->shape());
    v.emplace_back(p->shape());
  }
}

void adam_step(const std::vector<Tensor*>& params, AdamState& state) {
  if (!state.initialized()) state.init(params);
  if (state.m.size() != params.size())
    throw std::invalid_argument("adam_step: state/parameter count mismatch");
  state.step += 1;
  const AdamConfig& c = state.config;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    if (!p.grad_enabled()) throw std::invalid_argument("adam_step: parameter has no grad");
    if (!state.m[i].same_shape(p)) throw std::invalid_argument("adam_step: moment shape mismatch");
    double* pv = p.data();
    const double* g = p.grad();
    double* mv = state.m[i].data();
    double* vv = state.v[i].data();
    const int64_t n = p.size();
    for (int64_t j = 0; j < n; ++j) {
      mv[j] = c.beta1 * mv[j] + (1.0 - c.beta1) * g[j];
      vv[j] = c.beta2 * vv[j] + (1.0 - c.beta2) * g[j] * g[j];
      const double mhat = mv[j] / bc1;
      const double vhat = vv[j] / bc2;
      pv[j] -= c.lr * mhat / (std::sqrt(vhat) + c.epsilon);
    }
  }
}

Tensor init_weights(std::vector<int> shape, InitKind kind, Rng& rng) {
  Tensor t(std::move(shape));
  const double mean = kind == InitKind::kBnGamma ? 1.0 : 0.0;
  const int64_t n = t.size();
  for (int64_t i = 0; i < n; ++i) t[i] = rng.normal(mean, 0.02);
  return t;
}

}  // namespace crossview
