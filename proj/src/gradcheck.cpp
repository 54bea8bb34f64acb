#include "mrc/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>

#include "mrc/errors.hpp"

namespace mrc {

double relative_error(double analytic, double numeric, double denom_floor) {
  const double diff = std::abs(analytic - numeric);
  if (diff == 0.0) return 0.0;
  return diff / std::max({std::abs(analytic), std::abs(numeric), denom_floor});
}

namespace {
double eval_loss(const std::function<Var()>& fn, const std::string& where) {
  const double v = fn().value().item();
  if (!std::isfinite(v)) throw NumericError("grad_check: non-finite loss at " + where);
  return v;
}
}  // namespace

GradCheckReport grad_check(const std::function<Var()>& loss_fn, std::span<Parameter* const> params,
                           const GradCheckOptions& options) {
  if (precision() != Precision::kFloat64) {
    throw ContractError("grad_check requires the 64-bit engine mode");
  }
  BranchRecorder recorder;
  const GradientMap analytic = backward(loss_fn());
  const std::uint64_t base_branches = recorder.signature();

  struct Coord {
    Parameter* p;
    std::size_t index;
  };
  std::vector<Coord> coords;
  for (Parameter* p : params) {
    if (!p->requires_grad) continue;
    for (std::size_t i = 0; i < p->value.numel(); ++i) coords.push_back({p, i});
  }
  if (coords.size() > options.max_coords) {
    std::mt19937_64 rng(options.seed);
    for (std::size_t i = 0; i < options.max_coords; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng() % (coords.size() - i));
      std::swap(coords[i], coords[j]);
    }
    coords.resize(options.max_coords);
    auto rank = [&](const Parameter* p) {
      return std::find(params.begin(), params.end(), p) - params.begin();
    };
    std::sort(coords.begin(), coords.end(), [&](const Coord& a, const Coord& b) {
      const auto ra = rank(a.p), rb = rank(b.p);
      return ra != rb ? ra < rb : a.index < b.index;
    });
  }

  GradCheckReport report;
  auto group_of = [&](const std::string& name) -> GroupCheck& {
    for (auto& g : report.groups)
      if (g.group == name) return g;
    GroupCheck g;
    g.group = name;
    report.groups.push_back(std::move(g));
    return report.groups.back();
  };
  for (Parameter* p : params) {
    if (p->requires_grad) group_of(p->group);
  }

  for (const Coord& c : coords) {
    const std::string where = c.p->name + "[" + std::to_string(c.index) + "]";
    auto it = analytic.find(c.p->name);
    const double a = it == analytic.end() ? 0.0 : it->second[c.index];
    if (!std::isfinite(a)) throw NumericError("grad_check: non-finite analytic gradient at " + where);

    double& w = c.p->value[c.index];
    const double saved = w;
    double step = options.eps;
    std::optional<double> numeric;
    for (std::size_t attempt = 0; attempt <= options.kink_retries; ++attempt, step /= 10.0) {
      recorder.reset();
      w = saved + step;
      const double up = eval_loss(loss_fn, where);
      const std::uint64_t up_branches = recorder.signature();
      recorder.reset();
      w = saved - step;
      const double down = eval_loss(loss_fn, where);
      const std::uint64_t down_branches = recorder.signature();
      w = saved;
      if (up_branches == base_branches && down_branches == base_branches) {
        numeric = (up - down) / (2.0 * step);
        if (attempt > 0) ++report.reduced_step;
        break;
      }
    }
    GroupCheck& g = group_of(c.p->group);
    if (!numeric) {
      ++g.kink_skipped;
      ++report.kink_skipped;
      continue;
    }

    const double err = relative_error(a, *numeric, options.denom_floor);
    ++g.coords;
    ++report.coords;
    if (err > g.max_rel_error || g.worst_param.empty()) {
      g.max_rel_error = err;
      g.worst_param = c.p->name;
      g.worst_index = c.index;
      g.worst_analytic = a;
      g.worst_numeric = *numeric;
    }
    report.max_rel_error = std::max(report.max_rel_error, err);
  }
  return report;
}

}  // namespace mrc
