#include "fedval/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fedval {

const char* attack_name(AttackKind k) {
  switch (k) {
    case AttackKind::none: return "none";
    case AttackKind::additive_noise: return "additive_noise";
    case AttackKind::sign_flip: return "sign_flip";
    case AttackKind::label_flip: return "label_flip";
    case AttackKind::adaptive: return "adaptive";
  }
  return "unknown";
}

AttackKind attack_from_name(const std::string& name) {
  for (AttackKind k :
       {AttackKind::none, AttackKind::additive_noise, AttackKind::sign_flip,
        AttackKind::label_flip, AttackKind::adaptive}) {
    if (name == attack_name(k)) return k;
  }
  throw std::invalid_argument("unknown attack kind: " + name);
}

std::vector<double> LambdaGrid::values() const {
  if (points < 1 || min <= 0.0 || max < min) {
    throw std::invalid_argument("bad lambda grid");
  }
  std::vector<double> v(points);
  if (points == 1) {
    v[0] = min;
    return v;
  }
  const double ratio = std::pow(max / min, 1.0 / (points - 1));
  double x = min;
  for (int i = 0; i < points; ++i) {
    v[i] = x;
    x *= ratio;
  }
  v.back() = max;
  return v;
}

std::vector<double> additive_noise(const std::vector<double>& u, double sigma,
                                   std::mt19937_64& rng) {
  if (sigma < 0.0) throw std::invalid_argument("sigma must be >= 0");
  std::vector<double> out = u;
  if (sigma == 0.0) return out;
  std::normal_distribution<double> noise(0.0, sigma);
  for (double& x : out) x += noise(rng);
  return out;
}

std::vector<double> sign_flip(const std::vector<double>& u) {
  std::vector<double> out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = -u[i];
  return out;
}

Dataset label_flip(const Dataset& d) {
  Dataset out = d;
  const int L = static_cast<int>(d.num_classes);
  for (int& label : out.y) label = L - label - 1;
  return out;
}

std::vector<double> estimate_direction(const AdversaryView& view) {
  if (view.clean_updates.empty()) {
    throw std::invalid_argument("adversary view has no clean updates");
  }
  const std::size_t dim = view.clean_updates[0].size();
  std::vector<double> mean(dim, 0.0);
  for (const auto& u : view.clean_updates) {
    for (std::size_t k = 0; k < dim; ++k) mean[k] += u[k];
  }
  std::vector<double> s(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    s[k] = mean[k] > 0.0 ? 1.0 : (mean[k] < 0.0 ? -1.0 : 0.0);
  }
  return s;
}

namespace {
constexpr double kEps = 1e-6;
}

std::vector<double> adaptive_normbound(const AdversaryView& view, double tau) {
  if (tau <= kEps) throw std::invalid_argument("tau too small to attack");
  const auto s = estimate_direction(view);
  const double d = static_cast<double>(s.size());
  const double mag = (tau - kEps) / std::sqrt(d);
  std::vector<double> u(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) u[k] = -s[k] * mag;
  return u;
}

std::vector<double> adaptive_normball(const AdversaryView& view,
                                      const std::vector<double>& u_pubval,
                                      double tau) {
  if (tau <= kEps) throw std::invalid_argument("tau too small to attack");
  const auto s = estimate_direction(view);
  const double d = static_cast<double>(s.size());
  const double mag = std::min(tau - kEps, (tau - kEps) / std::sqrt(d));
  std::vector<double> u(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) {
    u[k] = u_pubval[k] - s[k] * mag;
  }
  return u;
}

std::vector<double> adaptive_cosine(const AdversaryView& view, double tau,
                                    const LambdaGrid& grid) {
  const auto s = estimate_direction(view);
  const std::size_t dim = s.size();
  std::vector<double> u_est(dim, 0.0);
  for (const auto& u : view.clean_updates) {
    for (std::size_t k = 0; k < dim; ++k) u_est[k] += u[k];
  }
  for (double& x : u_est) x /= static_cast<double>(view.clean_updates.size());

  const auto lambdas = grid.values();
  std::vector<double> candidate(dim);
  for (int g = static_cast<int>(lambdas.size()) - 1; g >= 0; --g) {
    for (std::size_t k = 0; k < dim; ++k) {
      candidate[k] = u_est[k] - lambdas[g] * s[k];
    }
    if (cosine(candidate, view.u_prev_global) >= tau) return candidate;
  }
  for (std::size_t k = 0; k < dim; ++k) {
    candidate[k] = u_est[k] - lambdas.front() * s[k];
  }
  return candidate;
}

std::vector<double> adaptive_crosscheck(const AdversaryView& view,
                                        const LambdaGrid& grid) {
  if (view.clean_data == nullptr || view.clean_data->rows() == 0) {
    throw std::invalid_argument("adaptive attack needs the clean dataset");
  }
  const auto s = estimate_direction(view);
  const std::size_t dim = s.size();

  // stand-ins for the unknown benign models: the malicious clients' own
  // clean local models
  std::vector<double> proxy_acc;
  proxy_acc.reserve(view.clean_updates.size());
  for (const auto& u : view.clean_updates) {
    std::vector<double> w(view.global_model);
    for (std::size_t k = 0; k < dim; ++k) w[k] += u[k];
    MlpModel model(view.layer_dims, std::move(w));
    proxy_acc.push_back(accuracy(model, *view.clean_data));
  }
  const std::size_t half =
      (proxy_acc.size() + 1) / 2;  // top 50% = rank within ceil(n/2)

  std::vector<double> u_est(dim, 0.0);
  for (const auto& u : view.clean_updates) {
    for (std::size_t k = 0; k < dim; ++k) u_est[k] += u[k];
  }
  for (double& x : u_est) x /= static_cast<double>(view.clean_updates.size());

  const auto lambdas = grid.values();
  auto poisoned = [&](double lambda) {
    std::vector<double> u(dim);
    for (std::size_t k = 0; k < dim; ++k) u[k] = u_est[k] - lambda * s[k];
    return u;
  };
  for (int g = static_cast<int>(lambdas.size()) - 1; g >= 0; --g) {
    const auto u = poisoned(lambdas[g]);
    std::vector<double> w(view.global_model);
    for (std::size_t k = 0; k < dim; ++k) w[k] += u[k];
    MlpModel model(view.layer_dims, std::move(w));
    const double acc = accuracy(model, *view.clean_data);
    std::size_t strictly_better = 0;
    for (double a : proxy_acc) {
      if (a > acc) ++strictly_better;
    }
    if (strictly_better < half) return u;
  }
  return poisoned(lambdas.front());
}

namespace {

void extreme_values(ScoreVariant variant, int num_classes, double& hi,
                    double& lo) {
  if (variant == ScoreVariant::acc) {
    hi = 1.0;
    lo = -1.0;
  } else {
    hi = 1.0;
    lo = 1.0 / static_cast<double>(num_classes);
  }
}

}  // namespace

ScoreOverride make_extreme_override(const std::vector<uint8_t>& malicious,
                                    ScoreVariant variant, int num_classes) {
  double hi, lo;
  extreme_values(variant, num_classes, hi, lo);
  return [malicious, hi, lo](int i, int j) -> std::optional<double> {
    if (!malicious[j]) return std::nullopt;  // only malicious validators
    return malicious[i] ? hi : lo;
  };
}

void apply_extreme_manipulation(std::vector<std::vector<double>>& scores,
                                const Committees& com,
                                const std::vector<uint8_t>& malicious,
                                ScoreVariant variant, int num_classes) {
  double hi, lo;
  extreme_values(variant, num_classes, hi, lo);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    for (std::size_t c = 0; c < scores[i].size(); ++c) {
      const int j = com.members[i][c];
      if (malicious[j]) scores[i][c] = malicious[i] ? hi : lo;
    }
  }
}

}  // namespace fedval
