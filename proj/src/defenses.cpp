#include "fedval/defenses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fedval {

const char* defense_name(DefenseKind k) {
  switch (k) {
    case DefenseKind::fedavg_plain: return "fedavg_plain";
    case DefenseKind::norm_bound_adaptive: return "norm_bound_adaptive";
    case DefenseKind::norm_bound_public: return "norm_bound_public";
    case DefenseKind::norm_ball: return "norm_ball";
    case DefenseKind::cosine_sim: return "cosine_sim";
    case DefenseKind::crosscheck_acc: return "crosscheck_acc";
    case DefenseKind::crosscheck_prob: return "crosscheck_prob";
  }
  return "unknown";
}

DefenseKind defense_from_name(const std::string& name) {
  for (DefenseKind k :
       {DefenseKind::fedavg_plain, DefenseKind::norm_bound_adaptive,
        DefenseKind::norm_bound_public, DefenseKind::norm_ball,
        DefenseKind::cosine_sim, DefenseKind::crosscheck_acc,
        DefenseKind::crosscheck_prob}) {
    if (name == defense_name(k)) return k;
  }
  throw std::invalid_argument("unknown defense kind: " + name);
}

bool defense_is_crosscheck(DefenseKind k) {
  return k == DefenseKind::crosscheck_acc || k == DefenseKind::crosscheck_prob;
}

bool defense_needs_pubval(DefenseKind k) {
  return k == DefenseKind::norm_bound_public || k == DefenseKind::norm_ball ||
         k == DefenseKind::cosine_sim;
}

double defense_default_lambda(DefenseKind k) {
  switch (k) {
    case DefenseKind::norm_bound_adaptive: return 1.5;
    case DefenseKind::norm_ball: return 1.0;
    case DefenseKind::cosine_sim: return 0.5;
    case DefenseKind::crosscheck_acc:
    case DefenseKind::crosscheck_prob: return 1.5;  // median norm bound
    default: return 1.0;
  }
}

double l2_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("cosine of different-sized vectors");
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  const double na = l2_norm(a), nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (na * nb);
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty list");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::vector<uint8_t> norm_bound_adaptive(
    const std::vector<std::vector<double>>& updates,
    const std::vector<double>& prev_norms, double lambda) {
  std::vector<double> norms(updates.size());
  for (std::size_t i = 0; i < updates.size(); ++i) {
    norms[i] = l2_norm(updates[i]);
  }
  const double tau =
      lambda * median(prev_norms.empty() ? norms : prev_norms);
  std::vector<uint8_t> bits(updates.size());
  for (std::size_t i = 0; i < updates.size(); ++i) {
    bits[i] = norms[i] < tau;
  }
  return bits;
}

std::vector<uint8_t> norm_bound_public(
    const std::vector<std::vector<double>>& updates,
    const std::vector<double>& u_pubval) {
  const double tau = l2_norm(u_pubval);
  std::vector<uint8_t> bits(updates.size());
  for (std::size_t i = 0; i < updates.size(); ++i) {
    bits[i] = l2_norm(updates[i]) < tau;
  }
  return bits;
}

std::vector<uint8_t> norm_ball(
    const std::vector<std::vector<double>>& updates,
    const std::vector<double>& u_pubval, double lambda) {
  const double tau = lambda * l2_norm(u_pubval);
  std::vector<uint8_t> bits(updates.size());
  for (std::size_t i = 0; i < updates.size(); ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < u_pubval.size(); ++k) {
      const double d = updates[i][k] - u_pubval[k];
      s += d * d;
    }
    bits[i] = std::sqrt(s) < tau;
  }
  return bits;
}

std::vector<uint8_t> cosine_sim(
    const std::vector<std::vector<double>>& updates,
    const std::vector<double>& u_prev_global,
    const std::vector<double>& u_pubval, double lambda) {
  const double tau = lambda * cosine(u_pubval, u_prev_global);
  std::vector<uint8_t> bits(updates.size());
  for (std::size_t i = 0; i < updates.size(); ++i) {
    bits[i] = cosine(updates[i], u_prev_global) >= tau;
  }
  return bits;
}

}  // namespace fedval
