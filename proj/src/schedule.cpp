#include "ddimlab/schedule.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ddimlab {

const char* schedule_kind_name(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::Linear: return "linear";
    case ScheduleKind::Quadratic: return "quadratic";
    case ScheduleKind::Cosine: return "cosine";
    case ScheduleKind::ContinuousCosine: return "continuous-cosine";
  }
  return "?";
}

ScheduleKind schedule_kind_from_name(const std::string& name) {
  if (name == "linear") return ScheduleKind::Linear;
  if (name == "quadratic") return ScheduleKind::Quadratic;
  if (name == "cosine") return ScheduleKind::Cosine;
  if (name == "continuous-cosine") return ScheduleKind::ContinuousCosine;
  throw std::invalid_argument("unknown schedule kind: " + name);
}

namespace {

void check_range(int t, int T) {
  if (t < 0 || t > T) throw std::out_of_range("schedule: t=" + std::to_string(t) + " outside [0," + std::to_string(T) + "]");
}

double cosine_bar(double t_over_T, double s) {
  const double x = (t_over_T + s) / (1.0 + s) * (std::numbers::pi / 2.0);
  const double c = std::cos(x);
  return c * c;
}

}  // namespace

double NoiseSchedule::alpha_at(int t) const {
  check_range(t, T);
  return alpha[static_cast<std::size_t>(t)];
}

std::pair<double, double> NoiseSchedule::rates_at(int t) const {
  const double a = alpha_at(t);
  return {std::sqrt(a), std::sqrt(1.0 - a)};
}

double NoiseSchedule::alpha_continuous(double u) const {
  if (u < 0.0 || u > 1.0) throw std::out_of_range("alpha_continuous: u outside [0,1]");
  if (kind == ScheduleKind::ContinuousCosine) {
    const double lo = std::acos(params.max_signal);
    const double hi = std::acos(params.min_signal);
    const double theta = lo + u * (hi - lo);
    const double c = std::cos(theta);
    return c * c;
  }
  const double x = u * static_cast<double>(T);
  int i = static_cast<int>(std::floor(x));
  if (i >= T) i = T - 1;
  const double f = x - static_cast<double>(i);
  return alpha[static_cast<std::size_t>(i)] * (1.0 - f) + alpha[static_cast<std::size_t>(i) + 1] * f;
}

double NoiseSchedule::posterior_sigma(int t) const {
  if (t < 1) throw std::out_of_range("posterior_sigma: t must be >= 1");
  check_range(t, T);
  const double at = alpha[static_cast<std::size_t>(t)];
  const double ap = alpha[static_cast<std::size_t>(t) - 1];
  const double var = (1.0 - ap) / (1.0 - at) * (1.0 - at / ap);
  return var > 0.0 ? std::sqrt(var) : 0.0;
}

NoiseSchedule make_schedule(ScheduleKind kind, int T, const ScheduleParams& p) {
  if (T < 2) throw std::invalid_argument("make_schedule: T must be >= 2");
  switch (kind) {
    case ScheduleKind::Linear:
    case ScheduleKind::Quadratic:
      if (!(p.beta_min > 0.0 && p.beta_min <= p.beta_max && p.beta_max < 1.0)) {
        throw std::invalid_argument("make_schedule: beta range must satisfy 0 < beta_min <= beta_max < 1");
      }
      break;
    case ScheduleKind::Cosine:
      if (!(p.cosine_s > 0.0)) throw std::invalid_argument("make_schedule: cosine offset must be positive");
      break;
    case ScheduleKind::ContinuousCosine:
      if (!(p.min_signal > 0.0 && p.min_signal < p.max_signal && p.max_signal <= 1.0)) {
        throw std::invalid_argument("make_schedule: need 0 < min_signal < max_signal <= 1");
      }
      break;
  }

  NoiseSchedule s;
  s.kind = kind;
  s.T = T;
  s.params = p;
  s.alpha.assign(static_cast<std::size_t>(T) + 1, 0.0);

  switch (kind) {
    case ScheduleKind::Linear: {
      s.alpha[0] = 1.0;
      double prod = 1.0;
      for (int t = 1; t <= T; ++t) {
        const double beta = p.beta_min + (p.beta_max - p.beta_min) * static_cast<double>(t - 1) / static_cast<double>(T - 1);
        prod *= 1.0 - beta;
        s.alpha[static_cast<std::size_t>(t)] = prod;
      }
      break;
    }
    case ScheduleKind::Quadratic: {
      s.alpha[0] = 1.0;
      const double rmin = std::sqrt(p.beta_min);
      const double rmax = std::sqrt(p.beta_max);
      double prod = 1.0;
      for (int t = 1; t <= T; ++t) {
        const double r = rmin + (rmax - rmin) * static_cast<double>(t) / static_cast<double>(T);
        prod *= 1.0 - r * r;
        s.alpha[static_cast<std::size_t>(t)] = prod;
      }
      break;
    }
    case ScheduleKind::Cosine: {
      const double norm = cosine_bar(0.0, p.cosine_s);
      for (int t = 0; t <= T; ++t) {
        s.alpha[static_cast<std::size_t>(t)] = cosine_bar(static_cast<double>(t) / static_cast<double>(T), p.cosine_s) / norm;
      }
      s.alpha[0] = 1.0;
      break;
    }
    case ScheduleKind::ContinuousCosine: {
      const double lo = std::acos(p.max_signal);
      const double hi = std::acos(p.min_signal);
      s.alpha[0] = 1.0;  // clamped so generation can close at the exact datum
      for (int t = 1; t < T; ++t) {
        const double theta = lo + (hi - lo) * static_cast<double>(t) / static_cast<double>(T);
        const double c = std::cos(theta);
        s.alpha[static_cast<std::size_t>(t)] = c * c;
      }
      s.alpha[static_cast<std::size_t>(T)] = p.min_signal * p.min_signal;
      break;
    }
  }

  for (int t = 0; t < T; ++t) {
    if (!(s.alpha[static_cast<std::size_t>(t)] > s.alpha[static_cast<std::size_t>(t) + 1])) {
      throw std::invalid_argument("make_schedule: alpha not strictly decreasing at t=" + std::to_string(t + 1));
    }
  }
  if (!(s.alpha[static_cast<std::size_t>(T)] > 0.0)) {
    throw std::invalid_argument("make_schedule: alpha_T must stay positive, violated at t=" + std::to_string(T));
  }
  if (!(s.alpha[0] <= 1.0)) {
    throw std::invalid_argument("make_schedule: alpha_0 must be <= 1, violated at t=0");
  }
  return s;
}

std::vector<int> subsequence(const NoiseSchedule& s, int K) {
  if (K < 2 || K > s.T) throw std::invalid_argument("subsequence: K must be in [2, T]");
  std::vector<int> idx(static_cast<std::size_t>(K) + 1);
  for (int j = 0; j <= K; ++j) {
    idx[static_cast<std::size_t>(j)] =
        static_cast<int>(std::llround(static_cast<double>(j) * static_cast<double>(s.T) / static_cast<double>(K)));
  }
  idx[0] = 0;
  idx[static_cast<std::size_t>(K)] = s.T;
  return idx;
}

}  // namespace ddimlab
