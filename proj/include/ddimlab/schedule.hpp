#pragma once

#include <string>
#include <vector>

namespace ddimlab {

enum class ScheduleKind { Linear, Quadratic, Cosine, ContinuousCosine };

const char* schedule_kind_name(ScheduleKind k);
ScheduleKind schedule_kind_from_name(const std::string& name);

struct ScheduleParams {
  double beta_min = 1e-4;     // linear / quadratic
  double beta_max = 0.02;     // linear / quadratic
  double cosine_s = 0.008;    // cosine offset
  double max_signal = 0.95;   // continuous cosine
  double min_signal = 0.02;   // continuous cosine
};

/// The decreasing signal-variance table alpha_0..alpha_T together with the
/// construction parameters. signal_rate(t)^2 + noise_rate(t)^2 == 1 by
/// definition; immutable after construction.
struct NoiseSchedule {
  ScheduleKind kind = ScheduleKind::ContinuousCosine;
  int T = 1000;
  ScheduleParams params;
  std::vector<double> alpha;  // size T+1

  double alpha_at(int t) const;
  /// (sqrt(alpha_t), sqrt(1 - alpha_t)).
  std::pair<double, double> rates_at(int t) const;

  /// Continuous-time alpha for u in [0, 1]. Continuous-cosine interpolates
  /// the diffusion angle; table kinds interpolate alpha linearly at t = u*T.
  double alpha_continuous(double u) const;

  /// DDPM posterior sigma_t for the step t -> t-1 (zero noise at t = 1 is
  /// the caller's business).
  double posterior_sigma(int t) const;
};

NoiseSchedule make_schedule(ScheduleKind kind, int T, const ScheduleParams& params = {});

/// K+1 uniformly strided indices from 0 to T, endpoints included.
std::vector<int> subsequence(const NoiseSchedule& s, int K);

}  // namespace ddimlab
