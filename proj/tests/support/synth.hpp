#pragma once

#include <cmath>
#include <string>

#include "purrfect/datastore.hpp"
#include "purrfect/rng.hpp"

namespace testsupport {

struct Truth {
  double b0 = -0.7, b1 = 0.9, b2 = 3e-4, b3 = 6e-4;
  double sigma_u = 0.5;
};

/// Binomial training rows: participants [0, n_audio) audio-only, the rest
/// haptic, `trials` rows each numbered 1..trials.
inline purrfect::ObservationTable binomial_table(const Truth& t, int n_audio, int n_haptic,
                                                 int trials, purrfect::TrialRng& rng) {
  purrfect::ObservationTable table;
  for (int p = 0; p < n_audio + n_haptic; ++p) {
    const int h = p >= n_audio ? 1 : 0;
    const double u = t.sigma_u * rng.normal();
    for (int n = 1; n <= trials; ++n) {
      const double eta = t.b0 + t.b1 * h + t.b2 * n + t.b3 * h * n + u;
      const double prob = 1.0 / (1.0 + std::exp(-eta));
      purrfect::Observation row;
      row.participant_id = "P" + std::to_string(p + 1);
      row.haptic = h;
      row.trial_number = n;
      row.correct = rng.bernoulli(prob) ? 1 : 0;
      row.response_time_s = 5.0;
      table.rows.push_back(row);
    }
  }
  return table;
}

/// Gaussian response-time rows with residual sd `sigma_e`.
inline purrfect::ObservationTable gaussian_table(const Truth& t, double sigma_e, int n_audio,
                                                 int n_haptic, int trials, purrfect::TrialRng& rng) {
  purrfect::ObservationTable table;
  for (int p = 0; p < n_audio + n_haptic; ++p) {
    const int h = p >= n_audio ? 1 : 0;
    const double u = t.sigma_u * rng.normal();
    for (int n = 1; n <= trials; ++n) {
      purrfect::Observation row;
      row.participant_id = "P" + std::to_string(p + 1);
      row.haptic = h;
      row.trial_number = n;
      row.response_time_s =
          t.b0 + t.b1 * h + t.b2 * n + t.b3 * h * n + u + sigma_e * rng.normal();
      table.rows.push_back(row);
    }
  }
  return table;
}

}  // namespace testsupport
