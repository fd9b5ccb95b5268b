#ifndef LSM_MODEL_HPP_
#define LSM_MODEL_HPP_

#include <cstdint>
#include <vector>

#include "lsm/types.hpp"

namespace lsm {

// Switching signal generation.  Labels are in {1..s}.
struct SwitchingSpec {
  enum class Kind { iid_uniform, dwell, periodic };
  Kind kind = Kind::iid_uniform;
  int min_dwell = 1;                // dwell only
  std::vector<int> pattern;         // periodic only
  // iid_uniform mode-1 weight; 0 keeps all modes equally likely.  Used by
  // experiment sweeps over switching balance (s = 2).
  double balance = 0.0;
};

std::vector<int> switching_generator(const SwitchingSpec& spec, int N, int s,
                                     std::uint64_t seed);

// Assembles the regressor matrix X from raw signals.
//
// identity/polynomial: `inputs` is d x N (one observation per column) and
// `outputs` is ignored.  arx: `inputs` is n_u x (N + n_b) holding
// u_{1-n_b}, ..., u_N and `outputs` holds y_{1-n_a}, ..., y_{N-1} (length at
// least n_a + N - 1); column t of the result is
// [y_{t-1} ... y_{t-n_a}, u_t, u_{t-1} ... u_{t-n_b}].  Warm-up samples are
// consumed, never zero-padded; emitted columns are re-indexed 1..N.
Matrix build_regressors(const Matrix& inputs, const Vector& outputs,
                        const FeatureMapSpec& map);

// Generated noise, exposed so callers can record outlier positions.
struct NoiseRealization {
  Vector v;                        // length N
  std::vector<int> outlier_index;  // 0-based positions of sparse entries
};

NoiseRealization generate_noise(const NoiseSpec& spec, int N);

// Simulates y_t = x_t . a_{sigma(t)} + v_t over the switched system.
//
// Static maps (identity/polynomial): `inputs` is d x N.  arx: `inputs` is
// n_u x (N + n_b) and `y_init` supplies the n_a warm-up outputs
// y_{1-n_a}, ..., y_0 (empty means zeros); the recursion feeds simulated
// outputs back into later regressors.
Dataset simulate(const Matrix& A_true, const std::vector<int>& sigma_true,
                 const Matrix& inputs, const FeatureMapSpec& map,
                 const NoiseSpec& noise, const Vector& y_init = Vector());

Dataset simulate(const Matrix& A_true, const std::vector<int>& sigma_true,
                 const Matrix& inputs, const FeatureMapSpec& map,
                 const NoiseSpec& noise, NoiseRealization* noise_out,
                 const Vector& y_init = Vector());

}  // namespace lsm

#endif  // LSM_MODEL_HPP_
