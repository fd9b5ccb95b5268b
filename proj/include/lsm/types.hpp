#ifndef LSM_TYPES_HPP_
#define LSM_TYPES_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lsm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Thrown when a combinatorial operation would exceed its configured budget.
// The CLI maps this to exit code 3.
struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown on malformed user input (files, configs).  CLI exit code 1.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Regressor construction: how an observed signal z_t maps to the regressor
// x_t.  `identity` and `polynomial` act on a static observation vector;
// `arx` assembles x_t from lagged outputs and inputs.
struct FeatureMapSpec {
  enum class Kind { identity, arx, polynomial };

  Kind kind = Kind::identity;
  int input_dim = 1;  // dim(z_t); for arx this is n_u (input channels)
  int n_a = 0;        // autoregressive lags (arx only)
  int n_b = 0;        // input lags beyond u_t (arx only)
  int degree = 1;     // polynomial only

  static FeatureMapSpec identity(int dim);
  static FeatureMapSpec arx(int n_a, int n_b, int n_u);
  static FeatureMapSpec polynomial(int dim, int degree);

  // Output dimension n of the regressor.
  int output_dim() const;
  // z-dimension consumed per time step (arx: the lag-vector dimension).
  int z_dim() const;

  // Applies the map to one observation (identity/polynomial kinds only).
  Vector apply(const Vector& z) const;

  // Exponent tuples of the monomial basis, in the emitted row order
  // (total degree ascending, then lexicographically descending exponents).
  std::vector<std::vector<int>> monomial_exponents() const;
};

// Additive noise: a dense component applied at every sample plus a sparse
// component of `sparse_count` arbitrary-magnitude outliers.
struct NoiseSpec {
  enum class DenseKind { none, gaussian, uniform };
  enum class SparseSign { random, fixed };

  DenseKind dense = DenseKind::none;
  double dense_param = 0.0;  // gaussian std, or uniform bound
  int sparse_count = 0;
  double sparse_lo = 0.0;
  double sparse_hi = 0.0;
  SparseSign sparse_sign = SparseSign::random;
  std::uint64_t seed = 0;

  static NoiseSpec none() { return NoiseSpec{}; }
};

struct DatasetTruth {
  Matrix A_true;                // n x s
  std::vector<int> sigma_true;  // labels in {1..s}, length N
  Vector v_true;                // length N
};

// A batch of N regressor/output pairs, optionally with generation truth.
struct Dataset {
  Matrix X;  // n x N, column t is the regressor x_t
  Vector y;  // length N
  std::optional<DatasetTruth> truth;

  int n() const { return static_cast<int>(X.rows()); }
  int N() const { return static_cast<int>(X.cols()); }
  int s() const { return truth ? static_cast<int>(truth->A_true.cols()) : 0; }

  // Checks dimensions, finiteness and (when truth is present) that
  // y_t = x_t . a_{sigma(t)} + v_t within 1e-12 relative tolerance.
  void validate() const;
};

}  // namespace lsm

#endif  // LSM_TYPES_HPP_
