#include "lsm/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lsm/rng.hpp"

namespace lsm {

FeatureMapSpec FeatureMapSpec::identity(int dim) {
  if (dim < 1) throw std::invalid_argument("identity map: dim must be >= 1");
  FeatureMapSpec m;
  m.kind = Kind::identity;
  m.input_dim = dim;
  return m;
}

FeatureMapSpec FeatureMapSpec::arx(int n_a, int n_b, int n_u) {
  if (n_a < 0 || n_b < 0 || n_u < 1)
    throw std::invalid_argument("arx map: require n_a >= 0, n_b >= 0, n_u >= 1");
  FeatureMapSpec m;
  m.kind = Kind::arx;
  m.n_a = n_a;
  m.n_b = n_b;
  m.input_dim = n_u;
  return m;
}

FeatureMapSpec FeatureMapSpec::polynomial(int dim, int degree) {
  if (dim < 1 || degree < 1)
    throw std::invalid_argument("polynomial map: require dim >= 1, degree >= 1");
  FeatureMapSpec m;
  m.kind = Kind::polynomial;
  m.input_dim = dim;
  m.degree = degree;
  return m;
}

int FeatureMapSpec::z_dim() const {
  switch (kind) {
    case Kind::identity:
    case Kind::polynomial:
      return input_dim;
    case Kind::arx:
      return n_a + (n_b + 1) * input_dim;
  }
  return 0;
}

namespace {

// Exponent tuples with |e| <= degree, ordered by total degree then by
// lexicographically descending exponents, so that dim 2, degree 2 yields
// 1, a, b, a^2, ab, b^2.
void enumerate_exponents(int dim, int remaining, int pos, std::vector<int>& cur,
                         std::vector<std::vector<int>>& out) {
  if (pos == dim) {
    if (remaining == 0) out.push_back(cur);
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    cur[pos] = e;
    enumerate_exponents(dim, remaining - e, pos + 1, cur, out);
  }
  cur[pos] = 0;
}

}  // namespace

std::vector<std::vector<int>> FeatureMapSpec::monomial_exponents() const {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(input_dim, 0);
  for (int g = 0; g <= degree; ++g)
    enumerate_exponents(input_dim, g, 0, cur, out);
  return out;
}

int FeatureMapSpec::output_dim() const {
  switch (kind) {
    case Kind::identity:
      return input_dim;
    case Kind::arx:
      return n_a + (n_b + 1) * input_dim;
    case Kind::polynomial: {
      // C(dim + degree, degree)
      long long c = 1;
      for (int i = 1; i <= input_dim; ++i)
        c = c * (degree + i) / i;
      return static_cast<int>(c);
    }
  }
  return 0;
}

Vector FeatureMapSpec::apply(const Vector& z) const {
  if (kind == Kind::arx)
    throw std::logic_error("FeatureMapSpec::apply: arx maps are assembled from lags");
  if (z.size() != input_dim)
    throw std::invalid_argument("feature map: observation dimension mismatch");
  if (kind == Kind::identity) return z;
  const auto exps = monomial_exponents();
  Vector x(static_cast<int>(exps.size()));
  for (std::size_t m = 0; m < exps.size(); ++m) {
    double v = 1.0;
    for (int j = 0; j < input_dim; ++j)
      for (int e = 0; e < exps[m][j]; ++e) v *= z(j);
    x(static_cast<int>(m)) = v;
  }
  return x;
}

void Dataset::validate() const {
  if (N() < 1 || n() < 1)
    throw std::invalid_argument("dataset: require N >= 1 and n >= 1");
  if (y.size() != N())
    throw std::invalid_argument("dataset: y length must match X columns");
  if (!X.allFinite() || !y.allFinite())
    throw std::invalid_argument("dataset: non-finite entries");
  if (!truth) return;
  const auto& tr = *truth;
  if (tr.A_true.rows() != n())
    throw std::invalid_argument("dataset truth: A_true row count mismatch");
  const int s = static_cast<int>(tr.A_true.cols());
  if (static_cast<int>(tr.sigma_true.size()) != N() || tr.v_true.size() != N())
    throw std::invalid_argument("dataset truth: sigma/v length mismatch");
  for (int t = 0; t < N(); ++t) {
    const int mode = tr.sigma_true[t];
    if (mode < 1 || mode > s)
      throw std::invalid_argument("dataset truth: sigma label out of range");
    const double recon = X.col(t).dot(tr.A_true.col(mode - 1)) + tr.v_true(t);
    if (std::abs(y(t) - recon) > 1e-12 * (1.0 + std::abs(y(t))))
      throw std::invalid_argument("dataset truth: y does not match x.a + v");
  }
}

std::vector<int> switching_generator(const SwitchingSpec& spec, int N, int s,
                                     std::uint64_t seed) {
  if (s < 1) throw std::invalid_argument("switching: s must be >= 1");
  if (N < 0) throw std::invalid_argument("switching: N must be >= 0");
  std::vector<int> sig(N);
  Rng rng(seed);
  switch (spec.kind) {
    case SwitchingSpec::Kind::iid_uniform: {
      if (spec.balance > 0.0 && s == 2) {
        for (int t = 0; t < N; ++t)
          sig[t] = rng.uniform01() < spec.balance ? 1 : 2;
      } else {
        for (int t = 0; t < N; ++t)
          sig[t] = 1 + static_cast<int>(rng.uniform_int(s));
      }
      break;
    }
    case SwitchingSpec::Kind::dwell: {
      if (spec.min_dwell < 1)
        throw std::invalid_argument("switching: min_dwell must be >= 1");
      int t = 0;
      int prev = 0;
      while (t < N) {
        int label = 1 + static_cast<int>(rng.uniform_int(s));
        if (s > 1)
          while (label == prev) label = 1 + static_cast<int>(rng.uniform_int(s));
        int run = spec.min_dwell +
                  static_cast<int>(rng.uniform_int(spec.min_dwell + 1));
        // never leave a truncated tail shorter than min_dwell
        if (N - t - run < spec.min_dwell) run = N - t;
        for (int i = 0; i < run && t < N; ++i) sig[t++] = label;
        prev = label;
      }
      break;
    }
    case SwitchingSpec::Kind::periodic: {
      if (spec.pattern.empty())
        throw std::invalid_argument("switching: empty periodic pattern");
      for (int v : spec.pattern)
        if (v < 1 || v > s)
          throw std::invalid_argument("switching: pattern label out of range");
      for (int t = 0; t < N; ++t)
        sig[t] = spec.pattern[t % spec.pattern.size()];
      break;
    }
  }
  return sig;
}

Matrix build_regressors(const Matrix& inputs, const Vector& outputs,
                        const FeatureMapSpec& map) {
  if (map.kind != FeatureMapSpec::Kind::arx) {
    if (inputs.rows() != map.input_dim)
      throw std::invalid_argument("build_regressors: input dimension mismatch");
    const int N = static_cast<int>(inputs.cols());
    if (N < 1) throw std::invalid_argument("build_regressors: empty input");
    Matrix X(map.output_dim(), N);
    for (int t = 0; t < N; ++t) X.col(t) = map.apply(inputs.col(t));
    return X;
  }

  const int n_u = map.input_dim;
  if (inputs.rows() != n_u)
    throw std::invalid_argument("build_regressors: input channel mismatch");
  const int N = static_cast<int>(inputs.cols()) - map.n_b;
  if (N < 1) throw InputError("lag underflow: not enough input samples");
  // outputs must cover y_{1-n_a} .. y_{N-1}; a trailing y_N is tolerated.
  const int required = map.n_a + N - 1;
  if (static_cast<int>(outputs.size()) < required)
    throw InputError("lag underflow: not enough output history");

  const int n = map.output_dim();
  Matrix X(n, N);
  for (int t = 1; t <= N; ++t) {
    int row = 0;
    // y_{t-1} .. y_{t-n_a}; outputs index j holds y_{j+1-n_a}
    for (int lag = 1; lag <= map.n_a; ++lag)
      X(row++, t - 1) = outputs(t - lag + map.n_a - 1);
    // u_t, u_{t-1}, .., u_{t-n_b}; inputs column j holds u_{j+1-n_b}
    for (int lag = 0; lag <= map.n_b; ++lag)
      for (int ch = 0; ch < n_u; ++ch)
        X(row++, t - 1) = inputs(ch, t - lag + map.n_b - 1);
  }
  return X;
}

NoiseRealization generate_noise(const NoiseSpec& spec, int N) {
  if (spec.sparse_count < 0 || spec.sparse_count > N)
    throw std::invalid_argument("noise: sparse count out of range");
  if (spec.sparse_lo > spec.sparse_hi)
    throw std::invalid_argument("noise: magnitude range inverted");
  NoiseRealization out;
  out.v = Vector::Zero(N);
  Rng rng(spec.seed);
  switch (spec.dense) {
    case NoiseSpec::DenseKind::none:
      break;
    case NoiseSpec::DenseKind::gaussian:
      for (int t = 0; t < N; ++t) out.v(t) = rng.gaussian(0.0, spec.dense_param);
      break;
    case NoiseSpec::DenseKind::uniform:
      for (int t = 0; t < N; ++t)
        out.v(t) = rng.uniform(-spec.dense_param, spec.dense_param);
      break;
  }
  if (spec.sparse_count > 0) {
    out.outlier_index = rng.sample_without_replacement(N, spec.sparse_count);
    std::sort(out.outlier_index.begin(), out.outlier_index.end());
    for (int idx : out.outlier_index) {
      const double mag = rng.uniform(spec.sparse_lo, spec.sparse_hi);
      const double sign =
          spec.sparse_sign == NoiseSpec::SparseSign::fixed ? 1.0
                                                           : (rng.coin() ? 1.0 : -1.0);
      out.v(idx) += sign * mag;
    }
  }
  return out;
}

Dataset simulate(const Matrix& A_true, const std::vector<int>& sigma_true,
                 const Matrix& inputs, const FeatureMapSpec& map,
                 const NoiseSpec& noise, NoiseRealization* noise_out,
                 const Vector& y_init) {
  const int n = map.output_dim();
  if (A_true.rows() != n)
    throw std::invalid_argument("simulate: A_true rows must equal map output dim");
  const int s = static_cast<int>(A_true.cols());
  const int N = map.kind == FeatureMapSpec::Kind::arx
                    ? static_cast<int>(inputs.cols()) - map.n_b
                    : static_cast<int>(inputs.cols());
  if (N < 1) throw InputError("lag underflow: not enough input samples");
  if (static_cast<int>(sigma_true.size()) != N)
    throw std::invalid_argument("simulate: switching signal length mismatch");
  for (int v : sigma_true)
    if (v < 1 || v > s)
      throw std::invalid_argument("simulate: switching label out of range");

  NoiseRealization nz = generate_noise(noise, N);

  Dataset data;
  data.y = Vector(N);

  if (map.kind != FeatureMapSpec::Kind::arx) {
    data.X = build_regressors(inputs, Vector(), map);
    for (int t = 0; t < N; ++t)
      data.y(t) = data.X.col(t).dot(A_true.col(sigma_true[t] - 1)) + nz.v(t);
  } else {
    Vector y0 = y_init;
    if (y0.size() == 0) y0 = Vector::Zero(map.n_a);
    if (static_cast<int>(y0.size()) != map.n_a)
      throw std::invalid_argument("simulate: y_init must have n_a entries");
    // history holds y_{1-n_a} .. y_{t-1} as simulation proceeds
    std::vector<double> history(y0.data(), y0.data() + y0.size());
    data.X = Matrix(n, N);
    for (int t = 1; t <= N; ++t) {
      int row = 0;
      for (int lag = 1; lag <= map.n_a; ++lag)
        data.X(row++, t - 1) = history[history.size() - lag];
      for (int lag = 0; lag <= map.n_b; ++lag)
        for (int ch = 0; ch < map.input_dim; ++ch)
          data.X(row++, t - 1) = inputs(ch, t - lag + map.n_b - 1);
      const double yt =
          data.X.col(t - 1).dot(A_true.col(sigma_true[t - 1] - 1)) + nz.v(t - 1);
      if (!std::isfinite(yt) || std::abs(yt) > 1e100)
        throw std::runtime_error("simulation diverged at t=" + std::to_string(t));
      data.y(t - 1) = yt;
      history.push_back(yt);
    }
  }

  data.truth = DatasetTruth{A_true, sigma_true, nz.v};
  data.validate();
  if (noise_out) *noise_out = std::move(nz);
  return data;
}

Dataset simulate(const Matrix& A_true, const std::vector<int>& sigma_true,
                 const Matrix& inputs, const FeatureMapSpec& map,
                 const NoiseSpec& noise, const Vector& y_init) {
  return simulate(A_true, sigma_true, inputs, map, noise, nullptr, y_init);
}

}  // namespace lsm
