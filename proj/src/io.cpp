#include "lsm/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace lsm {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint64_t fnv1a_hash(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write file: " + path);
  out << content;
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
  data.validate();
  std::ostringstream out;
  out << "t,y";
  for (int j = 1; j <= data.n(); ++j) out << ",x" << j;
  if (data.truth) out << ",mode,v";
  out << "\n";
  for (int t = 0; t < data.N(); ++t) {
    out << (t + 1) << "," << format_double(data.y(t));
    for (int j = 0; j < data.n(); ++j) out << "," << format_double(data.X(j, t));
    if (data.truth)
      out << "," << data.truth->sigma_true[t] << ","
          << format_double(data.truth->v_true(t));
    out << "\n";
  }
  write_text_file(path, out.str());
}

void write_dataset_sidecar(const std::string& path, const Dataset& data,
                           const DatasetSidecar& sidecar) {
  nlohmann::json j;
  j["seed"] = sidecar.seed;
  j["config_hash"] = sidecar.config_hash;
  j["n"] = data.n();
  j["N"] = data.N();
  if (data.truth) {
    const auto& A = data.truth->A_true;
    j["s"] = static_cast<int>(A.cols());
    nlohmann::json cols = nlohmann::json::array();
    for (int i = 0; i < A.cols(); ++i) {
      nlohmann::json col = nlohmann::json::array();
      for (int r = 0; r < A.rows(); ++r) col.push_back(A(r, i));
      cols.push_back(col);
    }
    j["A_true"] = cols;
  }
  j["outlier_indices"] = sidecar.outlier_index;
  write_text_file(path, j.dump(2) + "\n");
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, int line_no) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw InputError("malformed CSV: bad number '" + s + "' on line " +
                     std::to_string(line_no));
  return v;
}

}  // namespace

Dataset read_dataset(const std::string& csv_path,
                     const std::optional<std::string>& sidecar_path,
                     DatasetSidecar* sidecar_out) {
  std::istringstream in(read_text_file(csv_path));
  std::string line;
  if (!std::getline(in, line))
    throw InputError("malformed CSV: empty file " + csv_path);
  const auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "t" || header[1] != "y")
    throw InputError("malformed CSV: bad header on line 1");
  int n = 0;
  bool has_truth_cols = false;
  for (std::size_t j = 2; j < header.size(); ++j) {
    if (header[j] == "mode") {
      if (j + 2 != header.size() || header[j + 1] != "v")
        throw InputError("malformed CSV: truth columns must be mode,v on line 1");
      has_truth_cols = true;
      break;
    }
    if (header[j] != "x" + std::to_string(j - 1))
      throw InputError("malformed CSV: unexpected column '" + header[j] +
                       "' on line 1");
    ++n;
  }
  if (n < 1) throw InputError("malformed CSV: no regressor columns on line 1");

  std::vector<double> ys;
  std::vector<double> xs;
  std::vector<int> modes;
  std::vector<double> vs;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    const std::size_t expected = 2 + n + (has_truth_cols ? 2 : 0);
    if (f.size() != expected)
      throw InputError("malformed CSV: expected " + std::to_string(expected) +
                       " fields on line " + std::to_string(line_no));
    const int t = static_cast<int>(parse_double(f[0], line_no));
    if (t != static_cast<int>(ys.size()) + 1)
      throw InputError("malformed CSV: non-sequential t on line " +
                       std::to_string(line_no));
    ys.push_back(parse_double(f[1], line_no));
    for (int j = 0; j < n; ++j) xs.push_back(parse_double(f[2 + j], line_no));
    if (has_truth_cols) {
      modes.push_back(static_cast<int>(parse_double(f[2 + n], line_no)));
      vs.push_back(parse_double(f[3 + n], line_no));
    }
  }
  const int N = static_cast<int>(ys.size());
  if (N < 1) throw InputError("malformed CSV: no data rows");

  Dataset data;
  data.X = Matrix(n, N);
  data.y = Vector(N);
  for (int t = 0; t < N; ++t) {
    data.y(t) = ys[t];
    for (int j = 0; j < n; ++j) data.X(j, t) = xs[t * n + j];
  }

  DatasetSidecar sc;
  bool have_sidecar = false;
  std::string sc_path = sidecar_path.value_or(
      std::filesystem::path(csv_path).replace_extension(".json").string());
  if (std::filesystem::exists(sc_path)) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_text_file(sc_path));
    } catch (const nlohmann::json::exception& e) {
      throw InputError("malformed sidecar " + sc_path + ": " + e.what());
    }
    sc.seed = j.value("seed", std::uint64_t{0});
    sc.config_hash = j.value("config_hash", std::string());
    if (j.contains("outlier_indices"))
      sc.outlier_index = j["outlier_indices"].get<std::vector<int>>();
    if (j.contains("A_true")) {
      const auto& cols = j["A_true"];
      const int s = static_cast<int>(cols.size());
      if (s > 0) {
        const int rows = static_cast<int>(cols[0].size());
        sc.A_true = Matrix(rows, s);
        for (int i = 0; i < s; ++i)
          for (int r = 0; r < rows; ++r) sc.A_true(r, i) = cols[i][r].get<double>();
      }
    }
    have_sidecar = true;
  }

  if (has_truth_cols) {
    if (!have_sidecar || sc.A_true.size() == 0)
      throw InputError("dataset has truth columns but no sidecar with A_true (" +
                       sc_path + ")");
    DatasetTruth truth;
    truth.A_true = sc.A_true;
    truth.sigma_true = modes;
    truth.v_true = Eigen::Map<Vector>(vs.data(), N);
    data.truth = std::move(truth);
  }
  data.validate();
  if (sidecar_out) *sidecar_out = std::move(sc);
  return data;
}

}  // namespace lsm
