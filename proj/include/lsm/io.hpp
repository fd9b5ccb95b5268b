#ifndef LSM_IO_HPP_
#define LSM_IO_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lsm/types.hpp"

namespace lsm {

// Formats a double so that reading it back reproduces the exact bits.
std::string format_double(double v);

// FNV-1a over a byte string; used to fingerprint configs in output files.
std::uint64_t fnv1a_hash(const std::string& bytes);
std::string hash_hex(std::uint64_t h);

// Dataset CSV: header `t,y,x1,...,xn[,mode,v]`; `mode` and `v` are written
// iff truth is stored.  A_true travels in the JSON sidecar, which also
// carries provenance (seed, config hash, outlier indices).
struct DatasetSidecar {
  std::uint64_t seed = 0;
  std::string config_hash;
  Matrix A_true;                   // n x s; empty when no truth
  std::vector<int> outlier_index;  // 1-based time indices
};

void write_dataset_csv(const std::string& path, const Dataset& data);
void write_dataset_sidecar(const std::string& path, const Dataset& data,
                           const DatasetSidecar& sidecar);

// Reads a dataset; when the CSV carries mode/v columns, A_true is recovered
// from the sidecar (csv path with extension replaced by .json unless given).
Dataset read_dataset(const std::string& csv_path,
                     const std::optional<std::string>& sidecar_path = std::nullopt,
                     DatasetSidecar* sidecar_out = nullptr);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace lsm

#endif  // LSM_IO_HPP_
