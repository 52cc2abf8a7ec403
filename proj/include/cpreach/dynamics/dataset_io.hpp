#pragma once

// Dataset file:
//   magic      8 bytes  "CPRDSET1"
//   n          uint32
//   K          uint32
//   L          uint64
//   seed       uint64
//   model      16 bytes, zero padded
//   dt         float64
//   L rows of (K+1)*n float64, row-major
// All integers and floats little-endian.

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <string>

#include "cpreach/binary_io.hpp"
#include "cpreach/dynamics/trajectory.hpp"

namespace cpreach {

inline constexpr char kDatasetMagic[9] = "CPRDSET1";

inline LittleEndianWriter encode_dataset(const TrajectoryDataset& ds) {
  ds.validate();
  LittleEndianWriter w;
  w.put_bytes(kDatasetMagic, 8);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ds.n));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ds.K));
  w.put<std::uint64_t>(static_cast<std::uint64_t>(ds.size()));
  w.put<std::uint64_t>(ds.seed);
  w.put_fixed_string(ds.model_name, 16);
  w.put<double>(ds.dt);
  for (Eigen::Index i = 0; i < ds.rows.rows(); ++i) {
    for (Eigen::Index j = 0; j < ds.rows.cols(); ++j) w.put<double>(ds.rows(i, j));
  }
  return w;
}

inline void save_dataset(const TrajectoryDataset& ds, const std::string& path) { encode_dataset(ds).write_file(path); }

inline TrajectoryDataset load_dataset(const std::string& path) {
  LittleEndianReader r = LittleEndianReader::from_file(path);
  if (r.get_fixed_string(8) != "CPRDSET1") fail(ErrorKind::Io, "'" + path + "' is not a dataset file");
  TrajectoryDataset ds;
  ds.n = r.get<std::uint32_t>();
  ds.K = r.get<std::uint32_t>();
  const auto L = static_cast<Eigen::Index>(r.get<std::uint64_t>());
  ds.seed = r.get<std::uint64_t>();
  ds.model_name = r.get_fixed_string(16);
  ds.dt = r.get<double>();
  ds.rows.resize(L, (ds.K + 1) * ds.n);
  for (Eigen::Index i = 0; i < L; ++i) {
    for (Eigen::Index j = 0; j < ds.rows.cols(); ++j) ds.rows(i, j) = r.get<double>();
  }
  if (!r.at_end()) fail(ErrorKind::Io, "trailing bytes in dataset file '" + path + "'");
  return ds;
}

/// One trajectory per row; header names each column s<k>_x<j>.
inline void export_dataset_csv(const TrajectoryDataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open '" + path + "' for writing");
  for (Eigen::Index k = 0; k <= ds.K; ++k) {
    for (Eigen::Index j = 0; j < ds.n; ++j) {
      out << (k == 0 && j == 0 ? "" : ",") << "s" << k << "_x" << j + 1;
    }
  }
  out << '\n' << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Eigen::Index i = 0; i < ds.rows.rows(); ++i) {
    for (Eigen::Index j = 0; j < ds.rows.cols(); ++j) out << (j ? "," : "") << ds.rows(i, j);
    out << '\n';
  }
}

}  // namespace cpreach
