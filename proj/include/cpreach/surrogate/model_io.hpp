#pragma once

#include <cstdint>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cpreach/binary_io.hpp"
#include "cpreach/error.hpp"
#include "cpreach/surrogate/composite.hpp"

namespace cpreach {

inline constexpr char kModelMagic[] = "CPRMODL1";

namespace detail {

inline void put_vector(LittleEndianWriter& w, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) w.put<double>(v[i]);
}

inline Eigen::VectorXd get_vector(LittleEndianReader& r, Eigen::Index size) {
  Eigen::VectorXd v(size);
  for (Eigen::Index i = 0; i < size; ++i) v[i] = r.get<double>();
  return v;
}

}  // namespace detail

/// Binary model file: magic, n, schedule, then per stage the layer sizes,
/// row-major weights, biases, standardisation constants and loss history.
inline std::vector<unsigned char> encode_model(const CompositeSurrogate& cs) {
  LittleEndianWriter w;
  w.put_bytes(kModelMagic, 8);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(cs.n()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(cs.schedule().size()));
  for (Eigen::Index p : cs.schedule().pis()) w.put<std::uint64_t>(static_cast<std::uint64_t>(p));
  for (const SubModel& m : cs.models()) {
    const std::vector<Eigen::Index> sizes = m.net.layer_sizes();
    w.put<std::uint32_t>(static_cast<std::uint32_t>(sizes.size()));
    for (Eigen::Index s : sizes) w.put<std::uint64_t>(static_cast<std::uint64_t>(s));
    for (std::size_t l = 0; l < m.net.num_layers(); ++l) {
      const Eigen::MatrixXd& wl = m.net.weights()[l];
      for (Eigen::Index i = 0; i < wl.rows(); ++i) {
        for (Eigen::Index j = 0; j < wl.cols(); ++j) w.put<double>(wl(i, j));
      }
      detail::put_vector(w, m.net.biases()[l]);
    }
    detail::put_vector(w, m.input.mean);
    detail::put_vector(w, m.input.scale);
    detail::put_vector(w, m.output.mean);
    detail::put_vector(w, m.output.scale);
    w.put<std::uint64_t>(m.loss_history.size());
    for (double v : m.loss_history) w.put<double>(v);
  }
  return w.bytes();
}

inline CompositeSurrogate decode_model(std::vector<unsigned char> bytes) {
  LittleEndianReader r(std::move(bytes));
  require(r.get_fixed_string(8) == kModelMagic, ErrorKind::Io, "not a model file (bad magic)");
  const auto n = static_cast<Eigen::Index>(r.get<std::uint32_t>());
  const std::uint32_t count = r.get<std::uint32_t>();
  require(count >= 2 && count < (1u << 20), ErrorKind::Io, "model file has an implausible schedule length");
  std::vector<Eigen::Index> pis(count);
  for (auto& p : pis) p = static_cast<Eigen::Index>(r.get<std::uint64_t>());
  SubHorizonSchedule sched(std::move(pis));

  std::vector<SubModel> models(sched.num_models());
  for (SubModel& m : models) {
    const std::uint32_t layers = r.get<std::uint32_t>();
    require(layers >= 2 && layers < 4096, ErrorKind::Io, "model file has an implausible layer count");
    std::vector<Eigen::Index> sizes(layers);
    for (auto& s : sizes) {
      s = static_cast<Eigen::Index>(r.get<std::uint64_t>());
      require(s > 0 && s < (Eigen::Index{1} << 24), ErrorKind::Io, "model file has an implausible layer width");
    }
    std::vector<Eigen::MatrixXd> w;
    std::vector<Eigen::VectorXd> b;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      Eigen::MatrixXd wl(sizes[l + 1], sizes[l]);
      for (Eigen::Index i = 0; i < wl.rows(); ++i) {
        for (Eigen::Index j = 0; j < wl.cols(); ++j) wl(i, j) = r.get<double>();
      }
      w.push_back(std::move(wl));
      b.push_back(detail::get_vector(r, sizes[l + 1]));
    }
    m.net = MLP(std::move(w), std::move(b));
    m.input.mean = detail::get_vector(r, sizes.front());
    m.input.scale = detail::get_vector(r, sizes.front());
    m.output.mean = detail::get_vector(r, sizes.back());
    m.output.scale = detail::get_vector(r, sizes.back());
    const std::uint64_t epochs = r.get<std::uint64_t>();
    require(epochs < (1ull << 32), ErrorKind::Io, "model file has an implausible loss history");
    m.loss_history.resize(epochs);
    for (double& v : m.loss_history) v = r.get<double>();
  }
  require(r.at_end(), ErrorKind::Io, "model file has trailing bytes");
  return CompositeSurrogate(std::move(sched), std::move(models), n);
}

inline void save_model(const CompositeSurrogate& cs, const std::string& path) {
  LittleEndianWriter w;
  const auto bytes = encode_model(cs);
  w.put_bytes(bytes.data(), bytes.size());
  w.write_file(path);
}

inline CompositeSurrogate load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open model file '" + path + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_model(std::move(bytes));
}

}  // namespace cpreach
