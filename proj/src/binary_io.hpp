#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include <Eigen/Dense>

#include "egpal/errors.hpp"

namespace egpal::detail {

template <typename T>
void write_pod(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw ParseError("truncated checkpoint stream");
  return value;
}

inline void write_magic(std::ostream& out, const char (&magic)[5], std::uint32_t version) {
  out.write(magic, 4);
  write_pod(out, version);
}

inline void expect_magic(std::istream& in, const char (&magic)[5], std::uint32_t version) {
  char buf[4];
  in.read(buf, 4);
  if (!in || std::string(buf, 4) != std::string(magic, 4)) {
    throw ParseError(std::string("bad checkpoint magic, expected ") + magic);
  }
  const auto v = read_pod<std::uint32_t>(in);
  if (v != version) throw ParseError("unsupported checkpoint version " + std::to_string(v));
}

// Row-major element order regardless of Eigen's column-major storage.
inline void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) write_pod(out, m(i, j));
}

inline Eigen::MatrixXd read_matrix(std::istream& in, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = read_pod<double>(in);
  return m;
}

inline void write_vector(std::ostream& out, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) write_pod(out, v(i));
}

inline Eigen::VectorXd read_vector(std::istream& in, Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = read_pod<double>(in);
  return v;
}

}  // namespace egpal::detail
