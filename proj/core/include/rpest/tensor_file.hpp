#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rpest/common.hpp"

namespace rpest {

// One named float32 tensor inside an artifact container.
struct NamedTensor {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> data;  // row-major

  std::size_t element_count() const {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return n;
  }
};

// Container used for every binary artifact: checkpoints, structural
// embedding caches, and the dataset cache.
//
// Layout (all integers little-endian uint32):
//   magic "RPST" | version | vocab count | {len, utf8 bytes}*
//   then tensors until end of file, each:
//   name length | name bytes | rank | dims[rank] | float32 payload
struct TensorFile {
  static constexpr std::uint32_t kVersion = 1;

  std::uint32_t version = kVersion;
  std::vector<std::string> vocab;
  std::vector<NamedTensor> tensors;

  const NamedTensor* find(const std::string& name) const;
  // Same as find() but throws IoError naming the missing tensor.
  const NamedTensor& require(const std::string& name) const;

  void save(const std::string& path) const;
  static TensorFile load(const std::string& path);
};

// Eigen bridges. Matrices are stored row-major regardless of the
// in-memory layout.
NamedTensor tensor_from_matrix(const std::string& name, const Matrix& m);
NamedTensor tensor_from_vector(const std::string& name, const Vector& v);
NamedTensor tensor_from_rowmajor(const std::string& name, const RowMatrixF& m);
Matrix matrix_from_tensor(const NamedTensor& t);
Vector vector_from_tensor(const NamedTensor& t);
RowMatrixF rowmajor_from_tensor(const NamedTensor& t);

}  // namespace rpest
