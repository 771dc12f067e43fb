#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace rpest {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Row-major float32 storage for large embedding tables (word vectors,
// structural vectors). Model math runs in double; rows are widened on use.
using RowMatrixF =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Malformed input data: bad line in a triple/name/vector file.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape or dimension disagreement between artifacts.
class DimensionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values where finite ones are required (diverged training,
// corrupt artifact).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A pipeline stage was invoked before the stage that produces its inputs.
class PrerequisiteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownEntityError : public std::runtime_error {
 public:
  explicit UnknownEntityError(const std::string& id)
      : std::runtime_error("unknown entity id: " + id), id_(id) {}
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

// SplitMix64 step; used to derive independent RNG streams from one seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream));
}

}  // namespace rpest
