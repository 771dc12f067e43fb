#include "rpest/tensor_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

namespace rpest {
namespace {

constexpr char kMagic[4] = {'R', 'P', 'S', 'T'};

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw IoError("truncated artifact: expected 4 more bytes");
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
  const std::uint32_t len = get_u32(in);
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (!in) throw IoError("truncated artifact: bad string record");
  return s;
}

void put_floats(std::ostream& out, const float* data, std::size_t n) {
  static_assert(sizeof(float) == 4);
  static_assert(std::numeric_limits<float>::is_iec559);
  // Little-endian host assumed for the bulk path; element-wise otherwise.
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(data),
              static_cast<std::streamsize>(n * 4));
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t bits;
      std::memcpy(&bits, &data[i], 4);
      put_u32(out, bits);
    }
  }
}

void get_floats(std::istream& in, float* data, std::size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * 4));
    if (!in) throw IoError("truncated artifact: bad tensor payload");
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint32_t bits = get_u32(in);
      std::memcpy(&data[i], &bits, 4);
    }
  }
}

}  // namespace

const NamedTensor* TensorFile::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t;
  return nullptr;
}

const NamedTensor& TensorFile::require(const std::string& name) const {
  if (const NamedTensor* t = find(name)) return *t;
  throw IoError("artifact is missing tensor '" + name + "'");
}

void TensorFile::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write(kMagic, 4);
  put_u32(out, version);
  put_u32(out, static_cast<std::uint32_t>(vocab.size()));
  for (const auto& s : vocab) put_string(out, s);
  for (const auto& t : tensors) {
    put_string(out, t.name);
    put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) put_u32(out, d);
    if (t.data.size() != t.element_count())
      throw IoError("tensor '" + t.name + "' payload does not match dims");
    put_floats(out, t.data.data(), t.data.size());
  }
  out.flush();
  if (!out) throw IoError("write failed: " + path);
}

TensorFile TensorFile::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw IoError("not an RPST artifact: " + path);

  TensorFile file;
  file.version = get_u32(in);
  if (file.version != kVersion)
    throw IoError("unsupported artifact version " +
                  std::to_string(file.version) + " in " + path);

  const std::uint32_t vocab_count = get_u32(in);
  file.vocab.reserve(vocab_count);
  for (std::uint32_t i = 0; i < vocab_count; ++i)
    file.vocab.push_back(get_string(in));

  while (true) {
    in.peek();
    if (in.eof()) break;
    NamedTensor t;
    t.name = get_string(in);
    const std::uint32_t rank = get_u32(in);
    t.dims.resize(rank);
    for (std::uint32_t i = 0; i < rank; ++i) t.dims[i] = get_u32(in);
    t.data.resize(t.element_count());
    get_floats(in, t.data.data(), t.data.size());
    file.tensors.push_back(std::move(t));
  }
  return file;
}

NamedTensor tensor_from_matrix(const std::string& name, const Matrix& m) {
  NamedTensor t;
  t.name = name;
  t.dims = {static_cast<std::uint32_t>(m.rows()),
            static_cast<std::uint32_t>(m.cols())};
  t.data.resize(static_cast<std::size_t>(m.size()));
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      t.data[k++] = static_cast<float>(m(r, c));
  return t;
}

NamedTensor tensor_from_vector(const std::string& name, const Vector& v) {
  NamedTensor t;
  t.name = name;
  t.dims = {static_cast<std::uint32_t>(v.size())};
  t.data.resize(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i)
    t.data[static_cast<std::size_t>(i)] = static_cast<float>(v(i));
  return t;
}

NamedTensor tensor_from_rowmajor(const std::string& name, const RowMatrixF& m) {
  NamedTensor t;
  t.name = name;
  t.dims = {static_cast<std::uint32_t>(m.rows()),
            static_cast<std::uint32_t>(m.cols())};
  t.data.assign(m.data(), m.data() + m.size());
  return t;
}

Matrix matrix_from_tensor(const NamedTensor& t) {
  if (t.dims.size() != 2)
    throw DimensionError("tensor '" + t.name + "' is not rank-2");
  Matrix m(t.dims[0], t.dims[1]);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = t.data[k++];
  return m;
}

Vector vector_from_tensor(const NamedTensor& t) {
  if (t.dims.size() != 1)
    throw DimensionError("tensor '" + t.name + "' is not rank-1");
  Vector v(t.dims[0]);
  for (std::size_t i = 0; i < t.data.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = t.data[i];
  return v;
}

RowMatrixF rowmajor_from_tensor(const NamedTensor& t) {
  if (t.dims.size() != 2)
    throw DimensionError("tensor '" + t.name + "' is not rank-2");
  RowMatrixF m(t.dims[0], t.dims[1]);
  std::copy(t.data.begin(), t.data.end(), m.data());
  return m;
}

}  // namespace rpest
