#include "softdiff/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace softdiff {

namespace {

constexpr char kMagic[4] = {'S', 'D', 'T', '1'};

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw Error("tensor: truncated stream");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

std::uint64_t product(const std::vector<std::uint64_t>& shape) {
  std::uint64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

}  // namespace

Tensor::Tensor(std::vector<std::uint64_t> shape_, Vector data_)
    : shape(std::move(shape_)), data(std::move(data_)) {
  for (auto d : shape)
    if (d == 0) throw Error("tensor: zero-sized dimension");
  check_dim("tensor data length", static_cast<long>(product(shape)), data.size());
}

Tensor Tensor::from_vector(const Vector& v) {
  return Tensor({static_cast<std::uint64_t>(v.size())}, v);
}

Tensor Tensor::from_columns(const Matrix& samples, const std::vector<std::uint64_t>& item_shape) {
  check_dim("tensor item size", static_cast<long>(product(item_shape)), samples.rows());
  std::vector<std::uint64_t> shape{static_cast<std::uint64_t>(samples.cols())};
  shape.insert(shape.end(), item_shape.begin(), item_shape.end());
  // Column-major storage of an (item x count) matrix is row-major [count, item].
  return Tensor(std::move(shape), Eigen::Map<const Vector>(samples.data(), samples.size()));
}

std::uint64_t Tensor::numel() const { return product(shape); }

Matrix Tensor::to_columns() const {
  if (shape.empty()) throw Error("tensor: rank-0 tensor has no columns");
  const auto count = static_cast<Eigen::Index>(shape.front());
  const auto item = static_cast<Eigen::Index>(numel() / shape.front());
  return Eigen::Map<const Matrix>(data.data(), item, count);
}

bool Tensor::operator==(const Tensor& other) const {
  return shape == other.shape && data.size() == other.data.size() && data == other.data;
}

void write_tensor(std::ostream& out, const Tensor& t) {
  out.write(kMagic, 4);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
  for (auto d : t.shape) put_le<std::uint64_t>(out, d);
  for (Eigen::Index i = 0; i < t.data.size(); ++i) put_le<float>(out, static_cast<float>(t.data[i]));
  if (!out) throw Error("tensor: write failed");
}

Tensor read_tensor(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw Error("tensor: bad magic");
  const auto rank = get_le<std::uint32_t>(in);
  std::vector<std::uint64_t> shape(rank);
  for (auto& d : shape) d = get_le<std::uint64_t>(in);
  Vector data(static_cast<Eigen::Index>(product(shape)));
  for (Eigen::Index i = 0; i < data.size(); ++i) data[i] = get_le<float>(in);
  return Tensor(std::move(shape), std::move(data));
}

void save_tensor(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("tensor: cannot open " + path.string());
  write_tensor(out, t);
}

Tensor load_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("tensor: cannot open " + path.string());
  return read_tensor(in);
}

}  // namespace softdiff
