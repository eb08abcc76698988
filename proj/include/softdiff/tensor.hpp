#pragma once

#include "softdiff/types.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace softdiff {

/// Row-major dense array of doubles with an explicit shape.
struct Tensor {
  std::vector<std::uint64_t> shape;
  Vector data;

  Tensor() = default;
  Tensor(std::vector<std::uint64_t> shape_, Vector data_);

  /// A rank-1 tensor viewing `v`.
  static Tensor from_vector(const Vector& v);
  /// Stacks the columns of `samples` (each one item of `item_shape`) into a
  /// tensor of shape [cols, item_shape...].
  static Tensor from_columns(const Matrix& samples, const std::vector<std::uint64_t>& item_shape);

  std::uint64_t numel() const;
  std::size_t rank() const { return shape.size(); }
  bool all_finite() const { return data.allFinite(); }

  /// Inverse of `from_columns`: one column per leading index.
  Matrix to_columns() const;

  bool operator==(const Tensor& other) const;
};

// Binary layout: "SDT1", u32 rank, rank x u64 dims, little-endian f32 payload.
void write_tensor(std::ostream& out, const Tensor& t);
Tensor read_tensor(std::istream& in);
void save_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor load_tensor(const std::filesystem::path& path);

}  // namespace softdiff
