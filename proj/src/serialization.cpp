#include "heig/serialization.hpp"

#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace heig {

namespace {

constexpr char kMagic[4] = {'H', 'D', 'L', 'R'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T value;
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw IoError("hodlr container: truncated stream");
  return value;
}

void put_matrix(std::ostream& os, const Matrix& m) {
  put<std::uint64_t>(os, m.rows());
  put<std::uint64_t>(os, m.cols());
  os.write(reinterpret_cast<const char*>(m.data()),
           static_cast<std::streamsize>(sizeof(double)) * m.size());
}

Matrix get_matrix(std::istream& is) {
  const auto rows = static_cast<Index>(get<std::uint64_t>(is));
  const auto cols = static_cast<Index>(get<std::uint64_t>(is));
  if (rows < 0 || cols < 0) throw IoError("hodlr container: bad shape");
  Matrix m(rows, cols);
  is.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(double)) * m.size());
  if (!is) throw IoError("hodlr container: truncated matrix data");
  return m;
}

void put_block(std::ostream& os, const LowRankBlock& b) {
  put<std::uint64_t>(os, b.rows());
  put<std::uint64_t>(os, b.cols());
  put<std::uint64_t>(os, b.rank());
  os.write(reinterpret_cast<const char*>(b.u.data()),
           static_cast<std::streamsize>(sizeof(double)) * b.u.size());
  os.write(reinterpret_cast<const char*>(b.v.data()),
           static_cast<std::streamsize>(sizeof(double)) * b.v.size());
}

LowRankBlock get_block(std::istream& is) {
  const auto rows = static_cast<Index>(get<std::uint64_t>(is));
  const auto cols = static_cast<Index>(get<std::uint64_t>(is));
  const auto rank = static_cast<Index>(get<std::uint64_t>(is));
  Matrix u(rows, rank), v(cols, rank);
  is.read(reinterpret_cast<char*>(u.data()),
          static_cast<std::streamsize>(sizeof(double)) * u.size());
  is.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(sizeof(double)) * v.size());
  if (!is) throw IoError("hodlr container: truncated factor data");
  return {std::move(u), std::move(v)};
}

void put_node(std::ostream& os, const HodlrMatrix& m) {
  put<std::uint8_t>(os, m.is_leaf() ? 0 : 1);
  if (m.is_leaf()) {
    put_matrix(os, m.dense_block());
    return;
  }
  put_block(os, m.off_block(0));
  put_block(os, m.off_block(1));
  put_node(os, m.child(0));
  put_node(os, m.child(1));
}

HodlrMatrix get_node(std::istream& is) {
  const auto tag = get<std::uint8_t>(is);
  if (tag == 0) return HodlrMatrix(get_matrix(is));
  if (tag != 1) throw IoError("hodlr container: bad node tag");
  LowRankBlock upper = get_block(is);
  LowRankBlock lower = get_block(is);
  HodlrMatrix first = get_node(is);
  HodlrMatrix second = get_node(is);
  return {std::move(first), std::move(second), std::move(upper),
          std::move(lower)};
}

void put_partition(std::ostream& os, const IndexPartition& p) {
  put<std::uint64_t>(os, p.leaf_sizes.size());
  for (Index s : p.leaf_sizes) put<std::uint64_t>(os, s);
}

void skip_partition(std::istream& is) {
  const auto count = get<std::uint64_t>(is);
  for (std::uint64_t i = 0; i < count; ++i) get<std::uint64_t>(is);
}

}  // namespace

void write_hodlr(std::ostream& os, const HodlrMatrix& m) {
  os.write(kMagic, 4);
  put<std::uint32_t>(os, kVersion);
  put<std::uint64_t>(os, m.rows());
  put<std::uint64_t>(os, m.cols());
  put<std::uint32_t>(os, m.level());
  put_partition(os, m.row_partition());
  put_partition(os, m.col_partition());
  put_node(os, m);
  if (!os) throw IoError("hodlr container: write failure");
}

HodlrMatrix read_hodlr(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw IoError("hodlr container: bad magic");
  if (get<std::uint32_t>(is) != kVersion)
    throw IoError("hodlr container: unsupported version");
  const auto rows = static_cast<Index>(get<std::uint64_t>(is));
  const auto cols = static_cast<Index>(get<std::uint64_t>(is));
  const auto level = static_cast<int>(get<std::uint32_t>(is));
  skip_partition(is);
  skip_partition(is);
  HodlrMatrix m = get_node(is);
  if (m.rows() != rows || m.cols() != cols || m.level() != level)
    throw IoError("hodlr container: header/body mismatch");
  return m;
}

void save_hodlr(const std::string& path, const HodlrMatrix& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path);
  write_hodlr(os, m);
}

HodlrMatrix load_hodlr(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open for reading: " + path);
  return read_hodlr(is);
}

}  // namespace heig
