#include "heig/mmio.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace heig {

void write_matrix_market(const std::string& path, const BandedMatrix& m) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path);
  const Index n = m.size(), b = m.bandwidth();
  // all in-band lower-triangle positions are stored, zeros included, so the
  // entry count is a function of (n, b) alone
  Index nnz = 0;
  for (Index d = 0; d <= b; ++d) nnz += std::max<Index>(0, n - d);
  os << "%%MatrixMarket matrix coordinate real symmetric\n";
  os << n << " " << n << " " << nnz << "\n";
  char buf[80];
  for (Index j = 0; j < n; ++j) {
    for (Index i = j; i <= std::min(n - 1, j + b); ++i) {
      std::snprintf(buf, sizeof(buf), "%lld %lld %.17g\n",
                    static_cast<long long>(i + 1), static_cast<long long>(j + 1),
                    m.at(i, j));
      os << buf;
    }
  }
  if (!os) throw IoError("write failure: " + path);
}

BandedMatrix read_matrix_market(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(is, line)) throw IoError("matrix market: empty file");
  std::istringstream banner(line);
  std::string tag, object, format, field, symmetry;
  banner >> tag >> object >> format >> field >> symmetry;
  std::transform(symmetry.begin(), symmetry.end(), symmetry.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (tag != "%%MatrixMarket" || object != "matrix" || format != "coordinate" ||
      field != "real")
    throw IoError("matrix market: expected coordinate real matrix");
  const bool symmetric = symmetry == "symmetric";
  if (!symmetric && symmetry != "general")
    throw IoError("matrix market: unsupported symmetry: " + symmetry);

  while (std::getline(is, line)) {
    if (!line.empty() && line[0] != '%') break;
  }
  Index rows = 0, cols = 0;
  long long nnz = 0;
  {
    std::istringstream hdr(line);
    if (!(hdr >> rows >> cols >> nnz))
      throw IoError("matrix market: bad size line");
  }
  if (rows != cols) throw IoError("matrix market: square matrix required");

  std::vector<Index> ii(nnz), jj(nnz);
  std::vector<double> vv(nnz);
  Index bandwidth = 0;
  for (long long k = 0; k < nnz; ++k) {
    long long i, j;
    double v;
    if (!(is >> i >> j >> v)) throw IoError("matrix market: truncated entries");
    if (i < 1 || j < 1 || i > rows || j > cols)
      throw IoError("matrix market: index out of range");
    ii[k] = i - 1;
    jj[k] = j - 1;
    vv[k] = v;
    bandwidth = std::max(bandwidth, std::abs(ii[k] - jj[k]));
  }
  BandedMatrix m(rows, std::max<Index>(bandwidth, 1));
  for (long long k = 0; k < nnz; ++k) {
    if (symmetric)
      m.set_sym(ii[k], jj[k], vv[k]);
    else
      m.set(ii[k], jj[k], vv[k]);
  }
  return m;
}

void write_f64_array(const std::string& path, const Vector& v) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path);
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(sizeof(double)) * v.size());
  if (!os) throw IoError("write failure: " + path);
}

Vector read_f64_array(const std::string& path) {
  std::ifstream is(path, std::ios::binary | std::ios::ate);
  if (!is) throw IoError("cannot open for reading: " + path);
  const auto bytes = static_cast<std::size_t>(is.tellg());
  if (bytes % sizeof(double) != 0)
    throw IoError("f64 array: size is not a multiple of 8");
  is.seekg(0);
  Vector v(static_cast<Index>(bytes / sizeof(double)));
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(bytes));
  if (!is) throw IoError("f64 array: read failure");
  return v;
}

std::string file_content_hash(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open for hashing: " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  const std::string s = buf.str();
  return fnv1a64_hex(s.data(), s.size());
}

}  // namespace heig
