#ifndef HEIG_SERIALIZATION_HPP
#define HEIG_SERIALIZATION_HPP

#include <iosfwd>
#include <string>

#include "heig/hodlr.hpp"

namespace heig {

// Self-describing binary container for a HodlrMatrix. Layout (little endian):
//   magic "HDLR" | u32 version | u64 rows | u64 cols | u32 level
//   u64 #row_leaves, u64 each | u64 #col_leaves, u64 each
//   pre-order node stream:
//     u8 tag: 0 = leaf, 1 = internal
//     leaf:     u64 rows, u64 cols, rows*cols f64 (column-major)
//     internal: upper block (u64 rows, cols, rank, then u and v f64 data),
//               lower block likewise, then first child, second child
// Round trips are bit exact.
void write_hodlr(std::ostream& os, const HodlrMatrix& m);
HodlrMatrix read_hodlr(std::istream& is);

void save_hodlr(const std::string& path, const HodlrMatrix& m);
HodlrMatrix load_hodlr(const std::string& path);

}  // namespace heig

#endif
