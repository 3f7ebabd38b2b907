#ifndef HEIG_MMIO_HPP
#define HEIG_MMIO_HPP

#include <string>

#include "heig/banded.hpp"
#include "heig/types.hpp"

namespace heig {

// Matrix Market "coordinate real symmetric" I/O (1-indexed, lower triangle
// stored). Reading accepts general square symmetric-patterned files as long
// as the entries fit a band.
void write_matrix_market(const std::string& path, const BandedMatrix& m);
BandedMatrix read_matrix_market(const std::string& path);

// Flat little-endian f64 array (eigenvalue files).
void write_f64_array(const std::string& path, const Vector& v);
Vector read_f64_array(const std::string& path);

std::string file_content_hash(const std::string& path);  // fnv1a64 hex

}  // namespace heig

#endif
