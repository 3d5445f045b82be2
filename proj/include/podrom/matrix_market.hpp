#pragma once

#include <iosfwd>
#include <string>

#include "podrom/linalg.hpp"

namespace podrom::mm {

// Values are written with 17 significant digits so that a write/read cycle
// reproduces every double bit for bit.

/// Writes `%%MatrixMarket matrix coordinate real general`.
void write(std::ostream& os, const CsrMatrix& a);
/// Writes `%%MatrixMarket matrix array real general` (column-major, per the format).
void write(std::ostream& os, const DenseMatrix& a);

/// Accepts coordinate real general|symmetric; symmetric files are expanded.
CsrMatrix read_csr(std::istream& is);
/// Accepts array or coordinate, real, general|symmetric.
DenseMatrix read_dense(std::istream& is);

void write_file(const std::string& path, const CsrMatrix& a);
void write_file(const std::string& path, const DenseMatrix& a);
CsrMatrix read_csr_file(const std::string& path);
DenseMatrix read_dense_file(const std::string& path);

/// Shortest-round-trip formatting used by every text format in the project.
std::string format17(double x);

}  // namespace podrom::mm
