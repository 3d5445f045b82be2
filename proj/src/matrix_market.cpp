#include "podrom/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "podrom/error.hpp"

namespace podrom::mm {
namespace {

struct Header {
    bool coordinate = true;
    bool symmetric = false;
    std::size_t rows = 0, cols = 0, entries = 0;
};

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

Header read_header(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw InvalidInput("MatrixMarket: empty stream");
    std::istringstream banner(line);
    std::string tag, object, format, field, symmetry;
    banner >> tag >> object >> format >> field >> symmetry;
    if (tag != "%%MatrixMarket" || lower(object) != "matrix")
        throw InvalidInput("MatrixMarket: missing banner '%%MatrixMarket matrix'");
    Header h;
    format = lower(format);
    if (format == "coordinate")
        h.coordinate = true;
    else if (format == "array")
        h.coordinate = false;
    else
        throw InvalidInput("MatrixMarket: unsupported format '" + format + "'");
    if (lower(field) != "real" && lower(field) != "double" && lower(field) != "integer")
        throw InvalidInput("MatrixMarket: only real fields are supported");
    symmetry = lower(symmetry);
    if (symmetry == "symmetric")
        h.symmetric = true;
    else if (symmetry != "general")
        throw InvalidInput("MatrixMarket: unsupported symmetry '" + symmetry + "'");

    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '%') continue;
        std::istringstream size_line(line);
        if (h.coordinate) {
            if (!(size_line >> h.rows >> h.cols >> h.entries)) throw InvalidInput("MatrixMarket: bad size line");
        } else {
            if (!(size_line >> h.rows >> h.cols)) throw InvalidInput("MatrixMarket: bad size line");
            h.entries = h.symmetric ? h.rows * (h.rows + 1) / 2 : h.rows * h.cols;
        }
        return h;
    }
    throw InvalidInput("MatrixMarket: missing size line");
}

std::vector<CsrMatrix::Triplet> read_entries(std::istream& is, const Header& h) {
    std::vector<CsrMatrix::Triplet> t;
    t.reserve(h.entries);
    if (h.coordinate) {
        for (std::size_t k = 0; k < h.entries; ++k) {
            std::size_t i = 0, j = 0;
            double v = 0.0;
            if (!(is >> i >> j >> v)) throw InvalidInput("MatrixMarket: truncated coordinate data");
            if (i < 1 || j < 1 || i > h.rows || j > h.cols) throw InvalidInput("MatrixMarket: index out of range");
            t.push_back({i - 1, j - 1, v});
            if (h.symmetric && i != j) t.push_back({j - 1, i - 1, v});
        }
    } else {
        for (std::size_t j = 0; j < h.cols; ++j)
            for (std::size_t i = h.symmetric ? j : 0; i < h.rows; ++i) {
                double v = 0.0;
                if (!(is >> v)) throw InvalidInput("MatrixMarket: truncated array data");
                t.push_back({i, j, v});
                if (h.symmetric && i != j) t.push_back({j, i, v});
            }
    }
    return t;
}

}  // namespace

std::string format17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write(std::ostream& os, const CsrMatrix& a) {
    os << "%%MatrixMarket matrix coordinate real general\n";
    os << a.rows() << ' ' << a.cols() << ' ' << a.nnz() << '\n';
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = a.row_offsets()[i]; k < a.row_offsets()[i + 1]; ++k)
            os << i + 1 << ' ' << a.col_indices()[k] + 1 << ' ' << format17(a.values()[k]) << '\n';
}

void write(std::ostream& os, const DenseMatrix& a) {
    os << "%%MatrixMarket matrix array real general\n";
    os << a.rows() << ' ' << a.cols() << '\n';
    for (std::size_t j = 0; j < a.cols(); ++j)
        for (std::size_t i = 0; i < a.rows(); ++i) os << format17(a(i, j)) << '\n';
}

CsrMatrix read_csr(std::istream& is) {
    const Header h = read_header(is);
    return CsrMatrix::from_triplets(h.rows, h.cols, read_entries(is, h));
}

DenseMatrix read_dense(std::istream& is) {
    const Header h = read_header(is);
    DenseMatrix d(h.rows, h.cols);
    for (const auto& t : read_entries(is, h)) d(t.row, t.col) += t.value;
    return d;
}

namespace {
template <class Matrix>
void write_path(const std::string& path, const Matrix& a) {
    std::ofstream os(path);
    if (!os) throw InvalidInput("cannot open '" + path + "' for writing");
    write(os, a);
    if (!os) throw Error("write failed for '" + path + "'");
}

std::ifstream open_in(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw InvalidInput("cannot open '" + path + "'");
    return is;
}
}  // namespace

void write_file(const std::string& path, const CsrMatrix& a) { write_path(path, a); }
void write_file(const std::string& path, const DenseMatrix& a) { write_path(path, a); }

CsrMatrix read_csr_file(const std::string& path) {
    auto is = open_in(path);
    return read_csr(is);
}

DenseMatrix read_dense_file(const std::string& path) {
    auto is = open_in(path);
    return read_dense(is);
}

}  // namespace podrom::mm
