#pragma once

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <vector>

namespace cnpressure::fem {

/// Compressed row storage: outerIndexPtr() holds row offsets, innerIndexPtr()
/// column indices, valuePtr() values. Assembly keeps explicit zeros so matrices
/// built from the same element pattern share one sparsity structure.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;
using Triplet = Eigen::Triplet<double, int>;

inline SparseMatrix from_triplets(Eigen::Index rows, Eigen::Index cols, const std::vector<Triplet>& triplets) {
    SparseMatrix m(rows, cols);
    m.setFromTriplets(triplets.begin(), triplets.end());
    m.makeCompressed();
    return m;
}

/// Largest |A - A^T| entry.
inline double asymmetry(const SparseMatrix& a) {
    const SparseMatrix d = a - SparseMatrix(a.transpose());
    double m = 0.0;
    for (Eigen::Index i = 0; i < d.nonZeros(); ++i) m = std::max(m, std::abs(d.valuePtr()[i]));
    return m;
}

inline bool same_pattern(const SparseMatrix& a, const SparseMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.nonZeros() != b.nonZeros()) return false;
    for (Eigen::Index i = 0; i <= a.outerSize(); ++i)
        if (a.outerIndexPtr()[i] != b.outerIndexPtr()[i]) return false;
    for (Eigen::Index i = 0; i < a.nonZeros(); ++i)
        if (a.innerIndexPtr()[i] != b.innerIndexPtr()[i]) return false;
    return true;
}

/// Writes "rows cols nnz" followed by one "row col value" line per stored entry.
inline void write_triplets(std::ostream& os, const SparseMatrix& a) {
    os << a.rows() << ' ' << a.cols() << ' ' << a.nonZeros() << '\n';
    os << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (Eigen::Index r = 0; r < a.outerSize(); ++r)
        for (SparseMatrix::InnerIterator it(a, r); it; ++it) os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

}  // namespace cnpressure::fem
