#pragma once

#include <cstddef>
#include <vector>

namespace hyp {

/// Fixed sparse matrix in compressed-row form.
struct SparseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr;
  std::vector<std::size_t> col_idx;
  std::vector<double> values;

  SparseMatrix transposed() const;
  /// Dense row-major copy, for tests and small graphs.
  std::vector<double> dense() const;
};

}  // namespace hyp
