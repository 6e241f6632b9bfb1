#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "bvlab/matrix.hpp"

namespace bvlab::svg {

inline constexpr const char* kGeneratorVersion = "bvlab-svg 1";

struct LatticeSpec {
    std::string title;
    std::vector<std::string> row_labels; // one per column of `rows`
    std::vector<std::string> col_labels; // one per column of `cols`
    std::size_t max_points = 1000;       // per panel, subsampled by stride
    double panel_size = 120.0;
};

/// Scatter-plot lattice: panel (i, j) plots rows[:, i] (vertical) against
/// cols[:, j] (horizontal). Output is deterministic.
std::string scatter_lattice(const Matrix& rows, const Matrix& cols, const LatticeSpec& spec);

} // namespace bvlab::svg
