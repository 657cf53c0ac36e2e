#pragma once

#include <string>
#include <vector>

#include "condot/tensor.hpp"
#include "condot/training.hpp"

namespace condot {

/// One polyline per loss name, x = step. Output depends only on the rows.
std::string loss_curve_svg(const std::vector<HistoryRow>& rows, const std::string& title);

/// Source, target and predicted samples of a 2-D task in one panel.
/// ShapeMismatch unless all three have two columns.
std::string scatter_svg(const Matrix& source, const Matrix& target, const Matrix& predicted,
                        const std::string& title);

/// Pipe table; every row must have as many cells as the header.
std::string markdown_table(const std::vector<std::string>& header,
                           const std::vector<std::vector<std::string>>& rows);

/// Fixed-point text for SVG coordinates and tables.
std::string fixed(double v, int digits);

}  // namespace condot
