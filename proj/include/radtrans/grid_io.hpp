#pragma once

#include <span>
#include <string>
#include <vector>

#include "radtrans/grid.hpp"

namespace radtrans {

// Raw little-endian binary64 arrays, x-fastest cell order (i + n·(j + n·k)).
void write_doubles_le(const std::string& path, std::span<const double> values);
std::vector<double> read_doubles_le(const std::string& path, size_t expect_count);

// One `i,j,k,x` line per cell.
void write_neutral_csv(const std::string& path, const Grid& grid);

void write_text_file(const std::string& path, const std::string& text);

}  // namespace radtrans
