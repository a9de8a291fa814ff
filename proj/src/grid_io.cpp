#include "radtrans/grid_io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace radtrans {

void write_doubles_le(const std::string& path, std::span<const double> values) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    for (double v : values) {
        uint64_t bits = std::bit_cast<uint64_t>(v);
        uint8_t buf[8];
        for (int i = 0; i < 8; ++i) buf[i] = static_cast<uint8_t>(bits >> (8 * i));
        out.write(reinterpret_cast<const char*>(buf), 8);
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<double> read_doubles_le(const std::string& path, size_t expect_count) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::vector<double> out;
    out.reserve(expect_count);
    uint8_t buf[8];
    while (in.read(reinterpret_cast<char*>(buf), 8)) {
        uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(buf[i]) << (8 * i);
        out.push_back(std::bit_cast<double>(bits));
    }
    if (in.gcount() != 0)
        throw std::runtime_error(path + ": size is not a multiple of 8 bytes");
    if (out.size() != expect_count)
        throw std::runtime_error(path + ": expected " + std::to_string(expect_count) +
                                 " binary64 values, found " + std::to_string(out.size()));
    return out;
}

void write_neutral_csv(const std::string& path, const Grid& grid) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "i,j,k,x\n";
    char line[80];
    for (uint32_t k = 0; k < grid.n; ++k)
        for (uint32_t j = 0; j < grid.n; ++j)
            for (uint32_t i = 0; i < grid.n; ++i) {
                std::snprintf(line, sizeof line, "%u,%u,%u,%.17g\n", i, j, k,
                              grid.neutral[grid.idx(i, j, k)]);
                out << line;
            }
    if (!out) throw std::runtime_error("write failed: " + path);
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace radtrans
