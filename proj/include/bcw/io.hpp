#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bcw/array2d.hpp"

namespace bcw {

/// Dense float64 array in the "BCW1" layout: magic, u32 rank, u64 dims, row-major payload, all little-endian.
struct GridFile {
    std::vector<std::uint64_t> dims;
    std::vector<double> values;
};

void write_bcw1(const std::string& path, const GridFile& grid);
void write_bcw1(const std::string& path, const Array2D& a);
GridFile read_bcw1(const std::string& path);

/// Rows of numbers under a header, printed with 17 significant digits; nothing touches disk before save().
class CsvWriter {
public:
    CsvWriter(std::string path, const std::vector<std::string>& header);
    void row(const std::vector<double>& values);
    /// Free-form line, used for summary records.
    void line(const std::string& text);
    void save() const;

private:
    std::string path_;
    std::string buffer_;
    std::size_t columns_;
};

/// "t,value" time series.
void write_time_series(const std::string& path, double dt, const std::vector<double>& values);

std::string format_number(double v);

} // namespace bcw
