#include "bcw/io.hpp"

#include <array>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <type_traits>
#include <utility>

#include "bcw/errors.hpp"

namespace bcw {

namespace {

constexpr char kMagic[4] = {'B', 'C', 'W', '1'};

template <typename T>
void put_le(std::ofstream& os, T v) {
    std::array<unsigned char, sizeof(T)> b{};
    std::uint64_t bits = 0;
    if constexpr (std::is_same_v<T, double>) {
        std::memcpy(&bits, &v, sizeof(double));
    } else {
        bits = static_cast<std::uint64_t>(v);
    }
    for (std::size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b.data()), b.size());
}

template <typename T>
T get_le(std::ifstream& is) {
    std::array<unsigned char, sizeof(T)> b{};
    if (!is.read(reinterpret_cast<char*>(b.data()), b.size())) throw ConfigError("truncated BCW1 file");
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    if constexpr (std::is_same_v<T, double>) {
        double v;
        std::memcpy(&v, &bits, sizeof(double));
        return v;
    } else {
        return static_cast<T>(bits);
    }
}

} // namespace

void write_bcw1(const std::string& path, const GridFile& grid) {
    std::uint64_t count = 1;
    for (auto d : grid.dims) count *= d;
    if (count != grid.values.size()) throw PreconditionError("BCW1 dims do not match the payload");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot open " + path + " for writing");
    os.write(kMagic, 4);
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(grid.dims.size()));
    for (auto d : grid.dims) put_le<std::uint64_t>(os, d);
    for (double v : grid.values) put_le<double>(os, v);
    if (!os) throw ConfigError("write failed: " + path);
}

void write_bcw1(const std::string& path, const Array2D& a) {
    write_bcw1(path, GridFile{{a.rows(), a.cols()}, a.values()});
}

GridFile read_bcw1(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open " + path);
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw ConfigError(path + " is not a BCW1 file");
    GridFile g;
    const auto rank = get_le<std::uint32_t>(is);
    std::uint64_t count = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
        g.dims.push_back(get_le<std::uint64_t>(is));
        count *= g.dims.back();
    }
    g.values.resize(count);
    for (auto& v : g.values) v = get_le<double>(is);
    return g;
}

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(std::string path, const std::vector<std::string>& header)
    : path_(std::move(path)), columns_(header.size()) {
    for (std::size_t i = 0; i < header.size(); ++i) buffer_ += (i ? "," : "") + header[i];
    buffer_ += '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
    if (values.size() != columns_) throw PreconditionError("CSV row width does not match the header");
    for (std::size_t i = 0; i < values.size(); ++i) buffer_ += (i ? "," : "") + format_number(values[i]);
    buffer_ += '\n';
}

void CsvWriter::line(const std::string& text) {
    buffer_ += text + '\n';
}

void CsvWriter::save() const {
    std::ofstream os(path_);
    if (!os) throw ConfigError("cannot open " + path_ + " for writing");
    os << buffer_;
    if (!os) throw ConfigError("write failed: " + path_);
}

void write_time_series(const std::string& path, double dt, const std::vector<double>& values) {
    CsvWriter csv(path, {"t", "value"});
    for (std::size_t k = 0; k < values.size(); ++k) csv.row({k * dt, values[k]});
    csv.save();
}

} // namespace bcw
