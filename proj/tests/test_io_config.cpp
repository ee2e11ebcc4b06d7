#include <cstring>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "bcw/app/config.hpp"
#include "bcw/errors.hpp"
#include "bcw/io.hpp"

using namespace bcw;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "bcw_tests";
    fs::create_directories(dir);
    return dir / name;
}

} // namespace

TEST(Io, Bcw1RoundTrip) {
    GridFile g{{2, 3, 4}, {}};
    for (int i = 0; i < 24; ++i) g.values.push_back(i * 0.1 - 1e-300 * i);
    const auto p = scratch("grid.bcw1").string();
    write_bcw1(p, g);
    const GridFile r = read_bcw1(p);
    EXPECT_EQ(r.dims, g.dims);
    ASSERT_EQ(r.values.size(), g.values.size());
    EXPECT_EQ(std::memcmp(r.values.data(), g.values.data(), 24 * sizeof(double)), 0);
    EXPECT_EQ(fs::file_size(p), 4u + 4u + 3u * 8u + 24u * 8u);
}

TEST(Io, Bcw1HeaderIsLittleEndian) {
    const auto p = scratch("one.bcw1").string();
    write_bcw1(p, GridFile{{1}, {1.0}});
    std::ifstream is(p, std::ios::binary);
    std::vector<unsigned char> b((std::istreambuf_iterator<char>(is)), {});
    ASSERT_EQ(b.size(), 24u);
    EXPECT_EQ(std::string(b.begin(), b.begin() + 4), "BCW1");
    EXPECT_EQ(b[4], 1);
    EXPECT_EQ(b[8], 1);
    // 1.0 is 0x3FF0000000000000.
    EXPECT_EQ(b[22], 0xF0);
    EXPECT_EQ(b[23], 0x3F);
}

TEST(Io, RejectsBadFiles) {
    const auto p = scratch("bad.bcw1").string();
    std::ofstream(p) << "NOPE";
    EXPECT_THROW(read_bcw1(p), ConfigError);
    EXPECT_THROW(read_bcw1(scratch("missing.bcw1").string()), ConfigError);
    EXPECT_THROW(write_bcw1(p, GridFile{{3}, {1.0}}), PreconditionError);
}

TEST(Io, CsvRowsKeepFullPrecision) {
    const auto p = scratch("t.csv").string();
    CsvWriter w(p, {"a", "b"});
    w.row({0.1, 1.0 / 3.0});
    EXPECT_THROW(w.row({1.0}), PreconditionError);
    w.save();
    std::ifstream is(p);
    std::string header, line;
    std::getline(is, header);
    std::getline(is, line);
    EXPECT_EQ(header, "a,b");
    const auto comma = line.find(',');
    EXPECT_EQ(std::stod(line.substr(0, comma)), 0.1);
    EXPECT_EQ(std::stod(line.substr(comma + 1)), 1.0 / 3.0);
}

TEST(Config, DefaultsParse) {
    const RunConfig c = parse_config(json::object());
    EXPECT_EQ(c.n_x, 401);
    EXPECT_EQ(c.document, default_config_document());
}

TEST(Config, ShippedDefaultFileMatchesDefaults) {
    const RunConfig c = load_config(BCW_SOURCE_DIR "/configs/default.json");
    EXPECT_EQ(c.document, default_config_document());
}

TEST(Config, RejectsUnknownKeysAndBadTypes) {
    EXPECT_THROW(parse_config(json{{"grid", {{"nx", 101}}}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"colour", 1}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"grid", {{"n_x", "many"}}}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"potential", {{"family", "lumpy"}}}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"potential", {{"family", "file"}, {"path", "/nonexistent.bcw1"}}}}), ConfigError);
}

TEST(Config, RejectsCourantAboveOne) {
    EXPECT_THROW(parse_config(json{{"grid", {{"dt", 0.01}}}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"speed", {{"family", "constant"}, {"value", 1.2}}}}), ConfigError);
    EXPECT_NO_THROW(parse_config(json{{"grid", {{"dt", 0.0025}}}}));
}

TEST(Config, ManifestReplaysItsConfig) {
    const RunConfig a = parse_config(json{{"reconstruct", {{"delta", 0.01}}}});
    const json manifest = {{"manifest_version", 1}, {"config", a.document}};
    EXPECT_EQ(parse_config(manifest).document, a.document);
}

TEST(Config, Sha256KnownVector) {
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
