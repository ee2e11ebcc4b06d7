#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

#include "bcw/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path workdir() {
    const fs::path d = fs::temp_directory_path() / "bcw_cli_tests";
    fs::create_directories(d);
    return d;
}

int run(const std::string& args) {
    const std::string cmd = std::string(BCW_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_config(const std::string& name, const json& j) {
    const fs::path p = workdir() / name;
    std::ofstream(p) << j.dump();
    return p;
}

json read_json(const fs::path& p) {
    std::ifstream is(p);
    return json::parse(is);
}

} // namespace

TEST(Cli, ForwardWithoutSourceWritesZeroField) {
    const fs::path cfg = write_config("zero.json", {{"source", json::array()}, {"grid", {{"n_x", 101}, {"dt", 0.0095}, {"t_max", 1.0}}}});
    const fs::path out = workdir() / "forward_zero";
    ASSERT_EQ(run("forward --config " + cfg.string() + " --out " + out.string()), 0);
    const bcw::GridFile f = bcw::read_bcw1((out / "field.bcw1").string());
    ASSERT_EQ(f.dims.size(), 2u);
    for (double v : f.values) ASSERT_EQ(v, 0.0);
    const json m = read_json(out / "manifest.json");
    EXPECT_EQ(m["subcommand"], "forward");
    EXPECT_EQ(m["config_sha256"].get<std::string>().size(), 64u);
}

TEST(Cli, ReconstructOfZeroPotentialStaysSmall) {
    const fs::path cfg = write_config("zero_q.json", {{"potential", {{"family", "zero"}}}});
    const fs::path out = workdir() / "reconstruct_zero";
    ASSERT_EQ(run("reconstruct --config " + cfg.string() + " --out " + out.string()), 0);
    EXPECT_LT(read_json(out / "metrics.json")["max_abs_q_est"].get<double>(), 0.5);
}

TEST(Cli, ManifestReplayReproducesHash) {
    const fs::path a = workdir() / "dtn_a", b = workdir() / "dtn_b";
    const fs::path cfg = write_config("small.json", {{"grid", {{"n_x", 101}, {"dt", 0.0095}, {"t_max", 1.0}}}});
    ASSERT_EQ(run("dtn --config " + cfg.string() + " --out " + a.string()), 0);
    ASSERT_EQ(run("dtn --config " + (a / "manifest.json").string() + " --out " + b.string() + " --workers 2"), 0);
    EXPECT_EQ(read_json(a / "manifest.json")["config_sha256"], read_json(b / "manifest.json")["config_sha256"]);
    EXPECT_EQ(bcw::read_bcw1((a / "dtn.bcw1").string()).values, bcw::read_bcw1((b / "dtn.bcw1").string()).values);
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(run("dtn --config " + write_config("bad.json", {{"grid", {{"bogus", 1}}}}).string()), 2);
    EXPECT_EQ(run("dtn --config " + write_config("cfl.json", {{"grid", {{"dt", 0.01}}}}).string()), 2);
    EXPECT_EQ(run("dtn --config " + (workdir() / "missing.json").string()), 2);
    const fs::path short_run = write_config("short.json", {{"grid", {{"t_max", 2.0}}}});
    EXPECT_EQ(run("control --config " + short_run.string() + " --out " + (workdir() / "ctl").string()), 3);
}
