// Copyright (C) 2026 paro authors
// SPDX-License-Identifier: Apache-2.0
//
// Exit-code contract and basic wiring of the command-line tool. The full
// pipeline (including byte-level determinism) runs in the acceptance suite.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>

#include <doctest.h>

#include "paro/tensor_io.hpp"

namespace fs = std::filesystem;

namespace {

fs::path work_dir() {
    fs::path dir = fs::temp_directory_path() / "paro_cli_tests";
    fs::create_directories(dir);
    return dir;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(PARO_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

} // namespace

TEST_CASE("cli exit codes") {
    fs::path dir = work_dir();

    CHECK(run_cli("--help") == 0);
    CHECK(run_cli("gen --help") == 0);
    CHECK(run_cli("definitely-not-a-command") == 2);
    CHECK(run_cli("gen") == 2);                                      // missing required flags
    CHECK(run_cli("gen --grid F4 --out " + (dir / "x").string()) == 2); // malformed grid

    // config error: quant mode without bits
    std::string gen_dir = (dir / "fix").string();
    CHECK(run_cli("gen --grid H:4,W:4 --weights W:1 --out " + gen_dir) == 0);
    CHECK(run_cli("run --grid H:4,W:4 --block 8 --q " + gen_dir + "/q.pat --k " + gen_dir + "/k.pat --v " + gen_dir +
                  "/v.pat --mode quant --bits 0 --out " + (dir / "o.pat").string()) == 2);

    // format error: not a tensor file
    std::ofstream(dir / "bad.pat", std::ios::binary) << "JUNKJUNKJUNKJUNK";
    CHECK(run_cli("analyze --grid H:4,W:4 --out " + (dir / "p.txt").string() + " " + (dir / "bad.pat").string()) == 3);

    // shape mismatch between grid and inputs
    CHECK(run_cli("run --grid H:8,W:8 --block 8 --q " + gen_dir + "/q.pat --k " + gen_dir + "/k.pat --v " + gen_dir +
                  "/v.pat --mode quant --bits 8 --out " + (dir / "o.pat").string()) == 2);

    // numeric invariant violation: a non-finite payload
    paro::TensorData nan_tensor;
    nan_tensor.shape = {16, 16};
    nan_tensor.values.assign(256, std::numeric_limits<float>::quiet_NaN());
    paro::save_tensor(nan_tensor, (dir / "nan.pat").string());
    CHECK(run_cli("analyze --grid H:4,W:4 --out " + (dir / "p.txt").string() + " " + (dir / "nan.pat").string()) == 4);
}

TEST_CASE("cli accepts a pattern spec config file") {
    fs::path dir = work_dir();
    std::ofstream(dir / "spec.cfg") << "# fixture\n"
                                       "grid = H:4,W:4\n"
                                       "weights = W:1\n"
                                       "bandwidth = 1.0\n"
                                       "noise = 0.1\n"
                                       "seed = 5\n";
    std::string out = (dir / "cfggen").string();
    CHECK(run_cli("gen --config " + (dir / "spec.cfg").string() + " --out " + out) == 0);
    CHECK(paro::load_matrix(out + "/q.pat").rows == 16);
    // config and flags are mutually exclusive
    CHECK(run_cli("gen --config " + (dir / "spec.cfg").string() + " --weights W:1 --out " + out) == 2);
}

TEST_CASE("cli pipeline produces readable artifacts") {
    fs::path dir = work_dir();
    std::string fix = (dir / "pipe").string();
    REQUIRE(run_cli("gen --grid F:2,H:4,W:4 --weights F:1 --noise 0.1 --seed 3 --timesteps 2 --out " + fix) == 0);
    REQUIRE(run_cli("analyze --grid F:2,H:4,W:4 --block 8 --joint --out " + fix + "/plan.txt " + fix +
                    "/calib_t000.pat " + fix + "/calib_t001.pat") == 0);
    REQUIRE(run_cli("maskgen --grid F:2,H:4,W:4 --block 8 --density 0.5 --timesteps 2 --plan " + fix +
                    "/plan.txt --out " + fix + " " + fix + "/calib_t000.pat " + fix + "/calib_t001.pat") == 0);
    REQUIRE(run_cli("run --grid F:2,H:4,W:4 --block 8 --q " + fix + "/q.pat --k " + fix + "/k.pat --v " + fix +
                    "/v.pat --plan " + fix + "/plan.txt --schedule " + fix +
                    "/schedule_d0.5.psch --mode both --bits 8 --out " + fix + "/out.pat --metrics " + fix +
                    "/m.csv") == 0);

    paro::Matrix out = paro::load_matrix(fix + "/out.pat");
    CHECK(out.rows == 32);
    CHECK(out.cols == 16);
    std::ifstream m(fix + "/m.csv");
    std::string header;
    std::getline(m, header);
    CHECK(header == "label,knob,psnr_db,cosine,l1,rmse,retained_mass,repaired_rows");
}
