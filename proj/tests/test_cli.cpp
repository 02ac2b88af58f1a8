/*
   Copyright 2026 The sderk Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <gtest/gtest.h>

namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string out;
    std::string err;
};

fs::path scratch() {
    const auto dir = fs::temp_directory_path() / "sderk_cli_test";
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

Result run(const std::string& args) {
    const auto out = scratch() / "stdout.txt";
    const auto err = scratch() / "stderr.txt";
    const std::string cmd = std::string("\"") + SDERK_CLI + "\" " + args + " >\"" + out.string() + "\" 2>\""
                            + err.string() + "\"";
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

const std::string data_dir = SDERK_DATA_DIR;

} // namespace

TEST(Cli, ValidateShippedTableaus) {
    for (const std::string& t : {std::string("rk4"), data_dir + "/tableaus/verner98.tab", data_dir + "/tableaus/dp87.tab"}) {
        const auto r = run("validate " + t);
        EXPECT_EQ(r.code, 0) << t << '\n' << r.out;
        EXPECT_NE(r.out.find("PASS"), std::string::npos);
    }
}

TEST(Cli, MissingTableauIsIoError) {
    const auto r = run("validate /nonexistent/x.tab");
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("/nonexistent/x.tab"), std::string::npos) << r.err;
}

TEST(Cli, CorruptedRowSumFailsValidation) {
    std::string text = slurp(data_dir + "/tableaus/rk4.tab");
    const auto pos = text.find("a 2 5.0");
    ASSERT_NE(pos, std::string::npos);
    text.replace(pos, 7, "a 2 5.1");
    const auto path = scratch() / "bad_rowsum.tab";
    std::ofstream(path) << text;
    const auto r = run("validate " + path.string());
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("row-sum"), std::string::npos) << r.out;
}

TEST(Cli, ExampleIsDeterministic) {
    const std::string args = "example absorber --trajectories 1 --chunks 4 --horizon 0.5 --n-levels-unused";
    EXPECT_EQ(run(args).code, 2);
    const std::string ok = "example absorber --trajectories 1 --chunks 4 --horizon 0.5";
    const auto a = run(ok);
    const auto b = run(ok + " --workers 3");
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, b.out);
    EXPECT_NE(a.out.find("# master_seed=1\n"), std::string::npos);
    EXPECT_NE(a.out.find("# min_level=3\n"), std::string::npos);
    EXPECT_NE(a.out.find("t,n_mc,n_se,n_oracle\n0,0,0,0\n"), std::string::npos) << a.out;
}

TEST(Cli, OutputFileMatchesStdout) {
    const auto path = scratch() / "curve.csv";
    const std::string args = "example cascade --trajectories 2 --chunks 2 --horizon 0.25";
    const auto a = run(args);
    const auto b = run(args + " --out " + path.string());
    ASSERT_EQ(a.code, 0) << a.err;
    ASSERT_EQ(b.code, 0) << b.err;
    EXPECT_EQ(slurp(path), a.out);
}

TEST(Cli, ConfigFileAndErrors) {
    const auto cfg = scratch() / "run.cfg";
    std::ofstream(cfg) << "chunks=2\nT=0.25\ntrajectories=2\n";
    const auto r = run("example absorber --config " + cfg.string());
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("# chunks=2\n"), std::string::npos);

    std::ofstream(cfg) << "chunks=2\nfrobnicate=1\n";
    const auto bad = run("example absorber --config " + cfg.string());
    EXPECT_EQ(bad.code, 2);
    EXPECT_NE(bad.err.find("frobnicate"), std::string::npos);

    EXPECT_EQ(run("example absorber --config /nonexistent/run.cfg").code, 3);
    EXPECT_EQ(run("example helium").code, 2);
    EXPECT_EQ(run("example absorber --trajectories 0").code, 2);
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("example absorber --out /nonexistent/dir/x.csv --trajectories 1 --chunks 1 "
                  "--horizon 0.1").code,
              3);
}

TEST(Cli, ConvergeReportsSlope) {
    const auto r = run("converge --trajectories 50 --h-coarse 3 --h-fine 6");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("h,mean_error,n_paths\n"), std::string::npos);
    EXPECT_NE(r.err.find("slope="), std::string::npos);
    EXPECT_EQ(run("converge --h-coarse 6 --h-fine 3").code, 2);
    EXPECT_EQ(run("converge heston").code, 2);
}
