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

#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "sderk/run_config.hpp"

using namespace sderk;

TEST(RunConfig, Defaults) {
    const RunConfig c;
    EXPECT_EQ(c.n_levels, 11);
    EXPECT_EQ(c.T, 3.0);
    EXPECT_EQ(c.chunks, 64);
    EXPECT_EQ(c.rtol, 1e-8);
    EXPECT_EQ(c.atol, 1e-10);
    EXPECT_EQ(c.min_level, 3);
    EXPECT_EQ(c.trajectories, 5000u);
    EXPECT_FALSE(c.renormalize);
    EXPECT_EQ(c.base_step(), 3.0 / 64);
    EXPECT_NO_THROW(c.validate());
}

TEST(RunConfig, ParsesKeysCommentsAndWhitespace) {
    const auto c = parse_run_config("# header\n n_levels = 7 \nT=1.5 # trailing\n\nchunks=8\r\n"
                                    "rtol=1e-6\natol=0\nmin_level=0\ntrajectories=12\nmaster_seed=99\n"
                                    "tableau=/x/y.tab\nrenormalize=yes\n");
    EXPECT_EQ(c.n_levels, 7);
    EXPECT_EQ(c.T, 1.5);
    EXPECT_EQ(c.chunks, 8);
    EXPECT_EQ(c.rtol, 1e-6);
    EXPECT_EQ(c.atol, 0.0);
    EXPECT_EQ(c.min_level, 0);
    EXPECT_EQ(c.trajectories, 12u);
    EXPECT_EQ(c.master_seed, 99u);
    EXPECT_EQ(c.tableau, "/x/y.tab");
    EXPECT_TRUE(c.renormalize);
}

TEST(RunConfig, LayersOverBase) {
    RunConfig base;
    base.trajectories = 7;
    const auto c = parse_run_config("T=2\n", base);
    EXPECT_EQ(c.trajectories, 7u);
    EXPECT_EQ(c.T, 2.0);
}

TEST(RunConfig, ErrorsCarryLineNumbers) {
    try {
        parse_run_config("T=1\nbogus=3\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
        EXPECT_NE(std::string(e.what()).find("bogus"), std::string::npos);
    }
    EXPECT_THROW(parse_run_config("chunks=1.5\n"), ParseError);
    EXPECT_THROW(parse_run_config("T\n"), ParseError);
    EXPECT_THROW(parse_run_config("T=\n"), ParseError);
    EXPECT_THROW(parse_run_config("renormalize=maybe\n"), ParseError);
}

TEST(RunConfig, ValidationRejectsBadValues) {
    EXPECT_THROW(parse_run_config("n_levels=1").validate(), PreconditionError);
    EXPECT_THROW(parse_run_config("T=0").validate(), PreconditionError);
    EXPECT_THROW(parse_run_config("chunks=0").validate(), PreconditionError);
    EXPECT_THROW(parse_run_config("rtol=0\natol=0").validate(), PreconditionError);
    EXPECT_THROW(parse_run_config("min_level=-1").validate(), PreconditionError);
    EXPECT_THROW(parse_run_config("trajectories=0").validate(), PreconditionError);
}

TEST(RunConfig, DescribeRoundTrips) {
    RunConfig c;
    c.T = 0.1;
    c.tableau = "rk4";
    c.renormalize = true;
    std::string text;
    for (const auto& [k, v] : describe(c)) text += k + "=" + v + "\n";
    const auto back = parse_run_config(text);
    EXPECT_EQ(back.T, c.T);
    EXPECT_EQ(back.tableau, "rk4");
    EXPECT_TRUE(back.renormalize);
    EXPECT_EQ(describe(back), describe(c));
}

TEST(RunConfig, LoadsFromFile) {
    const auto path = std::filesystem::temp_directory_path() / "sderk_cfg_test.cfg";
    {
        std::ofstream f(path);
        f << "trajectories=3\n";
    }
    EXPECT_EQ(load_run_config(path.string()).trajectories, 3u);
    std::filesystem::remove(path);
    EXPECT_THROW(load_run_config(path.string()), std::ios_base::failure);
}
