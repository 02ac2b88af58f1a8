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

#include <cmath>
#include <string>

#include <gtest/gtest.h>

#include "sderk/tableau.hpp"

using namespace sderk;

namespace {
const std::string data_dir = SDERK_DATA_DIR "/tableaus/";

const char* rk4_text = R"(name rk4
order 4 0
stages 4
c 0 0.5 0.5 1
a 1
a 2 0.5
a 3 0 0.5
a 4 0 0 1
b 0.16666666666666666666667 0.33333333333333333333333 0.33333333333333333333333 0.16666666666666666666667
)";
} // namespace

TEST(Tableau, BuiltinRk4IsConsistent) {
    const auto t = builtin_rk4();
    EXPECT_EQ(t.stages(), 4u);
    EXPECT_EQ(t.order, 4);
    EXPECT_FALSE(t.embedded());
    EXPECT_DOUBLE_EQ(t.sde_order(), 2.0);
    EXPECT_NO_THROW(validate_tableau(t));
    for (const auto& q : validate_quadrature(t, 4)) EXPECT_LE(q.residual, 1e-15) << q.order;
}

TEST(Tableau, ParsesRk4Text) {
    const auto t = load_tableau(rk4_text);
    const auto ref = builtin_rk4();
    EXPECT_EQ(t.name, "rk4");
    EXPECT_EQ(t.c, ref.c);
    EXPECT_EQ(t.a, ref.a);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(t.b[i], ref.b[i]);
}

TEST(Tableau, CommentsAndBlankLinesAreIgnored) {
    const std::string text = std::string("# header\n\n") + rk4_text + "\n# trailing\n";
    EXPECT_NO_THROW(load_tableau(text));
}

TEST(Tableau, SerializeRoundTripsBitwise) {
    for (const char* f : {"dp87.tab", "verner98.tab"}) {
        const auto t = load_tableau_file(data_dir + f);
        const auto back = load_tableau(serialize_tableau(t));
        EXPECT_EQ(back.name, t.name);
        EXPECT_EQ(back.c, t.c);
        EXPECT_EQ(back.a, t.a);
        EXPECT_EQ(back.b, t.b);
        EXPECT_EQ(back.b_hat, t.b_hat);
        EXPECT_EQ(back.embedded_order, t.embedded_order);
    }
}

TEST(Tableau, ShippedPairs) {
    const auto v = load_tableau_file(data_dir + "verner98.tab");
    EXPECT_EQ(v.stages(), 16u);
    EXPECT_EQ(v.order, 9);
    EXPECT_EQ(v.embedded_order, 8);
    EXPECT_DOUBLE_EQ(v.sde_order(), 4.5);
    for (const auto& q : validate_quadrature(v, 9)) {
        EXPECT_LE(q.residual, 1e-12) << q.order;
        if (q.order <= 8) EXPECT_LE(*q.residual_hat, 1e-12) << q.order;
    }
    const auto d = load_tableau_file(data_dir + "dp87.tab");
    EXPECT_EQ(d.stages(), 13u);
    EXPECT_EQ(d.order, 8);
    EXPECT_EQ(d.embedded_order, 7);
    for (const auto& q : validate_quadrature(d, 8)) {
        EXPECT_LE(q.residual, 1e-12) << q.order;
        if (q.order <= 7) EXPECT_LE(*q.residual_hat, 1e-12) << q.order;
    }
}

TEST(Tableau, CorruptedRowSumNamesCondition) {
    std::string text = rk4_text;
    text.replace(text.find("a 2 0.5"), 7, "a 2 0.6");
    try {
        load_tableau(text);
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_NE(e.condition().find("row-sum"), std::string::npos);
        EXPECT_NEAR(e.residual(), 0.1, 1e-12);
    }
}

TEST(Tableau, WeightSumViolation) {
    std::string text = rk4_text;
    text.replace(text.find("b 0.1666"), 8, "b 0.2666");
    EXPECT_THROW(load_tableau(text), ValidationError);
}

TEST(Tableau, MalformedDecimalReportsLine) {
    std::string text = rk4_text;
    text.replace(text.find("a 3 0 0.5"), 9, "a 3 0 0.5x");
    try {
        load_tableau(text);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 7u);
    }
}

TEST(Tableau, StructuralErrors) {
    EXPECT_THROW(load_tableau(""), ParseError);
    EXPECT_THROW(load_tableau("name x\norder 4 0\nstages 2\nc 0 1\na 1\na 2 1\n"), ParseError);
    EXPECT_THROW(load_tableau("name x\norder 1 0\nstages 1\nc 0\na 1\nb 1\nbhat 1\n"), ParseError);
    EXPECT_THROW(load_tableau("name x\norder 1 1\nstages 1\nc 0\na 1\nb 1\n"), ParseError);
    EXPECT_THROW(load_tableau("name x\norder 1 0\nstages 1\nc 0\na 1 0.5\nb 1\n"), ParseError);
    EXPECT_THROW(load_tableau("name x\norder 1 0\nstages 1\nc 0\na 1\nb 1\nfoo\n"), ParseError);
    EXPECT_NO_THROW(load_tableau("name euler\norder 1 0\nstages 1\nc 0\na 1\nb 1\n"));
}

TEST(Tableau, MissingFileIsIoError) {
    EXPECT_THROW(load_tableau_file(data_dir + "does-not-exist.tab"), std::ios_base::failure);
}
