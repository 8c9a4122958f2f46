#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "spinlab/errors.hpp"
#include "spinlab/model_json.hpp"

using namespace spinlab;

TEST(ModelJson, RoundTrip) {
    SpinSystem m(3, 4, {{0, 1, 1.5}, {2, 3, -0.25}}, {{1, 2, 0.75}}, Bipartition{0, 1, 0, 1});
    auto doc = model_to_json(m);
    EXPECT_TRUE(validate_model_json(doc).empty());
    auto back = model_from_json(doc);
    EXPECT_EQ(back.q(), 3);
    EXPECT_EQ(back.n(), 4);
    EXPECT_EQ(back.edge_count(), 2u);
    EXPECT_DOUBLE_EQ(*back.coupling(3, 2), -0.25);
    EXPECT_DOUBLE_EQ(back.field(1, 2), 0.75);
    ASSERT_TRUE(back.bipartition().has_value());
    EXPECT_EQ(model_to_json(back), doc);
}

TEST(ModelJson, ParsesCanonicalText) {
    auto m = parse_model(R"({"q":2,"n":3,"edges":[[0,1,1.0],[1,2,-0.5]],"field":[[2,1,0.3]]})");
    EXPECT_EQ(m.n(), 3);
    EXPECT_DOUBLE_EQ(m.field(2, 1), 0.3);
}

TEST(ModelJson, SchemaErrorsArePathAnnotated) {
    auto missing = nlohmann::json::parse(R"({"q":2,"edges":[],"field":[]})");
    auto problems = validate_model_json(missing);
    ASSERT_FALSE(problems.empty());
    EXPECT_NE(problems.front().find("/n"), std::string::npos);
    EXPECT_THROW(model_from_json(missing), ParseError);

    auto extra = nlohmann::json::parse(R"({"q":2,"n":2,"edges":[[0,1,1.0]],"field":[],"extra":1})");
    problems = validate_model_json(extra);
    ASSERT_EQ(problems.size(), 1u);
    EXPECT_EQ(problems.front(), "/extra: unknown key");
}

TEST(ModelJson, RejectsOutOfRangeIds) {
    auto doc = nlohmann::json::parse(R"({"q":2,"n":2,"edges":[[0,2,1.0]],"field":[]})");
    EXPECT_FALSE(validate_model_json(doc).empty());
}

TEST(ModelJson, MalformedTextReportsPosition) {
    try {
        parse_model("{\"q\":2,\"n\":3,");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("byte"), std::string::npos);
    }
}

TEST(ModelJson, LoadFromFile) {
    auto path = std::filesystem::temp_directory_path() / "spinlab_model_json_test.json";
    {
        std::ofstream f(path);
        f << R"({"q":2,"n":2,"edges":[[0,1,0.5]],"field":[]})";
    }
    EXPECT_EQ(load_model(path).edge_count(), 1u);
    std::filesystem::remove(path);
    EXPECT_THROW(load_model(path), Error);
}
