#include "kforge/core.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <regex>

using namespace kforge;

TEST(Core, Sha256MatchesPublishedVectors) {
    // FIPS 180-2 appendix examples.
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Core, Sha256FileEqualsInMemoryDigest) {
    test::TempDir dir;
    write_file(dir / "f.txt", "hello\n");
    EXPECT_EQ(sha256_file(dir / "f.txt"), sha256_hex("hello\n"));
}

TEST(Core, Base64MatchesRfc4648Vectors) {
    EXPECT_EQ(base64_encode(""), "");
    EXPECT_EQ(base64_encode("f"), "Zg==");
    EXPECT_EQ(base64_encode("fo"), "Zm8=");
    EXPECT_EQ(base64_encode("foo"), "Zm9v");
    EXPECT_EQ(base64_encode("foob"), "Zm9vYg==");
    EXPECT_EQ(base64_encode("fooba"), "Zm9vYmE=");
    EXPECT_EQ(base64_encode("foobar"), "Zm9vYmFy");
}

TEST(Core, BackendParsing) {
    EXPECT_EQ(parse_backend("cuda"), Backend::cuda);
    EXPECT_EQ(parse_backend("metal"), Backend::metal);
    EXPECT_EQ(parse_backend("mps"), Backend::metal);
    EXPECT_FALSE(parse_backend("rocm").has_value());
    EXPECT_THROW(backend_from_string("rocm"), ParseError);
    EXPECT_EQ(to_string(Backend::metal), "metal");
}

TEST(Core, TrimAndSplit) {
    EXPECT_EQ(trim("  a b \n"), "a b");
    EXPECT_EQ(trim(" \t\r\n"), "");
    EXPECT_EQ(split("a,,b", ','), (std::vector<std::string>{"a", "", "b"}));
    EXPECT_EQ(split("", ','), (std::vector<std::string>{""}));
}

TEST(Core, ReadWriteRoundTripCreatesParents) {
    test::TempDir dir;
    const auto p = dir / "x/y/z.bin";
    const std::string payload("a\0b\xff", 4);
    write_file(p, payload);
    EXPECT_EQ(read_file(p), payload);
    write_file_atomic(p, "replaced");
    EXPECT_EQ(read_file(p), "replaced");
    EXPECT_THROW(read_file(dir / "missing"), LoadError);
}

TEST(Core, TimestampIsIsoUtcWithMillis) {
    EXPECT_TRUE(std::regex_match(utc_timestamp(), std::regex(R"(\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}\.\d{3}Z)")));
}

TEST(Core, ConfigErrorKeepsItemizedProblems) {
    ConfigError e({"a", "b"});
    EXPECT_EQ(e.problems().size(), 2u);
}
