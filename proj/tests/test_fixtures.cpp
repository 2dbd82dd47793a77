#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "rsma/fixtures.hpp"

using namespace rsma;

#ifndef RSMA_FIXTURE_FILE
#error "RSMA_FIXTURE_FILE must point at the frozen codec fixture JSON"
#endif

TEST_CASE("hex packing round-trips with MSB-first nibbles") {
  const std::vector<std::uint8_t> bits = {1, 0, 1, 1, 0, 0, 1, 0, 1, 1};  // 10 bits
  const auto hex = bits_to_hex(bits);
  CHECK(hex == "b2c");  // 1011 0010 11(00 pad)
  CHECK(hex_to_bits(hex, 10) == bits);
  CHECK(bits_to_hex({}) == "");
  CHECK(hex_to_bits("", 0).empty());
  CHECK_THROWS_AS(hex_to_bits("b2c", 8), std::invalid_argument);   // length mismatch
  CHECK_THROWS_AS(hex_to_bits("zz", 8), std::invalid_argument);    // bad digit
}

TEST_CASE("frozen fixture file loads and passes the codec selftest") {
  const auto fixtures = load_codec_fixtures(RSMA_FIXTURE_FILE);
  CHECK(fixtures.size() == 20);

  // Every AMC-relevant shape is present, plus the CRC-free toy code.
  int n16 = 0, crc_free = 0;
  for (const auto& f : fixtures) {
    if (f.block_length == 16) ++n16;
    if (f.crc_length == 0) ++crc_free;
    CHECK(static_cast<int>(f.codeword.size()) == f.block_length);
    CHECK(static_cast<int>(f.payload.size()) == f.info_length - f.crc_length);
  }
  CHECK(n16 == 4);
  CHECK(n16 == crc_free);

  const auto report = run_codec_selftest(fixtures);
  CHECK(report.total == 20);
  CHECK(report.encode_failures == 0);
  CHECK(report.decode_failures == 0);
  CHECK(report.ok());
}

TEST_CASE("fixture generation is deterministic and matches the frozen file") {
  const auto regenerated = make_codec_fixtures();
  const auto frozen = load_codec_fixtures(RSMA_FIXTURE_FILE);
  REQUIRE(regenerated.size() == frozen.size());
  for (std::size_t i = 0; i < frozen.size(); ++i) {
    CAPTURE(i);
    CHECK(regenerated[i].block_length == frozen[i].block_length);
    CHECK(regenerated[i].info_length == frozen[i].info_length);
    CHECK(regenerated[i].crc_length == frozen[i].crc_length);
    CHECK(regenerated[i].payload == frozen[i].payload);
    CHECK(regenerated[i].codeword == frozen[i].codeword);
  }
}

TEST_CASE("a corrupted fixture is caught by the selftest") {
  auto fixtures = load_codec_fixtures(RSMA_FIXTURE_FILE);
  fixtures[1].codeword[7] ^= 1;  // flip one frozen bit
  const auto report = run_codec_selftest(fixtures);
  CHECK(report.encode_failures == 1);
  CHECK_FALSE(report.ok());
}

TEST_CASE("loader error paths") {
  CHECK_THROWS_AS(load_codec_fixtures("/nonexistent/fixtures.json"), std::runtime_error);

  const std::string bad = "/tmp/rsma_bad_fixtures.json";
  {
    std::ofstream out(bad);
    out << "{\"not\": \"an array\"}";
  }
  CHECK_THROWS_AS(load_codec_fixtures(bad), std::runtime_error);
  {
    std::ofstream out(bad);
    out << "[{\"block_length\": 16}]";  // missing keys
  }
  CHECK_THROWS_AS(load_codec_fixtures(bad), std::runtime_error);
  {
    std::ofstream out(bad);
    out << "[]";
  }
  CHECK_THROWS_AS(load_codec_fixtures(bad), std::runtime_error);
  std::remove(bad.c_str());
}
