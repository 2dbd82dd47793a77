// Regenerates the frozen codec conformance fixtures. The output is committed
// under tests/fixtures/; rerun this only when the codec contract itself
// changes, and expect review scrutiny when the frozen bytes move.
#include <cstdio>
#include <string>

#include "rsma/fixtures.hpp"

int main(int argc, char** argv) {
  const std::string path = argc > 1 ? argv[1] : "tests/fixtures/codec_fixtures.json";
  const auto fixtures = rsma::make_codec_fixtures();
  const auto report = rsma::run_codec_selftest(fixtures);
  if (!report.ok()) {
    std::fprintf(stderr, "generated fixtures fail self-check: %d encode, %d decode of %d\n",
                 report.encode_failures, report.decode_failures, report.total);
    return 2;
  }
  rsma::save_codec_fixtures(fixtures, path);
  std::printf("wrote %d fixtures to %s\n", report.total, path.c_str());
  return 0;
}
