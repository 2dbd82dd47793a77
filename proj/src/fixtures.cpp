#include "rsma/fixtures.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "rsma/amc.hpp"
#include "rsma/rng.hpp"

namespace rsma {

namespace {

CodewordSpec spec_for(const CodecFixture& f) {
  return make_codeword_spec(f.block_length, f.info_length, f.design_snr_db, 8, f.crc_length);
}

}  // namespace

std::string bits_to_hex(const std::vector<std::uint8_t>& bits) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve((bits.size() + 3) / 4);
  for (std::size_t i = 0; i < bits.size(); i += 4) {
    int nibble = 0;
    for (std::size_t j = 0; j < 4; ++j) {
      nibble <<= 1;
      if (i + j < bits.size()) nibble |= bits[i + j] & 1;
    }
    out.push_back(digits[nibble]);
  }
  return out;
}

std::vector<std::uint8_t> hex_to_bits(const std::string& hex, int bit_count) {
  if (bit_count < 0 || static_cast<std::size_t>((bit_count + 3) / 4) != hex.size())
    throw std::invalid_argument("hex_to_bits: hex length does not match bit count");
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(bit_count), 0);
  for (int i = 0; i < bit_count; ++i) {
    const char c = hex[static_cast<std::size_t>(i / 4)];
    int nibble = 0;
    if (c >= '0' && c <= '9') nibble = c - '0';
    else if (c >= 'a' && c <= 'f') nibble = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') nibble = c - 'A' + 10;
    else throw std::invalid_argument("hex_to_bits: invalid hex digit");
    bits[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>((nibble >> (3 - i % 4)) & 1);
  }
  return bits;
}

std::vector<CodecFixture> load_codec_fixtures(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_codec_fixtures: cannot open " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("load_codec_fixtures: parse error in " + path + ": " + e.what());
  }
  if (!doc.is_array()) throw std::runtime_error("load_codec_fixtures: expected a JSON array");
  std::vector<CodecFixture> out;
  for (const auto& item : doc) {
    CodecFixture f;
    try {
      f.block_length = item.at("block_length").get<int>();
      f.info_length = item.at("info_length").get<int>();
      f.crc_length = item.at("crc_length").get<int>();
      f.design_snr_db = item.at("design_snr_db").get<double>();
      const int payload_bits = f.info_length - f.crc_length;
      f.payload = hex_to_bits(item.at("payload_hex").get<std::string>(), payload_bits);
      f.codeword = hex_to_bits(item.at("codeword_hex").get<std::string>(), f.block_length);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(std::string("load_codec_fixtures: bad entry: ") + e.what());
    }
    out.push_back(std::move(f));
  }
  if (out.empty()) throw std::runtime_error("load_codec_fixtures: no fixtures in " + path);
  return out;
}

void save_codec_fixtures(const std::vector<CodecFixture>& fixtures, const std::string& path) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& f : fixtures) {
    doc.push_back({{"block_length", f.block_length},
                   {"info_length", f.info_length},
                   {"crc_length", f.crc_length},
                   {"design_snr_db", f.design_snr_db},
                   {"payload_hex", bits_to_hex(f.payload)},
                   {"codeword_hex", bits_to_hex(f.codeword)}});
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_codec_fixtures: cannot write " + path);
  out << doc.dump(2) << "\n";
}

std::vector<CodecFixture> make_codec_fixtures() {
  struct Shape {
    int n, info, crc;
  };
  // The four info lengths the AMC table uses at N=256 (rates 1/4, 1/2, 3/4
  // and the 235/256 top rate), plus a short toy code exercised without CRC.
  const std::vector<Shape> shapes = {
      {256, 64, 11}, {256, 128, 11}, {256, 192, 11}, {256, 235, 11}, {16, 8, 0}};
  const StreamKey root(0xF1C5);
  std::vector<CodecFixture> out;
  for (std::size_t s = 0; s < shapes.size(); ++s) {
    const auto& sh = shapes[s];
    const double rate = static_cast<double>(sh.info) / sh.n;
    CodecFixture base;
    base.block_length = sh.n;
    base.info_length = sh.info;
    base.crc_length = sh.crc;
    base.design_snr_db = 10.0 * std::log10(std::pow(2.0, 2.0 * rate) - 1.0);
    const auto spec = spec_for(base);
    const auto payload_key = root.chain(s);
    for (int v = 0; v < 4; ++v) {
      CodecFixture f = base;
      f.payload.resize(static_cast<std::size_t>(spec.payload_length()));
      if (v > 0) {  // v == 0 keeps the all-zero payload as a degenerate vector
        const auto lane = payload_key.chain(static_cast<std::uint64_t>(v));
        for (std::size_t i = 0; i < f.payload.size(); ++i)
          f.payload[i] = lane.bit(static_cast<std::uint64_t>(i));
      }
      f.codeword = polar_encode(spec, f.payload);
      out.push_back(std::move(f));
    }
  }
  return out;
}

SelftestReport run_codec_selftest(const std::vector<CodecFixture>& fixtures,
                                  double llr_magnitude) {
  SelftestReport rep;
  for (const auto& f : fixtures) {
    ++rep.total;
    const auto spec = spec_for(f);
    if (polar_encode(spec, f.payload) != f.codeword) {
      ++rep.encode_failures;
      continue;
    }
    std::vector<double> llrs(f.codeword.size());
    for (std::size_t i = 0; i < llrs.size(); ++i)
      llrs[i] = f.codeword[i] ? -llr_magnitude : llr_magnitude;
    const auto dec = polar_decode(spec, llrs);
    if (!dec.crc_pass || dec.payload != f.payload) ++rep.decode_failures;
  }
  return rep;
}

}  // namespace rsma
