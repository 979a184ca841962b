#include "cryocurate/formats.hpp"
#include "doctest.h"
#include "support/fixtures.hpp"

using namespace cryocurate;
using namespace cryocurate::testing;

TEST_CASE("format detection") {
  CHECK(detect_format(read_bytes(fixture_path("mrc/golden_4x4_mode2.mrc")), "x.mrc") == FileFormat::Mrc);
  CHECK(detect_format(read_bytes(fixture_path("npy/f32_3x4.npy")), "x.npy") == FileFormat::Npy);
  const auto star = read_bytes(fixture_path("star/relion_particles.star"));
  CHECK(detect_format(star, "particles.star") == FileFormat::Star);
  CHECK(detect_format(star, "particles.txt") == FileFormat::Opaque);
  // bzip2 stream header as found in *_gain.tiff.bz2 payloads
  CHECK(detect_format(to_bytes("BZh91AY&SY\x01\x02"), "x_gain.tiff.bz2") == FileFormat::Opaque);
  CHECK(detect_format({}, "") == FileFormat::Opaque);
  CHECK(to_string(FileFormat::Opaque) == "OPAQUE");
}

TEST_CASE("decode_image rejects opaque payloads") {
  try {
    decode_image(to_bytes("II*\0"), "frame.tiff");
    FAIL("expected DecodeError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DecodeError);
    CHECK(std::string(e.what()).find("frame.tiff") != std::string::npos);
  }
  CHECK(decode_image(read_bytes(fixture_path("npy/f32_3x4.npy"))).element_count() == 12);
}
