#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"
#include "ttc/audio.hpp"
#include "ttc/error.hpp"

namespace ttc {
namespace {

TEST(Wav, Pcm16RoundTripWithinQuantization) {
  const auto wave = test::tone(300.0, 0.25, 0.7);
  const auto back = decode_wav(encode_wav(wave, WavEncoding::Pcm16));
  ASSERT_EQ(back.size(), wave.size());
  EXPECT_EQ(back.sample_rate, wave.sample_rate);
  for (std::size_t i = 0; i < wave.size(); ++i) EXPECT_NEAR(back.samples[i], wave.samples[i], 1.0 / 32767);
}

TEST(Wav, Float32RoundTripIsExact) {
  const auto wave = test::white_noise(0.1, 0.9, 3, 22050);
  const auto back = decode_wav(encode_wav(wave, WavEncoding::Float32));
  EXPECT_EQ(back.samples, wave.samples);
  EXPECT_EQ(back.sample_rate, 22050);
}

TEST(Wav, FileRoundTrip) {
  test::TempDir dir;
  const auto wave = test::tone(500.0, 0.05);
  write_wav(dir / "a.wav", wave);
  EXPECT_EQ(read_wav(dir / "a.wav").size(), wave.size());
  EXPECT_THROW(read_wav(dir / "missing.wav"), IoError);
}

TEST(Wav, RejectsGarbage) {
  std::vector<std::uint8_t> junk(64, 7);
  EXPECT_THROW(decode_wav(junk), Error);
}

TEST(Resample, PreservesDurationAndIdentity) {
  const auto wave = test::tone(200.0, 0.5, 0.5, 22050);
  const auto out = resample(wave, 16000);
  EXPECT_EQ(out.sample_rate, 16000);
  EXPECT_NEAR(out.duration_seconds(), wave.duration_seconds(), 1e-3);
  EXPECT_EQ(resample(out, 16000).samples, out.samples);
  EXPECT_THROW(resample(wave, 0), RangeError);
}

TEST(Levels, RmsPeakAndNormalize) {
  auto wave = test::tone(250.0, 1.0, 0.5);
  EXPECT_NEAR(rms(wave.samples), 0.5 / std::sqrt(2.0), 1e-3);
  EXPECT_NEAR(peak(wave.samples), 0.5, 1e-3);
  peak_normalize(wave, -3.0);
  EXPECT_NEAR(peak(wave.samples), db_to_linear(-3.0), 1e-4);

  Waveform silent;
  silent.samples.assign(100, 0.0f);
  peak_normalize(silent, -3.0);
  EXPECT_EQ(peak(silent.samples), 0.0f);
}

TEST(Activity, MaskFollowsFrameEnergy) {
  Waveform w;
  w.samples.assign(16000, 0.0f);
  const auto burst = test::tone(400.0, 0.2, 0.5);
  std::copy(burst.samples.begin(), burst.samples.end(), w.samples.begin() + 8000);
  const auto mask = active_mask(w);
  ASSERT_EQ(mask.size(), w.size());
  EXPECT_FALSE(mask[100]);
  EXPECT_TRUE(mask[9000]);
  EXPECT_FALSE(mask[15900]);
  EXPECT_NEAR(masked_rms(w.samples, mask), 0.5 / std::sqrt(2.0), 0.01);
}

}  // namespace
}  // namespace ttc
