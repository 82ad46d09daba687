#include "ttc/audio.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "ttc/error.hpp"

namespace ttc {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

}  // namespace

Waveform decode_wav(std::span<const std::uint8_t> bytes, const std::string& origin) {
  auto fail = [&](const std::string& why) -> IoError {
    return IoError("unsupported or corrupt WAV '" + origin + "': " + why);
  };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw fail("missing RIFF/WAVE header");
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const std::uint8_t* data = nullptr;
  std::size_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    std::uint32_t len = read_u32(chunk + 4);
    std::size_t body = pos + 8;
    std::size_t avail = std::min<std::size_t>(len, bytes.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (avail < 16) throw fail("short fmt chunk");
      format = read_u16(bytes.data() + body);
      channels = read_u16(bytes.data() + body + 2);
      rate = read_u32(bytes.data() + body + 4);
      bits = read_u16(bytes.data() + body + 14);
      if (format == kFormatExtensible && avail >= 26) {
        format = read_u16(bytes.data() + body + 24);
      }
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_len = avail;
    }
    pos = body + len + (len & 1u);
  }

  if (channels == 0 || rate == 0) throw fail("missing fmt chunk");
  if (data == nullptr) throw fail("missing data chunk");
  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool float32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !float32) {
    throw fail("encoding format=" + std::to_string(format) + " bits=" + std::to_string(bits) +
               " (expected 16-bit PCM or 32-bit float)");
  }

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * channels;
  const std::size_t frames = data_len / frame_bytes;

  Waveform out;
  out.sample_rate = static_cast<int>(rate);
  out.samples.resize(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const std::uint8_t* p = data + f * frame_bytes + c * bytes_per_sample;
      if (pcm16) {
        acc += static_cast<std::int16_t>(read_u16(p)) / 32768.0;
      } else {
        acc += std::bit_cast<float>(read_u32(p));
      }
    }
    out.samples[f] = static_cast<float>(acc / channels);
  }
  return out;
}

Waveform read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open audio file '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_wav(bytes, path.string());
}

std::vector<std::uint8_t> encode_wav(const Waveform& wave, WavEncoding encoding) {
  const std::uint16_t bits = encoding == WavEncoding::Pcm16 ? 16 : 32;
  const std::uint16_t format = encoding == WavEncoding::Pcm16 ? kFormatPcm : kFormatFloat;
  const std::uint32_t data_len = static_cast<std::uint32_t>(wave.samples.size() * (bits / 8));

  std::vector<std::uint8_t> out;
  out.reserve(44 + data_len);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_len);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, format);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(wave.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(wave.sample_rate) * (bits / 8));
  put_u16(out, bits / 8);
  put_u16(out, bits);
  put_tag(out, "data");
  put_u32(out, data_len);
  for (float s : wave.samples) {
    if (encoding == WavEncoding::Pcm16) {
      double clipped = std::clamp(static_cast<double>(s), -1.0, 1.0);
      auto q = static_cast<std::int16_t>(std::lround(clipped * 32767.0));
      put_u16(out, static_cast<std::uint16_t>(q));
    } else {
      put_u32(out, std::bit_cast<std::uint32_t>(s));
    }
  }
  return out;
}

void write_wav(const std::filesystem::path& path, const Waveform& wave, WavEncoding encoding) {
  auto bytes = encode_wav(wave, encoding);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write audio file '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Waveform resample(const Waveform& wave, int target_rate) {
  if (target_rate <= 0) throw RangeError("resample: target rate must be positive");
  if (wave.sample_rate == target_rate || wave.samples.empty()) {
    Waveform copy = wave;
    copy.sample_rate = target_rate;
    return copy;
  }
  const double ratio = static_cast<double>(wave.sample_rate) / target_rate;
  const auto n_out = static_cast<std::size_t>(
      std::max<double>(1.0, std::floor(wave.samples.size() / ratio)));
  Waveform out;
  out.sample_rate = target_rate;
  out.samples.resize(n_out);
  const std::size_t last = wave.samples.size() - 1;
  for (std::size_t i = 0; i < n_out; ++i) {
    double src = i * ratio;
    auto i0 = static_cast<std::size_t>(src);
    if (i0 >= last) {
      out.samples[i] = wave.samples[last];
      continue;
    }
    double frac = src - static_cast<double>(i0);
    out.samples[i] = static_cast<float>(wave.samples[i0] * (1.0 - frac) + wave.samples[i0 + 1] * frac);
  }
  return out;
}

double rms(std::span<const float> samples) noexcept {
  if (samples.empty()) return 0.0;
  double acc = 0.0;
  for (float s : samples) acc += static_cast<double>(s) * s;
  return std::sqrt(acc / static_cast<double>(samples.size()));
}

float peak(std::span<const float> samples) noexcept {
  float p = 0.0f;
  for (float s : samples) p = std::max(p, std::fabs(s));
  return p;
}

void peak_normalize(Waveform& wave, double headroom_dbfs) {
  const float p = peak(wave.samples);
  if (p <= 0.0f) return;
  const double gain = db_to_linear(headroom_dbfs) / p;
  for (float& s : wave.samples) s = static_cast<float>(s * gain);
}

std::vector<bool> active_mask(const Waveform& wave, const ActivityOptions& opts) {
  std::vector<bool> mask(wave.samples.size(), false);
  const auto frame = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(opts.frame_ms * wave.sample_rate / 1000.0)));
  const double threshold = db_to_linear(opts.threshold_dbfs);
  for (std::size_t start = 0; start < wave.samples.size(); start += frame) {
    const std::size_t len = std::min(frame, wave.samples.size() - start);
    const double level = rms(std::span<const float>(wave.samples).subspan(start, len));
    if (level > threshold) std::fill_n(mask.begin() + static_cast<std::ptrdiff_t>(start), len, true);
  }
  return mask;
}

double masked_rms(std::span<const float> samples, const std::vector<bool>& mask) noexcept {
  double acc = 0.0;
  std::size_t count = 0;
  const std::size_t n = std::min(samples.size(), mask.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    acc += static_cast<double>(samples[i]) * samples[i];
    ++count;
  }
  return count == 0 ? 0.0 : std::sqrt(acc / static_cast<double>(count));
}

}  // namespace ttc
