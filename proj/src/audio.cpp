#include "tabla/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>

#include "tabla/error.hpp"
#include "tabla/fsutil.hpp"

namespace tabla {

namespace {

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::string& s, std::uint32_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
  s.push_back(static_cast<char>((v >> 16) & 0xff));
  s.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_u16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;

}  // namespace

AudioClip load_wav(const std::filesystem::path& path) {
  const std::string raw = read_file(path);
  const auto* p = reinterpret_cast<const unsigned char*>(raw.data());
  const std::size_t n = raw.size();

  if (n < 12 || std::memcmp(p, "RIFF", 4) != 0)
    throw Error("'" + path.string() + "': missing RIFF chunk id");
  if (std::memcmp(p + 8, "WAVE", 4) != 0)
    throw Error("'" + path.string() + "': RIFF form type is not WAVE");

  std::uint16_t format_tag = 0, channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  bool have_fmt = false;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;

  std::size_t off = 12;
  while (off + 8 <= n) {
    const char* id = raw.data() + off;
    const std::uint32_t len = read_u32(p + off + 4);
    const std::size_t body = off + 8;
    if (body + len > n) throw Error("'" + path.string() + "': chunk '" + std::string(id, 4) + "' overruns file");
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (len < 16) throw Error("'" + path.string() + "': fmt chunk too short");
      format_tag = read_u16(p + body);
      channels = read_u16(p + body + 2);
      sample_rate = read_u32(p + body + 4);
      bits = read_u16(p + body + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data = p + body;
      data_len = len;
    }
    off = body + len + (len & 1);  // chunks are word-aligned
  }

  if (!have_fmt) throw Error("'" + path.string() + "': no fmt chunk");
  if (!data) throw Error("'" + path.string() + "': no data chunk");
  if (format_tag != kFormatPcm && format_tag != kFormatFloat)
    throw Error("'" + path.string() + "': unsupported wFormatTag " + std::to_string(format_tag) +
                " (only PCM=1 and IEEE float=3)");
  if (channels < 1 || channels > 2)
    throw Error("'" + path.string() + "': unsupported nChannels " + std::to_string(channels));
  if (sample_rate == 0) throw Error("'" + path.string() + "': nSamplesPerSec is zero");
  if (format_tag == kFormatPcm && bits != 16)
    throw Error("'" + path.string() + "': unsupported wBitsPerSample " + std::to_string(bits) +
                " for PCM (only 16)");
  if (format_tag == kFormatFloat && bits != 32)
    throw Error("'" + path.string() + "': unsupported wBitsPerSample " + std::to_string(bits) +
                " for float (only 32)");

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frame_size = bytes_per_sample * channels;
  const std::size_t frames = data_len / frame_size;

  AudioClip clip;
  clip.sample_rate = static_cast<int>(sample_rate);
  clip.source_path = path.string();
  clip.samples.resize(frames);

  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::uint16_t c = 0; c < channels; ++c) {
      const unsigned char* sp = data + i * frame_size + c * bytes_per_sample;
      if (format_tag == kFormatPcm) {
        const auto v = static_cast<std::int16_t>(read_u16(sp));
        acc += static_cast<double>(v) / 32768.0;
      } else {
        std::uint32_t u = read_u32(sp);
        float f;
        std::memcpy(&f, &u, sizeof f);
        acc += static_cast<double>(f);
      }
    }
    clip.samples[i] = acc / channels;
  }
  return clip;
}

void save_wav(const AudioClip& clip, const std::filesystem::path& path, WavFormat format) {
  if (clip.sample_rate <= 0) throw Error("save_wav: clip has no sample rate");
  const bool f32 = format == WavFormat::Float32;
  const std::uint16_t bits = f32 ? 32 : 16;
  const std::uint32_t byte_count = static_cast<std::uint32_t>(clip.samples.size() * bits / 8);

  std::string out;
  out.reserve(44 + byte_count);
  out += "RIFF";
  put_u32(out, 36 + byte_count);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, f32 ? kFormatFloat : kFormatPcm);
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate) * bits / 8);
  put_u16(out, bits / 8);
  put_u16(out, bits);
  out += "data";
  put_u32(out, byte_count);

  for (double s : clip.samples) {
    if (f32) {
      const float f = static_cast<float>(s);
      std::uint32_t u;
      std::memcpy(&u, &f, sizeof u);
      put_u32(out, u);
    } else {
      const double clamped = std::clamp(s, -1.0, 1.0);
      const auto v = static_cast<std::int16_t>(std::lrint(clamped * 32767.0));
      put_u16(out, static_cast<std::uint16_t>(v));
    }
  }
  write_file_atomic(path, out);
}

namespace {

constexpr int kHalfTaps = 32;  // 64-tap kernel

// Kaiser window, beta 8.6; ~ -90 dB stopband
double bessel_i0(double x) {
  double sum = 1.0, term = 1.0;
  for (int k = 1; k < 32; ++k) {
    term *= (x / (2.0 * k)) * (x / (2.0 * k));
    sum += term;
    if (term < 1e-18 * sum) break;
  }
  return sum;
}

double kaiser(double frac) {  // frac in [-1, 1]
  constexpr double beta = 8.6;
  const double t = 1.0 - frac * frac;
  if (t <= 0.0) return 0.0;
  return bessel_i0(beta * std::sqrt(t)) / bessel_i0(beta);
}

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

// One output sample at fractional source position t, cutoff fc in
// cycles per source sample. Kernel weights are renormalized to unity
// DC gain, which flattens passband ripple.
double sinc_interp(const std::vector<double>& x, double t, double fc) {
  const auto n = static_cast<long>(x.size());
  const long center = static_cast<long>(std::floor(t));
  double acc = 0.0, wsum = 0.0;
  for (long k = center - kHalfTaps + 1; k <= center + kHalfTaps; ++k) {
    const double d = t - static_cast<double>(k);
    const double w = 2.0 * fc * sinc(2.0 * fc * d) * kaiser(d / kHalfTaps);
    wsum += w;
    if (k >= 0 && k < n) acc += w * x[static_cast<std::size_t>(k)];
  }
  return wsum != 0.0 ? acc / wsum : 0.0;
}

std::vector<double> resample_ratio(const std::vector<double>& in, double ratio, std::size_t n_out) {
  // ratio = source samples per output sample
  const double fc = 0.5 * std::min(1.0, 1.0 / ratio) * 0.93;
  std::vector<double> out(n_out);
  for (std::size_t i = 0; i < n_out; ++i)
    out[i] = sinc_interp(in, static_cast<double>(i) * ratio, fc);
  return out;
}

}  // namespace

AudioClip resample(const AudioClip& clip, int target_rate) {
  if (target_rate <= 0) throw Error("resample: target_rate must be positive");
  if (clip.sample_rate <= 0) throw Error("resample: clip has no sample rate");
  if (target_rate == clip.sample_rate) return clip;

  const double ratio = static_cast<double>(clip.sample_rate) / target_rate;
  const auto n_out = static_cast<std::size_t>(
      std::llround(static_cast<double>(clip.samples.size()) * target_rate / clip.sample_rate));

  AudioClip out;
  out.sample_rate = target_rate;
  out.source_path = clip.source_path;
  out.samples = resample_ratio(clip.samples, ratio, n_out);
  return out;
}

std::vector<double> resample_to_length(const std::vector<double>& in, std::size_t n_out) {
  if (in.empty() || n_out == 0) return std::vector<double>(n_out, 0.0);
  if (in.size() == n_out) return in;
  const double ratio = static_cast<double>(in.size()) / static_cast<double>(n_out);
  return resample_ratio(in, ratio, n_out);
}

}  // namespace tabla
