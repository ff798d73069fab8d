// Minimal RIFF/WAVE I/O: PCM 16-bit and IEEE float 32-bit, little-endian.
#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "diasep/tensor.hpp"

namespace diasep {

struct WavData {
  Tensor<double> samples;  // [S,C], values nominally in [-1,1]
  double sample_rate = 0.0;
};

namespace detail {

template <typename T>
T read_le(std::istream& in, const std::string& what) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  check(in.gcount() == sizeof(T), "read_wav: truncated " + what);
  return v;
}

template <typename T>
void write_le(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

}  // namespace detail

inline WavData read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  check(in.good(), "read_wav: cannot open " + path);

  char tag[4];
  in.read(tag, 4);
  check(in.gcount() == 4 && std::memcmp(tag, "RIFF", 4) == 0, "read_wav: not a RIFF file");
  detail::read_le<std::uint32_t>(in, "RIFF size");
  in.read(tag, 4);
  check(in.gcount() == 4 && std::memcmp(tag, "WAVE", 4) == 0, "read_wav: not a WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::vector<char> data;
  bool have_fmt = false, have_data = false;
  while (in.read(tag, 4)) {
    const std::uint32_t size = detail::read_le<std::uint32_t>(in, "chunk size");
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      check(size >= 16, "read_wav: short fmt chunk");
      format = detail::read_le<std::uint16_t>(in, "fmt");
      channels = detail::read_le<std::uint16_t>(in, "channels");
      rate = detail::read_le<std::uint32_t>(in, "rate");
      detail::read_le<std::uint32_t>(in, "byte rate");
      detail::read_le<std::uint16_t>(in, "block align");
      bits = detail::read_le<std::uint16_t>(in, "bits");
      in.ignore(size - 16 + (size & 1));
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      data.resize(size);
      in.read(data.data(), size);
      check(static_cast<std::uint32_t>(in.gcount()) == size, "read_wav: truncated data chunk");
      if (size & 1) in.ignore(1);
      have_data = true;
    } else {
      in.ignore(size + (size & 1));
    }
  }
  check(have_fmt && have_data, "read_wav: missing fmt or data chunk");
  check(channels > 0, "read_wav: zero channels");

  const std::size_t C = channels;
  WavData w;
  w.sample_rate = static_cast<double>(rate);
  if (format == 1 && bits == 16) {
    const std::size_t n = data.size() / 2;
    const std::size_t S = n / C;
    w.samples = Tensor<double>({S, C});
    const std::int16_t* p = reinterpret_cast<const std::int16_t*>(data.data());
    for (std::size_t i = 0; i < S * C; ++i) w.samples[i] = p[i] / 32768.0;
  } else if (format == 3 && bits == 32) {
    const std::size_t n = data.size() / 4;
    const std::size_t S = n / C;
    w.samples = Tensor<double>({S, C});
    const float* p = reinterpret_cast<const float*>(data.data());
    for (std::size_t i = 0; i < S * C; ++i) w.samples[i] = p[i];
  } else {
    fail("read_wav: unsupported format (only PCM16 and IEEE float32)");
  }
  return w;
}

inline void write_wav(const std::string& path, const Tensor<double>& samples,
                      double sample_rate, bool as_float32 = true) {
  check(samples.rank() == 2, "write_wav: samples must be [S,C]");
  const std::size_t S = samples.dim(0), C = samples.dim(1);
  check(C > 0 && C <= 0xFFFF, "write_wav: bad channel count");

  const std::uint16_t bytes_per = as_float32 ? 4 : 2;
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(S * C * bytes_per);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  check(out.good(), "write_wav: cannot open " + path);
  out.write("RIFF", 4);
  detail::write_le<std::uint32_t>(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  detail::write_le<std::uint32_t>(out, 16);
  detail::write_le<std::uint16_t>(out, as_float32 ? 3 : 1);
  detail::write_le<std::uint16_t>(out, static_cast<std::uint16_t>(C));
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(sample_rate));
  detail::write_le<std::uint32_t>(out,
                                  static_cast<std::uint32_t>(sample_rate * C * bytes_per));
  detail::write_le<std::uint16_t>(out, static_cast<std::uint16_t>(C * bytes_per));
  detail::write_le<std::uint16_t>(out, static_cast<std::uint16_t>(8 * bytes_per));
  out.write("data", 4);
  detail::write_le<std::uint32_t>(out, data_bytes);
  if (as_float32) {
    for (std::size_t i = 0; i < S * C; ++i)
      detail::write_le<float>(out, static_cast<float>(samples[i]));
  } else {
    for (std::size_t i = 0; i < S * C; ++i) {
      double v = samples[i] * 32768.0;
      if (v > 32767.0) v = 32767.0;
      if (v < -32768.0) v = -32768.0;
      detail::write_le<std::int16_t>(out, static_cast<std::int16_t>(std::lrint(v)));
    }
  }
  out.flush();
  check(out.good(), "write_wav: I/O failure writing " + path);
}

}  // namespace diasep
