// Copyright 2026 The sepasr Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "sepasr/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace sepasr {

namespace {

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
}

void put_tag(std::vector<unsigned char>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

}  // namespace

Waveform read_wav(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(Error::Kind::Io, "cannot open wav file: ", path);
  std::vector<unsigned char> data((std::istreambuf_iterator<char>(is)),
                                  std::istreambuf_iterator<char>());
  if (data.size() < 12 || std::memcmp(data.data(), "RIFF", 4) != 0 ||
      std::memcmp(data.data() + 8, "WAVE", 4) != 0) {
    fail(Error::Kind::Io, "corrupt wav header (not RIFF/WAVE): ", path);
  }

  // Chunk walk: find fmt and data.
  std::size_t pos = 12;
  bool have_fmt = false;
  std::uint16_t channels = 0, bits = 0, format = 0;
  std::uint32_t rate = 0;
  const unsigned char* pcm = nullptr;
  std::size_t pcm_bytes = 0;
  while (pos + 8 <= data.size()) {
    const unsigned char* hdr = data.data() + pos;
    const std::uint32_t chunk_size = read_u32(hdr + 4);
    const std::size_t body = pos + 8;
    if (body + chunk_size > data.size()) {
      fail(Error::Kind::Io, "corrupt wav header (truncated chunk): ", path);
    }
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (chunk_size < 16) fail(Error::Kind::Io, "corrupt wav header (short fmt): ", path);
      format = read_u16(data.data() + body);
      channels = read_u16(data.data() + body + 2);
      rate = read_u32(data.data() + body + 4);
      bits = read_u16(data.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      pcm = data.data() + body;
      pcm_bytes = chunk_size;
    }
    pos = body + chunk_size + (chunk_size & 1);  // chunks are word-aligned
  }
  if (!have_fmt || pcm == nullptr) {
    fail(Error::Kind::Io, "corrupt wav header (missing fmt or data chunk): ", path);
  }
  if (format != 1 || bits != 16) {
    fail(Error::Kind::Io, "unsupported wav encoding in ", path, ": format=", format,
         " bits=", bits, " (need 16-bit PCM)");
  }
  if (channels != 1) {
    fail(Error::Kind::Io, "unsupported channel count in ", path, ": ", channels, " (need mono)");
  }

  Waveform wav;
  wav.sample_rate = static_cast<int>(rate);
  const std::size_t n = pcm_bytes / 2;
  wav.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::int16_t s = static_cast<std::int16_t>(pcm[2 * i] | (pcm[2 * i + 1] << 8));
    wav.samples[i] = static_cast<double>(s) / 32768.0;
  }
  return wav;
}

void write_wav(const std::string& path, const Waveform& wav) {
  if (wav.sample_rate <= 0) {
    fail(Error::Kind::Usage, "write_wav: sample rate must be positive, got ", wav.sample_rate);
  }
  const std::uint32_t n = static_cast<std::uint32_t>(wav.samples.size());
  std::vector<unsigned char> out;
  out.reserve(44 + 2 * n);
  put_tag(out, "RIFF");
  put_u32(out, 36 + 2 * n);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(wav.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(wav.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, 2 * n);
  for (double v : wav.samples) {
    const double clamped = std::min(1.0, std::max(-1.0, v));
    int q = static_cast<int>(std::lrint(clamped * 32768.0));
    q = std::min(32767, std::max(-32768, q));
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(Error::Kind::Io, "cannot open wav file for writing: ", path);
  os.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!os) fail(Error::Kind::Io, "write failed for wav file: ", path);
}

double power(const std::vector<double>& samples, std::int64_t begin, std::int64_t end) {
  begin = std::max<std::int64_t>(begin, 0);
  end = std::min<std::int64_t>(end, static_cast<std::int64_t>(samples.size()));
  if (end <= begin) return 0.0;
  double acc = 0.0;
  for (std::int64_t i = begin; i < end; ++i) acc += samples[i] * samples[i];
  return acc / static_cast<double>(end - begin);
}

}  // namespace sepasr
