// Copyright 2026 The sepasr Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef SEPASR_AUDIO_HPP
#define SEPASR_AUDIO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "sepasr/common.hpp"

namespace sepasr {

/// 1-D sampled audio. Samples are doubles in [-1, 1] nominal full scale.
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 0;

  std::int64_t size() const { return static_cast<std::int64_t>(samples.size()); }
  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(size()) / sample_rate : 0.0;
  }
};

// 16-bit PCM mono RIFF/WAVE. read_wav rejects other encodings, channel counts
// and corrupt headers with io errors. write_wav clamps to [-1, 1] before
// quantizing; read(write(x)) matches x within one 16-bit quantization step.
Waveform read_wav(const std::string& path);
void write_wav(const std::string& path, const Waveform& wav);

double power(const std::vector<double>& samples, std::int64_t begin, std::int64_t end);

}  // namespace sepasr

#endif  // SEPASR_AUDIO_HPP
