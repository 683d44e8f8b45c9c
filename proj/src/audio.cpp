#include "gesture/audio.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <mutex>
#include <numbers>
#include <sstream>

#include "gesture/common.hpp"
#include "gesture/csv.hpp"

namespace gesture {

namespace {

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) | (static_cast<std::uint32_t>(b[at + 3]) << 24);
}
std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}
bool tag_is(std::span<const std::uint8_t> b, std::size_t at, const char* tag) {
  return std::memcmp(b.data() + at, tag, 4) == 0;
}

int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

// Hann (symmetric) window.
std::vector<double> hann(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  if (n == 1) {
    w[0] = 1.0;
    return w;
  }
  for (int i = 0; i < n; ++i) {
    w[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / (n - 1));
  }
  return w;
}

// Triangular filters over FFT bins; rows = filters, cols = nfft/2 + 1.
Eigen::MatrixXd mel_filterbank(int n_mels, int nfft, int sample_rate) {
  const int bins = nfft / 2 + 1;
  const double nyquist = sample_rate / 2.0;
  const double mel_max = hz_to_mel(nyquist);
  std::vector<double> edges(static_cast<std::size_t>(n_mels + 2));
  for (int i = 0; i < n_mels + 2; ++i) edges[static_cast<std::size_t>(i)] = mel_to_hz(mel_max * i / (n_mels + 1));
  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(n_mels, bins);
  for (int m = 0; m < n_mels; ++m) {
    const double lo = edges[static_cast<std::size_t>(m)];
    const double mid = edges[static_cast<std::size_t>(m + 1)];
    const double hi = edges[static_cast<std::size_t>(m + 2)];
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / nfft;
      double w = 0.0;
      if (f >= lo && f <= mid) {
        w = (f - lo) / (mid - lo);
      } else if (f > mid && f <= hi) {
        w = (hi - f) / (hi - mid);
      }
      fb(m, k) = w;
    }
  }
  return fb;
}

}  // namespace

bool supported_sample_rate(int rate) {
  return rate == 16000 || rate == 22050 || rate == 44100 || rate == 48000;
}

AudioBuffer parse_wav(std::span<const std::uint8_t> bytes, std::string clip_id) {
  if (bytes.size() < 12 || !tag_is(bytes, 0, "RIFF") || !tag_is(bytes, 8, "WAVE")) {
    throw Error(ErrorCode::WavTruncated, "not a RIFF/WAVE file (truncated or missing header)");
  }
  int format = -1;
  int channels = 0;
  int rate = 0;
  int bits = 0;
  int block_align = 0;
  bool have_fmt = false;
  std::span<const std::uint8_t> data;
  bool have_data = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t size = read_u32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (size > bytes.size() - body) {
      throw Error(ErrorCode::WavTruncated, "chunk '" + std::string(reinterpret_cast<const char*>(bytes.data() + pos), 4) +
                                               "' declares " + std::to_string(size) + " bytes past end of file");
    }
    if (tag_is(bytes, pos, "fmt ")) {
      if (size < 16) throw Error(ErrorCode::WavTruncated, "fmt chunk too short");
      format = read_u16(bytes, body);
      channels = read_u16(bytes, body + 2);
      rate = static_cast<int>(read_u32(bytes, body + 4));
      block_align = read_u16(bytes, body + 12);
      bits = read_u16(bytes, body + 14);
      if (format == 0xFFFE) {
        if (size < 40) throw Error(ErrorCode::WavTruncated, "extensible fmt chunk too short");
        format = read_u16(bytes, body + 24);
      }
      have_fmt = true;
    } else if (tag_is(bytes, pos, "data")) {
      data = bytes.subspan(body, size);
      have_data = true;
    }
    pos = body + size + (size & 1U);
  }
  if (!have_fmt || !have_data) throw Error(ErrorCode::WavTruncated, "missing fmt or data chunk");
  const bool pcm16 = format == 1 && bits == 16;
  const bool float32 = format == 3 && bits == 32;
  if (!pcm16 && !float32) {
    throw Error(ErrorCode::WavUnsupportedEncoding,
                "unsupported encoding (format " + std::to_string(format) + ", " + std::to_string(bits) +
                    " bits); expected PCM16 or float32");
  }
  if (channels < 1 || channels > 2) {
    throw Error(ErrorCode::WavUnsupportedEncoding, "unsupported channel count " + std::to_string(channels));
  }
  if (!supported_sample_rate(rate)) {
    throw Error(ErrorCode::WavUnsupportedEncoding, "unsupported sample rate " + std::to_string(rate));
  }
  const int bytes_per_sample = bits / 8;
  if (block_align != bytes_per_sample * channels) {
    throw Error(ErrorCode::WavUnsupportedEncoding, "inconsistent block alignment");
  }
  if (data.empty()) throw Error(ErrorCode::WavEmpty, "data chunk is empty");
  if (data.size() % static_cast<std::size_t>(block_align) != 0) {
    throw Error(ErrorCode::WavTruncated, "data chunk ends mid-frame");
  }
  const std::size_t n = data.size() / static_cast<std::size_t>(block_align);
  AudioBuffer out;
  out.clip_id = std::move(clip_id);
  out.sample_rate = rate;
  out.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int c = 0; c < channels; ++c) {
      const std::size_t at = i * static_cast<std::size_t>(block_align) + static_cast<std::size_t>(c * bytes_per_sample);
      double v;
      if (pcm16) {
        v = static_cast<std::int16_t>(read_u16(data, at)) / 32768.0;
      } else {
        float f;
        const std::uint32_t u = read_u32(data, at);
        std::memcpy(&f, &u, 4);
        if (!std::isfinite(f)) throw Error(ErrorCode::WavUnsupportedEncoding, "non-finite float sample");
        v = std::clamp(static_cast<double>(f), -1.0, 1.0);
      }
      acc += v;
    }
    out.samples[i] = acc / channels;
  }
  const auto window = static_cast<std::size_t>(std::lround(constants::kMfccWindowSeconds * rate));
  if (n < window) {
    throw Error(ErrorCode::AudioTooShort, "audio has " + std::to_string(n) +
                                              " samples, shorter than one analysis window");
  }
  return out;
}

std::vector<std::uint8_t> encode_wav_pcm16(const AudioBuffer& audio) {
  std::vector<std::uint8_t> out;
  const auto data_bytes = static_cast<std::uint32_t>(audio.samples.size() * 2);
  out.reserve(44 + data_bytes);
  for (char c : std::string_view("RIFF")) out.push_back(static_cast<std::uint8_t>(c));
  put_u32(out, 36 + data_bytes);
  for (char c : std::string_view("WAVEfmt ")) out.push_back(static_cast<std::uint8_t>(c));
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(audio.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(audio.sample_rate * 2));
  put_u16(out, 2);
  put_u16(out, 16);
  for (char c : std::string_view("data")) out.push_back(static_cast<std::uint8_t>(c));
  put_u32(out, data_bytes);
  for (double s : audio.samples) {
    const double scaled = std::round(std::clamp(s, -1.0, 1.0) * 32768.0);
    const auto v = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    put_u16(out, static_cast<std::uint16_t>(v));
  }
  return out;
}

FrameLayout frame_layout(std::size_t n_samples, int sample_rate, double window_s, double hop_s) {
  FrameLayout layout;
  layout.window = static_cast<int>(std::lround(window_s * sample_rate));
  for (std::size_t t = 0;; ++t) {
    const auto start = static_cast<std::size_t>(std::llround(static_cast<double>(t) * hop_s * sample_rate));
    if (start + static_cast<std::size_t>(layout.window) > n_samples) break;
    layout.starts.push_back(start);
  }
  layout.frames = static_cast<int>(layout.starts.size());
  return layout;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

FeatureRows mfcc(const AudioBuffer& audio, const MfccOptions& options) {
  const FrameLayout layout = frame_layout(audio.samples.size(), audio.sample_rate, options.window_s, options.hop_s);
  if (layout.frames < 1) throw Error(ErrorCode::AudioTooShort, "audio shorter than one MFCC window");
  const int nfft = next_pow2(layout.window);
  const int bins = nfft / 2 + 1;
  const std::vector<double> window = hann(layout.window);
  const Eigen::MatrixXd fb = mel_filterbank(options.n_mels, nfft, audio.sample_rate);

  Eigen::MatrixXd dct(options.n_coeffs, options.n_mels);
  const double norm = std::sqrt(2.0 / options.n_mels);
  for (int k = 0; k < options.n_coeffs; ++k) {
    for (int m = 0; m < options.n_mels; ++m) {
      dct(k, m) = norm * std::cos(std::numbers::pi * (k + 1) * (m + 0.5) / options.n_mels);
    }
  }

  double* in = fftw_alloc_real(static_cast<std::size_t>(nfft));
  fftw_complex* out = fftw_alloc_complex(static_cast<std::size_t>(bins));
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_r2c_1d(nfft, in, out, FFTW_ESTIMATE);
  }
  FeatureRows result(layout.frames, options.n_coeffs);
  Eigen::VectorXd mag(bins);
  for (int t = 0; t < layout.frames; ++t) {
    const std::size_t start = layout.starts[static_cast<std::size_t>(t)];
    for (int i = 0; i < nfft; ++i) {
      in[i] = i < layout.window ? audio.samples[start + static_cast<std::size_t>(i)] * window[static_cast<std::size_t>(i)]
                                : 0.0;
    }
    fftw_execute(plan);
    for (int k = 0; k < bins; ++k) mag[k] = std::hypot(out[k][0], out[k][1]);
    Eigen::VectorXd logmel = fb * mag;
    for (int m = 0; m < options.n_mels; ++m) logmel[m] = std::log(std::max(logmel[m], options.log_floor));
    result.row(t) = (dct * logmel).transpose();
  }
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(out);
  return result;
}

std::vector<double> central_difference(std::span<const double> x, double dt) {
  const std::size_t n = x.size();
  std::vector<double> d(n, 0.0);
  if (n < 2) return d;
  d[0] = (x[1] - x[0]) / dt;
  d[n - 1] = (x[n - 1] - x[n - 2]) / dt;
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (x[i + 1] - x[i - 1]) / (2.0 * dt);
  return d;
}

PitchTrack f0_with_derivatives(const AudioBuffer& audio, const PitchOptions& options) {
  const int rate = audio.sample_rate;
  const auto win = static_cast<std::size_t>(std::lround(options.window_s * rate));
  const std::size_t n = audio.samples.size();
  if (n < win) throw Error(ErrorCode::AudioTooShort, "audio shorter than one pitch window");
  const FrameLayout layout = frame_layout(n, rate, constants::kMfccWindowSeconds, options.hop_s);
  const auto min_lag = static_cast<std::size_t>(std::floor(rate / options.max_hz));
  const auto max_lag = std::min<std::size_t>(static_cast<std::size_t>(std::ceil(rate / options.min_hz)), win - 2);

  PitchTrack track;
  track.f0.assign(static_cast<std::size_t>(layout.frames), 0.0);
  track.peak.assign(static_cast<std::size_t>(layout.frames), 0.0);
  std::vector<double> frame(win);
  std::vector<double> energy(win + 1);
  std::vector<double> r(max_lag + 2, 0.0);
  for (int t = 0; t < layout.frames; ++t) {
    const double centre = static_cast<double>(layout.starts[static_cast<std::size_t>(t)]) + layout.window / 2.0;
    const auto raw_start = static_cast<long long>(std::llround(centre - static_cast<double>(win) / 2.0));
    const auto start = static_cast<std::size_t>(std::clamp<long long>(raw_start, 0, static_cast<long long>(n - win)));
    double mean = 0.0;
    for (std::size_t i = 0; i < win; ++i) mean += audio.samples[start + i];
    mean /= static_cast<double>(win);
    for (std::size_t i = 0; i < win; ++i) frame[i] = audio.samples[start + i] - mean;

    std::fill(r.begin(), r.end(), 0.0);
    energy[0] = 0.0;
    for (std::size_t i = 0; i < win; ++i) energy[i + 1] = energy[i] + frame[i] * frame[i];
    double best = 0.0;
    for (std::size_t lag = min_lag - 1; lag <= max_lag + 1; ++lag) {
      double xy = 0.0;
      for (std::size_t i = 0; i + lag < win; ++i) xy += frame[i] * frame[i + lag];
      const double xx = energy[win - lag];
      const double yy = energy[win] - energy[lag];
      const double denom = std::sqrt(xx * yy);
      r[lag] = denom > 0.0 ? xy / denom : 0.0;
      if (lag >= min_lag && lag <= max_lag) best = std::max(best, r[lag]);
    }
    track.peak[static_cast<std::size_t>(t)] = best;
    if (best < options.voicing_threshold) continue;
    // First local maximum close to the best peak guards against octave errors.
    std::size_t pick = 0;
    for (std::size_t lag = min_lag; lag <= max_lag; ++lag) {
      if (r[lag] >= options.octave_guard * best && r[lag] >= r[lag - 1] && r[lag] >= r[lag + 1]) {
        pick = lag;
        break;
      }
    }
    if (pick == 0) continue;
    const double a = r[pick - 1];
    const double b = r[pick];
    const double c = r[pick + 1];
    const double curvature = a - 2.0 * b + c;
    const double shift = curvature != 0.0 ? std::clamp(0.5 * (a - c) / curvature, -0.5, 0.5) : 0.0;
    track.f0[static_cast<std::size_t>(t)] = rate / (static_cast<double>(pick) + shift);
  }

  // Unvoiced frames hold the previous voiced value (leading ones the first).
  std::vector<double> held(track.f0.size(), 0.0);
  double last = 0.0;
  auto first_voiced = std::find_if(track.f0.begin(), track.f0.end(), [](double v) { return v > 0.0; });
  if (first_voiced != track.f0.end()) last = *first_voiced;
  for (std::size_t i = 0; i < held.size(); ++i) {
    if (track.f0[i] > 0.0) last = track.f0[i];
    held[i] = last;
  }
  track.delta = central_difference(held, options.hop_s);
  track.delta2 = central_difference(track.delta, options.hop_s);
  return track;
}

std::vector<double> log_energy(const AudioBuffer& audio, double log_floor) {
  const FrameLayout layout = frame_layout(audio.samples.size(), audio.sample_rate);
  std::vector<double> e(static_cast<std::size_t>(layout.frames));
  for (int t = 0; t < layout.frames; ++t) {
    double acc = 0.0;
    const std::size_t start = layout.starts[static_cast<std::size_t>(t)];
    for (int i = 0; i < layout.window; ++i) {
      const double s = audio.samples[start + static_cast<std::size_t>(i)];
      acc += s * s;
    }
    e[static_cast<std::size_t>(t)] = std::log(std::max(acc, log_floor));
  }
  return e;
}

FeatureSet parse_feature_set(std::string_view tag) {
  if (tag == "mfcc_pitch_energy") return FeatureSet::MfccPitchEnergy;
  if (tag == "external_precomputed") return FeatureSet::ExternalPrecomputed;
  if (tag == "length_only") return FeatureSet::LengthOnly;
  throw Error(ErrorCode::UnknownFeatureSet, "unknown feature set '" + std::string(tag) +
                                                "' (expected mfcc_pitch_energy, external_precomputed or length_only)");
}

std::string_view to_string(FeatureSet set) {
  switch (set) {
    case FeatureSet::MfccPitchEnergy: return "mfcc_pitch_energy";
    case FeatureSet::ExternalPrecomputed: return "external_precomputed";
    case FeatureSet::LengthOnly: return "length_only";
  }
  return "?";
}

const std::vector<std::string>& builtin_feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (int i = 1; i <= constants::kMfccCoeffs; ++i) v.push_back("mfcc_" + std::to_string(i));
    v.insert(v.end(), {"f0", "f0_delta", "f0_delta2", "log_energy"});
    return v;
  }();
  return names;
}

FeatureMatrix assemble_features(const AudioBuffer& audio, FeatureSet set, std::string_view external_csv) {
  const FrameLayout layout = frame_layout(audio.samples.size(), audio.sample_rate);
  FeatureMatrix out;
  out.clip_id = audio.clip_id;
  if (set == FeatureSet::MfccPitchEnergy) {
    const FeatureRows cep = mfcc(audio);
    const PitchTrack pitch = f0_with_derivatives(audio);
    const std::vector<double> energy = log_energy(audio);
    const int frames = static_cast<int>(cep.rows());
    out.frame_features.resize(frames, 16);
    out.frame_features.leftCols(constants::kMfccCoeffs) = cep;
    for (int t = 0; t < frames; ++t) {
      const auto i = static_cast<std::size_t>(t);
      out.frame_features(t, 12) = pitch.f0[i];
      out.frame_features(t, 13) = pitch.delta[i];
      out.frame_features(t, 14) = pitch.delta2[i];
      out.frame_features(t, 15) = energy[i];
    }
    out.feature_names = builtin_feature_names();
    out.valid_len = frames;
    return out;
  }
  if (set == FeatureSet::ExternalPrecomputed) {
    const csv::Table table = csv::parse(external_csv);
    if (table.header.empty()) throw Error(ErrorCode::FeatureFrameMismatch, "external feature file has no header");
    if (static_cast<int>(table.rows.size()) != layout.frames) {
      throw Error(ErrorCode::FeatureFrameMismatch,
                  "external feature file for clip '" + audio.clip_id + "' has " + std::to_string(table.rows.size()) +
                      " rows, audio yields " + std::to_string(layout.frames) + " frames");
    }
    const auto dims = static_cast<int>(table.header.size());
    out.frame_features.resize(layout.frames, dims);
    for (int t = 0; t < layout.frames; ++t) {
      const auto& row = table.rows[static_cast<std::size_t>(t)];
      if (static_cast<int>(row.size()) != dims) {
        throw Error(ErrorCode::FeatureFrameMismatch,
                    "external feature file line " + std::to_string(table.lines[static_cast<std::size_t>(t)]) +
                        ": expected " + std::to_string(dims) + " columns");
      }
      for (int d = 0; d < dims; ++d) {
        out.frame_features(t, d) = csv::to_double(row[static_cast<std::size_t>(d)],
                                                  table.lines[static_cast<std::size_t>(t)], "feature value");
      }
    }
    out.feature_names = table.header;
    out.valid_len = layout.frames;
    return out;
  }
  // Length-only features are built per window, not per clip.
  out.frame_features = FeatureRows::Ones(layout.frames, 1);
  out.feature_names = {"speech_present"};
  out.valid_len = layout.frames;
  return out;
}

FeatureMatrix length_only_features(int valid_len, int total_len) {
  if (valid_len <= 0 || valid_len > total_len) {
    throw Error(ErrorCode::OutOfRange, "valid_len " + std::to_string(valid_len) + " outside (0, " +
                                           std::to_string(total_len) + "]");
  }
  FeatureMatrix m;
  m.frame_features = FeatureRows::Zero(total_len, 1);
  m.frame_features.topRows(valid_len).setOnes();
  m.feature_names = {"speech_present"};
  m.valid_len = valid_len;
  return m;
}

FeatureStandardizer FeatureStandardizer::fit(std::span<const FeatureMatrix* const> training) {
  FeatureStandardizer s;
  if (training.empty()) return s;
  const int dims = training.front()->dims();
  std::vector<double> sum(static_cast<std::size_t>(dims), 0.0);
  double count = 0.0;
  for (const FeatureMatrix* m : training) {
    for (int t = 0; t < m->valid_len; ++t) {
      for (int d = 0; d < dims; ++d) sum[static_cast<std::size_t>(d)] += m->frame_features(t, d);
    }
    count += m->valid_len;
  }
  s.mean.resize(static_cast<std::size_t>(dims));
  s.scale.resize(static_cast<std::size_t>(dims));
  for (int d = 0; d < dims; ++d) s.mean[static_cast<std::size_t>(d)] = count > 0 ? sum[static_cast<std::size_t>(d)] / count : 0.0;
  std::vector<double> sq(static_cast<std::size_t>(dims), 0.0);
  for (const FeatureMatrix* m : training) {
    for (int t = 0; t < m->valid_len; ++t) {
      for (int d = 0; d < dims; ++d) {
        const double c = m->frame_features(t, d) - s.mean[static_cast<std::size_t>(d)];
        sq[static_cast<std::size_t>(d)] += c * c;
      }
    }
  }
  for (int d = 0; d < dims; ++d) {
    const double sd = count > 0 ? std::sqrt(sq[static_cast<std::size_t>(d)] / count) : 0.0;
    s.scale[static_cast<std::size_t>(d)] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

void FeatureStandardizer::apply(FeatureMatrix& m) const {
  if (static_cast<int>(mean.size()) != m.dims()) {
    throw Error(ErrorCode::ShapeMismatch, "standardizer has " + std::to_string(mean.size()) +
                                              " dims, features have " + std::to_string(m.dims()));
  }
  for (int t = 0; t < m.valid_len; ++t) {
    for (int d = 0; d < m.dims(); ++d) {
      m.frame_features(t, d) = (m.frame_features(t, d) - mean[static_cast<std::size_t>(d)]) /
                               scale[static_cast<std::size_t>(d)];
    }
  }
}

std::string write_feature_cache(const FeatureMatrix& m) {
  std::ostringstream out;
  out << "# clip_id=" << m.clip_id << " valid_len=" << m.valid_len << " hop=" << csv::format_double(m.hop) << "\n";
  for (std::size_t d = 0; d < m.feature_names.size(); ++d) out << (d ? "," : "") << m.feature_names[d];
  out << "\n";
  for (int t = 0; t < m.frames(); ++t) {
    for (int d = 0; d < m.dims(); ++d) out << (d ? "," : "") << csv::format_double(m.frame_features(t, d));
    out << "\n";
  }
  return out.str();
}

FeatureMatrix read_feature_cache(std::string_view text) {
  const std::size_t nl = text.find('\n');
  const std::string_view first = text.substr(0, nl);
  if (first.substr(0, 2) != "# ") throw Error(ErrorCode::Io, "feature cache: missing header line");
  FeatureMatrix m;
  std::istringstream header{std::string(first.substr(2))};
  std::string kv;
  bool have_len = false;
  while (header >> kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = kv.substr(0, eq);
    const std::string value = kv.substr(eq + 1);
    if (key == "clip_id") m.clip_id = value;
    if (key == "valid_len") {
      m.valid_len = std::stoi(value);
      have_len = true;
    }
    if (key == "hop") m.hop = std::stod(value);
  }
  if (!have_len) throw Error(ErrorCode::Io, "feature cache: header lacks valid_len");
  const csv::Table table = csv::parse(text);
  m.feature_names = table.header;
  const auto dims = static_cast<int>(table.header.size());
  m.frame_features.resize(static_cast<int>(table.rows.size()), dims);
  for (std::size_t t = 0; t < table.rows.size(); ++t) {
    if (static_cast<int>(table.rows[t].size()) != dims) {
      throw Error(ErrorCode::Io, "feature cache line " + std::to_string(table.lines[t]) + ": column count mismatch");
    }
    for (int d = 0; d < dims; ++d) {
      m.frame_features(static_cast<int>(t), d) =
          csv::to_double(table.rows[t][static_cast<std::size_t>(d)], table.lines[t], "feature cache");
    }
  }
  return m;
}

}  // namespace gesture
