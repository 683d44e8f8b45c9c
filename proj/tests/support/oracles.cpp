#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace oracle {

namespace {

using Mat4 = std::array<double, 16>;  // row-major

Mat4 identity() {
  Mat4 m{};
  m[0] = m[5] = m[10] = m[15] = 1.0;
  return m;
}

Mat4 mul(const Mat4& a, const Mat4& b) {
  Mat4 c{};
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      double s = 0.0;
      for (int k = 0; k < 4; ++k) s += a[i * 4 + k] * b[k * 4 + j];
      c[i * 4 + j] = s;
    }
  }
  return c;
}

Mat4 translate(double x, double y, double z) {
  Mat4 m = identity();
  m[3] = x;
  m[7] = y;
  m[11] = z;
  return m;
}

Mat4 rotate(char axis, double deg) {
  const double r = deg * std::numbers::pi / 180.0;
  const double c = std::cos(r), s = std::sin(r);
  Mat4 m = identity();
  if (axis == 'X') {
    m[5] = c, m[6] = -s, m[9] = s, m[10] = c;
  } else if (axis == 'Y') {
    m[0] = c, m[2] = s, m[8] = -s, m[10] = c;
  } else {
    m[0] = c, m[1] = -s, m[4] = s, m[5] = c;
  }
  return m;
}

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
Vec3 scale(const Vec3& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }
Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
double dist(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

}  // namespace

BvhData read_bvh(const std::string& text) {
  std::istringstream in(text);
  std::string tok;
  BvhData out;
  std::vector<int> stack;
  int pending = -1;
  in >> tok;
  if (tok != "HIERARCHY") throw std::runtime_error("oracle: no HIERARCHY");
  while (in >> tok) {
    if (tok == "ROOT" || tok == "JOINT") {
      BvhNode n;
      in >> n.name;
      n.parent = stack.empty() ? -1 : stack.back();
      out.nodes.push_back(n);
      pending = static_cast<int>(out.nodes.size()) - 1;
    } else if (tok == "End") {
      in >> tok;  // Site
      BvhNode n;
      n.parent = stack.back();
      n.name = out.nodes[static_cast<std::size_t>(n.parent)].name + "_End";
      n.end_site = true;
      out.nodes.push_back(n);
      pending = static_cast<int>(out.nodes.size()) - 1;
    } else if (tok == "{") {
      stack.push_back(pending);
    } else if (tok == "}") {
      stack.pop_back();
    } else if (tok == "OFFSET") {
      auto& n = out.nodes[static_cast<std::size_t>(stack.back())];
      in >> n.offset[0] >> n.offset[1] >> n.offset[2];
    } else if (tok == "CHANNELS") {
      auto& n = out.nodes[static_cast<std::size_t>(stack.back())];
      int k = 0;
      in >> k;
      n.channels.resize(static_cast<std::size_t>(k));
      for (auto& c : n.channels) in >> c;
    } else if (tok == "MOTION") {
      break;
    }
  }
  int frames = 0;
  in >> tok >> frames;       // Frames: N
  in >> tok >> tok >> out.frame_time;  // Frame Time: t
  std::size_t width = 0;
  for (const auto& n : out.nodes) width += n.channels.size();
  for (int f = 0; f < frames; ++f) {
    std::vector<double> row(width);
    for (auto& v : row) in >> v;
    out.frames.push_back(row);
  }
  return out;
}

std::map<std::string, Vec3> matrix_stack_fk(const BvhData& bvh, const std::vector<double>& row, double s) {
  std::vector<Mat4> world(bvh.nodes.size());
  std::map<std::string, Vec3> pos;
  std::size_t c = 0;
  for (std::size_t i = 0; i < bvh.nodes.size(); ++i) {
    const BvhNode& n = bvh.nodes[i];
    double tx = n.offset[0] * s, ty = n.offset[1] * s, tz = n.offset[2] * s;
    Mat4 rot = identity();
    for (const auto& ch : n.channels) {
      const double v = row[c++];
      if (ch == "Xposition") tx += v * s;
      else if (ch == "Yposition") ty += v * s;
      else if (ch == "Zposition") tz += v * s;
      else rot = mul(rot, rotate(ch[0], v));
    }
    const Mat4 local = mul(translate(tx, ty, tz), rot);
    world[i] = n.parent < 0 ? local : mul(world[static_cast<std::size_t>(n.parent)], local);
    pos[n.name] = {world[i][3], world[i][7], world[i][11]};
  }
  return pos;
}

std::vector<std::vector<double>> naive_mfcc(const std::vector<double>& x, int rate, int n_coeffs, int n_mels) {
  const int win = static_cast<int>(std::lround(0.025 * rate));
  int nfft = 1;
  while (nfft < win) nfft *= 2;
  const int bins = nfft / 2 + 1;
  const double pi = std::numbers::pi;

  std::vector<double> hann(static_cast<std::size_t>(win));
  for (int i = 0; i < win; ++i) hann[static_cast<std::size_t>(i)] = 0.5 * (1.0 - std::cos(2.0 * pi * i / (win - 1)));

  auto mel = [](double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); };
  auto hz = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
  const double top = mel(rate / 2.0);
  std::vector<double> edge(static_cast<std::size_t>(n_mels + 2));
  for (int i = 0; i < n_mels + 2; ++i) edge[static_cast<std::size_t>(i)] = hz(top * i / (n_mels + 1));

  std::vector<std::vector<double>> out;
  for (std::size_t start = 0, t = 0;; ++t) {
    start = static_cast<std::size_t>(std::llround(t * 0.010 * rate));
    if (start + static_cast<std::size_t>(win) > x.size()) break;
    std::vector<double> mag(static_cast<std::size_t>(bins));
    for (int k = 0; k < bins; ++k) {
      double re = 0.0, im = 0.0;
      for (int i = 0; i < win; ++i) {
        const double v = x[start + static_cast<std::size_t>(i)] * hann[static_cast<std::size_t>(i)];
        const double ang = 2.0 * pi * static_cast<double>(k) * i / nfft;
        re += v * std::cos(ang);
        im -= v * std::sin(ang);
      }
      mag[static_cast<std::size_t>(k)] = std::sqrt(re * re + im * im);
    }
    std::vector<double> logmel(static_cast<std::size_t>(n_mels));
    for (int m = 0; m < n_mels; ++m) {
      const double lo = edge[static_cast<std::size_t>(m)], mid = edge[static_cast<std::size_t>(m + 1)],
                   hi = edge[static_cast<std::size_t>(m + 2)];
      double e = 0.0;
      for (int k = 0; k < bins; ++k) {
        const double f = static_cast<double>(k) * rate / nfft;
        if (f >= lo && f <= mid) e += mag[static_cast<std::size_t>(k)] * (f - lo) / (mid - lo);
        else if (f > mid && f <= hi) e += mag[static_cast<std::size_t>(k)] * (hi - f) / (hi - mid);
      }
      logmel[static_cast<std::size_t>(m)] = std::log(std::max(e, 1e-10));
    }
    std::vector<double> cep(static_cast<std::size_t>(n_coeffs));
    for (int k = 1; k <= n_coeffs; ++k) {
      double s = 0.0;
      for (int m = 0; m < n_mels; ++m) s += logmel[static_cast<std::size_t>(m)] * std::cos(pi * k * (2 * m + 1) / (2.0 * n_mels));
      cep[static_cast<std::size_t>(k - 1)] = s * std::sqrt(2.0 / n_mels);
    }
    out.push_back(cep);
  }
  return out;
}

double path_length(const std::vector<Vec3>& p) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) s += dist(p[i + 1], p[i]);
  return s;
}

std::vector<Vec3> smooth(const std::vector<Vec3>& p, int window) {
  const long n = static_cast<long>(p.size());
  std::vector<Vec3> out;
  for (long t = 0; t < n; ++t) {
    long h = window / 2;
    while (t - h < 0 || t + h >= n) --h;
    Vec3 acc{};
    for (long k = -h; k <= h; ++k) {
      for (int d = 0; d < 3; ++d) acc[static_cast<std::size_t>(d)] += p[static_cast<std::size_t>(t + k)][static_cast<std::size_t>(d)];
    }
    out.push_back(scale(acc, 1.0 / static_cast<double>(2 * h + 1)));
  }
  return out;
}

std::vector<double> speeds(const std::vector<Vec3>& p, double dt) {
  const auto s = smooth(p);
  std::vector<double> v;
  for (std::size_t i = 1; i < s.size(); ++i) v.push_back(dist(s[i], s[i - 1]) / dt);
  return v;
}

double max_velocity(const std::vector<Vec3>& p, double dt) {
  double best = -1.0;
  for (double v : speeds(p, dt)) best = v > best ? v : best;
  return best;
}

std::size_t first_major_peak(const std::vector<double>& v, double fraction) {
  const std::size_t n = v.size();
  double top = v[0];
  std::size_t arg = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (v[i] > top) top = v[i], arg = i;
  }
  std::vector<std::size_t> peaks;
  for (std::size_t i = 0; i < n; ++i) {
    const double left = i == 0 ? -INFINITY : v[i - 1];
    const double right = i + 1 == n ? -INFINITY : v[i + 1];
    if (v[i] > left && v[i] >= right) peaks.push_back(i);
  }
  for (std::size_t i : peaks) {
    if (v[i] >= fraction * top) return i;
  }
  return arg;
}

double initial_acceleration(const std::vector<Vec3>& p, double dt) {
  const auto v = speeds(p, dt);
  const std::size_t k = first_major_peak(v);
  return k == 0 ? 0.0 : (v[k] - v[0]) / (static_cast<double>(k) * dt);
}

double farthest_pair(const std::vector<Vec3>& p) {
  double best = 0.0;
  for (const auto& a : p) {
    for (const auto& b : p) best = std::max(best, dist(a, b));
  }
  return best;
}

double swivel_deg(const Vec3& s, const Vec3& e, const Vec3& w, const Vec3& down) {
  Vec3 axis = sub(w, s);
  axis = scale(axis, 1.0 / std::sqrt(dot(axis, axis)));
  const Vec3 u = sub(e, s);
  Vec3 ex = sub(u, scale(axis, dot(u, axis)));
  Vec3 rx = sub(down, scale(axis, dot(down, axis)));
  ex = scale(ex, 1.0 / std::sqrt(dot(ex, ex)));
  rx = scale(rx, 1.0 / std::sqrt(dot(rx, rx)));
  const double c = std::clamp(dot(rx, ex), -1.0, 1.0);
  const double angle = std::acos(c) * 180.0 / std::numbers::pi;
  const double orient = dot(axis, cross(rx, ex));
  return orient < 0.0 ? -angle : angle;
}

double hand_opening(const std::vector<Vec3>& base, const std::array<std::vector<Vec3>, 4>& tips) {
  double total = 0.0;
  for (std::size_t t = 0; t < base.size(); ++t) {
    double f = 0.0;
    for (const auto& tip : tips) f += dist(tip[t], base[t]);
    total += f / 4.0;
  }
  return total / static_cast<double>(base.size());
}

std::array<double, 2> reference_forward(const gesture::Network& net, const gesture::FeatureRows& x) {
  using gesture::Tensor;
  const int D = net.config.input_dim, F = net.config.ff_size, H = net.config.hidden_size;
  const int T = static_cast<int>(x.rows());
  const double eps = 1e-5;
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  std::vector<std::vector<double>> u(static_cast<std::size_t>(T), std::vector<double>(static_cast<std::size_t>(F)));
  for (int t = 0; t < T; ++t) {
    std::vector<double> y(static_cast<std::size_t>(D));
    for (int d = 0; d < D; ++d) {
      const double z = (x(t, d) - net[Tensor::InNormMean](d, 0)) / std::sqrt(net[Tensor::InNormVar](d, 0) + eps);
      y[static_cast<std::size_t>(d)] = z * net[Tensor::InNormGamma](d, 0) + net[Tensor::InNormBeta](d, 0);
    }
    for (int f = 0; f < F; ++f) {
      double s = net[Tensor::FfBias](f, 0);
      for (int d = 0; d < D; ++d) s += net[Tensor::FfWeight](f, d) * y[static_cast<std::size_t>(d)];
      u[static_cast<std::size_t>(t)][static_cast<std::size_t>(f)] = s;
    }
  }
  auto run = [&](Tensor wx, Tensor wh, Tensor b, bool reverse) {
    std::vector<double> h(static_cast<std::size_t>(H), 0.0), c(static_cast<std::size_t>(H), 0.0);
    for (int s = 0; s < T; ++s) {
      const int t = reverse ? T - 1 - s : s;
      std::vector<double> a(static_cast<std::size_t>(4 * H));
      for (int r = 0; r < 4 * H; ++r) {
        double v = net[b](r, 0);
        for (int f = 0; f < F; ++f) v += net[wx](r, f) * u[static_cast<std::size_t>(t)][static_cast<std::size_t>(f)];
        for (int k = 0; k < H; ++k) v += net[wh](r, k) * h[static_cast<std::size_t>(k)];
        a[static_cast<std::size_t>(r)] = v;
      }
      for (int k = 0; k < H; ++k) {
        const double ig = sig(a[static_cast<std::size_t>(k)]);
        const double fg = sig(a[static_cast<std::size_t>(H + k)]);
        const double gg = std::tanh(a[static_cast<std::size_t>(2 * H + k)]);
        const double og = sig(a[static_cast<std::size_t>(3 * H + k)]);
        c[static_cast<std::size_t>(k)] = fg * c[static_cast<std::size_t>(k)] + ig * gg;
        h[static_cast<std::size_t>(k)] = og * std::tanh(c[static_cast<std::size_t>(k)]);
      }
    }
    return h;
  };
  const auto hf = run(Tensor::FwdInput, Tensor::FwdRecurrent, Tensor::FwdBias, false);
  const auto hb = run(Tensor::BwdInput, Tensor::BwdRecurrent, Tensor::BwdBias, true);
  std::vector<double> d(static_cast<std::size_t>(2 * H));
  for (int k = 0; k < 2 * H; ++k) {
    const double v = k < H ? hf[static_cast<std::size_t>(k)] : hb[static_cast<std::size_t>(k - H)];
    d[static_cast<std::size_t>(k)] = (v - net[Tensor::OutNormMean](k, 0)) / std::sqrt(net[Tensor::OutNormVar](k, 0) + eps) *
                                         net[Tensor::OutNormGamma](k, 0) +
                                     net[Tensor::OutNormBeta](k, 0);
  }
  std::array<double, 2> out{};
  for (int o = 0; o < 2; ++o) {
    double s = net[Tensor::OutBias](o, 0);
    for (int k = 0; k < 2 * H; ++k) s += net[Tensor::OutWeight](o, k) * d[static_cast<std::size_t>(k)];
    out[static_cast<std::size_t>(o)] = sig(s);
  }
  return out;
}

double gradient_check(const gesture::Network& net, gesture::BatchInputs inputs, const Eigen::Matrix2Xd& targets,
                      std::uint64_t dropout_seed, double step, double floor) {
  const gesture::ForwardOptions fo{gesture::Mode::Train, dropout_seed, true};
  const gesture::LossResult base = gesture::loss_and_gradients(net, inputs, targets, fo);
  gesture::Network probe = net;
  double worst = 0.0;
  for (int t = 0; t < gesture::kTrainableTensors; ++t) {
    auto& w = probe.tensors[static_cast<std::size_t>(t)];
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      const double keep = w.data()[i];
      w.data()[i] = keep + step;
      const double up = gesture::loss_and_gradients(probe, inputs, targets, fo).loss;
      w.data()[i] = keep - step;
      const double down = gesture::loss_and_gradients(probe, inputs, targets, fo).loss;
      w.data()[i] = keep;
      const double numeric = (up - down) / (2.0 * step);
      const double analytic = base.gradients[static_cast<std::size_t>(t)].data()[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
      worst = std::max(worst, std::abs(analytic - numeric) / denom);
    }
  }
  return worst;
}

double wilcoxon_enumerate(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) d.push_back(a[i] - b[i]);
  }
  const std::size_t n = d.size();
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    int below = 0, equal = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(d[j]) < std::abs(d[i])) ++below;
      else if (std::abs(d[j]) == std::abs(d[i])) ++equal;
    }
    rank[i] = below + (equal + 1) / 2.0;
  }
  double total = 0.0, obs = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += rank[i];
    if (d[i] > 0) obs += rank[i];
  }
  const double dev = std::abs(obs - total / 2.0);
  std::uint64_t hits = 0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    double w = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1U) w += rank[i];
    }
    if (std::abs(w - total / 2.0) >= dev - 1e-9) ++hits;
  }
  return static_cast<double>(hits) / std::ldexp(1.0, static_cast<int>(n));
}

EligibleFractions eligible_fractions(const std::vector<gesture::BaselineItem>& targets,
                                     const std::vector<gesture::BaselineItem>& pool) {
  EligibleFractions out;
  for (std::size_t h = 0; h < 2; ++h) {
    double frac = 0.0, hits = 0.0, total = 0.0;
    for (const auto& t : targets) {
      double sum = 0.0, sq = 0.0, n = 0.0;
      for (const auto& p : pool) {
        if (p.dataset_id != t.dataset_id) continue;
        sum += p.path_length[h];
        n += 1.0;
      }
      const double mu = sum / n;
      for (const auto& p : pool) {
        if (p.dataset_id == t.dataset_id) sq += (p.path_length[h] - mu) * (p.path_length[h] - mu);
      }
      const double band = std::sqrt(sq / n) / 4.0;
      double ok = 0.0, same = 0.0;
      for (const auto& p : pool) {
        if (p.dataset_id != t.dataset_id || p.stroke_id == t.stroke_id) continue;
        same += 1.0;
        if (p.path_length[h] > t.path_length[h] - band && p.path_length[h] < t.path_length[h] + band) ok += 1.0;
      }
      frac += ok / same;
      hits += ok;
      total += same;
    }
    out.mean[h] = frac / static_cast<double>(targets.size());
    out.pooled[h] = hits / total;
  }
  return out;
}

double percentile_by_count(const std::vector<double>& values, double q) {
  const double need = q * static_cast<double>(values.size());
  double best = INFINITY;
  for (double v : values) {
    std::size_t at_or_below = 0;
    for (double x : values) at_or_below += x <= v;
    if (static_cast<double>(at_or_below) >= need - 1e-12 && v < best) best = v;
  }
  return best;
}

Vec3 to_vec3(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

std::vector<Vec3> to_vec3(const std::vector<Eigen::Vector3d>& v) {
  std::vector<Vec3> out;
  for (const auto& p : v) out.push_back(to_vec3(p));
  return out;
}

gesture::JointTrajectory random_trajectory(std::uint64_t seed, int frames, double frame_time) {
  using gesture::JointRole;
  gesture::Rng rng(seed);
  gesture::JointTrajectory traj;
  traj.clip_id = "fixture";
  traj.frame_time = frame_time;
  traj.frames = frames;
  auto wave = [&](double amp) {
    const double f1 = rng.uniform(0.3, 2.0), f2 = rng.uniform(0.3, 2.0);
    const double p1 = rng.uniform(0.0, 6.28), p2 = rng.uniform(0.0, 6.28);
    const double a1 = amp * rng.uniform(0.3, 1.0), a2 = amp * rng.uniform(0.0, 0.5);
    return [=](double t) { return a1 * std::sin(6.283185307179586 * f1 * t + p1) + a2 * std::sin(6.283185307179586 * f2 * t + p2); };
  };
  for (gesture::Hand h : gesture::kHands) {
    const double side = h == gesture::Hand::Left ? 1.0 : -1.0;
    const auto sx = wave(0.02), sy = wave(0.02);
    const auto ax = wave(0.8), ay = wave(0.8), az = wave(0.8);
    const auto bend = wave(0.5);
    const double upper = rng.uniform(0.25, 0.32), fore = rng.uniform(0.22, 0.28);
    const double open = rng.uniform(0.06, 0.1);
    auto slot = [&](JointRole r) -> std::vector<Eigen::Vector3d>& {
      auto& v = traj.tracks[gesture::track_slot(r, h)];
      v.resize(static_cast<std::size_t>(frames));
      return v;
    };
    for (int f = 0; f < frames; ++f) {
      const double t = f * frame_time;
      const Eigen::Vector3d s(side * 0.18 + sx(t), 1.45 + sy(t), 0.0);
      // upper arm hangs roughly down and forward, wobbling
      Eigen::Vector3d ud(side * 0.3 + 0.3 * ax(t), -1.0 + 0.2 * ay(t), 0.4 + 0.4 * az(t));
      ud.normalize();
      const Eigen::Vector3d e = s + upper * ud;
      Eigen::Vector3d fd(side * 0.2 + 0.4 * az(t), -0.2 + 0.6 * bend(t), 1.0 + 0.3 * ax(t));
      fd.normalize();
      const Eigen::Vector3d w = e + fore * fd;
      slot(JointRole::Shoulder)[static_cast<std::size_t>(f)] = s;
      slot(JointRole::Elbow)[static_cast<std::size_t>(f)] = e;
      slot(JointRole::Wrist)[static_cast<std::size_t>(f)] = w;
      slot(JointRole::WristBase)[static_cast<std::size_t>(f)] = w + 0.02 * fd;
      int k = 0;
      for (JointRole tip : gesture::kFingertips) {
        const double spread = -0.3 + 0.2 * k++;
        Eigen::Vector3d dir = fd + Eigen::Vector3d(spread, 0.1 * bend(t), 0.0);
        slot(tip)[static_cast<std::size_t>(f)] = w + 0.02 * fd + open * (1.0 + 0.2 * bend(t)) * dir.normalized();
      }
    }
  }
  return traj;
}

gesture::JointTrajectory trajectory_from_wrist(const std::vector<Eigen::Vector3d>& wrist, double frame_time) {
  using gesture::JointRole;
  gesture::JointTrajectory traj;
  traj.clip_id = "analytic";
  traj.frame_time = frame_time;
  traj.frames = static_cast<int>(wrist.size());
  for (gesture::Hand h : gesture::kHands) {
    const double side = h == gesture::Hand::Left ? 1.0 : -1.0;
    auto fill = [&](JointRole r, const Eigen::Vector3d& offset) {
      auto& v = traj.tracks[gesture::track_slot(r, h)];
      for (const auto& w : wrist) v.push_back(h == gesture::Hand::Left ? w + offset : Eigen::Vector3d(-w.x(), w.y(), w.z()) + offset);
    };
    const Eigen::Vector3d none = Eigen::Vector3d::Zero();
    traj.tracks[gesture::track_slot(JointRole::Shoulder, h)].assign(wrist.size(), Eigen::Vector3d(side * 0.2, 1.45, -0.3));
    traj.tracks[gesture::track_slot(JointRole::Elbow, h)].assign(wrist.size(), Eigen::Vector3d(side * 0.3, 1.2, -0.2));
    fill(JointRole::Wrist, none);
    fill(JointRole::WristBase, Eigen::Vector3d(0.0, 0.0, 0.02));
    int k = 0;
    for (JointRole tip : gesture::kFingertips) fill(tip, Eigen::Vector3d(0.01 * k++, 0.0, 0.1));
  }
  return traj;
}

std::string random_chain_bvh(std::uint64_t seed, int depth, int frames) {
  gesture::Rng rng(seed);
  std::ostringstream out;
  const std::array<const char*, 3> axes{"Xrotation", "Yrotation", "Zrotation"};
  out << "HIERARCHY\nROOT J0\n{\n  OFFSET 0 0 0\n  CHANNELS 6 Xposition Yposition Zposition";
  int channels = 3;
  auto order = [&] {
    std::vector<int> o{0, 1, 2};
    rng.shuffle(o);
    for (int a : o) out << " " << axes[static_cast<std::size_t>(a)];
    channels += 3;
  };
  order();
  out << "\n";
  for (int j = 1; j < depth; ++j) {
    out << "JOINT J" << j << "\n{\n  OFFSET " << rng.uniform(-20, 20) << " " << rng.uniform(-20, 20) << " "
        << rng.uniform(-20, 20) << "\n  CHANNELS 3";
    order();
    out << "\n";
  }
  out << "End Site\n{\n  OFFSET 0 5 1\n}\n";
  for (int j = 0; j < depth; ++j) out << "}\n";
  out << "MOTION\nFrames: " << frames << "\nFrame Time: 0.04\n";
  for (int f = 0; f < frames; ++f) {
    for (int c = 0; c < channels; ++c) out << (c ? " " : "") << rng.uniform(-170.0, 170.0);
    out << "\n";
  }
  return out.str();
}


}  // namespace oracle
