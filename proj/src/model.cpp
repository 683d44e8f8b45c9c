#include "gesture/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>

#include "gesture/csv.hpp"
#include "gesture/rng.hpp"
#include "json.hpp"

#if defined(__SSE__)
#include <xmmintrin.h>
#endif

namespace gesture {

using json = nlohmann::json;

namespace {

constexpr std::array<std::string_view, kTensorCount> kTensorNames{
    "input_norm.gamma", "input_norm.beta",  "ff.weight",         "ff.bias",          "lstm_fwd.input",
    "lstm_fwd.recurrent", "lstm_fwd.bias",   "lstm_bwd.input",    "lstm_bwd.recurrent", "lstm_bwd.bias",
    "output_norm.gamma", "output_norm.beta", "output.weight",     "output.bias",      "input_norm.running_mean",
    "input_norm.running_var", "output_norm.running_mean", "output_norm.running_var"};

constexpr int idx(Tensor t) { return static_cast<int>(t); }

void check_finite_layer(bool ok, std::string_view layer) {
  if (!ok) throw Error(ErrorCode::NonFinite, "non-finite activations in layer '" + std::string(layer) + "'");
}

// Gradients vanishing over long windows underflow into denormals, which are
// an order of magnitude slower on x86; flush them for the duration of a pass.
class FlushDenormals {
 public:
#if defined(__SSE__)
  FlushDenormals() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040); }
  ~FlushDenormals() { _mm_setcsr(saved_); }

 private:
  unsigned saved_;
#endif
};

// One forward/backward evaluation of the network in scalar type S.
template <class S>
class Pass {
 public:
  using M = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
  using V = Eigen::Matrix<S, Eigen::Dynamic, 1>;

  Pass(const Network& net, BatchInputs inputs, const ForwardOptions& options)
      : net_(net), opt_(options) {
    const ModelConfig& c = net.config;
    D_ = c.input_dim;
    F_ = c.ff_size;
    H_ = c.hidden_size;
    B_ = static_cast<int>(inputs.size());
    if (B_ == 0) throw Error(ErrorCode::ShapeMismatch, "empty batch");
    T_ = static_cast<int>(inputs[0]->rows());
    if (T_ < 1) throw Error(ErrorCode::ShapeMismatch, "window has no frames");
    for (const FeatureRows* x : inputs) {
      if (x->rows() != T_ || x->cols() != D_) {
        throw Error(ErrorCode::ShapeMismatch, "window is " + std::to_string(x->rows()) + "x" +
                                                  std::to_string(x->cols()) + ", expected " + std::to_string(T_) +
                                                  "x" + std::to_string(D_));
      }
    }
    for (int t = 0; t < kTensorCount; ++t) w_[static_cast<std::size_t>(t)] = net.tensors[static_cast<std::size_t>(t)].template cast<S>();
    X_.resize(D_, static_cast<Eigen::Index>(T_) * B_);
    for (int b = 0; b < B_; ++b) {
      const FeatureRows& x = *inputs[static_cast<std::size_t>(b)];
      for (int t = 0; t < T_; ++t) X_.col(col(t, b)) = x.row(t).transpose().template cast<S>();
    }
  }

  Eigen::Matrix2Xd run_forward() {
    const bool train = opt_.mode == Mode::Train;
    const Eigen::Index N = X_.cols();

    // input batch norm
    if (train) {
      in_mean_ = X_.rowwise().mean();
      in_var_ = (X_.colwise() - in_mean_).array().square().rowwise().mean().matrix();
    } else {
      in_mean_ = w(Tensor::InNormMean);
      in_var_ = w(Tensor::InNormVar);
    }
    in_inv_ = (in_var_.array() + S(constants::kBatchNormEpsilon)).rsqrt().matrix();
    xhat1_ = ((X_.colwise() - in_mean_).array().colwise() * in_inv_.array()).matrix();
    M Y = ((xhat1_.array().colwise() * w(Tensor::InNormGamma).col(0).array()).colwise() +
           w(Tensor::InNormBeta).col(0).array())
              .matrix();
    check_finite_layer(Y.allFinite(), "input_norm");
    Y1_ = std::move(Y);

    // linear feed-forward, then the input dropout shared by both directions
    U_.noalias() = w(Tensor::FfWeight) * Y1_;
    U_.colwise() += w(Tensor::FfBias).col(0);
    check_finite_layer(U_.allFinite(), "feed_forward");
    Rng rng(opt_.dropout_seed);
    if (train && opt_.dropout && net_.config.input_dropout > 0.0) {
      mask1_ = make_mask(rng, F_, N, net_.config.input_dropout);
      U_ = U_.cwiseProduct(mask1_);
    }

    run_lstm(0, Tensor::FwdInput, Tensor::FwdRecurrent, Tensor::FwdBias);
    check_finite_layer(A_[0].allFinite() && Hs_[0].allFinite(), "lstm_forward");
    run_lstm(1, Tensor::BwdInput, Tensor::BwdRecurrent, Tensor::BwdBias);
    check_finite_layer(A_[1].allFinite() && Hs_[1].allFinite(), "lstm_backward");

    hcat_.resize(2 * H_, B_);
    hcat_.topRows(H_) = Hs_[0].middleCols(col(T_ - 1, 0), B_);
    hcat_.bottomRows(H_) = Hs_[1].middleCols(col(0, 0), B_);

    if (train) {
      out_mean_ = hcat_.rowwise().mean();
      out_var_ = (hcat_.colwise() - out_mean_).array().square().rowwise().mean().matrix();
    } else {
      out_mean_ = w(Tensor::OutNormMean);
      out_var_ = w(Tensor::OutNormVar);
    }
    out_inv_ = (out_var_.array() + S(constants::kBatchNormEpsilon)).rsqrt().matrix();
    xhat2_ = ((hcat_.colwise() - out_mean_).array().colwise() * out_inv_.array()).matrix();
    dvec_ = ((xhat2_.array().colwise() * w(Tensor::OutNormGamma).col(0).array()).colwise() +
             w(Tensor::OutNormBeta).col(0).array())
                .matrix();
    check_finite_layer(dvec_.allFinite(), "output_norm");
    if (train && opt_.dropout && net_.config.output_dropout > 0.0) {
      mask2_ = make_mask(rng, 2 * H_, B_, net_.config.output_dropout);
      dvec_ = dvec_.cwiseProduct(mask2_);
    }

    M logits = w(Tensor::OutWeight) * dvec_;
    logits.colwise() += w(Tensor::OutBias).col(0);
    yhat_ = sigmoid(logits);
    check_finite_layer(yhat_.allFinite(), "output");
    return yhat_.template cast<double>();
  }

  LossResult backward(const Eigen::Matrix2Xd& targets) {
    if (targets.cols() != B_) throw Error(ErrorCode::ShapeMismatch, "target count differs from batch size");
    const bool train = opt_.mode == Mode::Train;
    LossResult r;
    r.predictions = yhat_.template cast<double>();
    const Eigen::Matrix2Xd diff = r.predictions - targets;
    r.loss = diff.squaredNorm() / (2.0 * B_);
    if (!std::isfinite(r.loss)) throw Error(ErrorCode::NonFinite, "non-finite loss");

    GradientSet& g = r.gradients;
    auto put = [&](Tensor t, const M& m) { g[static_cast<std::size_t>(idx(t))] = m.template cast<double>(); };

    const M dyhat = (diff / static_cast<double>(B_)).template cast<S>();
    const M dlogit = (dyhat.array() * yhat_.array() * (S(1) - yhat_.array())).matrix();
    put(Tensor::OutWeight, dlogit * dvec_.transpose());
    put(Tensor::OutBias, dlogit.rowwise().sum());
    M dd = w(Tensor::OutWeight).transpose() * dlogit;
    if (mask2_.size() > 0) dd = dd.cwiseProduct(mask2_);

    M dhcat;
    norm_backward(dd, xhat2_, out_inv_, w(Tensor::OutNormGamma), train, Tensor::OutNormGamma, Tensor::OutNormBeta, g,
                  &dhcat);

    M dU = M::Zero(F_, X_.cols());
    lstm_backward(0, dhcat.topRows(H_), Tensor::FwdInput, Tensor::FwdRecurrent, Tensor::FwdBias, g, dU);
    lstm_backward(1, dhcat.bottomRows(H_), Tensor::BwdInput, Tensor::BwdRecurrent, Tensor::BwdBias, g, dU);

    if (mask1_.size() > 0) dU = dU.cwiseProduct(mask1_);
    put(Tensor::FfWeight, dU * Y1_.transpose());
    put(Tensor::FfBias, dU.rowwise().sum());
    const M dY = w(Tensor::FfWeight).transpose() * dU;
    norm_backward(dY, xhat1_, in_inv_, w(Tensor::InNormGamma), train, Tensor::InNormGamma, Tensor::InNormBeta, g,
                  nullptr);

    r.in_mean = in_mean_.template cast<double>();
    r.in_var = in_var_.template cast<double>();
    r.out_mean = out_mean_.template cast<double>();
    r.out_var = out_var_.template cast<double>();
    r.in_count = X_.cols();
    r.out_count = B_;
    return r;
  }

 private:
  Eigen::Index col(int t, int b) const { return static_cast<Eigen::Index>(t) * B_ + b; }
  const M& w(Tensor t) const { return w_[static_cast<std::size_t>(idx(t))]; }

  static M sigmoid(const M& x) { return (S(1) + (-x.array()).exp()).inverse().matrix(); }

  static M make_mask(Rng& rng, Eigen::Index rows, Eigen::Index cols, double p) {
    M m(rows, cols);
    const S keep = S(1.0 / (1.0 - p));
    for (Eigen::Index j = 0; j < cols; ++j) {
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.bernoulli(p) ? S(0) : keep;
    }
    return m;
  }

  void run_lstm(int dir, Tensor wx, Tensor wh, Tensor bias) {
    const Eigen::Index N = X_.cols();
    M& A = A_[dir];
    M& C = C_[dir];
    M& Hs = Hs_[dir];
    A.noalias() = w(wx) * U_;
    A.colwise() += w(bias).col(0);
    C.resize(H_, N);
    Hs.resize(H_, N);
    const M& Wh = w(wh);
    for (int s = 0; s < T_; ++s) {
      const int t = dir == 0 ? s : T_ - 1 - s;
      const int tp = dir == 0 ? t - 1 : t + 1;
      auto a = A.middleCols(col(t, 0), B_);
      if (s > 0) a.noalias() += Wh * Hs.middleCols(col(tp, 0), B_);
      a.topRows(2 * H_).array() = (S(1) + (-a.topRows(2 * H_).array()).exp()).inverse();
      a.middleRows(2 * H_, H_).array() = a.middleRows(2 * H_, H_).array().tanh();
      a.bottomRows(H_).array() = (S(1) + (-a.bottomRows(H_).array()).exp()).inverse();
      auto c = C.middleCols(col(t, 0), B_);
      c = a.topRows(H_).cwiseProduct(a.middleRows(2 * H_, H_));
      if (s > 0) c += a.middleRows(H_, H_).cwiseProduct(C.middleCols(col(tp, 0), B_));
      Hs.middleCols(col(t, 0), B_) = a.bottomRows(H_).cwiseProduct(c.array().tanh().matrix());
    }
  }

  void lstm_backward(int dir, const M& dfinal, Tensor wx, Tensor wh, Tensor bias, GradientSet& g, M& dU) const {
    const M& A = A_[dir];
    const M& C = C_[dir];
    const M& Hs = Hs_[dir];
    const M& Wh = w(wh);
    const Eigen::Index N = X_.cols();
    M dG(4 * H_, N);
    M dh = dfinal;
    M dc = M::Zero(H_, B_);
    for (int s = T_ - 1; s >= 0; --s) {
      const int t = dir == 0 ? s : T_ - 1 - s;
      const int tp = dir == 0 ? t - 1 : t + 1;
      const auto a = A.middleCols(col(t, 0), B_);
      const auto i = a.topRows(H_).array();
      const auto f = a.middleRows(H_, H_).array();
      const auto gg = a.middleRows(2 * H_, H_).array();
      const auto o = a.bottomRows(H_).array();
      const auto tc = C.middleCols(col(t, 0), B_).array().tanh().eval();
      dc.array() += dh.array() * o * (S(1) - tc.square());
      auto da = dG.middleCols(col(t, 0), B_);
      da.topRows(H_) = (dc.array() * gg * i * (S(1) - i)).matrix();
      if (s > 0) {
        da.middleRows(H_, H_) = (dc.array() * C.middleCols(col(tp, 0), B_).array() * f * (S(1) - f)).matrix();
      } else {
        da.middleRows(H_, H_).setZero();
      }
      da.middleRows(2 * H_, H_) = (dc.array() * i * (S(1) - gg.square())).matrix();
      da.bottomRows(H_) = (dh.array() * tc * o * (S(1) - o)).matrix();
      if (s > 0) {
        dc = dc.cwiseProduct(a.middleRows(H_, H_));
        dh.noalias() = Wh.transpose() * da;
      }
    }
    const Eigen::Index rest = N - B_;
    M dWh = M::Zero(4 * H_, H_);
    if (rest > 0) {
      if (dir == 0) {
        dWh.noalias() = dG.rightCols(rest) * Hs.leftCols(rest).transpose();
      } else {
        dWh.noalias() = dG.leftCols(rest) * Hs.rightCols(rest).transpose();
      }
    }
    g[static_cast<std::size_t>(idx(wh))] = dWh.template cast<double>();
    M dWx(4 * H_, F_);
    dWx.noalias() = dG * U_.transpose();
    g[static_cast<std::size_t>(idx(wx))] = dWx.template cast<double>();
    g[static_cast<std::size_t>(idx(bias))] = dG.rowwise().sum().template cast<double>();
    dU.noalias() += w(wx).transpose() * dG;
  }

  static void norm_backward(const M& dy, const M& xhat, const V& inv, const M& gamma, bool train, Tensor tg,
                            Tensor tb, GradientSet& g, M* dx) {
    g[static_cast<std::size_t>(idx(tg))] = dy.cwiseProduct(xhat).rowwise().sum().template cast<double>();
    g[static_cast<std::size_t>(idx(tb))] = dy.rowwise().sum().template cast<double>();
    if (!dx) return;
    const M dxhat = (dy.array().colwise() * gamma.col(0).array()).matrix();
    if (!train) {
      *dx = (dxhat.array().colwise() * inv.array()).matrix();
      return;
    }
    const S n = S(static_cast<double>(dy.cols()));
    const V sum_d = dxhat.rowwise().sum();
    const V sum_dx = dxhat.cwiseProduct(xhat).rowwise().sum();
    *dx = (((dxhat.array() * n).colwise() - sum_d.array() - (xhat.array().colwise() * sum_dx.array())).colwise() *
          (inv.array() / n))
             .matrix();
  }

  const Network& net_;
  ForwardOptions opt_;
  int D_ = 0, F_ = 0, H_ = 0, T_ = 0, B_ = 0;
  std::array<M, kTensorCount> w_;
  M X_, xhat1_, Y1_, U_, mask1_;
  V in_mean_, in_var_, in_inv_;
  std::array<M, 2> A_, C_, Hs_;
  M hcat_, xhat2_, dvec_, mask2_, yhat_;
  V out_mean_, out_var_, out_inv_;
};

template <class S>
LossResult loss_impl(const Network& net, BatchInputs inputs, const Eigen::Matrix2Xd& targets,
                     const ForwardOptions& options) {
  net.check_shapes();
  const FlushDenormals ftz;
  Pass<S> pass(net, inputs, options);
  pass.run_forward();
  return pass.backward(targets);
}

std::string precision_name(Precision p) { return p == Precision::Float32 ? "float32" : "float64"; }

Precision parse_precision(const std::string& s) {
  if (s == "float32") return Precision::Float32;
  if (s == "float64") return Precision::Float64;
  throw Error(ErrorCode::ConfigInvalid, "unknown precision '" + s + "' (float32 or float64)");
}

}  // namespace

void ModelConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::ConfigInvalid, m); };
  if (input_dim < 1 || ff_size < 1 || hidden_size < 1) fail("model sizes must be >= 1");
  if (!(input_dropout >= 0.0 && input_dropout < 1.0)) fail("input_dropout must lie in [0, 1)");
  if (!(output_dropout >= 0.0 && output_dropout < 1.0)) fail("output_dropout must lie in [0, 1)");
  if (!(learning_rate > 0.0)) fail("learning_rate must be > 0");
  if (epochs < 0) fail("epochs must be >= 0");
  if (batch_size < 1) fail("batch_size must be >= 1");
}

int default_epochs(ParamKind p) {
  return p == ParamKind::Velocity || p == ParamKind::InitialAcceleration ? constants::kEpochsKinematic
                                                                         : constants::kEpochsOther;
}

Normalizer Normalizer::fit(std::span<const std::array<double, 2>> targets) {
  if (targets.empty()) throw Error(ErrorCode::EmptySet, "cannot fit a normalizer on no targets");
  Normalizer n;
  for (int h = 0; h < 2; ++h) {
    n.min[h] = n.max[h] = targets[0][h];
    for (const auto& t : targets) {
      n.min[h] = std::min(n.min[h], t[h]);
      n.max[h] = std::max(n.max[h], t[h]);
    }
  }
  n.fitted = true;
  return n;
}

double Normalizer::span(int hand) const { return std::max(max[hand] - min[hand], epsilon); }

std::array<double, 2> Normalizer::apply(const std::array<double, 2>& v) const {
  return {(v[0] - min[0]) / span(0), (v[1] - min[1]) / span(1)};
}

std::array<double, 2> Normalizer::invert(const std::array<double, 2>& y) const {
  return {min[0] + y[0] * span(0), min[1] + y[1] * span(1)};
}

std::string_view tensor_name(int t) { return kTensorNames.at(static_cast<std::size_t>(t)); }

std::pair<int, int> tensor_shape(const ModelConfig& c, int t) {
  const int D = c.input_dim, F = c.ff_size, H = c.hidden_size;
  switch (static_cast<Tensor>(t)) {
    case Tensor::InNormGamma:
    case Tensor::InNormBeta:
    case Tensor::InNormMean:
    case Tensor::InNormVar: return {D, 1};
    case Tensor::FfWeight: return {F, D};
    case Tensor::FfBias: return {F, 1};
    case Tensor::FwdInput:
    case Tensor::BwdInput: return {4 * H, F};
    case Tensor::FwdRecurrent:
    case Tensor::BwdRecurrent: return {4 * H, H};
    case Tensor::FwdBias:
    case Tensor::BwdBias: return {4 * H, 1};
    case Tensor::OutNormGamma:
    case Tensor::OutNormBeta:
    case Tensor::OutNormMean:
    case Tensor::OutNormVar: return {2 * H, 1};
    case Tensor::OutWeight: return {2, 2 * H};
    case Tensor::OutBias: return {2, 1};
  }
  throw Error(ErrorCode::ShapeMismatch, "unknown tensor index");
}

Network Network::zeros(const ModelConfig& config) {
  config.validate();
  Network n;
  n.config = config;
  for (int t = 0; t < kTensorCount; ++t) {
    const auto [r, c] = tensor_shape(config, t);
    n.tensors[static_cast<std::size_t>(t)] = Matrix::Zero(r, c);
  }
  n[Tensor::InNormVar].setOnes();
  n[Tensor::OutNormVar].setOnes();
  return n;
}

Network Network::initialize(const ModelConfig& config) {
  Network n = zeros(config);
  n[Tensor::InNormGamma].setOnes();
  n[Tensor::OutNormGamma].setOnes();
  Rng rng(derive_seed(config.seed, 1));
  auto fill = [&](Tensor t, double fan_in) {
    const double k = 1.0 / std::sqrt(fan_in);
    Matrix& m = n[t];
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.uniform(-k, k);
    }
  };
  const double D = config.input_dim, F = config.ff_size, H = config.hidden_size;
  fill(Tensor::FfWeight, D);
  fill(Tensor::FfBias, D);
  fill(Tensor::FwdInput, F);
  fill(Tensor::FwdRecurrent, H);
  fill(Tensor::FwdBias, H);
  fill(Tensor::BwdInput, F);
  fill(Tensor::BwdRecurrent, H);
  fill(Tensor::BwdBias, H);
  fill(Tensor::OutWeight, 2 * H);
  fill(Tensor::OutBias, 2 * H);
  return n;
}

void Network::check_shapes() const {
  config.validate();
  for (int t = 0; t < kTensorCount; ++t) {
    const auto [r, c] = tensor_shape(config, t);
    const Matrix& m = tensors[static_cast<std::size_t>(t)];
    if (m.rows() != r || m.cols() != c) {
      throw Error(ErrorCode::ShapeMismatch, "tensor '" + std::string(tensor_name(t)) + "' is " +
                                                std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                                                ", config expects " + std::to_string(r) + "x" + std::to_string(c));
    }
  }
}

Eigen::Matrix2Xd forward(const Network& net, BatchInputs inputs, const ForwardOptions& options) {
  net.check_shapes();
  const FlushDenormals ftz;
  Pass<double> pass(net, inputs, options);
  return pass.run_forward();
}

LossResult loss_and_gradients(const Network& net, BatchInputs inputs, const Eigen::Matrix2Xd& targets,
                              const ForwardOptions& options) {
  return loss_impl<double>(net, inputs, targets, options);
}

LossResult loss_and_gradients_f32(const Network& net, BatchInputs inputs, const Eigen::Matrix2Xd& targets,
                                  const ForwardOptions& options) {
  return loss_impl<float>(net, inputs, targets, options);
}

// ---- checkpoint ----

std::string encode_checkpoint(const Checkpoint& ck) {
  ck.net.check_shapes();
  const ModelConfig& c = ck.net.config;
  json h;
  h["format"] = "gesture-param-checkpoint";
  h["version"] = Checkpoint::kVersion;
  h["config"] = {{"input_dim", c.input_dim},       {"ff_size", c.ff_size},
                 {"hidden_size", c.hidden_size},   {"input_dropout", c.input_dropout},
                 {"output_dropout", c.output_dropout}, {"learning_rate", c.learning_rate},
                 {"epochs", c.epochs},             {"batch_size", c.batch_size},
                 {"seed", c.seed},                 {"precision", precision_name(c.precision)}};
  h["normalizer"] = {{"fitted", ck.normalizer.fitted},
                     {"min", ck.normalizer.min},
                     {"max", ck.normalizer.max},
                     {"epsilon", ck.normalizer.epsilon}};
  h["standardizer"] = {{"mean", ck.standardizer.mean}, {"scale", ck.standardizer.scale}};
  h["target"] = ck.target;
  h["feature_set"] = ck.feature_set;
  h["epoch"] = ck.epoch;
  h["validation_mse"] = ck.validation_mse;
  json tensors = json::array();
  for (int t = 0; t < kTensorCount; ++t) {
    const Matrix& m = ck.net.tensors[static_cast<std::size_t>(t)];
    tensors.push_back({{"name", tensor_name(t)}, {"rows", m.rows()}, {"cols", m.cols()}});
  }
  h["tensors"] = tensors;
  const std::string header = h.dump();

  std::string out = "GPCK";
  auto put_u = [&](std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  put_u(Checkpoint::kVersion, 4);
  put_u(header.size(), 8);
  out += header;
  for (const Matrix& m : ck.net.tensors) {
    for (Eigen::Index k = 0; k < m.size(); ++k) put_u(std::bit_cast<std::uint64_t>(m.data()[k]), 8);
  }
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  auto fail = [](const std::string& m) -> Error { return Error(ErrorCode::CheckpointInvalid, m); };
  std::size_t pos = 0;
  auto get_u = [&](int n) {
    if (pos + static_cast<std::size_t>(n) > bytes.size()) throw fail("checkpoint truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
    pos += static_cast<std::size_t>(n);
    return v;
  };
  if (bytes.substr(0, 4) != "GPCK") throw fail("not a checkpoint file (bad magic)");
  pos = 4;
  const auto version = get_u(4);
  if (version != Checkpoint::kVersion) throw fail("unsupported checkpoint version " + std::to_string(version));
  const auto hlen = get_u(8);
  if (pos + hlen > bytes.size()) throw fail("checkpoint truncated in header");
  Checkpoint ck;
  try {
    const json h = json::parse(bytes.substr(pos, hlen));
    pos += hlen;
    const json& c = h.at("config");
    ModelConfig& mc = ck.net.config;
    mc.input_dim = c.at("input_dim");
    mc.ff_size = c.at("ff_size");
    mc.hidden_size = c.at("hidden_size");
    mc.input_dropout = c.at("input_dropout");
    mc.output_dropout = c.at("output_dropout");
    mc.learning_rate = c.at("learning_rate");
    mc.epochs = c.at("epochs");
    mc.batch_size = c.at("batch_size");
    mc.seed = c.at("seed");
    mc.precision = parse_precision(c.at("precision"));
    const json& n = h.at("normalizer");
    ck.normalizer.fitted = n.at("fitted");
    ck.normalizer.min = n.at("min");
    ck.normalizer.max = n.at("max");
    ck.normalizer.epsilon = n.at("epsilon");
    ck.standardizer.mean = h.at("standardizer").at("mean").get<std::vector<double>>();
    ck.standardizer.scale = h.at("standardizer").at("scale").get<std::vector<double>>();
    ck.target = h.at("target");
    ck.feature_set = h.at("feature_set");
    ck.epoch = h.at("epoch");
    ck.validation_mse = h.at("validation_mse");
    const json& ts = h.at("tensors");
    if (ts.size() != static_cast<std::size_t>(kTensorCount)) throw fail("checkpoint has wrong tensor count");
    for (int t = 0; t < kTensorCount; ++t) {
      const json& e = ts[static_cast<std::size_t>(t)];
      if (e.at("name") != tensor_name(t)) throw fail("unexpected tensor '" + e.at("name").get<std::string>() + "'");
      Matrix m(e.at("rows").get<Eigen::Index>(), e.at("cols").get<Eigen::Index>());
      for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = std::bit_cast<double>(get_u(8));
      ck.net.tensors[static_cast<std::size_t>(t)] = std::move(m);
    }
  } catch (const json::exception& e) {
    throw fail(std::string("checkpoint header invalid: ") + e.what());
  }
  if (pos != bytes.size()) throw fail("trailing bytes after checkpoint data");
  try {
    ck.net.check_shapes();
  } catch (const Error& e) {
    throw fail(e.what());
  }
  return ck;
}

void save_checkpoint(const Checkpoint& ck, const std::string& path) { io::write_file(path, encode_checkpoint(ck)); }

Checkpoint load_checkpoint(const std::string& path) { return decode_checkpoint(io::read_file(path)); }

// ---- training ----

namespace {

Eigen::Matrix2Xd gather_targets(const TrainingSet& set, std::span<const std::size_t> ids) {
  Eigen::Matrix2Xd y(2, static_cast<Eigen::Index>(ids.size()));
  for (std::size_t k = 0; k < ids.size(); ++k) {
    y(0, static_cast<Eigen::Index>(k)) = set.targets[ids[k]][0];
    y(1, static_cast<Eigen::Index>(k)) = set.targets[ids[k]][1];
  }
  return y;
}

void update_running(Matrix& mean, Matrix& var, const Eigen::VectorXd& bm, const Eigen::VectorXd& bv, long count) {
  const double m = constants::kBatchNormMomentum;
  const double unbias = count > 1 ? static_cast<double>(count) / static_cast<double>(count - 1) : 1.0;
  mean.col(0) = (1.0 - m) * mean.col(0) + m * bm;
  var.col(0) = (1.0 - m) * var.col(0) + m * unbias * bv;
}

}  // namespace

double evaluate_mse(const Network& net, const TrainingSet& set, int batch_size) {
  if (set.size() == 0) throw Error(ErrorCode::EmptySet, "cannot evaluate on an empty set");
  double total = 0.0;
  for (std::size_t start = 0; start < set.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(set.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<std::size_t> ids(end - start);
    std::iota(ids.begin(), ids.end(), start);
    const Eigen::Matrix2Xd y = gather_targets(set, ids);
    const Eigen::Matrix2Xd p =
        forward(net, BatchInputs(set.inputs.data() + start, end - start), ForwardOptions{Mode::Infer, 0, false});
    total += (p - y).squaredNorm();
  }
  return total / (2.0 * static_cast<double>(set.size()));
}

TrainResult train(const ModelConfig& config, const TrainingSet& train_set, const TrainingSet& validation_set,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (train_set.size() == 0 || validation_set.size() == 0) {
    throw Error(ErrorCode::EmptySet, "training and validation sets must be nonempty");
  }
  if (train_set.targets.size() != train_set.size() || validation_set.targets.size() != validation_set.size()) {
    throw Error(ErrorCode::ShapeMismatch, "input and target counts differ");
  }
  TrainResult result;
  Network net = Network::initialize(config);
  result.best = net;
  result.best_validation_mse = evaluate_mse(net, validation_set, config.batch_size);

  std::array<Matrix, kTrainableTensors> m1, m2;
  for (int t = 0; t < kTrainableTensors; ++t) {
    const auto& w = net.tensors[static_cast<std::size_t>(t)];
    m1[static_cast<std::size_t>(t)] = Matrix::Zero(w.rows(), w.cols());
    m2[static_cast<std::size_t>(t)] = Matrix::Zero(w.rows(), w.cols());
  }
  const double b1 = constants::kAdamBeta1, b2 = constants::kAdamBeta2, eps = constants::kAdamEpsilon;
  double b1t = 1.0, b2t = 1.0;
  std::uint64_t step = 0;
  const std::uint64_t dropout_base = derive_seed(config.seed, 2);
  const std::uint64_t order_base = derive_seed(config.seed, 3);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    Rng(derive_seed(order_base, static_cast<std::uint64_t>(epoch))).shuffle(order);

    std::vector<std::pair<std::size_t, std::size_t>> batches;
    const auto bs = static_cast<std::size_t>(config.batch_size);
    for (std::size_t s = 0; s < order.size(); s += bs) batches.emplace_back(s, std::min(order.size(), s + bs));
    // a lone trailing sample gives degenerate batch statistics; fold it into the previous batch
    if (batches.size() > 1 && batches.back().second - batches.back().first == 1) {
      batches[batches.size() - 2].second = batches.back().second;
      batches.pop_back();
    }

    double loss_sum = 0.0;
    try {
      for (const auto& [s, e] : batches) {
        const std::span<const std::size_t> ids(order.data() + s, e - s);
        std::vector<const FeatureRows*> xs;
        xs.reserve(ids.size());
        for (std::size_t i : ids) xs.push_back(train_set.inputs[i]);
        const Eigen::Matrix2Xd y = gather_targets(train_set, ids);
        const ForwardOptions fo{Mode::Train, derive_seed(dropout_base, step), true};
        const LossResult r = config.precision == Precision::Float32 ? loss_and_gradients_f32(net, xs, y, fo)
                                                                    : loss_and_gradients(net, xs, y, fo);
        ++step;
        b1t *= b1;
        b2t *= b2;
        for (int t = 0; t < kTrainableTensors; ++t) {
          const auto k = static_cast<std::size_t>(t);
          const Matrix& g = r.gradients[k];
          m1[k] = b1 * m1[k] + (1.0 - b1) * g;
          m2[k] = b2 * m2[k] + (1.0 - b2) * g.cwiseProduct(g);
          net.tensors[k].array() -= config.learning_rate * (m1[k].array() / (1.0 - b1t)) /
                                    ((m2[k].array() / (1.0 - b2t)).sqrt() + eps);
        }
        update_running(net[Tensor::InNormMean], net[Tensor::InNormVar], r.in_mean, r.in_var, r.in_count);
        update_running(net[Tensor::OutNormMean], net[Tensor::OutNormVar], r.out_mean, r.out_var, r.out_count);
        loss_sum += r.loss * static_cast<double>(ids.size());
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NonFinite) throw;
      throw Error(ErrorCode::Divergence, "training diverged in epoch " + std::to_string(epoch) + ": " + e.what());
    }

    EpochLog log;
    log.epoch = epoch;
    log.train_mse = loss_sum / static_cast<double>(train_set.size());
    try {
      log.validation_mse = evaluate_mse(net, validation_set, config.batch_size);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NonFinite) throw;
      throw Error(ErrorCode::Divergence, "validation diverged in epoch " + std::to_string(epoch) + ": " + e.what());
    }
    if (!std::isfinite(log.train_mse) || !std::isfinite(log.validation_mse)) {
      throw Error(ErrorCode::Divergence, "loss became non-finite in epoch " + std::to_string(epoch));
    }
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
    if (log.validation_mse < result.best_validation_mse) {
      result.best = net;
      result.best_epoch = epoch;
      result.best_validation_mse = log.validation_mse;
    }
  }
  return result;
}

std::vector<std::array<double, 2>> predict(const Checkpoint& ck, BatchInputs windows, int batch_size) {
  if (!ck.normalizer.fitted) throw Error(ErrorCode::NormalizerMissing, "checkpoint has no fitted normalizer");
  std::vector<std::array<double, 2>> out;
  out.reserve(windows.size());
  for (std::size_t start = 0; start < windows.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t n = std::min(windows.size() - start, static_cast<std::size_t>(batch_size));
    const Eigen::Matrix2Xd p = forward(ck.net, windows.subspan(start, n), ForwardOptions{Mode::Infer, 0, false});
    for (Eigen::Index b = 0; b < p.cols(); ++b) out.push_back(ck.normalizer.invert({p(0, b), p(1, b)}));
  }
  return out;
}

std::string write_training_log(std::span<const EpochLog> log) {
  std::string out = "epoch,train_mse,validation_mse\n";
  for (const EpochLog& e : log) {
    out += std::to_string(e.epoch) + "," + csv::format_double(e.train_mse) + "," +
           csv::format_double(e.validation_mse) + "\n";
  }
  return out;
}

}  // namespace gesture
