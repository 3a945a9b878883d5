#include "fedhumor/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "fedhumor/errors.hpp"
#include "fedhumor/kernels.hpp"

namespace fedhumor {

namespace {

void check_priors(const ClassPriors& priors, double beta) {
  for (double p : {priors.negative, priors.positive}) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("class priors must lie strictly inside (0, 1)");
  }
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw DomainError("beta must be finite and >= 0");
}

// log softmax of a two-entry argument vector.
std::array<double, 2> log_softmax(const std::array<double, 2>& a) noexcept {
  const double m = std::max(a[0], a[1]);
  const double lse = m + std::log(std::exp(a[0] - m) + std::exp(a[1] - m));
  return {a[0] - lse, a[1] - lse};
}

bool finite(const std::array<double, 2>& a) noexcept {
  return std::isfinite(a[0]) && std::isfinite(a[1]);
}

struct ExampleTerms {
  double loss;
  std::array<double, 2> dlogits;
};

ExampleTerms example_terms(const std::array<double, 2>& logits, int label,
                           const LossConfig& config, const std::array<double, 2>& inv_scale) {
  const Probabilities p = softmax(logits);
  if (config.kind == LossKind::plain_nll) {
    const auto logp = log_softmax(logits);
    return {-logp[label],
            {p[0] - (label == 0 ? 1.0 : 0.0), p[1] - (label == 1 ? 1.0 : 0.0)}};
  }

  const std::array<double, 2> scaled{p[0] * inv_scale[0], p[1] * inv_scale[1]};
  const Probabilities q = softmax(scaled);
  const auto logq = log_softmax(scaled);

  // dL/d(scaled)
  std::array<double, 2> ds{};
  double loss = 0.0;
  if (config.kind == LossKind::scaled_nll) {
    loss = -logq[label];
    ds = {q[0] - (label == 0 ? 1.0 : 0.0), q[1] - (label == 1 ? 1.0 : 0.0)};
  } else {
    loss = -(logq[0] + logq[1]);
    ds = {2.0 * q[0] - 1.0, 2.0 * q[1] - 1.0};
  }
  // Through the per-class scaling, then the softmax Jacobian diag(p) - p p^T.
  const std::array<double, 2> dp{ds[0] * inv_scale[0], ds[1] * inv_scale[1]};
  const double mean = p[0] * dp[0] + p[1] * dp[1];
  return {loss, {p[0] * (dp[0] - mean), p[1] * (dp[1] - mean)}};
}

std::array<double, 2> inverse_scale(const LossConfig& config) {
  if (config.kind == LossKind::plain_nll) return {1.0, 1.0};
  check_priors(config.priors, config.beta);
  return {std::pow(config.priors.negative, -config.beta),
          std::pow(config.priors.positive, -config.beta)};
}

void check_batch(const ModelParams& params, std::span<const LabeledExample> batch) {
  if (batch.empty()) throw DomainError("loss_and_grad: empty batch");
  for (const auto& ex : batch) {
    if (ex.label != 0 && ex.label != 1) throw DomainError("labels must be 0 or 1");
    if (ex.x.size() != params.dim) throw DomainError("feature dimension does not match params");
  }
}

std::array<double, 2> logits_of(const ModelParams& params, std::span<const double> x) {
  double out[2];
  simd::dot2(params.row(0), params.row(1), x, out);
  return {out[0] + params.bias[0], out[1] + params.bias[1]};
}

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    throw IoError("truncated model checkpoint");
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

ModelParams ModelParams::zeros(std::size_t dim) {
  ModelParams p;
  p.dim = dim;
  p.weights.assign(kClassCount * dim, 0.0);
  return p;
}

bool ModelParams::all_finite() const noexcept {
  return std::all_of(weights.begin(), weights.end(), [](double v) { return std::isfinite(v); }) &&
         std::isfinite(bias[0]) && std::isfinite(bias[1]);
}

Probabilities softmax(const std::array<double, kClassCount>& args) noexcept {
  const double m = std::max(args[0], args[1]);
  const double e0 = std::exp(args[0] - m);
  const double e1 = std::exp(args[1] - m);
  const double sum = e0 + e1;
  return {e0 / sum, e1 / sum};
}

Probabilities forward(const ModelParams& params, std::span<const double> x) {
  if (x.size() != params.dim) throw DomainError("feature dimension does not match params");
  const auto z = logits_of(params, x);
  if (!finite(z)) throw NumericError("non-finite logits");
  return softmax(z);
}

Probabilities scale_train(const Probabilities& prob, const ClassPriors& priors, double beta) {
  check_priors(priors, beta);
  return softmax({prob[0] / std::pow(priors.negative, beta),
                  prob[1] / std::pow(priors.positive, beta)});
}

Probabilities scale_infer(const Probabilities& prob, const ClassPriors& priors, double beta) {
  check_priors(priors, beta);
  return softmax({prob[0] * std::pow(priors.negative, beta),
                  prob[1] * std::pow(priors.positive, beta)});
}

int argmax(const Probabilities& prob) noexcept { return prob[1] > prob[0] ? 1 : 0; }

double loss_and_grad_into(const ModelParams& params, std::span<const LabeledExample> batch,
                          const LossConfig& config, ModelParams& grad) {
  check_batch(params, batch);
  const auto inv_scale = inverse_scale(config);
  if (!grad.same_shape(params)) grad = ModelParams::zeros(params.dim);
  std::fill(grad.weights.begin(), grad.weights.end(), 0.0);
  grad.bias = {0.0, 0.0};

  const double inv_n = 1.0 / static_cast<double>(batch.size());
  auto g0 = grad.row(0);
  auto g1 = grad.row(1);
  double loss = 0.0;
  for (const auto& ex : batch) {
    const auto z = logits_of(params, ex.x);
    if (!finite(z)) throw NumericError("non-finite logits");
    const auto terms = example_terms(z, ex.label, config, inv_scale);
    if (!std::isfinite(terms.loss) || !finite(terms.dlogits)) {
      throw NumericError("non-finite loss or gradient term");
    }
    loss += terms.loss;
    const double d0 = terms.dlogits[0] * inv_n;
    const double d1 = terms.dlogits[1] * inv_n;
    simd::axpy2(d0, d1, ex.x, g0, g1);
    grad.bias[0] += d0;
    grad.bias[1] += d1;
  }
  return loss * inv_n;
}

LossAndGrad loss_and_grad(const ModelParams& params, std::span<const LabeledExample> batch,
                          const LossConfig& config) {
  LossAndGrad out;
  out.grad = ModelParams::zeros(params.dim);
  out.loss = loss_and_grad_into(params, batch, config, out.grad);
  return out;
}

double loss_value(const ModelParams& params, std::span<const LabeledExample> batch,
                  const LossConfig& config) {
  check_batch(params, batch);
  const auto inv_scale = inverse_scale(config);
  double loss = 0.0;
  for (const auto& ex : batch) {
    const auto z = logits_of(params, ex.x);
    if (!finite(z)) throw NumericError("non-finite logits");
    loss += example_terms(z, ex.label, config, inv_scale).loss;
  }
  loss /= static_cast<double>(batch.size());
  if (!std::isfinite(loss)) throw NumericError("non-finite loss");
  return loss;
}

void apply_sgd_step(ModelParams& params, const ModelParams& grad, double eta) {
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw DomainError("learning rate must be >= 0");
  if (!params.same_shape(grad)) throw DomainError("sgd_step: shape mismatch");
  simd::axpy(-eta, grad.weights, params.weights);
  params.bias[0] -= eta * grad.bias[0];
  params.bias[1] -= eta * grad.bias[1];
}

ModelParams sgd_step(const ModelParams& params, const ModelParams& grad, double eta) {
  ModelParams next = params;
  apply_sgd_step(next, grad, eta);
  return next;
}

void write_params(std::ostream& out, const ModelParams& params) {
  if (params.weights.size() != kClassCount * params.dim) {
    throw DomainError("write_params: weight matrix has the wrong size");
  }
  out.write(kParamsMagic.data(), kParamsMagic.size());
  put_le<std::uint32_t>(out, kParamsFormatVersion);
  put_le<std::uint64_t>(out, params.dim);
  put_le<std::uint64_t>(out, kClassCount);
  for (double w : params.weights) put_le<double>(out, w);
  for (double b : params.bias) put_le<double>(out, b);
  if (!out) throw IoError("error writing model checkpoint");
}

ModelParams read_params(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kParamsMagic) {
    throw IoError("not a model checkpoint (bad magic)");
  }
  if (get_le<std::uint32_t>(in) != kParamsFormatVersion) {
    throw IoError("unsupported checkpoint format version");
  }
  const auto dim = get_le<std::uint64_t>(in);
  const auto classes = get_le<std::uint64_t>(in);
  if (classes != kClassCount) throw IoError("checkpoint class count is not 2");
  if (dim == 0 || dim > (std::uint64_t{1} << 28)) throw IoError("implausible checkpoint dimension");
  ModelParams params = ModelParams::zeros(static_cast<std::size_t>(dim));
  for (double& w : params.weights) w = get_le<double>(in);
  for (double& b : params.bias) b = get_le<double>(in);
  return params;
}

void save_params(const std::filesystem::path& path, const ModelParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  write_params(out, params);
}

ModelParams load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return read_params(in);
}

}  // namespace fedhumor
