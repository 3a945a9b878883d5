#pragma once

// Two-class linear softmax classifier with the prior-scaled probability
// transforms used for personalized training and inference.
//
// Training transform (per client, priors pi, exponent beta):
//     q = softmax( p[y] / pi[y]^beta )
// Inference transform:
//     q = softmax( p[y] * pi[y]^beta )
// where p = softmax(W x + b). Both act on probabilities, not logits.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "fedhumor/labeling.hpp"

namespace fedhumor {

inline constexpr std::size_t kClassCount = 2;

using Probabilities = std::array<double, kClassCount>;

/// weights: kClassCount x dim, row-major; bias: one entry per class.
struct ModelParams {
  std::size_t dim = 0;
  std::vector<double> weights;
  std::array<double, kClassCount> bias{0.0, 0.0};

  static ModelParams zeros(std::size_t dim);

  std::span<const double> row(std::size_t label) const noexcept {
    return {weights.data() + label * dim, dim};
  }
  std::span<double> row(std::size_t label) noexcept { return {weights.data() + label * dim, dim}; }

  bool all_finite() const noexcept;
  bool same_shape(const ModelParams& other) const noexcept {
    return dim == other.dim && weights.size() == other.weights.size();
  }

  bool operator==(const ModelParams&) const = default;
};

/// Max-subtracted softmax over two arguments.
Probabilities softmax(const std::array<double, kClassCount>& args) noexcept;

/// softmax(W x + b). Throws NumericError on non-finite logits.
Probabilities forward(const ModelParams& params, std::span<const double> x);

/// softmax(prob[y] / priors[y]^beta). Throws DomainError if a prior is outside (0, 1).
Probabilities scale_train(const Probabilities& prob, const ClassPriors& priors, double beta);

/// softmax(prob[y] * priors[y]^beta). Throws DomainError if a prior is outside (0, 1).
Probabilities scale_infer(const Probabilities& prob, const ClassPriors& priors, double beta);

/// Index of the larger entry; ties go to class 0.
int argmax(const Probabilities& prob) noexcept;

enum class LossKind {
  plain_nll,       // -log softmax(Wx+b)[t]; no prior scaling
  scaled_nll,      // -log q[t], q from scale_train
  scaled_literal,  // -(log q[0] + log q[1]); label-independent, kept for comparison
};

struct LossConfig {
  LossKind kind = LossKind::scaled_nll;
  ClassPriors priors;
  double beta = 0.0;
};

struct LabeledExample {
  std::span<const double> x;
  int label = 0;
};

struct LossAndGrad {
  double loss = 0.0;
  ModelParams grad;
};

/// Mean loss over the batch and its exact gradient.
/// Throws DomainError for an empty batch or a non-binary label, NumericError
/// if any intermediate is not finite.
LossAndGrad loss_and_grad(const ModelParams& params, std::span<const LabeledExample> batch,
                          const LossConfig& config);

/// Loss only; same conventions as loss_and_grad.
double loss_value(const ModelParams& params, std::span<const LabeledExample> batch,
                  const LossConfig& config);

/// Scratch-reusing variant for training loops: writes the gradient into `grad`
/// (reshaped as needed) and returns the loss.
double loss_and_grad_into(const ModelParams& params, std::span<const LabeledExample> batch,
                          const LossConfig& config, ModelParams& grad);

/// params - eta * grad. Throws DomainError unless eta >= 0 and shapes match.
ModelParams sgd_step(const ModelParams& params, const ModelParams& grad, double eta);

/// In-place params -= eta * grad.
void apply_sgd_step(ModelParams& params, const ModelParams& grad, double eta);

// Checkpoint format, all little-endian:
//   char[4]  magic "FHMP"
//   uint32   format version (1)
//   uint64   feature dimension D
//   uint64   class count (2)
//   double   weights[class_count * D]  (row-major, class-major)
//   double   bias[class_count]
inline constexpr std::array<char, 4> kParamsMagic{'F', 'H', 'M', 'P'};
inline constexpr std::uint32_t kParamsFormatVersion = 1;

void write_params(std::ostream& out, const ModelParams& params);
ModelParams read_params(std::istream& in);
void save_params(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_params(const std::filesystem::path& path);

}  // namespace fedhumor
