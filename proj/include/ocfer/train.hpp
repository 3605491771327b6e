#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ocfer/checkpoint.hpp"
#include "ocfer/config.hpp"
#include "ocfer/data.hpp"
#include "ocfer/model.hpp"
#include "ocfer/tensor.hpp"

namespace ocfer {

/// L = task + lambda * orth.
struct LossBreakdown {
    double task = 0.0;
    double orth = 0.0;
    double total = 0.0;
};

struct CrossEntropy {
    double loss = 0.0;
    Tensor grad_logits;
};

/// -log softmax(logits)[label] with max subtraction; gradient softmax - onehot.
CrossEntropy softmax_cross_entropy(const Tensor& logits, int label);

LossBreakdown total_loss(double task, double orth, double lambda);

/// lr0 / decay_factor^floor(iteration / decay_every).
double lr_at(std::size_t iteration, const TrainConfig& config);

/// p <- p - lr * g for every tensor pair.
void sgd_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, double lr);
void sgd_step(std::vector<Parameter>& params, const std::vector<Tensor>& grads, double lr);

/// Raised when a loss or gradient stops being finite.
class NonFiniteError : public std::runtime_error {
public:
    NonFiniteError(std::size_t iteration, std::string layer, const std::string& what)
        : std::runtime_error("non-finite value at iteration " + std::to_string(iteration) + " in layer '" + layer +
                             "': " + what),
          iteration_(iteration),
          layer_(std::move(layer)) {}
    std::size_t iteration() const noexcept { return iteration_; }
    const std::string& layer() const noexcept { return layer_; }

private:
    std::size_t iteration_;
    std::string layer_;
};

/// Summed orthogonality loss over the model's regularized layers, in layer
/// order. With `grads`, lambda * dL_orth/dK is added to the matching buffers.
double model_ortho_loss(const Model& model, std::vector<Tensor>* grads = nullptr, double lambda = 1.0);

struct ObjectiveResult {
    LossBreakdown loss;
    std::vector<Tensor> grads;
};

/// Mean cross-entropy over `images` plus lambda times the summed orthogonality
/// loss, with the full parameter gradient. `threads` > 1 splits the batch
/// into contiguous chunks whose gradients are reduced in chunk order.
ObjectiveResult objective(const Model& model, std::span<const Tensor> images, std::span<const int> labels,
                          double lambda, std::size_t threads = 1);

struct IterationRecord {
    std::size_t iteration = 0;
    double lr = 0.0;
    LossBreakdown loss;
};

/// One metrics-log line: iteration, lr, task, orth, total, tab-separated.
std::string format_metrics_line(const IterationRecord& record);

struct TrainOptions {
    std::size_t threads = 1;
    std::ostream* metrics = nullptr;
    std::string checkpoint_path;
    std::size_t checkpoint_every = 0;
    std::function<void(const IterationRecord&)> on_iteration;
};

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<IterationRecord> log;
};

/// Runs config.epochs epochs of minibatch SGD on `split`, updating `model`
/// in place. The regularized layers are re-selected from config.ortho_policy.
/// Throws NonFiniteError as soon as a loss or gradient is not finite.
TrainResult train(const TrainConfig& config, std::span<const Sample> split, Model& model,
                  const TrainOptions& options = {});

/// Largest relative error between `analytic` and central differences of `f`
/// over up to `max_coords` coordinates (all when max_coords >= size), chosen
/// by a seeded sample. Relative error is |a - n| / max(|a|, |n|, floor).
struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t worst_index = 0;
    std::size_t checked = 0;
};

GradCheckResult grad_check(const std::function<double(std::span<const double>)>& f, std::span<const double> params,
                           std::span<const double> analytic, double h, std::size_t max_coords = SIZE_MAX,
                           std::uint64_t seed = 0, double floor = 1e-8);

}  // namespace ocfer

