#include "ocfer/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numeric>
#include <ostream>
#include <thread>

#include "ocfer/ortho.hpp"
#include "ocfer/random.hpp"

namespace ocfer {

CrossEntropy softmax_cross_entropy(const Tensor& logits, int label) {
    const auto n = static_cast<int>(logits.size());
    if (label < 0 || label >= n) {
        throw std::invalid_argument("label " + std::to_string(label) + " outside 0.." + std::to_string(n - 1));
    }
    if (!logits.all_finite()) throw std::invalid_argument("cross entropy: non-finite logits");

    const double top = *std::max_element(logits.data().begin(), logits.data().end());
    double denom = 0.0;
    for (double v : logits.data()) denom += std::exp(v - top);
    const double log_denom = std::log(denom);

    CrossEntropy out;
    out.loss = log_denom - (logits[static_cast<std::size_t>(label)] - top);
    out.grad_logits = Tensor(logits.shape());
    for (std::size_t i = 0; i < logits.size(); ++i) out.grad_logits[i] = std::exp(logits[i] - top - log_denom);
    out.grad_logits[static_cast<std::size_t>(label)] -= 1.0;
    return out;
}

LossBreakdown total_loss(double task, double orth, double lambda) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be non-negative");
    return LossBreakdown{task, orth, task + lambda * orth};
}

double lr_at(std::size_t iteration, const TrainConfig& config) {
    const std::size_t steps = iteration / config.decay_every;
    double lr = config.lr0;
    // Repeated division: 0.01 / 10 / 10 == 0.0001 in binary64, 0.01 * 0.1^2 is not.
    for (std::size_t i = 0; i < steps; ++i) lr /= config.decay_factor;
    return lr;
}

void sgd_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, double lr) {
    if (params.size() != grads.size()) throw std::invalid_argument("sgd_step: parameter/gradient count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) axpy_inplace(-lr, grads[i], params[i]);
}

void sgd_step(std::vector<Parameter>& params, const std::vector<Tensor>& grads, double lr) {
    if (params.size() != grads.size()) throw std::invalid_argument("sgd_step: parameter/gradient count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) axpy_inplace(-lr, grads[i], params[i].value);
}

double model_ortho_loss(const Model& model, std::vector<Tensor>* grads, double lambda) {
    double total = 0.0;
    for (std::size_t li : model.ortho_layers()) {
        const Layer& layer = model.layers()[li];
        const Kernel kernel(model.parameters()[layer.weight].value);
        const OrthoSpec spec = OrthoSpec::for_layer(layer.kernel_size, layer.conv.stride);
        if (grads) {
            OrthoLossGrad lg = ortho_loss_and_grad(kernel, spec);
            if (!std::isfinite(lg.loss)) throw NonFiniteError(0, layer.name, "orthogonality loss");
            total += lg.loss;
            axpy_inplace(lambda, lg.grad, (*grads)[layer.weight]);
        } else {
            const double loss = ortho_loss(kernel, spec);
            if (!std::isfinite(loss)) throw NonFiniteError(0, layer.name, "orthogonality loss");
            total += loss;
        }
    }
    return total;
}

namespace {

std::string first_non_finite_layer(const Model& model, const Activations& acts) {
    for (std::size_t i = 1; i < acts.values.size(); ++i) {
        if (!acts.values[i].all_finite()) return model.layers()[i - 1].name;
    }
    return model.layers().back().name;
}

std::string layer_of_param(const Model& model, std::size_t param) {
    for (const auto& layer : model.layers()) {
        if (layer.weight == param || layer.bias == param) return layer.name;
    }
    return model.parameters()[param].name;
}

struct Partial {
    double loss = 0.0;
    std::vector<Tensor> grads;
};

void accumulate_samples(const Model& model, std::span<const Tensor> images, std::span<const int> labels,
                        std::size_t begin, std::size_t end, std::size_t iteration, Partial& out) {
    Activations acts;
    for (std::size_t i = begin; i < end; ++i) {
        const Tensor logits = model.forward(images[i], acts);
        if (!logits.all_finite()) {
            throw NonFiniteError(iteration, first_non_finite_layer(model, acts), "forward activations");
        }
        const CrossEntropy ce = softmax_cross_entropy(logits, labels[i]);
        out.loss += ce.loss;
        model.backward(acts, ce.grad_logits, out.grads);
    }
}

ObjectiveResult objective_at(const Model& model, std::span<const Tensor> images, std::span<const int> labels,
                             double lambda, std::size_t threads, std::size_t iteration) {
    if (images.size() != labels.size() || images.empty()) {
        throw std::invalid_argument("objective: need a non-empty batch with one label per image");
    }
    const std::size_t n = images.size();
    threads = std::clamp<std::size_t>(threads, 1, n);

    std::vector<Partial> parts(threads);
    for (auto& p : parts) p.grads = model.zero_grads();
    if (threads == 1) {
        accumulate_samples(model, images, labels, 0, n, iteration, parts[0]);
    } else {
        std::vector<std::exception_ptr> errors(threads);
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) {
            const std::size_t begin = n * t / threads, end = n * (t + 1) / threads;
            pool.emplace_back([&, t, begin, end] {
                try {
                    accumulate_samples(model, images, labels, begin, end, iteration, parts[t]);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
        for (std::size_t t = 1; t < threads; ++t) {
            parts[0].loss += parts[t].loss;
            for (std::size_t p = 0; p < parts[0].grads.size(); ++p) axpy_inplace(1.0, parts[t].grads[p], parts[0].grads[p]);
        }
    }

    ObjectiveResult result;
    result.grads = std::move(parts[0].grads);
    const auto batch = static_cast<double>(n);
    for (auto& g : result.grads)
        for (auto& v : g.data()) v /= batch;
    const double task = parts[0].loss / batch;

    double orth = 0.0;
    try {
        orth = model_ortho_loss(model, &result.grads, lambda);
    } catch (const NonFiniteError& e) {
        throw NonFiniteError(iteration, e.layer(), "orthogonality loss");
    }
    result.loss = total_loss(task, orth, lambda);
    if (!std::isfinite(result.loss.task)) throw NonFiniteError(iteration, model.layers().back().name, "task loss");

    for (std::size_t p = 0; p < result.grads.size(); ++p) {
        if (!result.grads[p].all_finite()) throw NonFiniteError(iteration, layer_of_param(model, p), "gradient");
    }
    return result;
}

}  // namespace

ObjectiveResult objective(const Model& model, std::span<const Tensor> images, std::span<const int> labels,
                          double lambda, std::size_t threads) {
    return objective_at(model, images, labels, lambda, threads, 0);
}

std::string format_metrics_line(const IterationRecord& r) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%zu\t%.17g\t%.17g\t%.17g\t%.17g", r.iteration, r.lr, r.loss.task, r.loss.orth,
                  r.loss.total);
    return buf;
}

TrainResult train(const TrainConfig& config, std::span<const Sample> split, Model& model,
                  const TrainOptions& options) {
    config.validate();
    if (split.empty()) throw std::invalid_argument("train: empty training split");
    model.set_ortho_layers(select_ortho_layers(model, config.ortho_policy));

    TrainConfig snapshot = config;
    snapshot.model = model.id();

    TrainResult result;
    std::size_t iteration = 0;
    std::vector<Tensor> images;
    std::vector<int> labels;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        for (const auto& batch : batch_iter(split.size(), config.batch_size, config.seed, epoch)) {
            images.clear();
            labels.clear();
            for (std::size_t idx : batch) {
                images.push_back(normalize(split[idx]));
                labels.push_back(split[idx].label);
            }
            ObjectiveResult obj = objective_at(model, images, labels, config.lambda, options.threads, iteration);

            IterationRecord record{iteration, lr_at(iteration, config), obj.loss};
            result.log.push_back(record);
            if (options.metrics) *options.metrics << format_metrics_line(record) << '\n';
            if (options.on_iteration) options.on_iteration(record);

            sgd_step(model.parameters(), obj.grads, record.lr);
            ++iteration;

            if (options.checkpoint_every && !options.checkpoint_path.empty() &&
                iteration % options.checkpoint_every == 0) {
                save_checkpoint(make_checkpoint(model, snapshot, iteration), options.checkpoint_path);
            }
        }
    }

    result.checkpoint = make_checkpoint(model, snapshot, iteration);
    if (!options.checkpoint_path.empty()) save_checkpoint(result.checkpoint, options.checkpoint_path);
    if (options.metrics) options.metrics->flush();
    return result;
}

GradCheckResult grad_check(const std::function<double(std::span<const double>)>& f, std::span<const double> params,
                           std::span<const double> analytic, double h, std::size_t max_coords, std::uint64_t seed,
                           double floor) {
    if (!(h > 0.0)) throw std::invalid_argument("grad_check: step must be positive");
    if (params.size() != analytic.size()) throw std::invalid_argument("grad_check: gradient size mismatch");

    std::vector<std::size_t> coords(params.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (max_coords < coords.size()) {
        Rng rng(seed);
        for (std::size_t i = 0; i < max_coords; ++i) {
            const auto j = i + static_cast<std::size_t>(rng.below(coords.size() - i));
            std::swap(coords[i], coords[j]);
        }
        coords.resize(max_coords);
    }

    GradCheckResult out;
    std::vector<double> theta(params.begin(), params.end());
    for (std::size_t i : coords) {
        const double saved = theta[i];
        theta[i] = saved + h;
        const double plus = f(theta);
        theta[i] = saved - h;
        const double minus = f(theta);
        theta[i] = saved;
        const double numeric = (plus - minus) / (2.0 * h);
        const double scale = std::max({std::abs(analytic[i]), std::abs(numeric), floor});
        const double rel = std::abs(analytic[i] - numeric) / scale;
        if (rel > out.max_rel_error || out.checked == 0) {
            out.max_rel_error = rel;
            out.worst_index = i;
        }
        ++out.checked;
    }
    return out;
}

}  // namespace ocfer
