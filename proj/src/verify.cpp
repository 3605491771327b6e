#include "ocfer/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "ocfer/data.hpp"
#include "ocfer/ortho.hpp"
#include "ocfer/random.hpp"
#include "ocfer/train.hpp"

namespace ocfer {

std::string KernelCase::describe() const {
    std::ostringstream os;
    os << "(M=" << m << ", C=" << c << ", k=" << k << ", S=" << stride << ", seed=" << seed << ")";
    return os.str();
}

KernelCase random_kernel_case(std::uint64_t seed, std::uint64_t index, std::size_t max_channels, std::size_t max_k) {
    Rng rng(seed, index);
    KernelCase kc;
    kc.m = 1 + static_cast<std::size_t>(rng.below(max_channels));
    kc.c = 1 + static_cast<std::size_t>(rng.below(max_channels));
    kc.k = 1 + static_cast<std::size_t>(rng.below(max_k));
    kc.stride = 1 + static_cast<std::size_t>(rng.below(2));
    kc.seed = rng.next();
    return kc;
}

Kernel random_kernel(const KernelCase& kc) {
    Rng rng(kc.seed);
    Tensor w({kc.m, kc.c, kc.k, kc.k});
    for (auto& v : w.data()) v = rng.uniform(-1.0, 1.0);
    return Kernel(std::move(w));
}

OrthoSweepReport run_ortho_sweep(const OrthoSweepOptions& options) {
    OrthoSweepReport report;

    for (std::size_t i = 0; i < options.toeplitz_cases; ++i) {
        const KernelCase kc = random_kernel_case(options.seed, i, 4, 3);
        const Kernel kernel = random_kernel(kc);
        const OrthoSpec spec = OrthoSpec::for_layer(kc.k, kc.stride);
        Tensor z = self_convolution(kernel, spec);
        if (options.inject_fault) z.at(0, 0, spec.center(), spec.center()) += 1e-6;
        const double d = toeplitz_interior_check(kernel, z, spec, options.input_side, options.input_side);
        report.toeplitz_max = std::max(report.toeplitz_max, d);
        if (!(d <= options.toeplitz_tol)) report.toeplitz_failures.push_back({kc, d});
    }

    for (std::size_t i = 0; i < options.grad_cases; ++i) {
        const KernelCase kc = random_kernel_case(options.seed ^ 0x9e3779b97f4a7c15ULL, i, 3, 3);
        const Kernel kernel = random_kernel(kc);
        const OrthoSpec spec = OrthoSpec::for_layer(kc.k, kc.stride);
        Tensor analytic = ortho_loss_grad(kernel, spec);
        if (options.inject_fault) {
            for (auto& v : analytic.data()) v *= 1.0 + 1e-4;
        }
        const Shape shape = kernel.weights().shape();
        auto f = [&](std::span<const double> theta) {
            return ortho_loss(Kernel(Tensor(shape, std::vector<double>(theta.begin(), theta.end()))), spec);
        };
        const GradCheckResult r =
            grad_check(f, kernel.weights().data(), analytic.data(), options.fd_step, SIZE_MAX, 0, kKernelGradFloor);
        report.grad_max = std::max(report.grad_max, r.max_rel_error);
        if (!(r.max_rel_error <= options.grad_tol)) report.grad_failures.push_back({kc, r.max_rel_error});
    }
    return report;
}

namespace {

// Which side of every rectifier and max-pool switch the forward pass took.
// A central difference across a switch samples a kink, not a derivative.
std::vector<std::uint32_t> activation_pattern(const Model& model, const Activations& acts) {
    std::vector<std::uint32_t> out;
    for (std::size_t li = 0; li < model.layers().size(); ++li) {
        const LayerKind kind = model.layers()[li].kind;
        if (kind == LayerKind::relu) {
            for (double v : acts.values[li + 1].data()) out.push_back(v > 0.0 ? 1u : 0u);
        } else if (kind == LayerKind::max_pool) {
            for (auto a : acts.pool_argmax[li]) out.push_back(a);
        }
    }
    return out;
}

}  // namespace

ModelGradCheckReport model_grad_check(const ModelGradCheckOptions& options) {
    Model model = build_model(options.model, options.seed);
    model.set_ortho_layers(select_ortho_layers(model, options.ortho_policy));

    // Continuous random pixels: quantized images put exact zeros and ties at
    // rectifier and max-pool kinks, where central differences are meaningless.
    Rng rng(options.seed, 0x5eed);
    Tensor image({1, kImageSide, kImageSide});
    for (auto& v : image.data()) v = rng.uniform();
    const int label = static_cast<int>(rng.below(kNumClasses));

    const ObjectiveResult obj = objective(model, std::span(&image, 1), std::span(&label, 1), options.lambda);

    // Flat views of parameters and gradients, with owning parameter per slot.
    std::vector<double> theta, analytic;
    std::vector<std::size_t> owner;
    for (std::size_t p = 0; p < model.parameters().size(); ++p) {
        const auto& v = model.parameters()[p].value.data();
        theta.insert(theta.end(), v.begin(), v.end());
        const auto& g = obj.grads[p].data();
        analytic.insert(analytic.end(), g.begin(), g.end());
        owner.insert(owner.end(), v.size(), p);
    }

    Model probe = model;
    auto evaluate = [&](std::span<const double> flat, std::vector<std::uint32_t>& pattern) {
        std::size_t offset = 0;
        for (auto& param : probe.parameters()) {
            auto dst = param.value.data();
            std::copy(flat.begin() + static_cast<std::ptrdiff_t>(offset),
                      flat.begin() + static_cast<std::ptrdiff_t>(offset + dst.size()), dst.begin());
            offset += dst.size();
        }
        Activations acts;
        const double task = softmax_cross_entropy(probe.forward(image, acts), label).loss;
        pattern = activation_pattern(probe, acts);
        return total_loss(task, model_ortho_loss(probe), options.lambda).total;
    };

    std::vector<std::uint32_t> base, plus_pattern, minus_pattern;
    evaluate(theta, base);

    std::vector<std::size_t> order(theta.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng pick(options.seed);
    ModelGradCheckReport report;
    std::size_t worst = 0;
    const double h = options.fd_step;
    for (std::size_t n = 0; n < order.size() && report.checked < options.coords; ++n) {
        std::swap(order[n], order[n + static_cast<std::size_t>(pick.below(order.size() - n))]);
        const std::size_t i = order[n];
        const double saved = theta[i];
        theta[i] = saved + h;
        const double plus = evaluate(theta, plus_pattern);
        theta[i] = saved - h;
        const double minus = evaluate(theta, minus_pattern);
        theta[i] = saved;
        if (plus_pattern != base || minus_pattern != base) {
            ++report.skipped;
            continue;
        }
        const double numeric = (plus - minus) / (2.0 * h);
        const double scale = std::max({std::abs(analytic[i]), std::abs(numeric), kModelGradFloor});
        const double rel = std::abs(analytic[i] - numeric) / scale;
        if (rel > report.max_rel_error || report.checked == 0) {
            report.max_rel_error = rel;
            worst = i;
        }
        ++report.checked;
    }
    if (report.checked) report.worst_parameter = model.parameters()[owner[worst]].name;
    return report;
}

}  // namespace ocfer
