#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ocfer/model.hpp"

namespace ocfer {

/// Geometry of one randomized kernel in a verification sweep.
struct KernelCase {
    std::size_t m = 1, c = 1, k = 1, stride = 1;
    std::uint64_t seed = 0;
    std::string describe() const;
};

/// Random kernel case drawn from (seed, index): M, C in 1..max_channels,
/// k in 1..max_k, stride in {1, 2}.
KernelCase random_kernel_case(std::uint64_t seed, std::uint64_t index, std::size_t max_channels, std::size_t max_k);
Kernel random_kernel(const KernelCase& kc);

struct CaseOutcome {
    KernelCase kernel;
    double error = 0.0;
};

struct OrthoSweepReport {
    double toeplitz_max = 0.0;
    double grad_max = 0.0;
    std::vector<CaseOutcome> toeplitz_failures;
    std::vector<CaseOutcome> grad_failures;
    bool passed() const { return toeplitz_failures.empty() && grad_failures.empty(); }
};

struct OrthoSweepOptions {
    std::uint64_t seed = 0;
    std::size_t toeplitz_cases = 50;
    std::size_t grad_cases = 100;
    std::size_t input_side = 8;
    double toeplitz_tol = 1e-10;
    double grad_tol = 1e-6;
    double fd_step = 1e-5;
    /// Test hook: perturbs the self-convolution and gradient before comparison.
    bool inject_fault = false;
};

/// Toeplitz-oracle sweep (M, C <= 4, k <= 3) and finite-difference sweep of
/// the orthogonality gradient (M, C <= 3, k <= 3).
OrthoSweepReport run_ortho_sweep(const OrthoSweepOptions& options);

/// Relative-error floors for gradient checks. Central differences carry an
/// absolute rounding error of roughly eps * |f| / h, so entries smaller than
/// the floor are held to an absolute bound of tol * floor instead. The full
/// objective includes the summed orthogonality loss (|f| in the tens), hence
/// the larger floor there.
inline constexpr double kKernelGradFloor = 1e-6;
inline constexpr double kModelGradFloor = 1e-3;

struct ModelGradCheckOptions {
    std::string model = "tiny_cnn";
    std::string ortho_policy = "all-conv";
    double lambda = 0.5;
    std::uint64_t seed = 0;
    std::size_t coords = 50;
    double fd_step = 1e-5;
};

/// Finite-difference check of the full objective (cross-entropy plus
/// weighted orthogonality loss) on one random image. Coordinates whose
/// +-h probes flip a rectifier or max-pool choice are skipped and counted.
struct ModelGradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_parameter;
    std::size_t checked = 0;
    std::size_t skipped = 0;
};

ModelGradCheckReport model_grad_check(const ModelGradCheckOptions& options);

}  // namespace ocfer
