#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace ocfer {

/// Training hyper-parameters. Defaults follow the published recipe: SGD with
/// batch 8, learning rate 0.01 divided by 10 every 10,000 iterations, 250
/// epochs, orthogonality weight 0.5.
struct TrainConfig {
    std::string model = "tiny_cnn";
    double lr0 = 0.01;
    std::size_t batch_size = 8;
    std::size_t epochs = 250;
    double decay_factor = 10.0;
    std::size_t decay_every = 10'000;
    double lambda = 0.5;
    std::uint64_t seed = 0;
    std::string ortho_policy = "all-conv";

    void validate() const;
    /// Stable textual form, used for hashing and reports.
    std::string describe() const;
    /// FNV-1a of describe(), as 16 hex digits.
    std::string hash() const;
    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

}  // namespace ocfer
