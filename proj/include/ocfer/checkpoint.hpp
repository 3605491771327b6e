#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ocfer/config.hpp"
#include "ocfer/model.hpp"
#include "ocfer/tensor.hpp"

namespace ocfer {

/// On-disk layout, all integers little-endian:
///
///   "OCFN" | version:u8
///   iteration:u64
///   config: model id, lr0:f64, batch:u64, epochs:u64, decay_factor:f64,
///           decay_every:u64, lambda:f64, seed:u64, ortho policy
///   tensor count:u32, then per tensor:
///     name | rank:u32 | extents:u64 x rank | values:f32 x product(extents)
///
/// Strings are u32 length followed by the bytes.
inline constexpr char kCheckpointMagic[4] = {'O', 'C', 'F', 'N'};
inline constexpr std::uint8_t kCheckpointVersion = 1;

struct NamedTensor {
    std::string name;
    Tensor value;
    friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

struct Checkpoint {
    std::uint64_t iteration = 0;
    TrainConfig config;
    std::vector<NamedTensor> tensors;

    const std::string& model_id() const noexcept { return config.model; }
    friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

Checkpoint make_checkpoint(const Model& model, const TrainConfig& config, std::uint64_t iteration);

/// Copies parameters into `model` by name; shapes and names must match exactly.
void restore_parameters(Model& model, const Checkpoint& checkpoint);

/// Builds the model named in the checkpoint and loads its parameters. The
/// regularized layer set is re-derived from the stored policy.
Model model_from_checkpoint(const Checkpoint& checkpoint);

std::string encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace ocfer
