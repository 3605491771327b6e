#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ocfer/tensor.hpp"

namespace ocfer {

inline constexpr std::size_t kPixelCount = 48 * 48;

/// FER2013 label order: 0=Angry 1=Disgust 2=Fear 3=Happy 4=Sad 5=Surprise 6=Neutral.
inline constexpr std::array<std::string_view, 7> kClassAbbrev{"AN", "DI", "FE", "HA", "SA", "SU", "NE"};
inline constexpr std::array<std::string_view, 7> kClassName{"Angry", "Disgust", "Fear", "Happy",
                                                             "Sad",   "Surprise", "Neutral"};

enum class Usage { training, public_test, private_test };

std::string_view usage_name(Usage usage);
Usage parse_usage(std::string_view name);

struct Sample {
    std::array<std::uint8_t, kPixelCount> pixels{};
    int label = 0;
    Usage usage = Usage::training;

    friend bool operator==(const Sample&, const Sample&) = default;
};

struct Dataset {
    std::vector<Sample> samples;

    std::size_t count(Usage usage) const;
    friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Malformed input; line() is 1-based and counts the header.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Reads the "emotion,pixels,Usage" CSV distribution of FER2013.
Dataset load_fer_csv(const std::string& path);
Dataset parse_fer_csv(std::istream& in);

/// Writes the same format load_fer_csv reads.
void write_fer_csv(const Dataset& dataset, std::ostream& out);
void write_fer_csv(const Dataset& dataset, const std::string& path);

struct Splits {
    std::vector<Sample> train;
    std::vector<Sample> public_test;
    std::vector<Sample> private_test;
};

Splits partition_by_usage(const Dataset& dataset);

/// First `per_class` samples of each label, original order preserved.
std::vector<Sample> first_n_per_class(std::span<const Sample> split, std::size_t per_class);

/// Pixels scaled to [0, 1]; shape [1, 48, 48].
Tensor normalize(const Sample& sample);

/// Seeded permutation of [0, n) for (seed, epoch), chunked into batches of
/// `batch_size`; the last batch may be short.
std::vector<std::vector<std::size_t>> batch_iter(std::size_t n, std::size_t batch_size, std::uint64_t seed,
                                                 std::uint64_t epoch);

/// Procedural stand-in for FER2013 when the real file is unavailable: bright
/// 48x48 line drawings of faces on a dark ground. Mouth, brow and eye geometry
/// depend on the label; position, scale, brightness and noise are random.
Sample synthesize_sample(int label, Usage usage, std::uint64_t seed, std::uint64_t index);

/// `train_per_class` Training and `test_per_class` PublicTest and PrivateTest
/// samples per label, interleaved by label.
Dataset synthesize_fer(std::size_t train_per_class, std::size_t test_per_class, std::uint64_t seed);

}  // namespace ocfer
