#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ocfer/data.hpp"
#include "ocfer/model.hpp"

namespace ocfer {

/// Rows are true labels, columns predictions, in AN DI FE HA SA SU NE order.
struct ConfusionMatrix {
    std::array<std::array<std::uint64_t, 7>, 7> counts{};

    std::uint64_t total() const;
    std::uint64_t trace() const;
    std::uint64_t row_total(std::size_t row) const;
    /// count / row total; rows with no samples are all zero.
    std::array<std::array<double, 7>, 7> row_normalized() const;

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct EvalResult {
    std::string split;
    double accuracy = 0.0;  // percent
    ConfusionMatrix matrix;
    std::size_t sample_count = 0;
    std::string config_hash;

    friend bool operator==(const EvalResult&, const EvalResult&) = default;
};

/// Index of the largest logit; ties go to the lowest index.
int predict_label(const Tensor& logits);

using LogitFn = std::function<Tensor(const Sample&)>;

EvalResult evaluate(const LogitFn& logits, std::span<const Sample> split, const std::string& split_name,
                    std::size_t threads = 1);
EvalResult evaluate(const Model& model, std::span<const Sample> split, const std::string& split_name,
                    std::size_t threads = 1);

/// Table of row-normalized values rounded half-up to two decimals. Values
/// that round to 0 or 1 print as "0" and "1".
std::string format_confusion(const ConfusionMatrix& matrix);
std::string format_cell(double value);

/// JSON report; accuracy is written with three decimals and recomputed from
/// the counts on load.
std::string report_json(std::span<const EvalResult> results);
std::vector<EvalResult> parse_report(const std::string& json);
void emit_report(std::span<const EvalResult> results, const std::string& path);
void emit_report(const EvalResult& result, const std::string& path);
std::vector<EvalResult> load_report(const std::string& path);

}  // namespace ocfer
