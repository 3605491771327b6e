#include "ocfer/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace ocfer {

std::uint64_t ConfusionMatrix::total() const {
    std::uint64_t n = 0;
    for (const auto& row : counts)
        for (auto c : row) n += c;
    return n;
}

std::uint64_t ConfusionMatrix::trace() const {
    std::uint64_t n = 0;
    for (std::size_t i = 0; i < 7; ++i) n += counts[i][i];
    return n;
}

std::uint64_t ConfusionMatrix::row_total(std::size_t row) const {
    std::uint64_t n = 0;
    for (auto c : counts.at(row)) n += c;
    return n;
}

std::array<std::array<double, 7>, 7> ConfusionMatrix::row_normalized() const {
    std::array<std::array<double, 7>, 7> out{};
    for (std::size_t i = 0; i < 7; ++i) {
        const std::uint64_t t = row_total(i);
        if (t == 0) continue;
        for (std::size_t j = 0; j < 7; ++j) out[i][j] = static_cast<double>(counts[i][j]) / static_cast<double>(t);
    }
    return out;
}

int predict_label(const Tensor& logits) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i)
        if (logits[i] > logits[best]) best = i;
    return static_cast<int>(best);
}

namespace {

double accuracy_of(const ConfusionMatrix& m) {
    const std::uint64_t total = m.total();
    return total == 0 ? 0.0 : 100.0 * static_cast<double>(m.trace()) / static_cast<double>(total);
}

void check_rows(const ConfusionMatrix& m) {
    const auto norm = m.row_normalized();
    for (std::size_t i = 0; i < 7; ++i) {
        if (m.row_total(i) == 0) continue;
        double sum = 0.0;
        for (double v : norm[i]) sum += v;
        if (std::abs(sum - 1.0) > 1e-9) {
            throw std::logic_error("confusion row " + std::to_string(i) + " sums to " + std::to_string(sum));
        }
    }
}

}  // namespace

EvalResult evaluate(const LogitFn& logits, std::span<const Sample> split, const std::string& split_name,
                    std::size_t threads) {
    if (split.empty()) throw std::invalid_argument("evaluate: split '" + split_name + "' is empty");
    threads = std::clamp<std::size_t>(threads, 1, split.size());

    auto run = [&](std::size_t begin, std::size_t end, ConfusionMatrix& m) {
        for (std::size_t i = begin; i < end; ++i) {
            const int predicted = predict_label(logits(split[i]));
            m.counts[static_cast<std::size_t>(split[i].label)][static_cast<std::size_t>(predicted)] += 1;
        }
    };

    std::vector<ConfusionMatrix> parts(threads);
    if (threads == 1) {
        run(0, split.size(), parts[0]);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(threads);
        for (std::size_t t = 0; t < threads; ++t) {
            pool.emplace_back([&, t] {
                try {
                    run(split.size() * t / threads, split.size() * (t + 1) / threads, parts[t]);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    EvalResult r;
    r.split = split_name;
    for (const auto& p : parts)
        for (std::size_t i = 0; i < 7; ++i)
            for (std::size_t j = 0; j < 7; ++j) r.matrix.counts[i][j] += p.counts[i][j];
    r.sample_count = split.size();
    r.accuracy = accuracy_of(r.matrix);
    if (r.matrix.total() != r.sample_count) throw std::logic_error("confusion counts do not match sample count");
    check_rows(r.matrix);
    return r;
}

EvalResult evaluate(const Model& model, std::span<const Sample> split, const std::string& split_name,
                    std::size_t threads) {
    return evaluate([&model](const Sample& s) { return model.forward(normalize(s)); }, split, split_name, threads);
}

std::string format_cell(double value) {
    const double rounded = std::floor(value * 100.0 + 0.5 + 1e-9) / 100.0;
    if (rounded == 0.0) return "0";
    if (rounded == 1.0) return "1";
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.2f", rounded);
    return buf;
}

std::string format_confusion(const ConfusionMatrix& matrix) {
    const auto norm = matrix.row_normalized();
    std::ostringstream os;
    os << "  ";
    for (auto name : kClassAbbrev) os << ' ' << std::string(5 - name.size(), ' ') << name;
    os << '\n';
    for (std::size_t i = 0; i < 7; ++i) {
        os << kClassAbbrev[i];
        for (std::size_t j = 0; j < 7; ++j) {
            const std::string cell = format_cell(norm[i][j]);
            os << ' ' << std::string(cell.size() < 5 ? 5 - cell.size() : 0, ' ') << cell;
        }
        os << '\n';
    }
    return os.str();
}

std::string report_json(std::span<const EvalResult> results) {
    std::ostringstream os;
    os.precision(17);
    os << "{\n  \"results\": [";
    for (std::size_t r = 0; r < results.size(); ++r) {
        const EvalResult& res = results[r];
        char acc[32];
        std::snprintf(acc, sizeof acc, "%.3f", res.accuracy);
        os << (r ? ",\n" : "\n") << "    {\n";
        os << "      \"split\": " << nlohmann::json(res.split).dump() << ",\n";
        os << "      \"accuracy\": " << acc << ",\n";
        os << "      \"sample_count\": " << res.sample_count << ",\n";
        os << "      \"config_hash\": " << nlohmann::json(res.config_hash).dump() << ",\n";
        os << "      \"labels\": [";
        for (std::size_t i = 0; i < 7; ++i) os << (i ? ", " : "") << '"' << kClassAbbrev[i] << '"';
        os << "],\n      \"counts\": [";
        for (std::size_t i = 0; i < 7; ++i) {
            os << (i ? ",\n                 [" : "[");
            for (std::size_t j = 0; j < 7; ++j) os << (j ? ", " : "") << res.matrix.counts[i][j];
            os << ']';
        }
        os << "],\n      \"row_normalized\": [";
        const auto norm = res.matrix.row_normalized();
        for (std::size_t i = 0; i < 7; ++i) {
            os << (i ? ",\n                         [" : "[");
            for (std::size_t j = 0; j < 7; ++j) os << (j ? ", " : "") << norm[i][j];
            os << ']';
        }
        os << "]\n    }";
    }
    os << "\n  ]\n}\n";
    return os.str();
}

std::vector<EvalResult> parse_report(const std::string& text) {
    std::vector<EvalResult> out;
    try {
        const auto doc = nlohmann::json::parse(text);
        for (const auto& item : doc.at("results")) {
            EvalResult r;
            r.split = item.at("split").get<std::string>();
            r.sample_count = item.at("sample_count").get<std::size_t>();
            r.config_hash = item.at("config_hash").get<std::string>();
            const auto& counts = item.at("counts");
            if (counts.size() != 7) throw std::runtime_error("counts must be 7x7");
            for (std::size_t i = 0; i < 7; ++i) {
                if (counts[i].size() != 7) throw std::runtime_error("counts must be 7x7");
                for (std::size_t j = 0; j < 7; ++j) r.matrix.counts[i][j] = counts[i][j].get<std::uint64_t>();
            }
            r.accuracy = accuracy_of(r.matrix);
            out.push_back(std::move(r));
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("malformed report: ") + e.what());
    }
    return out;
}

void emit_report(std::span<const EvalResult> results, const std::string& path) {
    if (path.empty()) throw std::invalid_argument("report path is empty");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write report '" + path + "'");
    out << report_json(results);
    if (!out) throw std::runtime_error("write failed for report '" + path + "'");
}

void emit_report(const EvalResult& result, const std::string& path) {
    emit_report(std::span<const EvalResult>(&result, 1), path);
}

std::vector<EvalResult> load_report(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open report '" + path + "'");
    return parse_report(std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()));
}

}  // namespace ocfer
