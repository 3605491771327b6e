#include "ocfer/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>

#include "ocfer/random.hpp"

namespace ocfer {

std::string_view usage_name(Usage usage) {
    switch (usage) {
        case Usage::training: return "Training";
        case Usage::public_test: return "PublicTest";
        case Usage::private_test: return "PrivateTest";
    }
    return "?";
}

Usage parse_usage(std::string_view name) {
    if (name == "Training") return Usage::training;
    if (name == "PublicTest") return Usage::public_test;
    if (name == "PrivateTest") return Usage::private_test;
    throw std::invalid_argument("unknown usage '" + std::string(name) + "'");
}

std::size_t Dataset::count(Usage usage) const {
    return static_cast<std::size_t>(
        std::count_if(samples.begin(), samples.end(), [usage](const Sample& s) { return s.usage == usage; }));
}

namespace {

Sample parse_row(std::string_view row, std::size_t line_no) {
    if (!row.empty() && row.back() == '\r') row.remove_suffix(1);
    const auto c1 = row.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : row.find(',', c1 + 1);
    if (c2 == std::string_view::npos || row.find(',', c2 + 1) != std::string_view::npos) {
        throw ParseError(line_no, "expected 3 comma-separated columns");
    }
    const std::string_view label_field = row.substr(0, c1);
    const std::string_view pixel_field = row.substr(c1 + 1, c2 - c1 - 1);
    const std::string_view usage_field = row.substr(c2 + 1);

    Sample s;
    int label = -1;
    auto [lp, lec] = std::from_chars(label_field.data(), label_field.data() + label_field.size(), label);
    if (lec != std::errc{} || lp != label_field.data() + label_field.size()) {
        throw ParseError(line_no, "label '" + std::string(label_field) + "' is not an integer");
    }
    if (label < 0 || label > 6) throw ParseError(line_no, "label " + std::to_string(label) + " out of range 0..6");
    s.label = label;

    std::size_t count = 0;
    const char* p = pixel_field.data();
    const char* end = p + pixel_field.size();
    while (true) {
        int v = -1;
        auto [np, ec] = std::from_chars(p, end, v);
        if (ec != std::errc{} || np == p) {
            throw ParseError(line_no, "pixel " + std::to_string(count) + " is not an integer");
        }
        if (v < 0 || v > 255) throw ParseError(line_no, "pixel value " + std::to_string(v) + " out of range");
        if (count == kPixelCount) {
            throw ParseError(line_no, "more than " + std::to_string(kPixelCount) + " pixels");
        }
        s.pixels[count++] = static_cast<std::uint8_t>(v);
        p = np;
        if (p == end) break;
        if (*p != ' ') throw ParseError(line_no, "unexpected character in pixel list");
        ++p;
    }
    if (count != kPixelCount) {
        throw ParseError(line_no, "expected " + std::to_string(kPixelCount) + " pixels, got " + std::to_string(count));
    }

    try {
        s.usage = parse_usage(usage_field);
    } catch (const std::invalid_argument&) {
        throw ParseError(line_no, "unknown usage '" + std::string(usage_field) + "'");
    }
    return s;
}

}  // namespace

Dataset parse_fer_csv(std::istream& in) {
    Dataset ds;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1) continue;  // header
        if (line.empty() || line == "\r") continue;
        ds.samples.push_back(parse_row(line, line_no));
    }
    return ds;
}

Dataset load_fer_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open dataset '" + path + "'");
    return parse_fer_csv(in);
}

void write_fer_csv(const Dataset& dataset, std::ostream& out) {
    out << "emotion,pixels,Usage\n";
    for (const auto& s : dataset.samples) {
        out << s.label << ',';
        for (std::size_t i = 0; i < kPixelCount; ++i) {
            if (i) out << ' ';
            out << static_cast<int>(s.pixels[i]);
        }
        out << ',' << usage_name(s.usage) << '\n';
    }
}

void write_fer_csv(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write dataset '" + path + "'");
    write_fer_csv(dataset, out);
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

Splits partition_by_usage(const Dataset& dataset) {
    Splits out;
    for (const auto& s : dataset.samples) {
        switch (s.usage) {
            case Usage::training: out.train.push_back(s); break;
            case Usage::public_test: out.public_test.push_back(s); break;
            case Usage::private_test: out.private_test.push_back(s); break;
        }
    }
    return out;
}

std::vector<Sample> first_n_per_class(std::span<const Sample> split, std::size_t per_class) {
    std::array<std::size_t, 7> taken{};
    std::vector<Sample> out;
    for (const auto& s : split) {
        auto& t = taken[static_cast<std::size_t>(s.label)];
        if (t < per_class) {
            ++t;
            out.push_back(s);
        }
    }
    return out;
}

Tensor normalize(const Sample& sample) {
    Tensor t({1, 48, 48});
    for (std::size_t i = 0; i < kPixelCount; ++i) t[i] = static_cast<double>(sample.pixels[i]) / 255.0;
    return t;
}

std::vector<std::vector<std::size_t>> batch_iter(std::size_t n, std::size_t batch_size, std::uint64_t seed,
                                                 std::uint64_t epoch) {
    if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed, epoch);
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i));
        std::swap(order[i - 1], order[j]);
    }
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t stop = std::min(n, start + batch_size);
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(stop));
    }
    return batches;
}

// ---- synthetic faces ----

namespace {

class Canvas {
public:
    explicit Canvas(double background) { px_.fill(background); }

    void fill_ellipse(double cx, double cy, double rx, double ry, double value) {
        for (int y = 0; y < 48; ++y) {
            for (int x = 0; x < 48; ++x) {
                const double dx = (x + 0.5 - cx) / rx, dy = (y + 0.5 - cy) / ry;
                const double r = std::sqrt(dx * dx + dy * dy);
                // one-pixel soft edge
                const double edge = std::clamp((1.0 - r) * std::min(rx, ry) + 0.5, 0.0, 1.0);
                px_[static_cast<std::size_t>(y * 48 + x)] += edge * (value - px_[static_cast<std::size_t>(y * 48 + x)]);
            }
        }
    }

    // Stroke through points sampled from f(t), t in [-1, 1].
    template <typename F>
    void stroke(F&& f, double half_width, double value) {
        constexpr int kSteps = 48;
        std::array<std::pair<double, double>, kSteps + 1> pts;
        for (int i = 0; i <= kSteps; ++i) pts[static_cast<std::size_t>(i)] = f(-1.0 + 2.0 * i / kSteps);
        for (int y = 0; y < 48; ++y) {
            for (int x = 0; x < 48; ++x) {
                double best = 1e9;
                for (const auto& [qx, qy] : pts) {
                    const double dx = x + 0.5 - qx, dy = y + 0.5 - qy;
                    best = std::min(best, dx * dx + dy * dy);
                }
                const double edge = std::clamp(half_width + 0.5 - std::sqrt(best), 0.0, 1.0);
                auto& p = px_[static_cast<std::size_t>(y * 48 + x)];
                p += edge * (value - p);
            }
        }
    }

    std::array<double, kPixelCount>& pixels() { return px_; }

private:
    std::array<double, kPixelCount> px_{};
};

struct Expression {
    double mouth_bend;   // >0 corners up
    double mouth_open;   // vertical opening of the mouth
    double mouth_width;
    double mouth_tilt;   // asymmetric corner lift
    double brow_slant;   // >0 inner ends lowered
    double brow_raise;
    double eye_open;
};

constexpr std::array<Expression, 7> kExpressions{{
    {-0.5, 0.0, 6.0, 0.0, 3.0, -1.0, 0.6},   // angry
    {0.5, 0.0, 5.0, 2.5, 1.5, -0.5, 0.5},    // disgust
    {-0.5, 2.0, 7.0, 0.0, -2.0, 2.5, 1.4},   // fear
    {3.5, 0.5, 8.0, 0.0, 0.0, 0.5, 0.8},     // happy
    {-3.0, 0.0, 6.0, 0.0, -2.5, 0.5, 0.8},   // sad
    {0.0, 4.5, 3.5, 0.0, 0.0, 3.5, 1.5},     // surprise
    {0.0, 0.0, 6.0, 0.0, 0.0, 0.0, 1.0},     // neutral
}};

}  // namespace

Sample synthesize_sample(int label, Usage usage, std::uint64_t seed, std::uint64_t index) {
    if (label < 0 || label > 6) throw std::invalid_argument("synthetic label out of range");
    Rng rng(seed, index);
    const Expression& e = kExpressions[static_cast<std::size_t>(label)];
    auto jitter = [&](double amount) { return rng.uniform(-amount, amount); };

    const double skin = rng.uniform(20.0, 50.0);
    const double dark = skin + rng.uniform(190.0, 220.0);
    Canvas canvas(rng.uniform(0.0, 20.0));

    const double cx = 24.0 + jitter(3.0), cy = 25.0 + jitter(3.0);
    const double scale = rng.uniform(0.88, 1.12);
    canvas.fill_ellipse(cx, cy, 17.0 * scale, 21.0 * scale, skin);

    // eyes and brows
    for (int side = -1; side <= 1; side += 2) {
        const double ex = cx + side * 7.0 * scale, ey = cy - 5.0 * scale;
        const double open = std::max(0.3, e.eye_open + jitter(0.2));
        canvas.fill_ellipse(ex, ey, 3.0 * scale, 1.8 * open * scale, dark);
        const double by = ey - (4.5 + e.brow_raise + jitter(0.5)) * scale;
        const double slant = (e.brow_slant + jitter(0.5)) * scale;
        canvas.stroke(
            [&](double t) {
                // t=-1 at the inner end, t=+1 at the outer end
                const double x = ex + side * 4.0 * scale * t;
                return std::pair{x, by + slant * (-t) * 0.5};
            },
            2.0 * scale, dark);
    }

    // mouth
    const double mx = cx + jitter(1.0), my = cy + 10.0 * scale + jitter(1.0);
    const double half = (e.mouth_width + jitter(0.8)) * scale;
    const double bend = (e.mouth_bend + jitter(0.6)) * scale;
    const double tilt = (e.mouth_tilt + jitter(0.5)) * scale;
    const double open = std::max(0.0, e.mouth_open + jitter(0.5)) * scale;
    if (open > 0.8) {
        canvas.fill_ellipse(mx, my - bend * 0.3, half * 0.9, open, dark);
    }
    canvas.stroke([&](double t) { return std::pair{mx + half * t, my - bend * t * t - tilt * (t + 1.0) * 0.5}; },
                  2.0 * scale, dark);

    Sample s;
    s.label = label;
    s.usage = usage;
    const double contrast = rng.uniform(0.9, 1.1);
    auto& px = canvas.pixels();
    for (std::size_t i = 0; i < kPixelCount; ++i) {
        const double v = 128.0 + (px[i] - 128.0) * contrast + 10.0 * rng.normal();
        s.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
    return s;
}

Dataset synthesize_fer(std::size_t train_per_class, std::size_t test_per_class, std::uint64_t seed) {
    Dataset ds;
    std::uint64_t index = 0;
    auto emit = [&](Usage usage, std::size_t per_class) {
        for (std::size_t i = 0; i < per_class; ++i)
            for (int label = 0; label < 7; ++label) ds.samples.push_back(synthesize_sample(label, usage, seed, index++));
    };
    emit(Usage::training, train_per_class);
    emit(Usage::public_test, test_per_class);
    emit(Usage::private_test, test_per_class);
    return ds;
}

}  // namespace ocfer
