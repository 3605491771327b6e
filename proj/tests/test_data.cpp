#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "ocfer/data.hpp"

using ocfer::Usage;

namespace {

std::string pixel_string(std::size_t count, int value) {
    std::string s;
    for (std::size_t i = 0; i < count; ++i) {
        if (i) s += ' ';
        s += std::to_string(value);
    }
    return s;
}

std::string csv(const std::vector<std::string>& rows) {
    std::string out = "emotion,pixels,Usage\n";
    for (const auto& r : rows) out += r + "\n";
    return out;
}

ocfer::Dataset parse(const std::string& text) {
    std::istringstream in(text);
    return ocfer::parse_fer_csv(in);
}

std::size_t error_line(const std::string& text) {
    try {
        parse(text);
    } catch (const ocfer::ParseError& e) {
        return e.line();
    }
    return 0;
}

}  // namespace

TEST(FerCsv, AllZeroRow) {
    const auto ds = parse(csv({"3," + pixel_string(2304, 0) + ",Training"}));
    ASSERT_EQ(ds.samples.size(), 1u);
    EXPECT_EQ(ds.samples[0].label, 3);
    EXPECT_EQ(ds.samples[0].usage, Usage::training);
    EXPECT_TRUE(std::all_of(ds.samples[0].pixels.begin(), ds.samples[0].pixels.end(), [](auto p) { return p == 0; }));
}

TEST(FerCsv, PixelOrderAndUsages) {
    std::string pixels;
    for (int i = 0; i < 2304; ++i) pixels += (i ? " " : "") + std::to_string(i % 256);
    const auto ds = parse(csv({"0," + pixels + ",PublicTest", "6," + pixels + ",PrivateTest\r"}));
    ASSERT_EQ(ds.samples.size(), 2u);
    EXPECT_EQ(ds.samples[0].pixels[300], 300 % 256);
    EXPECT_EQ(ds.samples[0].usage, Usage::public_test);
    EXPECT_EQ(ds.samples[1].usage, Usage::private_test);
    EXPECT_EQ(ds.count(Usage::private_test), 1u);
}

TEST(FerCsv, ErrorsNameTheLine) {
    const std::string good = "1," + pixel_string(2304, 7) + ",Training";
    EXPECT_EQ(error_line(csv({good, "2," + pixel_string(2303, 7) + ",Training"})), 3u);
    EXPECT_EQ(error_line(csv({"2," + pixel_string(2305, 7) + ",Training"})), 2u);
    EXPECT_EQ(error_line(csv({good, good, "7," + pixel_string(2304, 7) + ",Training"})), 4u);
    EXPECT_EQ(error_line(csv({"1," + pixel_string(2304, 7) + ",Validation"})), 2u);
    EXPECT_EQ(error_line(csv({"1," + pixel_string(2304, 7)})), 2u);
    EXPECT_EQ(error_line(csv({"1," + pixel_string(2304, 7) + ",Training,extra"})), 2u);
    EXPECT_EQ(error_line(csv({"x," + pixel_string(2304, 7) + ",Training"})), 2u);
    EXPECT_EQ(error_line(csv({"1," + pixel_string(2303, 7) + " 256,Training"})), 2u);
    EXPECT_EQ(error_line(csv({"1," + pixel_string(2303, 7) + " 1.5,Training"})), 2u);
}

TEST(FerCsv, FileRoundTripIsStable) {
    const auto ds = ocfer::synthesize_fer(2, 1, 3);
    const auto path = (std::filesystem::temp_directory_path() / "ocfer_test_roundtrip.csv").string();
    ocfer::write_fer_csv(ds, path);
    const auto back = ocfer::load_fer_csv(path);
    EXPECT_EQ(back, ds);
    EXPECT_EQ(ocfer::load_fer_csv(path), back);
    std::remove(path.c_str());
    EXPECT_THROW(ocfer::load_fer_csv(path), std::runtime_error);
}

TEST(Partition, Examples) {
    const auto ds = ocfer::synthesize_fer(3, 2, 1);
    const auto s = ocfer::partition_by_usage(ds);
    EXPECT_EQ(s.train.size(), 21u);
    EXPECT_EQ(s.public_test.size(), 14u);
    EXPECT_EQ(s.private_test.size(), 14u);
    EXPECT_EQ(s.train.size() + s.public_test.size() + s.private_test.size(), ds.samples.size());
    for (const auto& x : s.public_test) EXPECT_EQ(x.usage, Usage::public_test);
    // order preserved
    std::vector<ocfer::Sample> train_only;
    for (const auto& x : ds.samples)
        if (x.usage == Usage::training) train_only.push_back(x);
    EXPECT_EQ(s.train, train_only);

    ocfer::Dataset only;
    only.samples = s.train;
    const auto t = ocfer::partition_by_usage(only);
    EXPECT_TRUE(t.public_test.empty());
    EXPECT_TRUE(t.private_test.empty());

    const auto e = ocfer::partition_by_usage(ocfer::Dataset{});
    EXPECT_TRUE(e.train.empty() && e.public_test.empty() && e.private_test.empty());
}

TEST(Subset, FirstNPerClass) {
    const auto train = ocfer::partition_by_usage(ocfer::synthesize_fer(5, 0, 2)).train;
    const auto sub = ocfer::first_n_per_class(train, 2);
    ASSERT_EQ(sub.size(), 14u);
    std::array<int, 7> seen{};
    for (const auto& s : sub) ++seen[static_cast<std::size_t>(s.label)];
    for (int c : seen) EXPECT_EQ(c, 2);
    EXPECT_EQ(sub.front(), train.front());
}

TEST(Normalize, Examples) {
    ocfer::Sample s;
    s.pixels.fill(128);
    s.pixels[0] = 255;
    s.pixels[1] = 0;
    const auto t = ocfer::normalize(s);
    EXPECT_EQ(t.shape(), (ocfer::Shape{1, 48, 48}));
    EXPECT_EQ(t[0], 1.0);
    EXPECT_EQ(t[1], 0.0);
    EXPECT_NEAR(t[2], 0.50196, 1e-5);
}

TEST(Normalize, InverseRoundTrip) {
    const auto ds = ocfer::synthesize_fer(1, 0, 9);
    for (const auto& s : ds.samples) {
        const auto t = ocfer::normalize(s);
        for (std::size_t i = 0; i < ocfer::kPixelCount; ++i)
            EXPECT_EQ(static_cast<int>(std::lround(255.0 * t[i])), s.pixels[i]);
    }
}

TEST(BatchIter, Examples) {
    const auto b = ocfer::batch_iter(10, 8, 1, 0);
    ASSERT_EQ(b.size(), 2u);
    EXPECT_EQ(b[0].size(), 8u);
    EXPECT_EQ(b[1].size(), 2u);
    EXPECT_EQ(ocfer::batch_iter(10, 8, 1, 0), b);
    EXPECT_NE(ocfer::batch_iter(10, 8, 1, 1), b);
    EXPECT_NE(ocfer::batch_iter(10, 8, 2, 0), b);
    EXPECT_TRUE(ocfer::batch_iter(0, 8, 1, 0).empty());
    EXPECT_THROW(ocfer::batch_iter(5, 0, 1, 0), std::invalid_argument);
}

TEST(BatchIter, EveryIndexOncePerEpoch) {
    for (std::uint64_t trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + trial * 7, batch = 1 + trial % 9;
        std::vector<int> seen(n, 0);
        for (const auto& chunk : ocfer::batch_iter(n, batch, trial, trial % 3))
            for (auto i : chunk) ++seen.at(i);
        EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; })) << trial;
    }
}

TEST(Synthetic, DeterministicAndBalanced) {
    EXPECT_EQ(ocfer::synthesize_sample(4, Usage::training, 7, 12), ocfer::synthesize_sample(4, Usage::training, 7, 12));
    EXPECT_NE(ocfer::synthesize_sample(4, Usage::training, 7, 12).pixels,
              ocfer::synthesize_sample(4, Usage::training, 7, 13).pixels);
    const auto ds = ocfer::synthesize_fer(4, 2, 0);
    EXPECT_EQ(ds.count(Usage::training), 28u);
    EXPECT_EQ(ds.count(Usage::public_test), 14u);
    EXPECT_THROW(ocfer::synthesize_sample(7, Usage::training, 0, 0), std::invalid_argument);
}
