#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "ocfer/checkpoint.hpp"
#include "oracles.hpp"

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

std::string read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ocfer::Checkpoint tiny_checkpoint() {
    ocfer::TrainConfig c;
    c.lambda = 0.25;
    c.seed = 42;
    c.ortho_policy = "stride1-3x3";
    return ocfer::make_checkpoint(ocfer::build_tiny_cnn(42), c, 1234);
}

}  // namespace

TEST(Checkpoint, SaveLoadSaveIsByteIdentical) {
    const auto a = temp_path("ocfer_ck_a.bin"), b = temp_path("ocfer_ck_b.bin");
    const auto ck = tiny_checkpoint();
    ocfer::save_checkpoint(ck, a);
    const auto loaded = ocfer::load_checkpoint(a);
    EXPECT_EQ(loaded, ck);
    ocfer::save_checkpoint(loaded, b);
    EXPECT_EQ(read_bytes(a), read_bytes(b));
    std::remove(a.c_str());
    std::remove(b.c_str());
}

TEST(Checkpoint, HeaderLayout) {
    const std::string bytes = ocfer::encode_checkpoint(tiny_checkpoint());
    EXPECT_EQ(bytes.substr(0, 4), "OCFN");
    EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1u);
    std::uint64_t it = 0;
    for (int i = 7; i >= 0; --i) it = (it << 8) | static_cast<unsigned char>(bytes[5 + static_cast<std::size_t>(i)]);
    EXPECT_EQ(it, 1234u);
}

TEST(Checkpoint, ValuesStoredAsFloat32) {
    ocfer::Model m = ocfer::build_tiny_cnn(1);
    m.parameters()[0].value[0] = 0.1;
    const auto ck = ocfer::make_checkpoint(m, ocfer::TrainConfig{}, 0);
    EXPECT_EQ(ck.tensors[0].value[0], static_cast<double>(0.1f));
}

TEST(Checkpoint, RestoresModelAndPolicy) {
    const auto ck = tiny_checkpoint();
    const auto model = ocfer::model_from_checkpoint(ocfer::decode_checkpoint(ocfer::encode_checkpoint(ck)));
    EXPECT_EQ(model.id(), "tiny_cnn");
    EXPECT_EQ(model.ortho_layers(), ocfer::select_ortho_layers(model, "stride1-3x3"));
    ocfer::Rng rng(2);
    const auto x = oracle::random_tensor({1, 48, 48}, rng, 0.0, 1.0);
    ocfer::Model direct = ocfer::build_tiny_cnn(0);
    ocfer::restore_parameters(direct, ck);
    EXPECT_EQ(model.forward(x), direct.forward(x));
}

TEST(Checkpoint, RejectsCorruption) {
    const std::string good = ocfer::encode_checkpoint(tiny_checkpoint());
    std::string bad_magic = good;
    bad_magic[0] = 'X';
    EXPECT_THROW(ocfer::decode_checkpoint(bad_magic), ocfer::CheckpointError);
    std::string bad_version = good;
    bad_version[4] = 9;
    EXPECT_THROW(ocfer::decode_checkpoint(bad_version), ocfer::CheckpointError);
    EXPECT_THROW(ocfer::decode_checkpoint(good.substr(0, good.size() - 3)), ocfer::CheckpointError);
    EXPECT_THROW(ocfer::decode_checkpoint(good + "x"), ocfer::CheckpointError);
    EXPECT_THROW(ocfer::load_checkpoint(temp_path("ocfer_missing.bin")), ocfer::CheckpointError);
}

TEST(Checkpoint, RestoreRejectsMismatch) {
    const auto ck = tiny_checkpoint();
    ocfer::Model other = ocfer::build_resnet18_fer(0);
    EXPECT_THROW(ocfer::restore_parameters(other, ck), ocfer::CheckpointError);
}

TEST(Checkpoint, ResNetRoundTrip) {
    ocfer::TrainConfig c;
    c.model = "resnet18_fer";
    const auto ck = ocfer::make_checkpoint(ocfer::build_resnet18_fer(3), c, 7);
    const std::string bytes = ocfer::encode_checkpoint(ck);
    EXPECT_EQ(ocfer::encode_checkpoint(ocfer::decode_checkpoint(bytes)), bytes);
}
