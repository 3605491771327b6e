#include "ocfer/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace ocfer {

namespace {

class Writer {
public:
    void bytes(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }

    template <typename T>
    void le(T value) {
        unsigned char buf[sizeof(T)];
        std::memcpy(buf, &value, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
        bytes(buf, sizeof(T));
    }

    void u8(std::uint8_t v) { le(v); }
    void u32(std::uint32_t v) { le(v); }
    void u64(std::uint64_t v) { le(v); }
    void f32(float v) { le(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }

    std::string take() { return std::move(out_); }

private:
    std::string out_;
};

class Reader {
public:
    explicit Reader(const std::string& in) : in_(in) {}

    const char* take(std::size_t n) {
        if (in_.size() - pos_ < n) throw CheckpointError("checkpoint truncated at byte " + std::to_string(pos_));
        const char* p = in_.data() + pos_;
        pos_ += n;
        return p;
    }

    template <typename T>
    T le() {
        unsigned char buf[sizeof(T)];
        std::memcpy(buf, take(sizeof(T)), sizeof(T));
        if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
        T v;
        std::memcpy(&v, buf, sizeof(T));
        return v;
    }

    std::uint8_t u8() { return le<std::uint8_t>(); }
    std::uint32_t u32() { return le<std::uint32_t>(); }
    std::uint64_t u64() { return le<std::uint64_t>(); }
    float f32() { return std::bit_cast<float>(le<std::uint32_t>()); }
    double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }
    std::string str() {
        const std::uint32_t n = u32();
        const char* p = take(n);
        return std::string(p, n);
    }

    bool done() const { return pos_ == in_.size(); }

private:
    const std::string& in_;
    std::size_t pos_ = 0;
};

}  // namespace

Checkpoint make_checkpoint(const Model& model, const TrainConfig& config, std::uint64_t iteration) {
    Checkpoint ck;
    ck.iteration = iteration;
    ck.config = config;
    ck.config.model = model.id();
    for (const auto& p : model.parameters()) {
        Tensor stored = p.value;
        // Values are stored as 32-bit floats; round here so the in-memory
        // checkpoint equals what the file holds.
        for (auto& v : stored.data()) v = static_cast<double>(static_cast<float>(v));
        ck.tensors.push_back(NamedTensor{p.name, std::move(stored)});
    }
    return ck;
}

void restore_parameters(Model& model, const Checkpoint& checkpoint) {
    auto& params = model.parameters();
    if (checkpoint.tensors.size() != params.size()) {
        throw CheckpointError("checkpoint holds " + std::to_string(checkpoint.tensors.size()) +
                              " tensors, model '" + model.id() + "' has " + std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& t = checkpoint.tensors[i];
        if (t.name != params[i].name || t.value.shape() != params[i].value.shape()) {
            throw CheckpointError("checkpoint tensor '" + t.name + "' " + shape_to_string(t.value.shape()) +
                                  " does not match parameter '" + params[i].name + "' " +
                                  shape_to_string(params[i].value.shape()));
        }
        params[i].value = t.value;
    }
}

Model model_from_checkpoint(const Checkpoint& checkpoint) {
    Model model = build_model(checkpoint.model_id(), checkpoint.config.seed);
    restore_parameters(model, checkpoint);
    model.set_ortho_layers(select_ortho_layers(model, checkpoint.config.ortho_policy));
    return model;
}

std::string encode_checkpoint(const Checkpoint& ck) {
    Writer w;
    w.bytes(kCheckpointMagic, sizeof kCheckpointMagic);
    w.u8(kCheckpointVersion);
    w.u64(ck.iteration);
    const TrainConfig& c = ck.config;
    w.str(c.model);
    w.f64(c.lr0);
    w.u64(c.batch_size);
    w.u64(c.epochs);
    w.f64(c.decay_factor);
    w.u64(c.decay_every);
    w.f64(c.lambda);
    w.u64(c.seed);
    w.str(c.ortho_policy);
    w.u32(static_cast<std::uint32_t>(ck.tensors.size()));
    for (const auto& t : ck.tensors) {
        w.str(t.name);
        w.u32(static_cast<std::uint32_t>(t.value.rank()));
        for (auto e : t.value.shape()) w.u64(e);
        for (double v : t.value.data()) w.f32(static_cast<float>(v));
    }
    return w.take();
}

Checkpoint decode_checkpoint(const std::string& bytes) {
    Reader r(bytes);
    if (bytes.size() < sizeof kCheckpointMagic || std::memcmp(r.take(4), kCheckpointMagic, 4) != 0) {
        throw CheckpointError("not a checkpoint: bad magic");
    }
    const std::uint8_t version = r.u8();
    if (version != kCheckpointVersion) {
        throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
    }
    Checkpoint ck;
    ck.iteration = r.u64();
    TrainConfig& c = ck.config;
    c.model = r.str();
    c.lr0 = r.f64();
    c.batch_size = r.u64();
    c.epochs = r.u64();
    c.decay_factor = r.f64();
    c.decay_every = r.u64();
    c.lambda = r.f64();
    c.seed = r.u64();
    c.ortho_policy = r.str();
    const std::uint32_t count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
        NamedTensor t;
        t.name = r.str();
        const std::uint32_t rank = r.u32();
        if (rank == 0 || rank > 8) throw CheckpointError("tensor '" + t.name + "' has invalid rank");
        Shape shape(rank);
        std::size_t n = 1;
        for (auto& e : shape) {
            e = r.u64();
            if (e == 0 || e > (std::size_t{1} << 32)) throw CheckpointError("tensor '" + t.name + "' has bad extent");
            n *= e;
        }
        if (n > bytes.size()) throw CheckpointError("tensor '" + t.name + "' larger than file");
        std::vector<double> data(n);
        for (auto& v : data) v = static_cast<double>(r.f32());
        t.value = Tensor(std::move(shape), std::move(data));
        ck.tensors.push_back(std::move(t));
    }
    if (!r.done()) throw CheckpointError("trailing bytes after checkpoint");
    return ck;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write checkpoint '" + path + "'");
    const std::string bytes = encode_checkpoint(checkpoint);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("write failed for checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint '" + path + "'");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes);
}

}  // namespace ocfer
