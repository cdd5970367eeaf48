#include "slim/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <vector>

#include "slim/errors.hpp"

namespace slim {

namespace {

constexpr char kMagic[4] = {'S', 'L', 'I', 'M'};

void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 8);
}

void write_f32(std::ostream& out, float v) {
    static_assert(sizeof(float) == 4);
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    write_u32(out, bits);
}

void write_string(std::ostream& out, const std::string& s) {
    write_u64(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw FormatError("checkpoint: truncated file");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

std::uint64_t read_u64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) throw FormatError("checkpoint: truncated file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

float read_f32(std::istream& in) {
    std::uint32_t bits = read_u32(in);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

std::string read_string(std::istream& in) {
    std::uint64_t len = read_u64(in);
    if (len > (1u << 20)) throw FormatError("checkpoint: implausible string length");
    std::string s(len, '\0');
    in.read(s.data(), static_cast<std::streamsize>(len));
    if (!in) throw FormatError("checkpoint: truncated file");
    return s;
}

void write_tensor(std::ostream& out, const Tensor& t) {
    const auto& shape = t.shape();
    write_u64(out, shape.size());
    for (std::size_t d : shape) write_u64(out, d);
    for (real v : t.values()) write_f32(out, static_cast<float>(v));
}

void read_tensor_into(std::istream& in, Tensor& t) {
    std::uint64_t ndim = read_u64(in);
    const auto& shape = t.shape();
    if (ndim != shape.size())
        throw FormatError("checkpoint: parameter rank mismatch");
    std::size_t size = 1;
    for (std::uint64_t d = 0; d < ndim; ++d) {
        std::uint64_t dim = read_u64(in);
        if (dim != shape[d]) throw FormatError("checkpoint: parameter shape mismatch");
        size *= dim;
    }
    auto& values = t.values();
    if (values.size() != size) throw FormatError("checkpoint: parameter size mismatch");
    for (std::size_t i = 0; i < size; ++i) values[i] = static_cast<real>(read_f32(in));
}

} // namespace

void save_checkpoint(std::ostream& out, const SlimModel& model) {
    out.write(kMagic, 4);
    write_u32(out, kCheckpointVersion);

    write_u64(out, model.cfg.num_layers);
    write_u64(out, model.cfg.hidden_dim);
    write_u64(out, model.cfg.num_heads);
    write_u64(out, model.cfg.ffn_dim);
    write_u64(out, model.cfg.max_seq_len);
    write_f32(out, static_cast<float>(model.cfg.dropout_rate));
    write_u64(out, model.cfg.vocab_size);

    write_u64(out, model.vocab.size());
    for (std::size_t i = 0; i < model.vocab.size(); ++i)
        write_string(out, model.vocab.token(static_cast<int>(i)));

    write_u64(out, model.intents.size());
    for (std::size_t i = 0; i < model.intents.size(); ++i)
        write_string(out, model.intents.label(static_cast<int>(i)));
    write_u64(out, model.tags.size());
    for (std::size_t i = 0; i < model.tags.size(); ++i)
        write_string(out, model.tags.label(static_cast<int>(i)));

    std::vector<Tensor> params = model.parameters();
    write_u64(out, params.size());
    for (const Tensor& t : params) write_tensor(out, t);
    if (!out) throw FormatError("checkpoint: write failure");
}

void save_checkpoint(const std::string& path, const SlimModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("checkpoint: cannot open " + path + " for writing");
    save_checkpoint(out, model);
}

SlimModel load_checkpoint(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError("checkpoint: bad magic bytes");
    std::uint32_t version = read_u32(in);
    if (version != kCheckpointVersion)
        throw FormatError("checkpoint: unsupported version " + std::to_string(version));

    EncoderConfig cfg;
    cfg.num_layers = read_u64(in);
    cfg.hidden_dim = read_u64(in);
    cfg.num_heads = read_u64(in);
    cfg.ffn_dim = read_u64(in);
    cfg.max_seq_len = read_u64(in);
    cfg.dropout_rate = static_cast<real>(read_f32(in));
    cfg.vocab_size = read_u64(in);
    cfg.validate();

    std::uint64_t vocab_count = read_u64(in);
    if (vocab_count != cfg.vocab_size)
        throw FormatError("checkpoint: vocabulary count disagrees with config");
    Vocabulary vocab;
    for (std::uint64_t i = 0; i < vocab_count; ++i) {
        std::string tok = read_string(in);
        if (i < 4) {
            if (vocab.token(static_cast<int>(i)) != tok)
                throw FormatError("checkpoint: reserved vocabulary entry " + std::to_string(i) +
                                  " is \"" + tok + "\"");
        } else if (vocab.add(tok) != static_cast<int>(i)) {
            throw FormatError("checkpoint: duplicate vocabulary token \"" + tok + "\"");
        }
    }

    auto read_labels = [&in](const char* what) {
        std::uint64_t count = read_u64(in);
        if (count == 0) throw FormatError(std::string("checkpoint: empty ") + what);
        LabelMap map;
        for (std::uint64_t i = 0; i < count; ++i) {
            std::string label = read_string(in);
            if (map.contains(label))
                throw FormatError(std::string("checkpoint: duplicate ") + what + " \"" + label +
                                  "\"");
            map.add(label);
        }
        return map;
    };
    LabelMap intents = read_labels("intent label");
    LabelMap tags = read_labels("tag label");

    Rng rng(0);
    SlimModel model = SlimModel::init(cfg, std::move(vocab), std::move(intents), std::move(tags),
                                      rng);
    std::vector<Tensor> params = model.parameters();
    std::uint64_t count = read_u64(in);
    if (count != params.size())
        throw FormatError("checkpoint: expected " + std::to_string(params.size()) +
                          " parameter arrays, found " + std::to_string(count));
    for (Tensor& t : params) read_tensor_into(in, t);
    return model;
}

SlimModel load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("checkpoint: cannot open " + path);
    return load_checkpoint(in);
}

} // namespace slim
