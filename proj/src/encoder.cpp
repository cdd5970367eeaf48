#include "slim/encoder.hpp"

#include <cmath>
#include <fstream>

#include "slim/errors.hpp"

namespace slim {

namespace {
const char* kReserved[] = {"[PAD]", "[UNK]", "[CLS]", "[SEP]"};
} // namespace

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------

Vocabulary::Vocabulary() {
    for (const char* t : kReserved) add(t);
}

int Vocabulary::add(const std::string& token) {
    auto it = index_.find(token);
    if (it != index_.end()) return it->second;
    int id = static_cast<int>(tokens_.size());
    tokens_.push_back(token);
    index_.emplace(token, id);
    return id;
}

int Vocabulary::id(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
        throw IndexError("Vocabulary: id " + std::to_string(id) + " outside " +
                         std::to_string(tokens_.size()) + " entries");
    return tokens_[static_cast<std::size_t>(id)];
}

void Vocabulary::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw FormatError("Vocabulary: cannot write " + path);
    for (const auto& t : tokens_) out << t << "\n";
}

Vocabulary Vocabulary::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("Vocabulary: cannot read " + path);
    Vocabulary vocab;
    vocab.tokens_.clear();
    vocab.index_.clear();
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        if (lineno < 4 && line != kReserved[lineno])
            throw FormatError("Vocabulary: line " + std::to_string(lineno) + " must be " +
                              kReserved[lineno] + ", got \"" + line + "\"");
        if (vocab.index_.count(line))
            throw FormatError("Vocabulary: duplicate token \"" + line + "\" at line " +
                              std::to_string(lineno));
        vocab.add(line);
        ++lineno;
    }
    if (lineno < 4) throw FormatError("Vocabulary: file has fewer than the 4 reserved tokens");
    return vocab;
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& token_lists) {
    Vocabulary vocab;
    for (const auto& list : token_lists)
        for (const auto& t : list) vocab.add(t);
    return vocab;
}

// ---------------------------------------------------------------------------
// Config and numericalization
// ---------------------------------------------------------------------------

void EncoderConfig::validate() const {
    if (num_layers == 0 || hidden_dim == 0 || num_heads == 0 || ffn_dim == 0)
        throw ConfigError("encoder config: all dimensions must be positive");
    if (hidden_dim % num_heads != 0)
        throw ConfigError("encoder config: hidden_dim " + std::to_string(hidden_dim) +
                          " not divisible by num_heads " + std::to_string(num_heads));
    if (max_seq_len < 3)
        throw ConfigError("encoder config: max_seq_len must be at least 3");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        throw ConfigError("encoder config: dropout_rate must be in [0, 1)");
    if (vocab_size < 4)
        throw ConfigError("encoder config: vocab_size must cover the reserved tokens");
}

Numericalized numericalize(const std::vector<std::string>& tokens, const Vocabulary& vocab,
                           std::size_t max_seq_len) {
    if (tokens.empty()) throw ValidationError("numericalize: empty token list");
    Numericalized out;
    std::size_t keep = std::min(tokens.size(), max_seq_len - 2);
    out.kept = keep;
    out.truncated = keep < tokens.size();
    out.ids.reserve(keep + 2);
    out.ids.push_back(Vocabulary::kCls);
    for (std::size_t i = 0; i < keep; ++i) out.ids.push_back(vocab.id(tokens[i]));
    out.ids.push_back(Vocabulary::kSep);
    out.attention_mask.assign(out.ids.size(), 1.0);
    return out;
}

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

namespace {

Tensor init_weight(Rng& rng, std::size_t rows, std::size_t cols) {
    std::vector<real> v(rows * cols);
    for (auto& x : v) x = rng.normal(0.0, 0.02);
    return Tensor::from_values({rows, cols}, std::move(v), true);
}

Tensor init_zeros(std::size_t n) { return Tensor::zeros({n}, true); }

Tensor init_ones(std::size_t n) {
    return Tensor::from_values({n}, std::vector<real>(n, 1.0), true);
}

} // namespace

EncoderParams EncoderParams::init(const EncoderConfig& cfg, Rng& rng) {
    cfg.validate();
    std::size_t d = cfg.hidden_dim;
    EncoderParams p;
    p.tok_emb = init_weight(rng, cfg.vocab_size, d);
    p.pos_emb = init_weight(rng, cfg.max_seq_len, d);
    p.emb_ln_gain = init_ones(d);
    p.emb_ln_bias = init_zeros(d);
    for (std::size_t l = 0; l < cfg.num_layers; ++l) {
        LayerParams layer;
        layer.attn.wq = init_weight(rng, d, d);
        layer.attn.bq = init_zeros(d);
        layer.attn.wk = init_weight(rng, d, d);
        layer.attn.bk = init_zeros(d);
        layer.attn.wv = init_weight(rng, d, d);
        layer.attn.bv = init_zeros(d);
        layer.attn.wo = init_weight(rng, d, d);
        layer.attn.bo = init_zeros(d);
        layer.ln1_gain = init_ones(d);
        layer.ln1_bias = init_zeros(d);
        layer.ffn_w1 = init_weight(rng, cfg.ffn_dim, d);
        layer.ffn_b1 = init_zeros(cfg.ffn_dim);
        layer.ffn_w2 = init_weight(rng, d, cfg.ffn_dim);
        layer.ffn_b2 = init_zeros(d);
        layer.ln2_gain = init_ones(d);
        layer.ln2_bias = init_zeros(d);
        p.layers.push_back(std::move(layer));
    }
    return p;
}

std::vector<Tensor> EncoderParams::parameters() const {
    std::vector<Tensor> out = {tok_emb, pos_emb, emb_ln_gain, emb_ln_bias};
    for (const auto& l : layers) {
        out.insert(out.end(), {l.attn.wq, l.attn.bq, l.attn.wk, l.attn.bk, l.attn.wv, l.attn.bv,
                               l.attn.wo, l.attn.bo, l.ln1_gain, l.ln1_bias, l.ffn_w1, l.ffn_b1,
                               l.ffn_w2, l.ffn_b2, l.ln2_gain, l.ln2_bias});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Encoding
// ---------------------------------------------------------------------------

namespace {

Tensor affine(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& b) {
    return add_row_broadcast(tape, matmul_nt(tape, x, w), b);
}

Tensor attention_block(Tape& tape, const EncoderConfig& cfg, const AttentionParams& p,
                       const Tensor& x, const std::vector<real>& key_bias) {
    std::size_t d = cfg.hidden_dim;
    std::size_t dh = d / cfg.num_heads;
    real inv_scale = 1.0 / std::sqrt(static_cast<real>(dh));

    Tensor q = affine(tape, x, p.wq, p.bq);
    Tensor k = affine(tape, x, p.wk, p.bk);
    Tensor v = affine(tape, x, p.wv, p.bv);

    std::vector<Tensor> head_outputs;
    head_outputs.reserve(cfg.num_heads);
    for (std::size_t h = 0; h < cfg.num_heads; ++h) {
        Tensor qh = slice_cols(tape, q, h * dh, dh);
        Tensor kh = slice_cols(tape, k, h * dh, dh);
        Tensor vh = slice_cols(tape, v, h * dh, dh);
        Tensor scores = scale(tape, matmul_nt(tape, qh, kh), inv_scale);
        scores = add_row_const(tape, scores, key_bias);
        Tensor att = softmax_rows(tape, scores);
        head_outputs.push_back(matmul(tape, att, vh));
    }
    Tensor merged = cfg.num_heads == 1 ? head_outputs[0] : concat_cols(tape, head_outputs);
    return affine(tape, merged, p.wo, p.bo);
}

} // namespace

EncodedUtterance encode(Tape& tape, const EncoderConfig& cfg, const EncoderParams& params,
                        const std::vector<int>& ids, const std::vector<real>& attention_mask,
                        Rng& rng, bool training) {
    if (ids.size() != attention_mask.size())
        throw DimensionError("encode: ids and attention mask lengths differ");
    if (ids.size() > cfg.max_seq_len)
        throw DimensionError("encode: sequence of " + std::to_string(ids.size()) +
                             " exceeds max_seq_len " + std::to_string(cfg.max_seq_len));
    if (ids.empty()) throw ValidationError("encode: empty sequence");

    std::size_t len = ids.size();
    // Additive key bias: 0 at real positions, -1e9 at padding. exp(-1e9 + s)
    // underflows to exactly 0, so padded keys carry zero attention weight.
    std::vector<real> key_bias(len);
    for (std::size_t i = 0; i < len; ++i) key_bias[i] = attention_mask[i] > 0.5 ? 0.0 : -1e9;

    Tensor x = add(tape, embedding_lookup(tape, params.tok_emb, ids),
                   slice_rows(tape, params.pos_emb, 0, len));
    x = layer_norm(tape, x, params.emb_ln_gain, params.emb_ln_bias);
    x = dropout(tape, x, cfg.dropout_rate, rng, training);

    for (const auto& layer : params.layers) {
        Tensor att = attention_block(tape, cfg, layer.attn, x, key_bias);
        att = dropout(tape, att, cfg.dropout_rate, rng, training);
        x = layer_norm(tape, add(tape, x, att), layer.ln1_gain, layer.ln1_bias);

        Tensor f = affine(tape, gelu(tape, affine(tape, x, layer.ffn_w1, layer.ffn_b1)),
                          layer.ffn_w2, layer.ffn_b2);
        f = dropout(tape, f, cfg.dropout_rate, rng, training);
        x = layer_norm(tape, add(tape, x, f), layer.ln2_gain, layer.ln2_bias);
    }

    return EncodedUtterance{x, ids, attention_mask};
}

} // namespace slim
