#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "slim/tensor.hpp"

namespace slim {

/// Word-level vocabulary with fixed reserved ids.
class Vocabulary {
public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr int kCls = 2;
    static constexpr int kSep = 3;

    Vocabulary();

    /// Insert token if absent; returns its id either way.
    int add(const std::string& token);
    /// Lookup; unknown tokens map to [UNK].
    int id(const std::string& token) const;
    const std::string& token(int id) const;
    std::size_t size() const { return tokens_.size(); }

    /// One token per line, line number = id.
    void save(const std::string& path) const;
    static Vocabulary load(const std::string& path);

    static Vocabulary build(const std::vector<std::vector<std::string>>& token_lists);

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
};

struct EncoderConfig {
    std::size_t num_layers = 2;
    std::size_t hidden_dim = 64;
    std::size_t num_heads = 4;
    std::size_t ffn_dim = 128;
    std::size_t max_seq_len = 50;
    real dropout_rate = 0.1;
    std::size_t vocab_size = 0;

    void validate() const;
};

struct Numericalized {
    std::vector<int> ids;             // [CLS] tokens... [SEP]
    std::vector<real> attention_mask; // 1 per real position; padding appended later
    std::size_t kept = 0;             // word tokens kept after truncation
    bool truncated = false;
};

/// Map words to ids, wrap with [CLS]/[SEP], truncate to max_seq_len keeping
/// the first tokens. Tags must be truncated in lockstep by the caller using
/// `kept`.
Numericalized numericalize(const std::vector<std::string>& tokens, const Vocabulary& vocab,
                           std::size_t max_seq_len);

struct AttentionParams {
    Tensor wq, bq, wk, bk, wv, bv, wo, bo; // weights stored [out x in]
};

struct LayerParams {
    AttentionParams attn;
    Tensor ln1_gain, ln1_bias;
    Tensor ffn_w1, ffn_b1, ffn_w2, ffn_b2;
    Tensor ln2_gain, ln2_bias;
};

struct EncoderParams {
    Tensor tok_emb; // [V x d]
    Tensor pos_emb; // [max_seq_len x d]
    Tensor emb_ln_gain, emb_ln_bias;
    std::vector<LayerParams> layers;

    static EncoderParams init(const EncoderConfig& cfg, Rng& rng);

    /// Flat parameter list in a fixed serialization order.
    std::vector<Tensor> parameters() const;
};

struct EncodedUtterance {
    Tensor hidden; // [len x d], row 0 = h_cls, row n+1 = h_sep
    std::vector<int> ids;
    std::vector<real> attention_mask;
};

/// Post-LN transformer stack over one (possibly padded) sequence. Padded
/// positions are excluded from attention with an additive -1e9 mask, so they
/// cannot influence real positions.
EncodedUtterance encode(Tape& tape, const EncoderConfig& cfg, const EncoderParams& params,
                        const std::vector<int>& ids, const std::vector<real>& attention_mask,
                        Rng& rng, bool training);

} // namespace slim
