#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "cablesift/corpus.hpp"
#include "cablesift/preprocess.hpp"

namespace cablesift {

enum class FieldId : std::uint8_t {
    Subject = 0,
    Concepts,
    Body,
    Tags,
    SenderRecipient,
    Office,
    AllText,
    // Weekend flag + year-month tokens; off by default (not part of the
    // 40,700-column stack), intended for shorter-period experiments.
    Date,
};
inline constexpr std::size_t kFieldCount = 8;
std::string_view to_string(FieldId field);
std::optional<FieldId> parse_field_id(std::string_view s);

enum class Weighting : std::uint8_t { TermCount, TfIdf };

struct FieldConfig {
    FieldId field = FieldId::Body;
    std::size_t max_vocab = 1;     // N': vector width cap
    int ngram_lo = 1, ngram_hi = 1;
    std::size_t min_doc_freq = 1;  // document-frequency floor
    Weighting weighting = Weighting::TermCount;

    static FieldConfig defaults(FieldId field);
    void validate() const;
};

// The full default stack: subject 8000, concepts 650 (1,2)-grams, body 15000,
// tags 844, sender/recipient 1036, office 170, all_text 15000 — 40,700
// columns when every vocabulary is saturated.
std::vector<FieldConfig> default_field_configs(bool include_all_text = true);

// Contiguous n-grams for n in [lo, hi]; bigrams joined with one space.
std::vector<std::string> extract_ngrams(const TokenSeq& tokens, int lo, int hi);

struct Vocabulary {
    FieldConfig config;
    std::vector<std::string> tokens;        // column order
    std::vector<std::uint64_t> doc_freq;    // aligned with tokens
    std::uint64_t corpus_size = 0;          // M: documents seen at build time
    std::unordered_map<std::string, std::uint32_t> index;

    std::size_t size() const { return tokens.size(); }
    void rebuild_index();
    nlohmann::json to_json() const;
    static Vocabulary from_json(const nlohmann::json& j);
};

// Ranks grams by corpus term frequency (ties broken lexicographically),
// drops those under the document-frequency floor, keeps the top max_vocab.
Vocabulary build_vocabulary(const std::vector<TokenSeq>& docs, const FieldConfig& cfg);

// Sorted (column, value) pairs over a fixed-width space.
struct SparseVector {
    std::vector<std::pair<std::uint32_t, double>> entries;
    std::uint32_t width = 0;

    double l2_norm() const;
};

SparseVector vectorize_count(const TokenSeq& tokens, const Vocabulary& vocab);
// tf * (1 + ln(M / df)); reduces to tf for terms present in every document.
SparseVector vectorize_tfidf(const TokenSeq& tokens, const Vocabulary& vocab);
SparseVector vectorize(const TokenSeq& tokens, const Vocabulary& vocab);  // per config

// A cable reduced to its per-field token streams.
struct TokenizedCable {
    std::string doc_id;
    TokenSeq subject, concepts, body, tags, sender_recipient, office, date;

    const TokenSeq& field(FieldId f) const;
    TokenSeq all_text() const;  // the six text streams concatenated (no date)
};

TokenizedCable tokenize_cable(const Cable& cable, const Tokenizer& tok);
std::vector<TokenizedCable> tokenize_corpus(std::span<const Cable> cables, const Tokenizer& tok,
                                            unsigned threads = 1);

// Per-field vocabularies laid out side by side; offsets are exclusive prefix
// sums of the vocabulary sizes.
struct FeatureSpace {
    struct Block {
        Vocabulary vocab;
        std::uint32_t offset = 0;
    };
    std::vector<Block> blocks;
    std::uint32_t width = 0;

    SparseVector assemble(const TokenizedCable& doc) const;
    nlohmann::json to_json() const;
    static FeatureSpace from_json(const nlohmann::json& j);
    void save(const std::string& path) const;
    static FeatureSpace load(const std::string& path);
};

FeatureSpace build_feature_space(std::span<const TokenizedCable> docs,
                                 const std::vector<FieldConfig>& fields, unsigned threads = 1);

std::vector<SparseVector> vectorize_corpus(std::span<const TokenizedCable> docs,
                                           const FeatureSpace& space, unsigned threads = 1);

}  // namespace cablesift
