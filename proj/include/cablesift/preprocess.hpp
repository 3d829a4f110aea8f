#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace cablesift {

using TokenSeq = std::vector<std::string>;

// Normalization rules for the upper-case telegraph corpus. Everything is
// canonicalized to upper case; the stopword list and gazetteer are stored
// upper-cased too.
struct TokenizerConfig {
    std::unordered_set<std::string> stopwords;
    std::vector<std::string> gazetteer;  // multi-word entries, collapsed to one token
    std::size_t min_token_len = 2;
    bool keep_hyphen = true;
    bool keep_underscore = true;

    // Built-in English stopword list and compound-place-name gazetteer.
    static const TokenizerConfig& defaults();

    // One entry per line; '#' lines are comments. Either path may be empty
    // to keep the built-in list for that part.
    static TokenizerConfig load(const std::string& stopwords_path,
                                const std::string& gazetteer_path);
};

// Precompiled form of a TokenizerConfig; build once, tokenize many records.
class Tokenizer {
  public:
    explicit Tokenizer(TokenizerConfig cfg);

    TokenSeq normalize(std::string_view raw) const;
    TokenSeq sender_recipient(std::string_view from_field, std::string_view to_field) const;

    const TokenizerConfig& config() const { return cfg_; }

  private:
    struct GazEntry {
        std::vector<std::string> words;  // post-filter word sequence to match
        std::string joined;              // replacement token
    };

    std::vector<std::string> split(std::string_view upper) const;
    void filter(std::vector<std::string>& tokens) const;
    void collapse(std::vector<std::string>& tokens) const;

    TokenizerConfig cfg_;
    std::unordered_map<std::string, std::vector<GazEntry>> entries_by_first_;
};

// Upper-cases, splits on whitespace/punctuation (keeping intra-word hyphen
// and underscore), drops stopwords and short tokens, and collapses gazetteer
// place names ("NEW YORK" -> "NEWYORK").
TokenSeq normalize_text(std::string_view raw, const TokenizerConfig& cfg);

// Tokens of the combined sender/recipient field. Each token is prefixed with
// "FROM:" or "TO:" so the same post name on opposite sides stays a distinct
// feature. A blank side contributes nothing.
TokenSeq sender_recipient_tokens(std::string_view from_field, std::string_view to_field,
                                 const TokenizerConfig& cfg);

// Rendered form of sender_recipient_tokens, e.g. "FROM:NATO TO:STATE".
std::string merge_sender_recipient(std::string_view from_field, std::string_view to_field,
                                   const TokenizerConfig& cfg);

// True iff the date falls on a weekend (Saturday or Sunday).
std::optional<bool> derive_weekday(std::optional<std::chrono::year_month_day> date);

}  // namespace cablesift
