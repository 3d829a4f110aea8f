#include "cablesift/preprocess.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "cablesift/common.hpp"

namespace cablesift {

namespace {

// Mirrors data/stopwords.txt (179-entry English list).
constexpr const char* kStopwords[] = {
    "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "you're",
    "you've", "you'll", "you'd", "your", "yours", "yourself", "yourselves", "he",
    "him", "his", "himself", "she", "she's", "her", "hers", "herself", "it",
    "it's", "its", "itself", "they", "them", "their", "theirs", "themselves",
    "what", "which", "who", "whom", "this", "that", "that'll", "these", "those",
    "am", "is", "are", "was", "were", "be", "been", "being", "have", "has",
    "had", "having", "do", "does", "did", "doing", "a", "an", "the", "and",
    "but", "if", "or", "because", "as", "until", "while", "of", "at", "by",
    "for", "with", "about", "against", "between", "into", "through", "during",
    "before", "after", "above", "below", "to", "from", "up", "down", "in",
    "out", "on", "off", "over", "under", "again", "further", "then", "once",
    "here", "there", "when", "where", "why", "how", "all", "any", "both",
    "each", "few", "more", "most", "other", "some", "such", "no", "nor", "not",
    "only", "own", "same", "so", "than", "too", "very", "s", "t", "can",
    "will", "just", "don", "don't", "should", "should've", "now", "d", "ll",
    "m", "o", "re", "ve", "y", "ain", "aren", "aren't", "couldn", "couldn't",
    "didn", "didn't", "doesn", "doesn't", "hadn", "hadn't", "hasn", "hasn't",
    "haven", "haven't", "isn", "isn't", "ma", "mightn", "mightn't", "mustn",
    "mustn't", "needn", "needn't", "shan", "shan't", "shouldn", "shouldn't",
    "wasn", "wasn't", "weren", "weren't", "won", "won't", "wouldn", "wouldn't",
};

// Mirrors data/gazetteer.txt.
constexpr const char* kGazetteer[] = {
    "NEW YORK", "TEL AVIV", "SALT TALKS", "MBFR VIENNA", "GENEVA USSALTTWO",
    "WHITE HOUSE", "USUN NEW YORK", "ABU DHABI", "ADDIS ABABA", "BUENOS AIRES",
    "CAPE TOWN", "DAR ES SALAAM", "HONG KONG", "KUALA LUMPUR", "LA PAZ",
    "MEXICO CITY", "NEW DELHI", "PHNOM PENH", "PORT AU PRINCE", "PORT LOUIS",
    "PORT MORESBY", "PORT OF SPAIN", "RIO DE JANEIRO", "SAN JOSE",
    "SAN SALVADOR", "SANTO DOMINGO", "SAO PAULO", "VATICAN CITY",
};

std::string to_upper(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return out;
}

bool is_alnum(unsigned char c) { return std::isalnum(c) != 0; }

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        // trim
        auto b = line.find_first_not_of(" \t");
        auto e = line.find_last_not_of(" \t");
        if (b == std::string::npos) continue;
        line = line.substr(b, e - b + 1);
        if (line.empty() || line[0] == '#') continue;
        lines.push_back(line);
    }
    return lines;
}

}  // namespace

const TokenizerConfig& TokenizerConfig::defaults() {
    static const TokenizerConfig cfg = [] {
        TokenizerConfig c;
        for (const char* w : kStopwords) c.stopwords.insert(to_upper(w));
        for (const char* g : kGazetteer) c.gazetteer.emplace_back(g);
        return c;
    }();
    return cfg;
}

TokenizerConfig TokenizerConfig::load(const std::string& stopwords_path,
                                      const std::string& gazetteer_path) {
    TokenizerConfig cfg = defaults();
    if (!stopwords_path.empty()) {
        cfg.stopwords.clear();
        for (const auto& line : read_lines(stopwords_path)) cfg.stopwords.insert(to_upper(line));
        if (cfg.stopwords.empty()) throw DataError("stopword list is empty: " + stopwords_path);
    }
    if (!gazetteer_path.empty()) {
        cfg.gazetteer.clear();
        for (const auto& line : read_lines(gazetteer_path)) {
            if (line.find(' ') == std::string::npos)
                throw DataError("gazetteer entry must have at least two words: " + line);
            cfg.gazetteer.push_back(to_upper(line));
        }
    }
    return cfg;
}

Tokenizer::Tokenizer(TokenizerConfig cfg) : cfg_(std::move(cfg)) {
    for (const auto& raw_entry : cfg_.gazetteer) {
        std::string upper = to_upper(raw_entry);
        std::vector<std::string> words = split(upper);
        std::string joined;
        for (const auto& w : words) joined += w;
        filter(words);
        // Entries that dissolve under filtering (stopwords, 1-char words)
        // cannot be matched as multi-word sequences.
        if (words.size() < 2) continue;
        entries_by_first_[words.front()].push_back(GazEntry{std::move(words), std::move(joined)});
    }
    for (auto& [first, entries] : entries_by_first_) {
        std::sort(entries.begin(), entries.end(), [](const GazEntry& a, const GazEntry& b) {
            if (a.words.size() != b.words.size()) return a.words.size() > b.words.size();
            return a.joined < b.joined;
        });
    }
}

// Splits an upper-cased string into raw tokens. Alphanumeric runs form
// tokens; '-' and '_' are token characters only between two alphanumerics,
// so trailing punctuation and loose hyphenation never survive.
std::vector<std::string> Tokenizer::split(std::string_view upper) const {
    std::vector<std::string> tokens;
    std::string cur;
    for (std::size_t i = 0; i < upper.size(); ++i) {
        unsigned char c = static_cast<unsigned char>(upper[i]);
        bool keep = false;
        if (is_alnum(c)) {
            keep = true;
        } else if ((c == '-' && cfg_.keep_hyphen) || (c == '_' && cfg_.keep_underscore)) {
            keep = !cur.empty() && is_alnum(static_cast<unsigned char>(cur.back())) &&
                   i + 1 < upper.size() && is_alnum(static_cast<unsigned char>(upper[i + 1]));
        }
        if (keep) {
            cur.push_back(static_cast<char>(c));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

void Tokenizer::filter(std::vector<std::string>& tokens) const {
    std::erase_if(tokens, [&](const std::string& t) {
        return t.size() < cfg_.min_token_len || cfg_.stopwords.count(t) > 0;
    });
}

void Tokenizer::collapse(std::vector<std::string>& tokens) const {
    if (entries_by_first_.empty()) return;
    std::vector<std::string> out;
    out.reserve(tokens.size());
    std::size_t i = 0;
    while (i < tokens.size()) {
        const GazEntry* hit = nullptr;
        auto it = entries_by_first_.find(tokens[i]);
        if (it != entries_by_first_.end()) {
            for (const auto& entry : it->second) {  // longest first
                if (i + entry.words.size() > tokens.size()) continue;
                if (std::equal(entry.words.begin(), entry.words.end(), tokens.begin() + i)) {
                    hit = &entry;
                    break;
                }
            }
        }
        if (hit != nullptr) {
            out.push_back(hit->joined);
            i += hit->words.size();
        } else {
            out.push_back(std::move(tokens[i]));
            ++i;
        }
    }
    tokens = std::move(out);
}

TokenSeq Tokenizer::normalize(std::string_view raw) const {
    std::vector<std::string> tokens = split(to_upper(raw));
    filter(tokens);
    collapse(tokens);
    // A collapsed entry could itself be a stopword-shaped concatenation.
    filter(tokens);
    return tokens;
}

TokenSeq Tokenizer::sender_recipient(std::string_view from_field,
                                     std::string_view to_field) const {
    TokenSeq out;
    for (auto& t : normalize(from_field)) out.push_back("FROM:" + t);
    for (auto& t : normalize(to_field)) out.push_back("TO:" + t);
    return out;
}

TokenSeq normalize_text(std::string_view raw, const TokenizerConfig& cfg) {
    return Tokenizer(cfg).normalize(raw);
}

TokenSeq sender_recipient_tokens(std::string_view from_field, std::string_view to_field,
                                 const TokenizerConfig& cfg) {
    return Tokenizer(cfg).sender_recipient(from_field, to_field);
}

std::string merge_sender_recipient(std::string_view from_field, std::string_view to_field,
                                   const TokenizerConfig& cfg) {
    TokenSeq tokens = sender_recipient_tokens(from_field, to_field, cfg);
    std::string out;
    for (const auto& t : tokens) {
        if (!out.empty()) out += ' ';
        out += t;
    }
    return out;
}

std::optional<bool> derive_weekday(std::optional<std::chrono::year_month_day> date) {
    if (!date || !date->ok()) return std::nullopt;
    std::chrono::weekday wd{std::chrono::sys_days{*date}};
    return wd == std::chrono::Saturday || wd == std::chrono::Sunday;
}

}  // namespace cablesift
