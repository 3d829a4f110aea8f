#include "cablesift/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "cablesift/common.hpp"

namespace cablesift {

std::string_view to_string(FieldId field) {
    switch (field) {
        case FieldId::Subject: return "subject";
        case FieldId::Concepts: return "concepts";
        case FieldId::Body: return "body";
        case FieldId::Tags: return "tags";
        case FieldId::SenderRecipient: return "sender_recipient";
        case FieldId::Office: return "office";
        case FieldId::AllText: return "all_text";
        case FieldId::Date: return "date";
    }
    return "?";
}

std::optional<FieldId> parse_field_id(std::string_view s) {
    for (std::size_t i = 0; i < kFieldCount; ++i) {
        auto f = static_cast<FieldId>(i);
        if (s == to_string(f)) return f;
    }
    return std::nullopt;
}

FieldConfig FieldConfig::defaults(FieldId field) {
    FieldConfig cfg;
    cfg.field = field;
    switch (field) {
        case FieldId::Subject:
            cfg.max_vocab = 8000;
            cfg.min_doc_freq = 2;
            break;
        case FieldId::Concepts:
            cfg.max_vocab = 650;
            cfg.ngram_hi = 2;
            cfg.min_doc_freq = 2;
            break;
        case FieldId::Body:
            cfg.max_vocab = 15000;
            cfg.min_doc_freq = 2;
            break;
        case FieldId::Tags:
            cfg.max_vocab = 844;
            cfg.min_doc_freq = 6;
            break;
        case FieldId::SenderRecipient:
            cfg.max_vocab = 1036;
            cfg.min_doc_freq = 6;
            break;
        case FieldId::Office:
            cfg.max_vocab = 170;
            cfg.min_doc_freq = 6;
            break;
        case FieldId::AllText:
            cfg.max_vocab = 15000;
            cfg.min_doc_freq = 2;
            break;
        case FieldId::Date:
            cfg.max_vocab = 128;  // weekend flags + one token per month
            cfg.min_doc_freq = 1;
            break;
    }
    return cfg;
}

void FieldConfig::validate() const {
    if (ngram_lo < 1 || ngram_hi < ngram_lo || ngram_hi > 2)
        throw UsageError("ngram range must satisfy 1 <= lo <= hi <= 2");
    if (max_vocab < 1) throw UsageError("max_vocab must be at least 1");
    if (min_doc_freq < 1) throw UsageError("min_doc_freq must be at least 1");
}

std::vector<FieldConfig> default_field_configs(bool include_all_text) {
    std::vector<FieldConfig> out;
    for (std::size_t i = 0; i < kFieldCount; ++i) {
        auto f = static_cast<FieldId>(i);
        if (f == FieldId::AllText && !include_all_text) continue;
        if (f == FieldId::Date) continue;  // opt-in, outside the default stack
        out.push_back(FieldConfig::defaults(f));
    }
    return out;
}

std::vector<std::string> extract_ngrams(const TokenSeq& tokens, int lo, int hi) {
    std::vector<std::string> grams;
    if (lo <= 1 && hi >= 1) grams.reserve(tokens.size());
    for (int n = lo; n <= hi; ++n) {
        if (n == 1) {
            grams.insert(grams.end(), tokens.begin(), tokens.end());
        } else {
            for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
                std::string g = tokens[i];
                for (std::size_t j = 1; j < static_cast<std::size_t>(n); ++j) {
                    g += ' ';
                    g += tokens[i + j];
                }
                grams.push_back(std::move(g));
            }
        }
    }
    return grams;
}

namespace {

struct GramStats {
    std::uint64_t tf = 0;
    std::uint64_t df = 0;
};

using StatsMap = std::unordered_map<std::string, GramStats>;

void accumulate_doc(StatsMap& stats, const TokenSeq& doc, const FieldConfig& cfg) {
    auto grams = extract_ngrams(doc, cfg.ngram_lo, cfg.ngram_hi);
    if (grams.empty()) return;
    // Count occurrences within the doc, then fold into corpus tf/df.
    std::sort(grams.begin(), grams.end());
    std::size_t i = 0;
    while (i < grams.size()) {
        std::size_t j = i;
        while (j < grams.size() && grams[j] == grams[i]) ++j;
        auto& s = stats[std::move(grams[i])];
        s.tf += j - i;
        s.df += 1;
        i = j;
    }
}

Vocabulary rank_and_cap(StatsMap stats, std::uint64_t corpus_size, const FieldConfig& cfg) {
    std::vector<std::pair<std::string, GramStats>> kept;
    kept.reserve(stats.size());
    for (auto& [gram, s] : stats) {
        if (s.df >= cfg.min_doc_freq) kept.emplace_back(gram, s);
    }
    if (kept.empty())
        throw DataError("empty vocabulary for field " + std::string(to_string(cfg.field)) +
                        ": no gram met the document-frequency floor");
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second.tf != b.second.tf) return a.second.tf > b.second.tf;
        return a.first < b.first;
    });
    if (kept.size() > cfg.max_vocab) kept.resize(cfg.max_vocab);

    Vocabulary vocab;
    vocab.config = cfg;
    vocab.corpus_size = corpus_size;
    vocab.tokens.reserve(kept.size());
    vocab.doc_freq.reserve(kept.size());
    for (auto& [gram, s] : kept) {
        vocab.tokens.push_back(std::move(gram));
        vocab.doc_freq.push_back(s.df);
    }
    vocab.rebuild_index();
    return vocab;
}

}  // namespace

void Vocabulary::rebuild_index() {
    index.clear();
    index.reserve(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        index.emplace(tokens[i], static_cast<std::uint32_t>(i));
    }
}

Vocabulary build_vocabulary(const std::vector<TokenSeq>& docs, const FieldConfig& cfg) {
    cfg.validate();
    if (docs.empty()) throw DataError("build_vocabulary: no documents");
    StatsMap stats;
    for (const auto& doc : docs) accumulate_doc(stats, doc, cfg);
    return rank_and_cap(std::move(stats), docs.size(), cfg);
}

double SparseVector::l2_norm() const {
    double s = 0;
    for (const auto& [col, v] : entries) s += v * v;
    return std::sqrt(s);
}

SparseVector vectorize_count(const TokenSeq& tokens, const Vocabulary& vocab) {
    SparseVector vec;
    vec.width = static_cast<std::uint32_t>(vocab.size());
    auto grams = extract_ngrams(tokens, vocab.config.ngram_lo, vocab.config.ngram_hi);
    if (grams.empty()) return vec;
    std::vector<std::uint32_t> cols;
    cols.reserve(grams.size());
    for (const auto& g : grams) {
        auto it = vocab.index.find(g);
        if (it != vocab.index.end()) cols.push_back(it->second);
    }
    std::sort(cols.begin(), cols.end());
    std::size_t i = 0;
    while (i < cols.size()) {
        std::size_t j = i;
        while (j < cols.size() && cols[j] == cols[i]) ++j;
        vec.entries.emplace_back(cols[i], static_cast<double>(j - i));
        i = j;
    }
    return vec;
}

SparseVector vectorize_tfidf(const TokenSeq& tokens, const Vocabulary& vocab) {
    SparseVector vec = vectorize_count(tokens, vocab);
    for (auto& [col, value] : vec.entries) {
        double idf = std::log(static_cast<double>(vocab.corpus_size) /
                              static_cast<double>(vocab.doc_freq[col]));
        value *= 1.0 + idf;
    }
    return vec;
}

SparseVector vectorize(const TokenSeq& tokens, const Vocabulary& vocab) {
    return vocab.config.weighting == Weighting::TfIdf ? vectorize_tfidf(tokens, vocab)
                                                      : vectorize_count(tokens, vocab);
}

const TokenSeq& TokenizedCable::field(FieldId f) const {
    switch (f) {
        case FieldId::Subject: return subject;
        case FieldId::Concepts: return concepts;
        case FieldId::Body: return body;
        case FieldId::Tags: return tags;
        case FieldId::SenderRecipient: return sender_recipient;
        case FieldId::Office: return office;
        case FieldId::Date: return date;
        case FieldId::AllText: break;
    }
    throw UsageError("all_text is derived, not stored");
}

TokenSeq TokenizedCable::all_text() const {
    TokenSeq out;
    out.reserve(body.size() + subject.size() + concepts.size() + tags.size() +
                sender_recipient.size() + office.size());
    for (FieldId f : {FieldId::Body, FieldId::Subject, FieldId::Concepts, FieldId::Tags,
                      FieldId::SenderRecipient, FieldId::Office}) {
        const TokenSeq& t = field(f);
        out.insert(out.end(), t.begin(), t.end());
    }
    return out;
}

TokenizedCable tokenize_cable(const Cable& cable, const Tokenizer& tok) {
    TokenizedCable d;
    d.doc_id = cable.doc_id;
    d.subject = tok.normalize(cable.subject);
    d.body = tok.normalize(cable.body);
    d.office = tok.normalize(cable.office);
    d.sender_recipient = tok.sender_recipient(cable.from_field, cable.to_field);
    for (const auto& t : cable.tags) {
        TokenSeq part = tok.normalize(t);
        d.tags.insert(d.tags.end(), part.begin(), part.end());
    }
    for (const auto& cpt : cable.concepts) {
        TokenSeq part = tok.normalize(cpt);
        d.concepts.insert(d.concepts.end(), part.begin(), part.end());
    }
    if (auto weekend = derive_weekday(cable.date)) {
        d.date.push_back(*weekend ? "WEEKEND" : "WEEKDAY");
        char ym[16];
        std::snprintf(ym, sizeof(ym), "YM:%04d-%02u", static_cast<int>(cable.date->year()),
                      static_cast<unsigned>(cable.date->month()));
        d.date.push_back(ym);
    }
    return d;
}

std::vector<TokenizedCable> tokenize_corpus(std::span<const Cable> cables, const Tokenizer& tok,
                                            unsigned threads) {
    std::vector<TokenizedCable> out(cables.size());
    parallel_chunks(cables.size(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) out[i] = tokenize_cable(cables[i], tok);
    });
    return out;
}

SparseVector FeatureSpace::assemble(const TokenizedCable& doc) const {
    SparseVector vec;
    vec.width = width;
    for (const auto& block : blocks) {
        SparseVector part = block.vocab.config.field == FieldId::AllText
                                ? vectorize(doc.all_text(), block.vocab)
                                : vectorize(doc.field(block.vocab.config.field), block.vocab);
        for (const auto& [col, value] : part.entries) {
            vec.entries.emplace_back(col + block.offset, value);
        }
    }
    return vec;  // blocks are visited in offset order, so entries stay sorted
}

FeatureSpace build_feature_space(std::span<const TokenizedCable> docs,
                                 const std::vector<FieldConfig>& fields, unsigned threads) {
    if (docs.empty()) throw DataError("build_feature_space: no documents");
    if (fields.empty()) throw DataError("build_feature_space: no fields configured");

    FeatureSpace space;
    space.blocks.resize(fields.size());

    // Fields build independently; each scan is sequential so counts are
    // accumulated in document order regardless of thread count.
    parallel_for(fields.size(), threads, [&](std::size_t fi) {
        const FieldConfig& cfg = fields[fi];
        cfg.validate();
        StatsMap stats;
        for (const auto& doc : docs) {
            if (cfg.field == FieldId::AllText) {
                accumulate_doc(stats, doc.all_text(), cfg);
            } else {
                accumulate_doc(stats, doc.field(cfg.field), cfg);
            }
        }
        space.blocks[fi].vocab = rank_and_cap(std::move(stats), docs.size(), cfg);
    });

    std::uint32_t offset = 0;
    for (auto& block : space.blocks) {
        block.offset = offset;
        offset += static_cast<std::uint32_t>(block.vocab.size());
    }
    space.width = offset;
    if (space.width == 0) throw DataError("feature space has zero width");
    return space;
}

std::vector<SparseVector> vectorize_corpus(std::span<const TokenizedCable> docs,
                                           const FeatureSpace& space, unsigned threads) {
    std::vector<SparseVector> out(docs.size());
    parallel_chunks(docs.size(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) out[i] = space.assemble(docs[i]);
    });
    return out;
}

// --- serialization -----------------------------------------------------------

namespace {
std::string_view weighting_name(Weighting w) {
    return w == Weighting::TfIdf ? "tfidf" : "term_count";
}
Weighting parse_weighting(std::string_view s) {
    if (s == "tfidf") return Weighting::TfIdf;
    if (s == "term_count") return Weighting::TermCount;
    throw DataError("unknown weighting \"" + std::string(s) + "\"");
}
}  // namespace

nlohmann::json Vocabulary::to_json() const {
    nlohmann::json j;
    j["field"] = to_string(config.field);
    j["max_vocab"] = config.max_vocab;
    j["ngram"] = {config.ngram_lo, config.ngram_hi};
    j["min_doc_freq"] = config.min_doc_freq;
    j["weighting"] = weighting_name(config.weighting);
    j["corpus_size"] = corpus_size;
    j["tokens"] = tokens;
    j["doc_freq"] = doc_freq;
    return j;
}

Vocabulary Vocabulary::from_json(const nlohmann::json& j) {
    Vocabulary v;
    auto field = parse_field_id(j.at("field").get<std::string>());
    if (!field) throw DataError("unknown field in vocabulary");
    v.config.field = *field;
    v.config.max_vocab = j.at("max_vocab").get<std::size_t>();
    v.config.ngram_lo = j.at("ngram").at(0).get<int>();
    v.config.ngram_hi = j.at("ngram").at(1).get<int>();
    v.config.min_doc_freq = j.at("min_doc_freq").get<std::size_t>();
    v.config.weighting = parse_weighting(j.at("weighting").get<std::string>());
    v.corpus_size = j.at("corpus_size").get<std::uint64_t>();
    v.tokens = j.at("tokens").get<std::vector<std::string>>();
    v.doc_freq = j.at("doc_freq").get<std::vector<std::uint64_t>>();
    if (v.tokens.size() != v.doc_freq.size())
        throw DataError("vocabulary tokens and doc_freq lengths differ");
    v.rebuild_index();
    return v;
}

nlohmann::json FeatureSpace::to_json() const {
    nlohmann::json j;
    j["format"] = "cablesift-featurespace";
    j["version"] = 1;
    j["width"] = width;
    auto& arr = j["fields"] = nlohmann::json::array();
    for (const auto& block : blocks) {
        nlohmann::json b = block.vocab.to_json();
        b["offset"] = block.offset;
        arr.push_back(std::move(b));
    }
    return j;
}

FeatureSpace FeatureSpace::from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "cablesift-featurespace")
        throw DataError("not a feature-space document");
    FeatureSpace space;
    for (const auto& b : j.at("fields")) {
        Block block;
        block.vocab = Vocabulary::from_json(b);
        block.offset = b.at("offset").get<std::uint32_t>();
        space.blocks.push_back(std::move(block));
    }
    space.width = j.at("width").get<std::uint32_t>();
    std::uint32_t expect = 0;
    for (const auto& block : space.blocks) {
        if (block.offset != expect) throw DataError("feature-space offsets are inconsistent");
        expect += static_cast<std::uint32_t>(block.vocab.size());
    }
    if (expect != space.width) throw DataError("feature-space width is inconsistent");
    return space;
}

void FeatureSpace::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << to_json().dump(2) << '\n';
}

FeatureSpace FeatureSpace::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    nlohmann::json j;
    in >> j;
    return FeatureSpace::from_json(j);
}

}  // namespace cablesift
