#include <doctest.h>

#include <cmath>
#include <set>

#include "cablesift/common.hpp"
#include "cablesift/features.hpp"

using namespace cablesift;

namespace {

TokenSeq seq(std::initializer_list<const char*> tokens) {
    TokenSeq out;
    for (const char* t : tokens) out.emplace_back(t);
    return out;
}

FieldConfig test_config(std::size_t max_vocab, int lo, int hi, std::size_t min_df) {
    FieldConfig cfg;
    cfg.field = FieldId::Body;
    cfg.max_vocab = max_vocab;
    cfg.ngram_lo = lo;
    cfg.ngram_hi = hi;
    cfg.min_doc_freq = min_df;
    return cfg;
}

TokenSeq random_doc(Rng& rng, int vocab, std::size_t max_len) {
    TokenSeq doc;
    std::size_t n = rng.below(max_len + 1);
    for (std::size_t i = 0; i < n; ++i) {
        doc.push_back("T" + std::to_string(rng.below(vocab)));
    }
    return doc;
}

}  // namespace

TEST_SUITE("features") {

TEST_CASE("ngram extraction") {
    CHECK(extract_ngrams(seq({"A", "B", "C"}), 1, 1) ==
          std::vector<std::string>{"A", "B", "C"});
    CHECK(extract_ngrams(seq({"A", "B", "C"}), 1, 2) ==
          std::vector<std::string>{"A", "B", "C", "A B", "B C"});
    CHECK(extract_ngrams({}, 1, 2).empty());
    CHECK(extract_ngrams(seq({"A"}), 2, 2).empty());
}

TEST_CASE("vocabulary ranks by term frequency with lexicographic ties") {
    std::vector<TokenSeq> docs = {seq({"A", "A", "B"}), seq({"A", "C"}), seq({"B"})};
    Vocabulary v = build_vocabulary(docs, test_config(2, 1, 1, 1));
    REQUIRE(v.size() == 2);
    CHECK(v.tokens[0] == "A");  // tf 3
    CHECK(v.tokens[1] == "B");  // tf 2 beats C's tf 1
    CHECK(v.corpus_size == 3);
    CHECK(v.doc_freq[0] == 2);

    Vocabulary floored = build_vocabulary(docs, test_config(10, 1, 1, 2));
    CHECK(floored.size() == 2);  // C has df 1 and is dropped before ranking
    CHECK(floored.index.count("C") == 0);
}

TEST_CASE("tie ranking is lexicographic") {
    std::vector<TokenSeq> docs = {seq({"ZZ", "AA", "MM"})};
    Vocabulary v = build_vocabulary(docs, test_config(3, 1, 1, 1));
    CHECK(v.tokens == std::vector<std::string>{"AA", "MM", "ZZ"});
}

TEST_CASE("empty vocabulary is an error") {
    std::vector<TokenSeq> docs = {seq({"A"})};
    CHECK_THROWS_AS(build_vocabulary(docs, test_config(5, 1, 1, 2)), DataError);
    CHECK_THROWS_AS(build_vocabulary({}, test_config(5, 1, 1, 1)), DataError);
}

TEST_CASE("count vectorization") {
    std::vector<TokenSeq> docs = {seq({"A", "A", "B"}), seq({"A", "B"})};
    Vocabulary v = build_vocabulary(docs, test_config(2, 1, 1, 1));
    SparseVector x = vectorize_count(seq({"A", "A", "B"}), v);
    REQUIRE(x.entries.size() == 2);
    CHECK(x.entries[0] == std::pair<std::uint32_t, double>{0, 2.0});
    CHECK(x.entries[1] == std::pair<std::uint32_t, double>{1, 1.0});
    CHECK(vectorize_count(seq({"Q"}), v).entries.empty());  // OOV ignored
}

TEST_CASE("count values sum to in-vocabulary gram occurrences") {
    Rng rng(5);
    std::vector<TokenSeq> docs;
    for (int i = 0; i < 30; ++i) docs.push_back(random_doc(rng, 12, 25));
    docs.push_back(seq({"T0", "T1"}));  // ensure non-empty vocabulary
    Vocabulary v = build_vocabulary(docs, test_config(8, 1, 1, 1));
    for (int i = 0; i < 100; ++i) {
        TokenSeq doc = random_doc(rng, 16, 30);
        SparseVector x = vectorize_count(doc, v);
        double total = 0;
        for (const auto& [col, value] : x.entries) total += value;
        double expected = 0;
        for (const auto& t : doc) expected += v.index.count(t) ? 1 : 0;
        CHECK(total == expected);
        for (std::size_t e = 1; e < x.entries.size(); ++e) {
            CHECK(x.entries[e - 1].first < x.entries[e].first);  // strictly increasing
        }
    }
}

TEST_CASE("tfidf equals counts scaled by 1 + ln(M/df)") {
    // Fixture where A appears in 2 of 4 docs and the query has tf 3.
    std::vector<TokenSeq> docs = {seq({"A", "B"}), seq({"A", "B"}), seq({"B"}), seq({"B"})};
    Vocabulary v = build_vocabulary(docs, test_config(4, 1, 1, 1));
    REQUIRE(v.corpus_size == 4);
    SparseVector x = vectorize_tfidf(seq({"A", "A", "A"}), v);
    REQUIRE(x.entries.size() == 1);
    CHECK(x.entries[0].second == doctest::Approx(3.0 * (1.0 + std::log(2.0))).epsilon(1e-12));

    // Terms in every document keep their raw counts: idf = ln(1) = 0.
    SparseVector all_docs = vectorize_tfidf(seq({"B", "B"}), v);
    REQUIRE(all_docs.entries.size() == 1);
    CHECK(all_docs.entries[0].second == 2.0);

    CHECK(vectorize_tfidf(seq({"ZZZ"}), v).entries.empty());
}

TEST_CASE("tfidf cross-checks against counts on random docs") {
    Rng rng(9);
    std::vector<TokenSeq> docs;
    for (int i = 0; i < 40; ++i) docs.push_back(random_doc(rng, 10, 20));
    docs.push_back(seq({"T0", "T1"}));
    Vocabulary v = build_vocabulary(docs, test_config(10, 1, 1, 1));
    for (int i = 0; i < 100; ++i) {
        TokenSeq doc = random_doc(rng, 10, 20);
        SparseVector count = vectorize_count(doc, v);
        SparseVector tfidf = vectorize_tfidf(doc, v);
        REQUIRE(count.entries.size() == tfidf.entries.size());
        for (std::size_t e = 0; e < count.entries.size(); ++e) {
            double idf = std::log(double(v.corpus_size) / double(v.doc_freq[count.entries[e].first]));
            CHECK(tfidf.entries[e].second ==
                  doctest::Approx(count.entries[e].second * (1.0 + idf)).epsilon(1e-12));
        }
    }
}

TEST_CASE("feature space offsets and assembly") {
    Tokenizer tok(TokenizerConfig::defaults());
    std::vector<Cable> cables;
    for (int i = 0; i < 6; ++i) {
        Cable c;
        c.doc_id = "C" + std::to_string(i);
        c.subject = "ALPHA BRAVO";
        c.body = i % 2 == 0 ? "GAMMA DELTA GAMMA" : "DELTA EPSILON";
        c.tags = {"PINS", "EG"};
        c.concepts = {"PEACE PLANS"};
        c.from_field = "NATO";
        c.to_field = "STATE";
        c.office = "EUR";
        cables.push_back(c);
    }
    auto docs = tokenize_corpus(cables, tok);

    std::vector<FieldConfig> fields;
    for (FieldId f : {FieldId::Subject, FieldId::Body, FieldId::SenderRecipient}) {
        FieldConfig cfg = FieldConfig::defaults(f);
        cfg.min_doc_freq = 1;
        fields.push_back(cfg);
    }
    FeatureSpace space = build_feature_space(docs, fields);
    CHECK(space.width == space.blocks[0].vocab.size() + space.blocks[1].vocab.size() +
                             space.blocks[2].vocab.size());
    CHECK(space.blocks[0].offset == 0);
    CHECK(space.blocks[1].offset == space.blocks[0].vocab.size());

    SparseVector x = space.assemble(docs[0]);
    CHECK(!x.entries.empty());
    CHECK(x.width == space.width);
    std::set<std::uint32_t> cols;
    for (const auto& [col, value] : x.entries) {
        CHECK(col < space.width);
        CHECK(cols.insert(col).second);  // no duplicate columns
        CHECK(value > 0);
    }
    // sender/recipient block sees FROM:NATO and TO:STATE
    const auto& sr = space.blocks[2];
    CHECK(sr.vocab.index.count("FROM:NATO") == 1);
    CHECK(sr.vocab.index.count("TO:STATE") == 1);
}

TEST_CASE("manual offset arithmetic") {
    // Two fields of widths 3 and 2; block vectors [(1,1)] and [(0,4)]
    // concatenate to [(1,1),(3,4)].
    std::vector<TokenSeq> docs1 = {seq({"A"}), seq({"B"}), seq({"C"})};
    std::vector<TokenSeq> docs2 = {seq({"X"}), seq({"Y"})};
    FieldConfig cfg1 = test_config(3, 1, 1, 1);
    cfg1.field = FieldId::Subject;
    FieldConfig cfg2 = test_config(2, 1, 1, 1);
    cfg2.field = FieldId::Body;
    FeatureSpace space;
    space.blocks.push_back({build_vocabulary(docs1, cfg1), 0});
    space.blocks.push_back({build_vocabulary(docs2, cfg2), 3});
    space.width = 5;

    TokenizedCable doc;
    doc.subject = seq({"B"});
    doc.body = seq({"X", "X", "X", "X"});
    SparseVector x = space.assemble(doc);
    REQUIRE(x.entries.size() == 2);
    CHECK(x.entries[0] == std::pair<std::uint32_t, double>{1, 1.0});
    CHECK(x.entries[1] == std::pair<std::uint32_t, double>{3, 4.0});
}

TEST_CASE("date features are derived but stay out of the default stack") {
    for (const FieldConfig& cfg : default_field_configs()) {
        CHECK(cfg.field != FieldId::Date);
    }
    Tokenizer tok(TokenizerConfig::defaults());
    Cable c;
    c.doc_id = "D";
    c.subject = "ALPHA";
    c.date = std::chrono::year_month_day{std::chrono::year{1975}, std::chrono::month{12},
                                         std::chrono::day{6}};  // a Saturday
    TokenizedCable doc = tokenize_cable(c, tok);
    CHECK(doc.date == TokenSeq{"WEEKEND", "YM:1975-12"});

    c.date = std::chrono::year_month_day{std::chrono::year{1977}, std::chrono::month{3},
                                         std::chrono::day{14}};  // a Monday
    CHECK(tokenize_cable(c, tok).date == TokenSeq{"WEEKDAY", "YM:1977-03"});

    c.date = std::nullopt;
    CHECK(tokenize_cable(c, tok).date.empty());

    // date tokens never leak into the pooled text feature
    CHECK(tokenize_cable(c, tok).all_text() == TokenSeq{"ALPHA"});
}

TEST_CASE("empty concepts contribute nothing") {
    Tokenizer tok(TokenizerConfig::defaults());
    Cable a;
    a.doc_id = "A";
    a.subject = "ALPHA";
    a.body = "GAMMA DELTA";
    a.concepts = {"PEACE"};
    a.tags = {"PINS"};
    a.from_field = "NATO";
    a.to_field = "STATE";
    a.office = "EUR";
    Cable b = a;
    b.doc_id = "B";
    b.concepts.clear();

    auto docs = tokenize_corpus(std::vector<Cable>{a, b}, tok);
    FieldConfig cfg = FieldConfig::defaults(FieldId::Concepts);
    cfg.min_doc_freq = 1;
    FeatureSpace space = build_feature_space(docs, {cfg});
    CHECK(!space.assemble(docs[0]).entries.empty());
    CHECK(space.assemble(docs[1]).entries.empty());
}

TEST_CASE("identical corpus and config give byte-identical serialization") {
    Rng rng(21);
    std::vector<TokenSeq> docs;
    for (int i = 0; i < 50; ++i) docs.push_back(random_doc(rng, 40, 30));
    docs.push_back(seq({"T0", "T1"}));
    FieldConfig cfg = test_config(25, 1, 2, 2);
    Vocabulary a = build_vocabulary(docs, cfg);
    Vocabulary b = build_vocabulary(docs, cfg);
    CHECK(a.to_json().dump() == b.to_json().dump());

    Vocabulary restored = Vocabulary::from_json(a.to_json());
    CHECK(restored.to_json().dump() == a.to_json().dump());
    CHECK(restored.index.size() == a.index.size());
}

TEST_CASE("default field stack sums to the published width when saturated") {
    // Feed each field more distinct tokens than its cap so every vocabulary
    // saturates; the stack must then come out at exactly 40,700 columns.
    std::vector<FieldConfig> fields = default_field_configs();
    std::uint32_t expected_total = 0;
    std::vector<TokenizedCable> docs(6);  // six copies clear every df floor
    for (std::size_t i = 0; i < docs.size(); ++i) docs[i].doc_id = "S" + std::to_string(i);
    auto fill = [](TokenSeq& dst, const char* prefix, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            dst.push_back(std::string(prefix) + std::to_string(i));
        }
    };
    for (const FieldConfig& cfg : fields) {
        expected_total += static_cast<std::uint32_t>(cfg.max_vocab);
        if (cfg.field == FieldId::AllText) continue;  // fed by the other six
        for (auto& doc : docs) {
            switch (cfg.field) {
                case FieldId::Subject: fill(doc.subject, "SU", 9000); break;
                case FieldId::Concepts: fill(doc.concepts, "CO", 800); break;
                case FieldId::Body: fill(doc.body, "BO", 16000); break;
                case FieldId::Tags: fill(doc.tags, "TA", 1000); break;
                case FieldId::SenderRecipient: fill(doc.sender_recipient, "SR", 1200); break;
                case FieldId::Office: fill(doc.office, "OF", 300); break;
                case FieldId::AllText: break;
            }
        }
    }
    CHECK(expected_total == 40700);
    FeatureSpace space = build_feature_space(docs, fields);
    CHECK(space.width == 40700);
    for (const auto& block : space.blocks) {
        CHECK(block.vocab.size() == block.vocab.config.max_vocab);
    }
}

}  // TEST_SUITE
