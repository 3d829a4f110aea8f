#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "cablesift/common.hpp"
#include "cablesift/preprocess.hpp"

using namespace cablesift;

namespace {

std::string join(const TokenSeq& tokens) {
    std::string out;
    for (const auto& t : tokens) {
        if (!out.empty()) out += ' ';
        out += t;
    }
    return out;
}

// Random telegraph-ish text: words, stopwords, punctuation, gazetteer bits.
std::string random_text(Rng& rng) {
    static const char* words[] = {"CABLE",  "REVIEW", "the",  "in",   "NEW",    "YORK",
                                  "CAT-C",  "a",      "SALT", "TALKS", "REPORT", "urgent",
                                  "is",     "TEL",    "AVIV", "x",     "12",     "meeting_x",
                                  "E.G.",   "U.S.",   "of",   "PLAN"};
    static const char* punct[] = {" ", " ", " ", ", ", ". ", "; ", " - ", "\n", "  "};
    std::string out;
    std::size_t n = rng.below(14);
    for (std::size_t i = 0; i < n; ++i) {
        out += words[rng.below(std::size(words))];
        out += punct[rng.below(std::size(punct))];
    }
    return out;
}

}  // namespace

TEST_SUITE("preprocess") {

TEST_CASE("gazetteer collapse and stopword removal") {
    const auto& cfg = TokenizerConfig::defaults();
    CHECK(normalize_text("MEETING IN NEW YORK.", cfg) == TokenSeq{"MEETING", "NEWYORK"});
    CHECK(normalize_text("", cfg).empty());
    CHECK(normalize_text("CAT-C review, the end", cfg) == TokenSeq{"CAT-C", "REVIEW", "END"});
}

TEST_CASE("case folding and punctuation") {
    const auto& cfg = TokenizerConfig::defaults();
    CHECK(normalize_text("Tel Aviv", cfg) == TokenSeq{"TELAVIV"});
    CHECK(normalize_text("foo- bar", cfg) == TokenSeq{"FOO", "BAR"});  // loose hyphen splits
    CHECK(normalize_text("under_score stays", cfg) == TokenSeq{"UNDER_SCORE", "STAYS"});
    CHECK(normalize_text("a b c", cfg).empty());  // all length-1
    CHECK(normalize_text("...!!!", cfg).empty());
}

TEST_CASE("longest gazetteer match wins") {
    const auto& cfg = TokenizerConfig::defaults();
    CHECK(normalize_text("USUN NEW YORK MISSION", cfg) == TokenSeq{"USUNNEWYORK", "MISSION"});
}

TEST_CASE("gazetteer order does not change output") {
    TokenizerConfig cfg = TokenizerConfig::defaults();
    TokenizerConfig reversed = cfg;
    std::reverse(reversed.gazetteer.begin(), reversed.gazetteer.end());
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        std::string text = random_text(rng);
        CHECK(normalize_text(text, cfg) == normalize_text(text, reversed));
    }
}

TEST_CASE("normalize is idempotent on its own rendered output") {
    const auto& cfg = TokenizerConfig::defaults();
    Rng rng(11);
    for (int i = 0; i < 500; ++i) {
        TokenSeq once = normalize_text(random_text(rng), cfg);
        TokenSeq twice = normalize_text(join(once), cfg);
        CHECK(once == twice);
    }
}

TEST_CASE("output never contains stopwords or short tokens") {
    const auto& cfg = TokenizerConfig::defaults();
    Rng rng(13);
    for (int i = 0; i < 500; ++i) {
        for (const auto& t : normalize_text(random_text(rng), cfg)) {
            CHECK(t.size() >= cfg.min_token_len);
            CHECK(cfg.stopwords.count(t) == 0);
            CHECK(!std::ispunct(static_cast<unsigned char>(t.back())));
        }
    }
}

TEST_CASE("sender/recipient merge keeps sides distinct") {
    const auto& cfg = TokenizerConfig::defaults();
    CHECK(merge_sender_recipient("NATO", "STATE", cfg) == "FROM:NATO TO:STATE");
    CHECK(merge_sender_recipient("SALT TALKS", "STATE", cfg) == "FROM:SALTTALKS TO:STATE");
    CHECK(merge_sender_recipient("", "WHITE HOUSE", cfg) == "TO:WHITEHOUSE");
    CHECK(merge_sender_recipient("", "", cfg).empty());
    CHECK(sender_recipient_tokens("STATE", "STATE", cfg) ==
          TokenSeq{"FROM:STATE", "TO:STATE"});
}

namespace {
// Zeller's congruence, as an independent calendar oracle.
bool zeller_weekend(int y, int m, int d) {
    if (m < 3) {
        m += 12;
        --y;
    }
    int k = y % 100, j = y / 100;
    int h = (d + 13 * (m + 1) / 5 + k + k / 4 + j / 4 + 5 * j) % 7;  // 0=Sat, 1=Sun
    return h == 0 || h == 1;
}
}  // namespace

TEST_CASE("weekend indicator") {
    using std::chrono::year_month_day;
    using std::chrono::year;
    auto ymd = [](int y, unsigned m, unsigned d) {
        return year_month_day{year{y}, std::chrono::month{m}, std::chrono::day{d}};
    };
    CHECK(derive_weekday(ymd(1975, 12, 6)) == true);   // Saturday
    CHECK(derive_weekday(ymd(1977, 3, 14)) == false);  // Monday
    CHECK(derive_weekday(ymd(1976, 2, 29)) == zeller_weekend(1976, 2, 29));
    CHECK(derive_weekday(std::nullopt) == std::nullopt);

    Rng rng(17);
    for (int i = 0; i < 300; ++i) {
        int y = 1973 + static_cast<int>(rng.below(6));
        unsigned m = 1 + static_cast<unsigned>(rng.below(12));
        unsigned d = 1 + static_cast<unsigned>(rng.below(28));
        CHECK(derive_weekday(ymd(y, m, d)) == zeller_weekend(y, static_cast<int>(m),
                                                             static_cast<int>(d)));
    }
}

TEST_CASE("data files match the built-in defaults") {
    TokenizerConfig from_files = TokenizerConfig::load(CABLESIFT_DATA_DIR "/stopwords.txt",
                                                       CABLESIFT_DATA_DIR "/gazetteer.txt");
    const auto& defaults = TokenizerConfig::defaults();
    CHECK(from_files.stopwords == defaults.stopwords);
    CHECK(from_files.stopwords.size() == 179);
    CHECK(from_files.gazetteer == defaults.gazetteer);
    for (const auto& entry : from_files.gazetteer) {
        CHECK(entry.find(' ') != std::string::npos);
    }
}

TEST_CASE("loader rejects single-word gazetteer entries and empty stopword lists") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "cablesift_pre_test";
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "bad_gaz.txt");
        out << "SINGLEWORD\n";
    }
    CHECK_THROWS_AS(TokenizerConfig::load("", (dir / "bad_gaz.txt").string()), DataError);
    {
        std::ofstream out(dir / "empty_stop.txt");
        out << "# nothing\n";
    }
    CHECK_THROWS_AS(TokenizerConfig::load((dir / "empty_stop.txt").string(), ""), DataError);
}

}  // TEST_SUITE
