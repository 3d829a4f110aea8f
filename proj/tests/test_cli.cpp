#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cablesift/cli.hpp"
#include "cablesift/corpus.hpp"

using namespace cablesift;
namespace fs = std::filesystem;

namespace {

fs::path test_dir() {
    fs::path dir = fs::temp_directory_path() / "cablesift_cli_test";
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(std::initializer_list<std::string> args) {
    return cli::run(std::vector<std::string>(args));
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit with code 1") {
    CHECK(run_cli({"frobnicate"}) == 1);
    CHECK(run_cli({}) == 1);
    CHECK(run_cli({"evaluate", "--corpus", "x.jsonl", "--scenario", "NOPE"}) == 1);
}

TEST_CASE("data errors exit with code 2") {
    CHECK(run_cli({"evaluate", "--corpus", "/nonexistent/corpus.jsonl"}) == 2);
    CHECK(run_cli({"predict", "--corpus", "a.jsonl", "--model", "/nonexistent/model.json",
                   "--out", "out.jsonl"}) == 2);
}

TEST_CASE("synthgen, train, predict and evaluate round trip") {
    fs::path dir = test_dir();
    fs::path corpus = dir / "corpus.jsonl";
    CHECK(run_cli({"synthgen", "--out", corpus.string(), "--n", "300", "--seed", "7"}) == 0);
    REQUIRE(fs::exists(corpus));
    CHECK(load_jsonl(corpus.string()).cables.size() == 300);

    fs::path out_dir = dir / "train_out";
    CHECK(run_cli({"train", "--corpus", corpus.string(), "--scenario", "U_vs_CS",
                   "--classifier", "multinomial_nb", "--out-dir", out_dir.string(),
                   "--seed", "11", "--threads", "2"}) == 0);
    REQUIRE(fs::exists(out_dir / "model.json"));
    REQUIRE(fs::exists(out_dir / "featurespace.json"));

    fs::path scored = dir / "scored.jsonl";
    CHECK(run_cli({"predict", "--corpus", corpus.string(), "--model",
                   (out_dir / "model.json").string(), "--out", scored.string()}) == 0);
    std::ifstream in(scored);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        auto j = nlohmann::json::parse(line);
        CHECK(j.contains("doc_id"));
        double score = j.at("score").get<double>();
        CHECK(score >= 0.0);
        CHECK(score <= 1.0);
        std::string group = j.at("predicted_level_group").get<std::string>();
        CHECK((group == "U" || group == "C,S"));
        ++n;
    }
    CHECK(n == 300);

    fs::path eval_dir = dir / "eval_out";
    // the df >= 6 floors of office/tags/sender need relaxing at this scale
    CHECK(run_cli({"evaluate", "--corpus", corpus.string(), "--scenario", "U_vs_CS",
                   "--classifier", "sgd_logloss", "--k", "2", "--seed", "11", "--out-dir",
                   eval_dir.string(), "--no-timestamp", "--threads", "2", "--min-df",
                   "office=1", "--min-df", "tags=1", "--min-df", "sender_recipient=1"}) == 0);
    auto report = nlohmann::json::parse(slurp(eval_dir / "report.json"));
    CHECK(report.at("pooled").at("roc_auc").get<double>() > 0.8);
    CHECK(fs::exists(eval_dir / "roc.csv"));
    CHECK(fs::exists(eval_dir / "pr.csv"));
    CHECK(!report.contains("generated_at"));

    fs::path md = dir / "report.md";
    CHECK(run_cli({"report", "--report", (eval_dir / "report.json").string(), "--corpus",
                   corpus.string(), "--out", md.string()}) == 0);
    std::string rendered = slurp(md);
    CHECK(rendered.find("# Evaluation report") != std::string::npos);
    CHECK(rendered.find("roc_auc") != std::string::npos);

    // date features ride along as an extra block when asked for
    fs::path dated = dir / "train_dated";
    CHECK(run_cli({"train", "--corpus", corpus.string(), "--classifier", "multinomial_nb",
                   "--out-dir", dated.string(), "--date-features", "--seed", "11"}) == 0);
    auto fspace = nlohmann::json::parse(slurp(dated / "featurespace.json"));
    bool has_date_block = false;
    for (const auto& block : fspace.at("fields")) {
        has_date_block = has_date_block || block.at("field") == "date";
    }
    CHECK(has_date_block);
}

TEST_CASE("reproducibility: identical artifacts across seeds and thread counts") {
    fs::path dir = test_dir();
    fs::path corpus = dir / "repro.jsonl";
    REQUIRE(run_cli({"synthgen", "--out", corpus.string(), "--n", "200", "--seed", "3"}) == 0);

    auto run_pair = [&](const std::string& tag, const std::string& threads) {
        fs::path out = dir / ("repro_" + tag);
        REQUIRE(run_cli({"train", "--corpus", corpus.string(), "--classifier",
                         "multinomial_nb", "--out-dir", out.string(), "--seed", "21",
                         "--threads", threads}) == 0);
        fs::path eval_out = dir / ("repro_eval_" + tag);
        REQUIRE(run_cli({"evaluate", "--corpus", corpus.string(), "--classifier",
                         "sgd_logloss", "--k", "2", "--seed", "21", "--out-dir",
                         eval_out.string(), "--no-timestamp", "--threads", threads,
                         "--min-df", "office=1", "--min-df", "tags=1", "--min-df",
                         "sender_recipient=1"}) == 0);
        return slurp(out / "model.json") + slurp(eval_out / "report.json");
    };
    CHECK(run_pair("a", "1") == run_pair("b", "8"));
}

TEST_CASE("config file presets flags and explicit flags win") {
    fs::path dir = test_dir();
    fs::path corpus = dir / "config_corpus.jsonl";
    REQUIRE(run_cli({"synthgen", "--out", corpus.string(), "--n", "150", "--seed", "9"}) == 0);

    fs::path cfg = dir / "run_config.json";
    {
        std::ofstream out(cfg);
        out << nlohmann::json{{"corpus", corpus.string()},
                              {"seed", 42},
                              {"out_dir", (dir / "cfg_out").string()}}
                   .dump();
    }
    CHECK(run_cli({"train", "--config", cfg.string(), "--classifier", "multinomial_nb"}) == 0);
    auto model = nlohmann::json::parse(slurp(dir / "cfg_out" / "model.json"));
    CHECK(model.at("seed").get<std::uint64_t>() == 42);

    // an explicit flag overrides the config value
    CHECK(run_cli({"train", "--config", cfg.string(), "--classifier", "multinomial_nb",
                   "--seed", "7", "--out-dir", (dir / "cfg_out2").string()}) == 0);
    auto model2 = nlohmann::json::parse(slurp(dir / "cfg_out2" / "model.json"));
    CHECK(model2.at("seed").get<std::uint64_t>() == 7);
}

TEST_CASE("model-config single classifier and member overrides") {
    fs::path dir = test_dir();
    fs::path corpus = dir / "mc_corpus.jsonl";
    REQUIRE(run_cli({"synthgen", "--out", corpus.string(), "--n", "150", "--seed", "13"}) == 0);
    fs::path mc = dir / "model_config.json";
    {
        std::ofstream out(mc);
        out << R"({"single": {"kind": "multinomial_nb", "hyper": {"nb_alpha": 0.5}}})";
    }
    fs::path out_dir = dir / "mc_out";
    CHECK(run_cli({"train", "--corpus", corpus.string(), "--model-config", mc.string(),
                   "--out-dir", out_dir.string()}) == 0);
    auto model = nlohmann::json::parse(slurp(out_dir / "model.json"));
    REQUIRE(model.contains("classifier"));
    CHECK(model.at("classifier").at("spec").at("hyper").at("nb_alpha").get<double>() == 0.5);
}

TEST_CASE("xml ingest to jsonl") {
    fs::path dir = test_dir() / "xml";
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "batch1.xml");
        out << R"(<?xml version="1.0"?>
<cables>
  <cable>
    <doc_id>1975NATO00001</doc_id>
    <date>1975-06-02</date>
    <from>NATO</from><to>STATE</to>
    <office>EUR</office>
    <tags>PINS</tags><tags>EG</tags>
    <concepts>PEACE PLANS</concepts>
    <subject>FORCE &amp; TROOP LEVELS</subject>
    <body>1. TROOP MOVEMENTS CONTINUE.</body>
    <origclass>SECRET</origclass>
    <cable_type>full</cable_type>
    <unknown_element>ignored</unknown_element>
  </cable>
  <cable>
    <doc_id>1975XX00002</doc_id>
    <origclass>UNCLASSIFIED</origclass>
    <subject>ROUTINE</subject>
    <body><![CDATA[NOTHING <SPECIAL> HERE]]></body>
    <cable_type>full</cable_type>
  </cable>
</cables>)";
    }
    fs::path out_path = test_dir() / "ingested.jsonl";
    CHECK(run_cli({"ingest", "--xml-dir", dir.string(), "--out", out_path.string()}) == 0);
    LoadResult loaded = load_jsonl(out_path.string());
    REQUIRE(loaded.cables.size() == 2);
    const Cable& first = loaded.cables[0];
    CHECK(first.doc_id == "1975NATO00001");
    CHECK(first.subject == "FORCE & TROOP LEVELS");
    CHECK(first.tags == std::vector<std::string>{"PINS", "EG"});
    CHECK(first.orig_class == Level::Secret);
    CHECK(loaded.cables[1].body == "NOTHING <SPECIAL> HERE");
}

TEST_CASE("analyze writes the table and figure exports") {
    fs::path dir = test_dir();
    fs::path corpus = dir / "analyze.jsonl";
    {
        std::ofstream out(corpus);
        auto emit = [&](int i, const std::string& concept_kw, const std::string& level) {
            nlohmann::json j = {
                {"doc_id", "A" + std::to_string(i)},
                {"date", i % 2 == 0 ? "1975-03-10" : "1975-04-20"},
                {"from", "NATO"},
                {"to", "STATE"},
                {"office", "EUR"},
                {"tags", nlohmann::json::array({"AR", i % 3 == 0 ? "SHUM" : "PINS"})},
                {"concepts", nlohmann::json::array({concept_kw})},
                {"subject", "SUBJECT"},
                {"body", "BODY TEXT"},
                {"origclass", level},
                {"cable_type", "full"},
            };
            out << j.dump() << "\n";
        };
        for (int i = 0; i < 87; ++i) emit(i, "CAT-C", "SECRET");
        for (int i = 87; i < 100; ++i) emit(i, "CAT-C", "UNCLASSIFIED");
        for (int i = 100; i < 200; ++i) emit(i, "MUSIC", "UNCLASSIFIED");
    }
    fs::path out_dir = dir / "analyze_out";
    CHECK(run_cli({"analyze", "--corpus", corpus.string(), "--out-dir", out_dir.string(),
                   "--min-total", "50"}) == 0);
    for (const char* name : {"table1.csv", "table2.csv", "table3.csv", "table5.csv",
                             "kinds.csv", "missing_rates.csv", "fig1.csv", "fig2.csv",
                             "fig3.csv", "fig3_groups.csv"}) {
        CHECK(fs::exists(out_dir / name));
    }
    std::string table2 = slurp(out_dir / "table2.csv");
    CHECK(table2.find("CAT-C,87,100,87.00") != std::string::npos);
    std::string table3 = slurp(out_dir / "table3.csv");
    CHECK(table3.find("MUSIC,0,100,0.00") != std::string::npos);
    CHECK(table3.find("CAT-C") == std::string::npos);  // 87% is not a low-secrecy concept
}

}  // TEST_SUITE
