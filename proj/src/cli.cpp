#include "cablesift/cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "cablesift/analytics.hpp"
#include "cablesift/common.hpp"
#include "cablesift/eval.hpp"
#include "cablesift/ingest.hpp"
#include "cablesift/synthgen.hpp"

namespace cablesift::cli {

namespace {

namespace fs = std::filesystem;

struct CommonOpts {
    std::string config_path;
    std::string corpus_path;
    std::string out_dir = ".";
    std::string stopwords_path;
    std::string gazetteer_path;
    std::string features_config;
    std::string model_config;
    std::string scenario_name = "U_vs_CS";
    int k = 3;
    std::uint64_t seed = kDefaultSeed;
    double threshold = 0.5;
    unsigned threads = default_threads();
    bool no_timestamp = false;
};

nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw DataError("bad JSON in " + path + ": " + e.what());
    }
    return j;
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << content;
}

std::string timestamp_utc() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

Scenario need_scenario(const std::string& name) {
    auto s = parse_scenario(name);
    if (!s)
        throw UsageError("unknown scenario \"" + name +
                         "\" (expected U_vs_LCS, UL_vs_CS, ULC_vs_S or U_vs_CS)");
    return *s;
}

TokenizerConfig tokenizer_from(const CommonOpts& opts) {
    if (opts.stopwords_path.empty() && opts.gazetteer_path.empty())
        return TokenizerConfig::defaults();
    return TokenizerConfig::load(opts.stopwords_path, opts.gazetteer_path);
}

// Per-field overrides of the default stack: --fields picks the stack,
// --max-vocab/--ngram/--min-df/--weighting tweak one field each ("body=9000").
struct FieldOverrides {
    std::string fields_csv;
    std::vector<std::string> max_vocab, ngram, min_df, weighting;
    bool date_features = false;
};

std::pair<std::string, std::string> split_kv(const std::string& s, const char* what) {
    auto eq = s.find('=');
    if (eq == std::string::npos)
        throw UsageError(std::string(what) + " override must look like field=value: " + s);
    return {s.substr(0, eq), s.substr(eq + 1)};
}

std::vector<FieldConfig> resolve_fields(const std::string& features_config,
                                        const FieldOverrides& ov) {
    std::vector<FieldConfig> fields;
    if (!features_config.empty()) {
        nlohmann::json j = load_json_file(features_config);
        for (const auto& fj : j.at("fields")) {
            FieldConfig cfg;
            auto field = parse_field_id(fj.at("field").get<std::string>());
            if (!field) throw DataError("unknown field in " + features_config);
            cfg = FieldConfig::defaults(*field);
            cfg.max_vocab = fj.value("max_vocab", cfg.max_vocab);
            if (fj.contains("ngram")) {
                cfg.ngram_lo = fj.at("ngram").at(0).get<int>();
                cfg.ngram_hi = fj.at("ngram").at(1).get<int>();
            }
            cfg.min_doc_freq = fj.value("min_doc_freq", cfg.min_doc_freq);
            if (fj.contains("weighting")) {
                cfg.weighting = fj.at("weighting").get<std::string>() == "tfidf"
                                    ? Weighting::TfIdf
                                    : Weighting::TermCount;
            }
            fields.push_back(cfg);
        }
    } else if (!ov.fields_csv.empty()) {
        std::stringstream ss(ov.fields_csv);
        std::string name;
        while (std::getline(ss, name, ',')) {
            auto field = parse_field_id(name);
            if (!field) throw UsageError("unknown field \"" + name + "\"");
            fields.push_back(FieldConfig::defaults(*field));
        }
    } else {
        fields = default_field_configs();
    }
    if (ov.date_features &&
        std::none_of(fields.begin(), fields.end(),
                     [](const FieldConfig& f) { return f.field == FieldId::Date; })) {
        fields.push_back(FieldConfig::defaults(FieldId::Date));
    }
    if (fields.empty()) throw UsageError("no fields selected");

    auto find_field = [&](const std::string& name) -> FieldConfig& {
        auto field = parse_field_id(name);
        if (!field) throw UsageError("unknown field \"" + name + "\"");
        for (auto& cfg : fields) {
            if (cfg.field == *field) return cfg;
        }
        throw UsageError("field \"" + name + "\" is not in the selected stack");
    };
    for (const auto& s : ov.max_vocab) {
        auto [name, value] = split_kv(s, "--max-vocab");
        find_field(name).max_vocab = std::stoul(value);
    }
    for (const auto& s : ov.min_df) {
        auto [name, value] = split_kv(s, "--min-df");
        find_field(name).min_doc_freq = std::stoul(value);
    }
    for (const auto& s : ov.ngram) {
        auto [name, value] = split_kv(s, "--ngram");
        auto comma = value.find(',');
        if (comma == std::string::npos) throw UsageError("--ngram wants field=lo,hi");
        FieldConfig& cfg = find_field(name);
        cfg.ngram_lo = std::stoi(value.substr(0, comma));
        cfg.ngram_hi = std::stoi(value.substr(comma + 1));
    }
    for (const auto& s : ov.weighting) {
        auto [name, value] = split_kv(s, "--weighting");
        if (value != "tfidf" && value != "term_count")
            throw UsageError("--weighting wants term_count or tfidf");
        find_field(name).weighting = value == "tfidf" ? Weighting::TfIdf : Weighting::TermCount;
    }
    for (const auto& cfg : fields) cfg.validate();
    return fields;
}

// Optional model-config document: {"single": {...}} fits one classifier;
// {"members": {"ridge": {"ridge_lambda": 2.0}}, "weights": [...]} adjusts
// the ensemble.
struct ModelPlan {
    std::optional<ClassifierSpec> single;
    EnsembleSpec ensemble;
};

ModelPlan resolve_model(const std::string& model_config, const std::string& single_kind,
                        std::uint64_t seed, double threshold, bool hard_voting) {
    ModelPlan plan;
    plan.ensemble = EnsembleSpec::defaults(seed);
    plan.ensemble.threshold = threshold;
    plan.ensemble.hard_voting = hard_voting;
    if (!single_kind.empty()) {
        auto kind = parse_classifier_kind(single_kind);
        if (!kind) throw UsageError("unknown classifier \"" + single_kind + "\"");
        plan.single = ClassifierSpec::defaults(*kind, mix_seed(seed, 0x0eull));
    }
    if (model_config.empty()) return plan;

    nlohmann::json j = load_json_file(model_config);
    if (j.contains("single")) {
        plan.single = ClassifierSpec::from_json(j.at("single"));
        if (plan.single->seed == 0) plan.single->seed = mix_seed(seed, 0x0eull);
    }
    if (j.contains("members")) {
        for (const auto& [kind_name, hyper_json] : j.at("members").items()) {
            auto kind = parse_classifier_kind(kind_name);
            if (!kind) throw DataError("unknown member \"" + kind_name + "\"");
            for (auto& member : plan.ensemble.members) {
                if (member.kind == *kind) member.hyper = Hyper::from_json(hyper_json);
            }
        }
    }
    if (j.contains("weights"))
        plan.ensemble.weights = j.at("weights").get<std::vector<double>>();
    if (j.contains("voting"))
        plan.ensemble.hard_voting = j.at("voting").get<std::string>() == "hard";
    if (j.contains("threshold")) plan.ensemble.threshold = j.at("threshold").get<double>();
    return plan;
}

std::vector<Cable> load_trainable(const std::string& path, bool quiet = false) {
    LoadResult loaded = load_jsonl(path);
    auto [trainable, tally] = select_trainable(std::move(loaded.cables));
    if (!quiet) {
        std::cerr << "corpus: " << tally.input.total() << " records, "
                  << tally.retained.total() << " trainable, " << tally.excluded_total()
                  << " excluded, " << loaded.rejected.size() << " rejected lines\n";
    }
    if (trainable.empty()) throw DataError("no trainable cables in " + path);
    return trainable;
}

std::string tally_csv(const ExclusionTally& tally) {
    std::string out =
        "section,reason,total,unclassified,limited_official_use,confidential,secret,degenerate\n";
    auto row = [&](const std::string& section, const std::string& name, const LevelCounts& c) {
        out += section + ',' + name + ',' + std::to_string(c.total());
        for (auto n : c.by_level) out += ',' + std::to_string(n);
        out += ',' + std::to_string(c.degenerate) + '\n';
    };
    row("input", "all_records", tally.input);
    for (std::size_t i = 0; i < kExclusionReasonCount; ++i) {
        row("excluded_exclusive", std::string(to_string(static_cast<ExclusionReason>(i))),
            tally.excluded[i]);
    }
    for (std::size_t i = 0; i < kExclusionReasonCount; ++i) {
        row("condition_nonexclusive", std::string(to_string(static_cast<ExclusionReason>(i))),
            tally.condition[i]);
    }
    row("retained", "used_for_classifier", tally.retained);
    return out;
}

void print_tally(std::ostream& os, const ExclusionTally& tally) {
    auto line = [&](std::string_view name, const LevelCounts& c) {
        os << "  " << name << ": " << c.total() << " (U " << c.by_level[0] << ", LOU "
           << c.by_level[1] << ", C " << c.by_level[2] << ", S " << c.by_level[3] << ", degenerate "
           << c.degenerate << ")\n";
    };
    os << "records:\n";
    line("input", tally.input);
    for (std::size_t i = 0; i < kExclusionReasonCount; ++i) {
        if (tally.excluded[i].total() == 0) continue;
        line(to_string(static_cast<ExclusionReason>(i)), tally.excluded[i]);
    }
    line("used for classifier", tally.retained);
}

// --- subcommands ---------------------------------------------------------------

int cmd_ingest(const std::string& xml_dir, const std::string& out_path,
               const std::string& tally_out) {
    IngestStats stats = ingest_xml_dir(xml_dir, out_path);
    std::cout << "ingested " << stats.records << " records from " << stats.files << " files ("
              << stats.rejected << " rejected)\n";
    print_tally(std::cout, stats.tally);
    if (!tally_out.empty()) write_text(tally_out, tally_csv(stats.tally));
    return 0;
}

int cmd_train(const CommonOpts& opts, const FieldOverrides& field_ov,
              const std::string& single_kind, bool hard_voting) {
    Scenario scenario = need_scenario(opts.scenario_name);
    std::vector<FieldConfig> fields = resolve_fields(opts.features_config, field_ov);
    TokenizerConfig tok_cfg = tokenizer_from(opts);
    ModelPlan plan =
        resolve_model(opts.model_config, single_kind, opts.seed, opts.threshold, hard_voting);

    std::vector<Cable> corpus = load_trainable(opts.corpus_path);
    std::vector<Level> levels;
    levels.reserve(corpus.size());
    for (const Cable& c : corpus) levels.push_back(*c.orig_class);
    BinarizeResult bin = binarize(levels, scenario);
    if (bin.labels.empty()) throw DataError("scenario leaves no records to train on");

    Tokenizer tok(tok_cfg);
    std::vector<Cable> kept;
    kept.reserve(bin.kept.size());
    for (std::size_t i : bin.kept) kept.push_back(std::move(corpus[i]));
    std::vector<TokenizedCable> docs = tokenize_corpus(kept, tok, opts.threads);

    FeatureSpace space = build_feature_space(docs, fields, opts.threads);
    std::vector<SparseVector> X = vectorize_corpus(docs, space, opts.threads);

    fs::create_directories(opts.out_dir);
    space.save((fs::path(opts.out_dir) / "featurespace.json").string());

    nlohmann::json model;
    model["format"] = "cablesift-model";
    model["version"] = 1;
    model["seed"] = opts.seed;
    model["scenario"] = to_string(scenario);
    auto groups = scenario_group_names(scenario);
    model["groups"] = {groups.first, groups.second};
    model["threshold"] = opts.threshold;
    std::vector<std::string> stopwords(tok_cfg.stopwords.begin(), tok_cfg.stopwords.end());
    std::sort(stopwords.begin(), stopwords.end());
    model["tokenizer"] = {
        {"stopwords", stopwords},
        {"gazetteer", tok_cfg.gazetteer},
        {"min_token_len", tok_cfg.min_token_len},
    };
    model["feature_space"] = space.to_json();

    if (plan.single) {
        TrainedClassifier clf = fit(*plan.single, X, bin.labels, opts.threads);
        model["classifier"] = clf.to_json();
        std::cout << "trained " << to_string(plan.single->kind) << " on " << X.size()
                  << " cables, width " << space.width << "\n";
    } else {
        TrainedEnsemble ensemble = fit_ensemble(plan.ensemble, X, bin.labels, opts.threads);
        model["ensemble"] = ensemble.to_json();
        std::cout << "trained ensemble of " << ensemble.members.size() << " on " << X.size()
                  << " cables, width " << space.width << "\n";
    }
    std::string model_path = (fs::path(opts.out_dir) / "model.json").string();
    write_text(model_path, model.dump(2) + "\n");
    std::cout << "wrote " << model_path << "\n";
    return 0;
}

int cmd_evaluate(const CommonOpts& opts, const FieldOverrides& field_ov,
                 const std::string& single_kind, bool hard_voting, bool global_vocab,
                 bool no_doc_scores, std::size_t top_n) {
    Scenario scenario = need_scenario(opts.scenario_name);
    PipelineConfig config;
    config.tokenizer = tokenizer_from(opts);
    config.fields = resolve_fields(opts.features_config, field_ov);
    ModelPlan plan =
        resolve_model(opts.model_config, single_kind, opts.seed, opts.threshold, hard_voting);
    config.single = plan.single;
    config.threshold = plan.ensemble.threshold;
    config.hard_voting = plan.ensemble.hard_voting;
    config.global_vocab = global_vocab;
    config.top_n = top_n;

    std::vector<Cable> corpus = load_trainable(opts.corpus_path);
    EvalReport report =
        cross_validate(config, corpus, scenario, opts.k, opts.seed, opts.threads);

    fs::create_directories(opts.out_dir);
    nlohmann::json j = report.to_json(!no_doc_scores);
    if (!opts.no_timestamp) j["generated_at"] = timestamp_utc();
    write_text((fs::path(opts.out_dir) / "report.json").string(), j.dump(2) + "\n");
    report.write_roc_csv((fs::path(opts.out_dir) / "roc.csv").string());
    report.write_pr_csv((fs::path(opts.out_dir) / "pr.csv").string());

    std::cout << "scenario " << to_string(scenario) << ", k=" << report.k << "\n"
              << "pooled auc " << report.pooled.auc << ", accuracy "
              << report.pooled.metrics.accuracy << "\n"
              << "mean-of-folds auc " << report.mean_auc << ", accuracy "
              << report.mean_of_folds.accuracy << "\n";
    return 0;
}

int cmd_predict(const CommonOpts& opts, const std::string& model_path,
                const std::string& out_path, bool threshold_given) {
    nlohmann::json mj = load_json_file(model_path);
    if (mj.value("format", "") != "cablesift-model")
        throw DataError(model_path + " is not a model file");
    FeatureSpace space = FeatureSpace::from_json(mj.at("feature_space"));

    TokenizerConfig tok_cfg;
    if (mj.contains("tokenizer")) {
        const auto& tj = mj.at("tokenizer");
        for (const auto& w : tj.at("stopwords")) tok_cfg.stopwords.insert(w.get<std::string>());
        tok_cfg.gazetteer = tj.at("gazetteer").get<std::vector<std::string>>();
        tok_cfg.min_token_len = tj.value("min_token_len", std::size_t{2});
    } else {
        tok_cfg = TokenizerConfig::defaults();
    }
    Tokenizer tok(tok_cfg);

    std::optional<TrainedEnsemble> ensemble;
    std::optional<TrainedClassifier> single;
    if (mj.contains("ensemble")) {
        ensemble = TrainedEnsemble::from_json(mj.at("ensemble"));
    } else if (mj.contains("classifier")) {
        single = TrainedClassifier::from_json(mj.at("classifier"));
    } else {
        throw DataError("model file has neither ensemble nor classifier");
    }
    double threshold = mj.value("threshold", 0.5);
    if (threshold_given) threshold = opts.threshold;
    std::pair<std::string, std::string> groups = scenario_group_names(Scenario::U_vs_CS);
    if (mj.contains("groups")) {
        groups = {mj.at("groups").at(0).get<std::string>(),
                  mj.at("groups").at(1).get<std::string>()};
    }

    std::ofstream out(out_path);
    if (!out) throw DataError("cannot write " + out_path);
    std::size_t n = 0;
    std::vector<RejectedRecord> rejected;
    for_each_jsonl(
        opts.corpus_path,
        [&](Cable&& cable) {
            TokenizedCable doc = tokenize_cable(cable, tok);
            SparseVector x = space.assemble(doc);
            double score = ensemble ? ensemble->score(x) : single->decision_score(x);
            nlohmann::json rec;
            rec["doc_id"] = cable.doc_id;
            rec["score"] = score;
            rec["predicted_level_group"] = score >= threshold ? groups.second : groups.first;
            out << rec.dump() << '\n';
            ++n;
        },
        &rejected);
    std::cout << "scored " << n << " cables (" << rejected.size() << " rejected) -> " << out_path
              << "\n";
    return 0;
}

int cmd_analyze(const CommonOpts& opts, const std::string& table, std::uint64_t min_secret,
                std::uint64_t min_total, std::size_t top_n, const std::string& regions_path,
                const std::string& scores_path, const std::string& marker_tag, int gap_min_run,
                double gap_quantile, const std::string& fig1_population) {
    LoadResult loaded = load_jsonl(opts.corpus_path);
    const std::vector<Cable>& cables = loaded.cables;
    if (cables.empty()) throw DataError("no cables in " + opts.corpus_path);
    fs::create_directories(opts.out_dir);
    auto path_for = [&](const char* name) { return (fs::path(opts.out_dir) / name).string(); };
    bool all = table == "all";

    auto ranking_csv = [](const std::vector<SecrecyRanking>& rows, int decimals) {
        std::string out = "key,secret_cables,total_cables,percent_secret\n";
        for (const auto& r : rows) {
            out += r.key + ',' + std::to_string(r.secret) + ',' + std::to_string(r.total) + ',' +
                   format_percent(r.percent_secret(), decimals) + '\n';
        }
        return out;
    };

    if (all || table == "table1") {
        auto rows = rank_percent_secret(cables, GroupBy::SenderRecipient, min_secret == 0 ? 100 : min_secret,
                                        0, top_n);
        write_text(path_for("table1.csv"), ranking_csv(rows, 2));
    }
    if (all || table == "table2") {
        auto rows = rank_percent_secret(cables, GroupBy::Concept, 0,
                                        min_total == 0 ? 1000 : min_total, top_n);
        write_text(path_for("table2.csv"), ranking_csv(rows, 0));
    }
    if (all || table == "table3") {
        auto rows = rank_percent_secret(cables, GroupBy::Concept, 0,
                                        min_total == 0 ? 1000 : min_total, cables.size(),
                                        SortOrder::Ascending);
        std::erase_if(rows, [](const SecrecyRanking& r) { return r.percent_secret() >= 1.0; });
        if (rows.size() > top_n) rows.resize(top_n);
        write_text(path_for("table3.csv"), ranking_csv(rows, 2));
    }
    if (all || table == "table5") {
        ExclusionTally tally;
        for (const Cable& c : cables) tally_cable(tally, c);
        write_text(path_for("table5.csv"), tally_csv(tally));
        print_tally(std::cout, tally);
    }
    if (all || table == "kinds") {
        std::string csv = "kind,total,secret,percent_secret\n";
        for (const KindShare& ks : secrecy_share_by_kind(cables)) {
            csv += std::string(to_string(ks.kind)) + ',' + std::to_string(ks.total) + ',' +
                   std::to_string(ks.secret) + ',';
            if (ks.percent_secret) csv += format_percent(*ks.percent_secret, 2);
            csv += '\n';
        }
        write_text(path_for("kinds.csv"), csv);
    }
    if (all || table == "missing-rates") {
        std::string csv = "level,missing,total,percent\n";
        for (const MissingRate& r : missing_rate_by_level(cables)) {
            csv += std::string(r.level ? to_string(*r.level) : "DEGENERATE") + ',' +
                   std::to_string(r.missing) + ',' + std::to_string(r.total) + ',';
            if (r.percent) csv += format_percent(*r.percent, 2);
            csv += '\n';
        }
        write_text(path_for("missing_rates.csv"), csv);
    }
    if (all || table == "fig1") {
        // Population selector: the monthly series can run over everything
        // (withheld records included), full cables, or trainable cables only.
        std::vector<Cable> population;
        if (fig1_population == "full" || fig1_population == "trainable") {
            for (const Cable& c : cables) {
                if (c.kind != CableKind::Full) continue;
                if (fig1_population == "trainable" && exclusion_reason(c)) continue;
                population.push_back(c);
            }
        } else if (fig1_population != "all") {
            throw UsageError("--fig1-population must be all, full or trainable");
        }
        std::span<const Cable> selected =
            fig1_population == "all" ? std::span<const Cable>(cables)
                                     : std::span<const Cable>(population);
        std::string csv = "month,secret,total,proportion\n";
        for (const MonthPoint& p : monthly_secret_proportion(selected)) {
            char month[16];
            std::snprintf(month, sizeof(month), "%04d-%02u", p.year, p.month);
            csv += std::string(month) + ',' + std::to_string(p.secret) + ',' +
                   std::to_string(p.total) + ',';
            if (p.proportion) csv += nlohmann::json(*p.proportion).dump();
            csv += '\n';
        }
        write_text(path_for("fig1.csv"), csv);
    }
    if (all || table == "fig2") {
        auto series = daily_missing_counts(cables);
        std::string csv = "date,missing\n";
        for (const DayPoint& p : series) {
            csv += format_date(p.day) + ',' + std::to_string(p.count) + '\n';
        }
        write_text(path_for("fig2.csv"), csv);
        std::string gaps = "start,end\n";
        for (const DateInterval& gap : gap_detect(series, gap_min_run, gap_quantile)) {
            gaps += format_date(gap.start) + ',' + format_date(gap.end) + '\n';
        }
        write_text(path_for("fig2_gaps.csv"), gaps);
    }
    if (all || table == "fig3") {
        RegionMap regions =
            regions_path.empty() ? RegionMap::defaults() : RegionMap::load(regions_path);
        std::vector<std::string> tags;
        for (const auto& [tag, _] : regions.by_tag) tags.push_back(tag);
        CotagResult marker = cotag_share(cables, marker_tag, tags);
        std::map<std::string, std::uint64_t> secret_by_tag, total_by_tag;
        for (const auto& [tag, _] : regions.by_tag) {
            secret_by_tag[tag] = 0;
            total_by_tag[tag] = 0;
        }
        for (const Cable& c : cables) {
            for (const auto& raw : c.tags) {
                std::string t;
                for (char ch : raw) t += static_cast<char>(std::toupper((unsigned char)ch));
                auto it = total_by_tag.find(t);
                if (it == total_by_tag.end()) continue;
                ++it->second;
                if (c.orig_class == Level::Secret) ++secret_by_tag[t];
            }
        }
        std::optional<ScoreTable> scores;
        if (!scores_path.empty()) scores = ScoreTable::load(scores_path);
        std::string csv =
            "tag,country,region,total_cables,marker_share_percent,secret_share_percent";
        if (scores) csv += ",score";
        csv += '\n';
        for (const CotagShare& share : marker.per_tag) {
            const auto& entry = regions.by_tag.at(share.tag);
            csv += share.tag + ',' + entry.country + ',' + entry.region + ',' +
                   std::to_string(share.total) + ',';
            if (share.percent) csv += format_percent(*share.percent, 2);
            csv += ',';
            if (total_by_tag[share.tag] > 0) {
                csv += format_percent(
                    100.0 * double(secret_by_tag[share.tag]) / double(total_by_tag[share.tag]), 2);
            }
            if (scores) {
                csv += ',';
                auto s = scores->mean_score(share.tag, 1973, 1978);
                if (s) csv += nlohmann::json(*s).dump();
            }
            csv += '\n';
        }
        write_text(path_for("fig3.csv"), csv);

        std::string group_csv = "region,total,secret,percent_secret,marker_share_percent\n";
        auto groups = regions.groups();
        auto group_secret = secret_share_by_country_group(cables, groups);
        for (const GroupSecretShare& g : group_secret) {
            CotagResult pooled = cotag_share(cables, marker_tag, groups.at(g.group));
            group_csv += g.group + ',' + std::to_string(g.total) + ',' +
                         std::to_string(g.secret) + ',';
            if (g.percent) group_csv += format_percent(*g.percent, 2);
            group_csv += ',';
            if (pooled.pooled_percent) group_csv += format_percent(*pooled.pooled_percent, 2);
            group_csv += '\n';
        }
        write_text(path_for("fig3_groups.csv"), group_csv);

        if (scores) {
            CorrelationResult corr = correlate_tag_share_with_scores(
                cables, marker_tag, regions, *scores, 1973, 1978);
            std::cout << "pearson r (marker share vs score, n=" << corr.n << "): " << corr.r
                      << "\n";
        }
    }
    std::cout << "analytics written to " << opts.out_dir << "\n";
    return 0;
}

int cmd_synthgen(const std::string& spec_path, const std::string& out_path, std::size_t n_docs,
                 std::uint64_t seed, bool have_n, bool have_seed) {
    SynthSpec spec;
    if (!spec_path.empty()) spec = SynthSpec::from_json(load_json_file(spec_path));
    if (have_n) spec.n_docs = n_docs;
    if (have_seed) spec.seed = seed;
    std::vector<Cable> cables = generate(spec);
    save_jsonl(cables, out_path);
    std::cout << "generated " << cables.size() << " cables -> " << out_path << "\n";
    return 0;
}

int cmd_report(const CommonOpts& opts, const std::string& report_path,
               const std::string& out_path, std::size_t top_n) {
    nlohmann::json rj = load_json_file(report_path);
    std::map<std::string, const Cable*> by_id;
    std::vector<Cable> cables;
    if (!opts.corpus_path.empty()) {
        LoadResult loaded = load_jsonl(opts.corpus_path);
        cables = std::move(loaded.cables);
        for (const Cable& c : cables) by_id[c.doc_id] = &c;
    }

    std::string md;
    md += "# Evaluation report\n\n";
    md += "- scenario: " + rj.value("scenario", std::string("?")) + "\n";
    md += "- folds: " + std::to_string(rj.value("k", 0)) + "\n";
    md += "- seed: " + std::to_string(rj.value("seed", std::uint64_t{0})) + "\n";
    md += "- threshold: " + nlohmann::json(rj.value("threshold", 0.5)).dump() + "\n\n";
    if (rj.contains("pooled")) {
        const auto& pooled = rj.at("pooled");
        md += "## Pooled metrics\n\n";
        md += "| metric | value |\n|---|---|\n";
        md += "| roc_auc | " + pooled.at("roc_auc").dump() + " |\n";
        const auto& m = pooled.at("metrics");
        md += "| accuracy | " + m.at("accuracy").dump() + " |\n";
        md += "| precision (class0/class1) | " + m.at("precision").at("class0").dump() + " / " +
              m.at("precision").at("class1").dump() + " |\n";
        md += "| recall (class0/class1) | " + m.at("recall").at("class0").dump() + " / " +
              m.at("recall").at("class1").dump() + " |\n";
        md += "| f1 (class0/class1) | " + m.at("f1").at("class0").dump() + " / " +
              m.at("f1").at("class1").dump() + " |\n";
        md += "| f1 macro / weighted | " + m.at("f1_macro").dump() + " / " +
              m.at("f1_weighted").dump() + " |\n\n";
    }

    auto emit_list = [&](const char* title, const char* key) {
        if (!rj.contains(key)) return;
        md += std::string("## ") + title + "\n\n";
        md += "| doc_id | score | note |\n|---|---|---|\n";
        std::size_t shown = 0;
        for (const auto& item : rj.at(key)) {
            if (shown++ >= top_n) break;
            std::string doc_id = item.at("doc_id").get<std::string>();
            std::string note;
            auto it = by_id.find(doc_id);
            if (it != by_id.end()) {
                auto marker = detect_embedded_marker(it->second->body);
                if (marker) {
                    bool disagrees = !it->second->orig_class || *marker != *it->second->orig_class;
                    note = std::string("body marked ") + std::string(to_string(*marker));
                    if (disagrees) note += " (differs from metadata)";
                }
            }
            md += "| " + doc_id + " | " + item.at("score").dump() + " | " + note + " |\n";
        }
        md += "\n";
    };
    emit_list("Top false positives (possible underclassification in metadata)",
              "top_false_positives");
    emit_list("Top false negatives (possible overclassification in metadata)",
              "top_false_negatives");

    write_text(out_path, md);
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

// Subcommand-independent config file: values preload the option defaults and
// explicit flags win.
void apply_config_file(CommonOpts& opts) {
    if (opts.config_path.empty()) return;
    nlohmann::json j = load_json_file(opts.config_path);
    opts.corpus_path = j.value("corpus", opts.corpus_path);
    opts.out_dir = j.value("out_dir", opts.out_dir);
    opts.stopwords_path = j.value("stopwords", opts.stopwords_path);
    opts.gazetteer_path = j.value("gazetteer", opts.gazetteer_path);
    opts.features_config = j.value("features_config", opts.features_config);
    opts.model_config = j.value("model_config", opts.model_config);
    opts.scenario_name = j.value("scenario", opts.scenario_name);
    opts.k = j.value("k", opts.k);
    opts.seed = j.value("seed", opts.seed);
    opts.threshold = j.value("threshold", opts.threshold);
    opts.threads = j.value("threads", opts.threads);
}

}  // namespace

int run(std::vector<std::string> args) {
    CLI::App app{"document sensitivity classification toolkit"};
    app.require_subcommand(1);

    CommonOpts opts;
    // Pre-scan for --config so file values become defaults under the flags.
    for (std::size_t i = 0; i + 1 < args.size(); ++i) {
        if (args[i] == "--config") opts.config_path = args[i + 1];
    }
    try {
        apply_config_file(opts);
    } catch (const DataError& e) {
        std::cerr << "error[data]: " << e.what() << "\n";
        return 2;
    }

    auto add_common = [&](CLI::App* cmd, bool needs_corpus) {
        cmd->add_option("--config", opts.config_path, "JSON config file; flags override");
        auto* corpus = cmd->add_option("--corpus", opts.corpus_path, "JSONL corpus path");
        if (needs_corpus && opts.corpus_path.empty()) corpus->required();
        cmd->add_option("--out-dir", opts.out_dir, "output directory");
        cmd->add_option("--seed", opts.seed, "root random seed");
        cmd->add_option("--threads", opts.threads, "worker threads");
        cmd->add_option("--stopwords", opts.stopwords_path, "stopword list file");
        cmd->add_option("--gazetteer", opts.gazetteer_path, "compound-name list file");
    };

    FieldOverrides field_ov;
    auto add_field_flags = [&](CLI::App* cmd) {
        cmd->add_option("--features-config", opts.features_config, "field stack JSON");
        cmd->add_option("--fields", field_ov.fields_csv, "comma list of fields to use");
        cmd->add_option("--max-vocab", field_ov.max_vocab, "per-field cap, field=N");
        cmd->add_option("--ngram", field_ov.ngram, "per-field range, field=lo,hi");
        cmd->add_option("--min-df", field_ov.min_df, "per-field floor, field=N");
        cmd->add_option("--weighting", field_ov.weighting, "field=term_count|tfidf");
        cmd->add_flag("--date-features", field_ov.date_features,
                      "add weekend/year-month features (short-period experiments)");
    };

    // ingest
    std::string xml_dir, out_path, tally_out;
    CLI::App* ingest = app.add_subcommand("ingest", "convert XML records to a JSONL corpus");
    ingest->add_option("--xml-dir", xml_dir, "directory of XML files")->required();
    ingest->add_option("--out", out_path, "output JSONL path")->required();
    ingest->add_option("--tally-out", tally_out, "write the exclusion tally CSV here");

    // train
    std::string single_kind;
    bool hard_voting = false;
    CLI::App* train = app.add_subcommand("train", "fit the ensemble on a corpus");
    add_common(train, true);
    add_field_flags(train);
    train->add_option("--scenario", opts.scenario_name, "U_vs_LCS|UL_vs_CS|ULC_vs_S|U_vs_CS");
    train->add_option("--threshold", opts.threshold, "decision threshold in [0,1]");
    train->add_option("--model-config", opts.model_config, "ensemble/classifier JSON");
    train->add_option("--classifier", single_kind, "fit one classifier instead of the ensemble");
    train->add_flag("--hard-voting", hard_voting, "majority voting instead of soft");

    // evaluate
    bool global_vocab = false, no_doc_scores = false;
    std::size_t top_n = 50;
    CLI::App* evaluate = app.add_subcommand("evaluate", "stratified cross-validation");
    add_common(evaluate, true);
    add_field_flags(evaluate);
    evaluate->add_option("--scenario", opts.scenario_name,
                         "U_vs_LCS|UL_vs_CS|ULC_vs_S|U_vs_CS");
    evaluate->add_option("--k", opts.k, "folds");
    evaluate->add_option("--threshold", opts.threshold, "decision threshold in [0,1]");
    evaluate->add_option("--model-config", opts.model_config, "ensemble/classifier JSON");
    evaluate->add_option("--classifier", single_kind, "evaluate one classifier");
    evaluate->add_option("--top-n", top_n, "misclassified docs to keep");
    evaluate->add_flag("--hard-voting", hard_voting, "majority voting instead of soft");
    evaluate->add_flag("--global-vocab", global_vocab,
                       "build vocabularies on the whole corpus (compatibility mode)");
    evaluate->add_flag("--no-doc-scores", no_doc_scores, "omit per-document scores");
    evaluate->add_flag("--no-timestamp", opts.no_timestamp, "omit timestamp from report");

    // predict
    std::string model_path, predict_out;
    CLI::App* predict = app.add_subcommand("predict", "score cables with a trained model");
    add_common(predict, true);
    predict->add_option("--model", model_path, "model.json path")->required();
    predict->add_option("--out", predict_out, "output JSONL path")->required();
    auto* predict_threshold =
        predict->add_option("--threshold", opts.threshold, "override the stored threshold");

    // analyze
    std::string table = "all", regions_path, scores_path, marker_tag = "SHUM";
    std::string fig1_population = "all";
    std::uint64_t min_secret = 0, min_total = 0;
    std::size_t analyze_top_n = 10;
    int gap_min_run = 3;
    double gap_quantile = 0.95;
    CLI::App* analyze = app.add_subcommand("analyze", "metadata analytics tables and figures");
    add_common(analyze, true);
    analyze->add_option("--table", table,
                        "all|table1|table2|table3|table5|kinds|missing-rates|fig1|fig2|fig3");
    analyze->add_option("--min-secret", min_secret, "minimum secret cables per group");
    analyze->add_option("--min-total", min_total, "minimum total cables per group");
    analyze->add_option("--top-n", analyze_top_n, "rows per table");
    analyze->add_option("--regions", regions_path, "tag,country,region CSV");
    analyze->add_option("--freedom-house", scores_path, "country_tag,year,score CSV");
    analyze->add_option("--marker-tag", marker_tag, "co-reference marker TAG");
    analyze->add_option("--gap-min-run", gap_min_run, "minimum gap length in days");
    analyze->add_option("--gap-quantile", gap_quantile, "daily-count quantile for gaps");
    analyze->add_option("--fig1-population", fig1_population,
                        "cables behind the monthly series: all|full|trainable");

    // synthgen
    std::string spec_path, synth_out;
    std::size_t synth_n = 0;
    std::uint64_t synth_seed = 0;
    CLI::App* synthgen = app.add_subcommand("synthgen", "generate a synthetic corpus");
    synthgen->add_option("--spec", spec_path, "SynthSpec JSON");
    synthgen->add_option("--out", synth_out, "output JSONL path")->required();
    auto* n_opt = synthgen->add_option("--n", synth_n, "document count");
    auto* seed_opt = synthgen->add_option("--seed", synth_seed, "generator seed");

    // report
    std::string report_path, report_out = "report.md";
    std::size_t report_top_n = 25;
    CLI::App* report = app.add_subcommand("report", "render a report.json as Markdown");
    add_common(report, false);
    report->add_option("--report", report_path, "report.json path")->required();
    report->add_option("--out", report_out, "output Markdown path");
    report->add_option("--top-n", report_top_n, "entries per misclassification list");

    std::vector<const char*> argv;
    argv.push_back("cablesift");
    for (const auto& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        std::cerr << "error[usage]: " << e.what() << "\n";
        return 1;
    }

    try {
        if (ingest->parsed()) return cmd_ingest(xml_dir, out_path, tally_out);
        if (train->parsed()) return cmd_train(opts, field_ov, single_kind, hard_voting);
        if (evaluate->parsed())
            return cmd_evaluate(opts, field_ov, single_kind, hard_voting, global_vocab,
                                no_doc_scores, top_n);
        if (predict->parsed())
            return cmd_predict(opts, model_path, predict_out, predict_threshold->count() > 0);
        if (analyze->parsed())
            return cmd_analyze(opts, table, min_secret, min_total, analyze_top_n, regions_path,
                               scores_path, marker_tag, gap_min_run, gap_quantile,
                               fig1_population);
        if (synthgen->parsed())
            return cmd_synthgen(spec_path, synth_out, synth_n, synth_seed, n_opt->count() > 0,
                                seed_opt->count() > 0);
        if (report->parsed()) return cmd_report(opts, report_path, report_out, report_top_n);
        throw UsageError("no subcommand given");
    } catch (const UsageError& e) {
        std::cerr << "error[usage]: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error[data]: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error[internal]: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace cablesift::cli
