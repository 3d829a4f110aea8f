#include "cablesift/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>

#include "cablesift/common.hpp"

namespace cablesift {

namespace {

std::string upper_squeeze(std::string_view s) {
    // Upper-case, trim, and squeeze internal whitespace runs to one space.
    std::string out;
    out.reserve(s.size());
    bool in_space = true;
    for (unsigned char c : s) {
        if (std::isspace(c)) {
            if (!in_space) out.push_back(' ');
            in_space = true;
        } else {
            out.push_back(static_cast<char>(std::toupper(c)));
            in_space = false;
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

bool is_na(std::string_view trimmed) {
    if (trimmed.size() != 3) return false;
    return std::toupper(static_cast<unsigned char>(trimmed[0])) == 'N' && trimmed[1] == '/' &&
           std::toupper(static_cast<unsigned char>(trimmed[2])) == 'A';
}

// Text content of a field: absent, null, or "n/a" become empty.
std::string text_field(const nlohmann::json& raw, const char* key) {
    auto it = raw.find(key);
    if (it == raw.end() || it->is_null()) return {};
    std::string v = it->is_string() ? it->get<std::string>() : it->dump();
    v = trim(v);
    if (is_na(v)) return {};
    return v;
}

// List-valued field: a JSON array of strings or one comma-separated string.
std::vector<std::string> list_field(const nlohmann::json& raw, const char* key) {
    std::vector<std::string> out;
    auto it = raw.find(key);
    if (it == raw.end() || it->is_null()) return out;
    auto push = [&](std::string_view v) {
        std::string t = trim(v);
        if (!t.empty() && !is_na(t)) out.push_back(std::move(t));
    };
    if (it->is_array()) {
        for (const auto& el : *it) {
            if (el.is_string()) push(el.get<std::string>());
        }
    } else if (it->is_string()) {
        std::string s = it->get<std::string>();
        std::size_t start = 0;
        while (start <= s.size()) {
            std::size_t comma = s.find(',', start);
            if (comma == std::string::npos) {
                push(std::string_view(s).substr(start));
                break;
            }
            push(std::string_view(s).substr(start, comma - start));
            start = comma + 1;
        }
    }
    return out;
}

bool parse_int(std::string_view s, int& out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size();
}

}  // namespace

std::optional<Level> parse_level(std::string_view s) {
    std::string v = upper_squeeze(s);
    if (v == "UNCLASSIFIED") return Level::Unclassified;
    if (v == "LIMITED OFFICIAL USE") return Level::LimitedOfficialUse;
    if (v == "CONFIDENTIAL") return Level::Confidential;
    if (v == "SECRET") return Level::Secret;
    return std::nullopt;
}

std::string_view to_string(Level level) {
    switch (level) {
        case Level::Unclassified: return "UNCLASSIFIED";
        case Level::LimitedOfficialUse: return "LIMITED OFFICIAL USE";
        case Level::Confidential: return "CONFIDENTIAL";
        case Level::Secret: return "SECRET";
    }
    return "?";
}

std::optional<CableKind> parse_cable_kind(std::string_view s) {
    std::string v = upper_squeeze(s);
    std::replace(v.begin(), v.end(), '_', ' ');
    std::replace(v.begin(), v.end(), '-', ' ');
    bool preel = v.find("P REEL") != std::string::npos || v.find("PREEL") != std::string::npos;
    bool withdrawn = v.find("WITHDRAWN") != std::string::npos;
    if (preel && withdrawn) return CableKind::PReelWithdrawn;
    if (preel) return CableKind::PReel;
    if (withdrawn) return CableKind::Withdrawn;
    if (v == "FULL" || v == "FULL CABLE" || v == "CABLE" || v.empty()) return CableKind::Full;
    return std::nullopt;
}

std::string_view to_string(CableKind kind) {
    switch (kind) {
        case CableKind::Full: return "full";
        case CableKind::PReel: return "p-reel";
        case CableKind::Withdrawn: return "withdrawn";
        case CableKind::PReelWithdrawn: return "p-reel withdrawn";
    }
    return "?";
}

std::string_view to_string(BodyStatus status) {
    switch (status) {
        case BodyStatus::Text: return "text";
        case BodyStatus::Error: return "error";
        case BodyStatus::Blank: return "blank";
    }
    return "?";
}

BodyStatus classify_body_status(std::string_view body) {
    static constexpr std::string_view kPatterns[] = {
        "ERROR READING TEXT INDEX",
        "EXPAND ERROR ENCOUNTERED",
        "ENCRYPTION ERROR",
    };
    std::string upper = upper_squeeze(body);
    for (auto pattern : kPatterns) {
        if (upper.find(pattern) != std::string::npos) return BodyStatus::Error;
    }
    if (upper.empty()) return BodyStatus::Blank;
    return BodyStatus::Text;
}

std::optional<std::chrono::year_month_day> parse_date(std::string_view s) {
    std::string t = trim(s);
    int y = 0, m = 0, d = 0;
    if (t.size() == 8) {  // YYYYMMDD
        if (!parse_int(std::string_view(t).substr(0, 4), y) ||
            !parse_int(std::string_view(t).substr(4, 2), m) ||
            !parse_int(std::string_view(t).substr(6, 2), d))
            return std::nullopt;
    } else if (t.size() >= 10 && t[4] == '-' && t[7] == '-') {  // ISO-8601, date part
        if (!parse_int(std::string_view(t).substr(0, 4), y) ||
            !parse_int(std::string_view(t).substr(5, 2), m) ||
            !parse_int(std::string_view(t).substr(8, 2), d))
            return std::nullopt;
        if (t.size() > 10 && t[10] != 'T' && t[10] != ' ') return std::nullopt;
    } else {
        return std::nullopt;
    }
    std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{unsigned(m)},
                                    std::chrono::day{unsigned(d)}};
    if (!ymd.ok()) return std::nullopt;
    return ymd;
}

std::string format_date(const std::chrono::year_month_day& d) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(d.year()),
                  static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
    return buf;
}

Cable parse_cable_record(const nlohmann::json& raw) {
    if (!raw.is_object()) throw DataError("record is not a JSON object");
    Cable c;
    c.doc_id = text_field(raw, "doc_id");
    if (c.doc_id.empty()) throw DataError("record has no doc_id");

    c.from_field = text_field(raw, "from");
    c.to_field = text_field(raw, "to");
    c.office = text_field(raw, "office");
    c.subject = text_field(raw, "subject");
    c.body = text_field(raw, "body");
    c.tags = list_field(raw, "tags");
    c.concepts = list_field(raw, "concepts");

    std::string date_str = text_field(raw, "date");
    if (!date_str.empty()) {
        c.date = parse_date(date_str);
        c.date_malformed = !c.date.has_value();
    }

    std::string origclass = text_field(raw, "origclass");
    c.orig_class = origclass.empty() ? std::nullopt : parse_level(origclass);

    std::string kind_str = text_field(raw, "cable_type");
    auto kind = parse_cable_kind(kind_str);
    if (!kind) throw DataError("unknown cable_type \"" + kind_str + "\" in " + c.doc_id);
    c.kind = *kind;

    if (c.kind == CableKind::Withdrawn || c.kind == CableKind::PReelWithdrawn) {
        // Withdrawn records have no released text, whatever the input says.
        c.body.clear();
        c.body_status = BodyStatus::Blank;
    } else {
        c.body_status = classify_body_status(c.body);
    }
    return c;
}

nlohmann::json cable_to_json(const Cable& cable) {
    nlohmann::json j;
    j["doc_id"] = cable.doc_id;
    j["date"] = cable.date ? nlohmann::json(format_date(*cable.date)) : nlohmann::json();
    j["from"] = cable.from_field;
    j["to"] = cable.to_field;
    j["office"] = cable.office;
    j["tags"] = cable.tags;
    j["concepts"] = cable.concepts;
    j["subject"] = cable.subject;
    j["body"] = cable.body;
    j["origclass"] = cable.orig_class ? nlohmann::json(to_string(*cable.orig_class)) : nlohmann::json();
    j["cable_type"] = to_string(cable.kind);
    return j;
}

std::string_view to_string(ExclusionReason reason) {
    switch (reason) {
        case ExclusionReason::ErrorBody: return "error_body";
        case ExclusionReason::BlankBody: return "blank_body";
        case ExclusionReason::BlankConcepts: return "blank_concepts";
        case ExclusionReason::BlankSubject: return "blank_subject";
        case ExclusionReason::BlankFrom: return "blank_from";
        case ExclusionReason::BlankTo: return "blank_to";
        case ExclusionReason::DegenerateClass: return "degenerate_class";
        case ExclusionReason::NonFullKind: return "non_full_kind";
    }
    return "?";
}

std::optional<ExclusionReason> exclusion_reason(const Cable& cable) {
    if (cable.kind != CableKind::Full) return ExclusionReason::NonFullKind;
    if (cable.body_status == BodyStatus::Error) return ExclusionReason::ErrorBody;
    if (cable.body_status == BodyStatus::Blank) return ExclusionReason::BlankBody;
    if (cable.concepts_blank()) return ExclusionReason::BlankConcepts;
    if (cable.subject_blank()) return ExclusionReason::BlankSubject;
    if (cable.from_blank()) return ExclusionReason::BlankFrom;
    if (cable.to_blank()) return ExclusionReason::BlankTo;
    if (!cable.orig_class) return ExclusionReason::DegenerateClass;
    return std::nullopt;
}

void tally_cable(ExclusionTally& tally, const Cable& cable) {
    tally.input.add(cable.orig_class);
    auto reason = exclusion_reason(cable);
    if (reason) {
        tally.excluded[static_cast<std::size_t>(*reason)].add(cable.orig_class);
    } else {
        tally.retained.add(cable.orig_class);
    }
    // Non-exclusive per-condition counts. Content conditions are counted
    // over full cables, kind over everything.
    auto count = [&](ExclusionReason r) {
        tally.condition[static_cast<std::size_t>(r)].add(cable.orig_class);
    };
    if (cable.kind != CableKind::Full) {
        count(ExclusionReason::NonFullKind);
        return;
    }
    if (cable.body_status == BodyStatus::Error) count(ExclusionReason::ErrorBody);
    if (cable.body_status == BodyStatus::Blank) count(ExclusionReason::BlankBody);
    if (cable.concepts_blank()) count(ExclusionReason::BlankConcepts);
    if (cable.subject_blank()) count(ExclusionReason::BlankSubject);
    if (cable.from_blank()) count(ExclusionReason::BlankFrom);
    if (cable.to_blank()) count(ExclusionReason::BlankTo);
    if (!cable.orig_class) count(ExclusionReason::DegenerateClass);
}

ExclusionTally& ExclusionTally::operator+=(const ExclusionTally& o) {
    for (std::size_t i = 0; i < kExclusionReasonCount; ++i) {
        excluded[i] += o.excluded[i];
        condition[i] += o.condition[i];
    }
    retained += o.retained;
    input += o.input;
    return *this;
}

std::pair<std::vector<Cable>, ExclusionTally> select_trainable(std::vector<Cable> corpus) {
    ExclusionTally tally;
    std::vector<Cable> kept;
    kept.reserve(corpus.size());
    for (auto& cable : corpus) {
        tally_cable(tally, cable);
        if (!exclusion_reason(cable)) kept.push_back(std::move(cable));
    }
    return {std::move(kept), tally};
}

void for_each_jsonl(const std::string& path, const std::function<void(Cable&&)>& fn,
                    std::vector<RejectedRecord>* rejected) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open corpus file " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            nlohmann::json j = nlohmann::json::parse(line);
            fn(parse_cable_record(j));
        } catch (const std::exception& e) {
            if (rejected) rejected->push_back({line_no, e.what()});
        }
    }
}

LoadResult load_jsonl(const std::string& path) {
    LoadResult result;
    for_each_jsonl(
        path, [&](Cable&& c) { result.cables.push_back(std::move(c)); }, &result.rejected);
    return result;
}

void save_jsonl(const std::vector<Cable>& cables, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write corpus file " + path);
    for (const auto& cable : cables) {
        out << cable_to_json(cable).dump() << '\n';
    }
}

}  // namespace cablesift
