#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace cablesift {

// Original classification level, ordered least to most restricted.
enum class Level : std::uint8_t {
    Unclassified = 0,
    LimitedOfficialUse = 1,
    Confidential = 2,
    Secret = 3,
};
inline constexpr std::size_t kLevelCount = 4;

// Case-insensitive; null/unknown/misspelled values map to nullopt
// ("degenerate" classes, dropped from training but kept in analytics).
std::optional<Level> parse_level(std::string_view s);
std::string_view to_string(Level level);

enum class CableKind : std::uint8_t { Full, PReel, Withdrawn, PReelWithdrawn };
std::optional<CableKind> parse_cable_kind(std::string_view s);
std::string_view to_string(CableKind kind);

enum class BodyStatus : std::uint8_t { Text, Error, Blank };
std::string_view to_string(BodyStatus status);

// ERROR if the body carries one of the digitization error messages (case
// insensitive substring match), BLANK if empty after trimming, TEXT otherwise.
BodyStatus classify_body_status(std::string_view body);

struct Cable {
    std::string doc_id;
    std::optional<std::chrono::year_month_day> date;
    bool date_malformed = false;  // a date string was present but unparseable
    std::string from_field;
    std::string to_field;
    std::string office;
    std::vector<std::string> tags;
    std::vector<std::string> concepts;
    std::string subject;
    std::string body;
    std::optional<Level> orig_class;  // nullopt = degenerate
    CableKind kind = CableKind::Full;
    BodyStatus body_status = BodyStatus::Blank;

    bool concepts_blank() const { return concepts.empty(); }
    bool subject_blank() const { return subject.empty(); }
    bool from_blank() const { return from_field.empty(); }
    bool to_blank() const { return to_field.empty(); }
};

// Exclusion reasons in the fixed order used for exclusive accounting. The
// content-based reasons only apply to full cables; every non-full record is
// accounted under NonFullKind.
enum class ExclusionReason : std::uint8_t {
    ErrorBody = 0,
    BlankBody,
    BlankConcepts,
    BlankSubject,
    BlankFrom,
    BlankTo,
    DegenerateClass,
    NonFullKind,
};
inline constexpr std::size_t kExclusionReasonCount = 8;
std::string_view to_string(ExclusionReason reason);

struct LevelCounts {
    std::array<std::uint64_t, kLevelCount> by_level{};
    std::uint64_t degenerate = 0;

    void add(std::optional<Level> level) {
        if (level) {
            ++by_level[static_cast<std::size_t>(*level)];
        } else {
            ++degenerate;
        }
    }
    std::uint64_t total() const {
        std::uint64_t t = degenerate;
        for (auto c : by_level) t += c;
        return t;
    }
    LevelCounts& operator+=(const LevelCounts& o) {
        for (std::size_t i = 0; i < kLevelCount; ++i) by_level[i] += o.by_level[i];
        degenerate += o.degenerate;
        return *this;
    }
};

// Accounting for select_trainable. `excluded` assigns each dropped record to
// exactly one reason; `condition` counts every record matching a condition,
// so rows may overlap (a cable can have an error body and blank concepts).
struct ExclusionTally {
    std::array<LevelCounts, kExclusionReasonCount> excluded{};
    std::array<LevelCounts, kExclusionReasonCount> condition{};
    LevelCounts retained;
    LevelCounts input;

    std::uint64_t excluded_total() const {
        std::uint64_t t = 0;
        for (const auto& c : excluded) t += c.total();
        return t;
    }
    ExclusionTally& operator+=(const ExclusionTally& o);
};

// First matching exclusion reason, or nullopt if the cable is trainable.
std::optional<ExclusionReason> exclusion_reason(const Cable& cable);

// Adds one cable to both the exclusive and the per-condition counts.
void tally_cable(ExclusionTally& tally, const Cable& cable);

// Filters a corpus down to the trainable subset: full cables with message
// text, a valid class, and non-blank concepts/subject/from/to.
std::pair<std::vector<Cable>, ExclusionTally> select_trainable(std::vector<Cable> corpus);

// --- JSONL corpus files -----------------------------------------------------

// Parses one record from its JSONL object form. Absent or "n/a" fields come
// back empty; a missing/empty doc_id is a DataError. `concepts` and `tags`
// may be JSON arrays or comma-separated strings.
Cable parse_cable_record(const nlohmann::json& raw);

nlohmann::json cable_to_json(const Cable& cable);

struct RejectedRecord {
    std::size_t line_no = 0;
    std::string reason;
};

struct LoadResult {
    std::vector<Cable> cables;
    std::vector<RejectedRecord> rejected;
};

// One JSON object per line. Records that cannot be parsed at all (bad JSON,
// missing doc_id) are rejected with a reason rather than aborting the load.
LoadResult load_jsonl(const std::string& path);

void save_jsonl(const std::vector<Cable>& cables, const std::string& path);

// Streaming variant for corpora too large to hold at once.
void for_each_jsonl(const std::string& path, const std::function<void(Cable&&)>& fn,
                    std::vector<RejectedRecord>* rejected = nullptr);

std::optional<std::chrono::year_month_day> parse_date(std::string_view s);
std::string format_date(const std::chrono::year_month_day& d);

}  // namespace cablesift
