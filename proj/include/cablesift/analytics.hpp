#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cablesift/corpus.hpp"

namespace cablesift {

enum class GroupBy : std::uint8_t { SenderRecipient, Concept, Tag };
enum class SortOrder : std::uint8_t { Descending, Ascending };

struct SecrecyRanking {
    std::string key;
    std::uint64_t secret = 0;
    std::uint64_t total = 0;

    double percent_secret() const {
        return 100.0 * static_cast<double>(secret) / static_cast<double>(total);
    }
};

// Rounds to `decimals` places and renders with two digits, matching the
// published table style (97.71, 87.00, 0.45).
std::string format_percent(double percent, int decimals);

// Groups all cables (withdrawn and p-reel included; their metadata survives)
// and ranks groups by percent of originally-secret cables. A cable counts
// once per distinct concept/tag it carries; sender/recipient groups use the
// exact (from, to) pair.
std::vector<SecrecyRanking> rank_percent_secret(std::span<const Cable> cables, GroupBy group_by,
                                                std::uint64_t min_secret, std::uint64_t min_total,
                                                std::size_t top_n,
                                                SortOrder order = SortOrder::Descending);

struct KindShare {
    CableKind kind = CableKind::Full;
    std::uint64_t total = 0;
    std::uint64_t secret = 0;
    std::optional<double> percent_secret;  // null when the kind has no cables
};
std::vector<KindShare> secrecy_share_by_kind(std::span<const Cable> cables);

struct MonthPoint {
    int year = 0;
    unsigned month = 0;
    std::uint64_t secret = 0;
    std::uint64_t total = 0;
    std::optional<double> proportion;  // null for empty months
};
// Per-calendar-month share of secret cables over dated records; months are
// contiguous over the range (given or inferred from the data).
std::vector<MonthPoint> monthly_secret_proportion(
    std::span<const Cable> cables,
    std::optional<std::pair<std::chrono::year_month_day, std::chrono::year_month_day>> range =
        std::nullopt);

struct DayPoint {
    std::chrono::year_month_day day{};
    std::uint64_t count = 0;
};
// Per-day count of cables whose body carries a digitization error message.
std::vector<DayPoint> daily_missing_counts(
    std::span<const Cable> cables,
    std::optional<std::pair<std::chrono::year_month_day, std::chrono::year_month_day>> range =
        std::nullopt);

struct DateInterval {
    std::chrono::year_month_day start{};
    std::chrono::year_month_day end{};  // inclusive
};
// Flags runs of >= min_run consecutive days whose count exceeds the given
// quantile of the nonzero daily counts (nearest-rank).
std::vector<DateInterval> gap_detect(std::span<const DayPoint> series, int min_run,
                                     double quantile);

// Share of full cables with missing text (error or blank body) per level.
struct MissingRate {
    std::optional<Level> level;  // nullopt = degenerate bucket
    std::uint64_t missing = 0;
    std::uint64_t total = 0;
    std::optional<double> percent;
};
std::vector<MissingRate> missing_rate_by_level(std::span<const Cable> cables);

struct CotagShare {
    std::string tag;
    std::uint64_t total = 0;  // cables carrying the country tag
    std::uint64_t both = 0;   // ... that also carry the marker tag
    std::optional<double> percent;
};
struct CotagResult {
    std::vector<CotagShare> per_tag;
    // Union semantics: cables with any of the tags, deduplicated.
    std::uint64_t pooled_total = 0;
    std::uint64_t pooled_both = 0;
    std::optional<double> pooled_percent;
};
// Percent of cables with each country TAG that also carry marker_tag
// (e.g. SHUM for human rights). Tag comparison is case-insensitive.
CotagResult cotag_share(std::span<const Cable> cables, std::string_view marker_tag,
                        std::span<const std::string> country_tags);

struct GroupSecretShare {
    std::string group;
    std::uint64_t total = 0;
    std::uint64_t secret = 0;
    std::optional<double> percent;
};
// Percent of cables carrying any group-member country TAG that are secret.
std::vector<GroupSecretShare> secret_share_by_country_group(
    std::span<const Cable> cables, const std::map<std::string, std::vector<std::string>>& groups);

// Sample Pearson correlation; requires equal lengths >= 2 and nonzero
// variance on both sides.
double pearson_r(std::span<const double> x, std::span<const double> y);

// tag -> (country, region) mapping, loaded from a csv of
// `tag,country,region` rows.
struct RegionMap {
    struct Entry {
        std::string country;
        std::string region;
    };
    std::map<std::string, Entry> by_tag;

    static RegionMap load(const std::string& path);
    // Built-in mapping matching data/regions.csv.
    static const RegionMap& defaults();
    std::map<std::string, std::vector<std::string>> groups() const;  // region -> tags
};

// `country_tag,year,score` rows (Freedom House style scores).
struct ScoreTable {
    std::map<std::pair<std::string, int>, double> by_tag_year;

    static ScoreTable load(const std::string& path);
    std::optional<double> mean_score(const std::string& tag, int year_lo, int year_hi) const;
};

struct CorrelationResult {
    double r = 0;
    std::size_t n = 0;  // countries with both a share and a score
};
// Correlates per-country marker-tag share against mean scores over the year
// range; countries lacking either side are skipped.
CorrelationResult correlate_tag_share_with_scores(std::span<const Cable> cables,
                                                  std::string_view marker_tag,
                                                  const RegionMap& regions,
                                                  const ScoreTable& scores, int year_lo,
                                                  int year_hi);

}  // namespace cablesift
