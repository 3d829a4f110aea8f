#include "cablesift/analytics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "cablesift/common.hpp"

namespace cablesift {

namespace {

std::string upper(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return out;
}

bool is_secret(const Cable& c) { return c.orig_class == Level::Secret; }

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    cells.push_back(cur);
    for (auto& c : cells) {
        auto b = c.find_first_not_of(" \t");
        auto e = c.find_last_not_of(" \t");
        c = b == std::string::npos ? std::string() : c.substr(b, e - b + 1);
    }
    return cells;
}

}  // namespace

std::string format_percent(double percent, int decimals) {
    double scale = std::pow(10.0, decimals);
    double rounded = std::round(percent * scale) / scale;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", rounded);
    return buf;
}

std::vector<SecrecyRanking> rank_percent_secret(std::span<const Cable> cables, GroupBy group_by,
                                                std::uint64_t min_secret, std::uint64_t min_total,
                                                std::size_t top_n, SortOrder order) {
    struct Counts {
        std::uint64_t secret = 0, total = 0;
    };
    std::unordered_map<std::string, Counts> groups;
    auto bump = [&](const std::string& key, bool secret) {
        auto& c = groups[key];
        ++c.total;
        if (secret) ++c.secret;
    };
    for (const Cable& cable : cables) {
        bool secret = is_secret(cable);
        switch (group_by) {
            case GroupBy::SenderRecipient:
                bump(cable.from_field + " / " + cable.to_field, secret);
                break;
            case GroupBy::Concept: {
                std::set<std::string> distinct(cable.concepts.begin(), cable.concepts.end());
                for (const auto& keyword : distinct) bump(keyword, secret);
                break;
            }
            case GroupBy::Tag: {
                std::set<std::string> distinct;
                for (const auto& t : cable.tags) distinct.insert(upper(t));
                for (const auto& tag : distinct) bump(tag, secret);
                break;
            }
        }
    }

    std::vector<SecrecyRanking> rows;
    rows.reserve(groups.size());
    for (auto& [key, c] : groups) {
        if (c.secret < min_secret || c.total < min_total || c.total == 0) continue;
        rows.push_back({key, c.secret, c.total});
    }
    std::sort(rows.begin(), rows.end(), [&](const SecrecyRanking& a, const SecrecyRanking& b) {
        double pa = a.percent_secret(), pb = b.percent_secret();
        if (pa != pb) return order == SortOrder::Descending ? pa > pb : pa < pb;
        if (a.total != b.total) return a.total > b.total;
        return a.key < b.key;
    });
    if (rows.size() > top_n) rows.resize(top_n);
    return rows;
}

std::vector<KindShare> secrecy_share_by_kind(std::span<const Cable> cables) {
    std::vector<KindShare> out(4);
    for (std::size_t i = 0; i < 4; ++i) out[i].kind = static_cast<CableKind>(i);
    for (const Cable& c : cables) {
        KindShare& ks = out[static_cast<std::size_t>(c.kind)];
        ++ks.total;
        if (is_secret(c)) ++ks.secret;
    }
    for (KindShare& ks : out) {
        if (ks.total > 0) {
            ks.percent_secret =
                100.0 * static_cast<double>(ks.secret) / static_cast<double>(ks.total);
        }
    }
    return out;
}

namespace {

int month_index(int year, unsigned month) { return year * 12 + static_cast<int>(month) - 1; }

}  // namespace

std::vector<MonthPoint> monthly_secret_proportion(
    std::span<const Cable> cables,
    std::optional<std::pair<std::chrono::year_month_day, std::chrono::year_month_day>> range) {
    std::map<int, MonthPoint> by_month;
    int lo = 0, hi = -1;
    bool any = false;
    for (const Cable& c : cables) {
        if (!c.date) continue;  // undated cables are skipped in temporal views
        int idx = month_index(static_cast<int>(c.date->year()),
                              static_cast<unsigned>(c.date->month()));
        auto& point = by_month[idx];
        ++point.total;
        if (is_secret(c)) ++point.secret;
        if (!any || idx < lo) lo = idx;
        if (!any || idx > hi) hi = idx;
        any = true;
    }
    if (range) {
        lo = month_index(static_cast<int>(range->first.year()),
                         static_cast<unsigned>(range->first.month()));
        hi = month_index(static_cast<int>(range->second.year()),
                         static_cast<unsigned>(range->second.month()));
    } else if (!any) {
        return {};
    }

    std::vector<MonthPoint> out;
    for (int idx = lo; idx <= hi; ++idx) {
        MonthPoint p;
        auto it = by_month.find(idx);
        if (it != by_month.end()) p = it->second;
        p.year = idx / 12;
        p.month = static_cast<unsigned>(idx % 12) + 1;
        if (p.total > 0) {
            p.proportion = static_cast<double>(p.secret) / static_cast<double>(p.total);
        }
        out.push_back(p);
    }
    return out;
}

std::vector<DayPoint> daily_missing_counts(
    std::span<const Cable> cables,
    std::optional<std::pair<std::chrono::year_month_day, std::chrono::year_month_day>> range) {
    using std::chrono::sys_days;
    std::map<sys_days, std::uint64_t> by_day;
    std::optional<sys_days> lo, hi;
    for (const Cable& c : cables) {
        if (!c.date || c.body_status != BodyStatus::Error) continue;
        sys_days d{*c.date};
        ++by_day[d];
        if (!lo || d < *lo) lo = d;
        if (!hi || d > *hi) hi = d;
    }
    if (range) {
        lo = sys_days{range->first};
        hi = sys_days{range->second};
    }
    if (!lo || !hi) return {};

    std::vector<DayPoint> out;
    for (sys_days d = *lo; d <= *hi; d += std::chrono::days{1}) {
        auto it = by_day.find(d);
        out.push_back({std::chrono::year_month_day{d}, it == by_day.end() ? 0 : it->second});
    }
    return out;
}

std::vector<DateInterval> gap_detect(std::span<const DayPoint> series, int min_run,
                                     double quantile) {
    if (min_run < 1) throw UsageError("min_run must be at least 1");
    if (quantile < 0 || quantile > 1) throw UsageError("quantile must lie in [0, 1]");
    std::vector<std::uint64_t> nonzero;
    for (const DayPoint& p : series) {
        if (p.count > 0) nonzero.push_back(p.count);
    }
    if (nonzero.empty()) return {};
    std::sort(nonzero.begin(), nonzero.end());
    std::size_t rank = quantile <= 0
                           ? 1
                           : static_cast<std::size_t>(
                                 std::ceil(quantile * static_cast<double>(nonzero.size())));
    rank = std::clamp<std::size_t>(rank, 1, nonzero.size());
    std::uint64_t cutoff = nonzero[rank - 1];

    std::vector<DateInterval> out;
    std::size_t run_start = 0, run_len = 0;
    auto flush = [&](std::size_t end_idx) {
        if (run_len >= static_cast<std::size_t>(min_run)) {
            out.push_back({series[run_start].day, series[end_idx - 1].day});
        }
        run_len = 0;
    };
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (series[i].count > cutoff) {
            if (run_len == 0) run_start = i;
            ++run_len;
        } else {
            flush(i);
        }
    }
    flush(series.size());
    return out;
}

std::vector<MissingRate> missing_rate_by_level(std::span<const Cable> cables) {
    std::vector<MissingRate> out(kLevelCount + 1);
    for (std::size_t i = 0; i < kLevelCount; ++i) out[i].level = static_cast<Level>(i);
    for (const Cable& c : cables) {
        if (c.kind != CableKind::Full) continue;
        std::size_t idx = c.orig_class ? static_cast<std::size_t>(*c.orig_class) : kLevelCount;
        ++out[idx].total;
        if (c.body_status != BodyStatus::Text) ++out[idx].missing;
    }
    for (MissingRate& r : out) {
        if (r.total > 0) {
            r.percent = 100.0 * static_cast<double>(r.missing) / static_cast<double>(r.total);
        }
    }
    return out;
}

CotagResult cotag_share(std::span<const Cable> cables, std::string_view marker_tag,
                        std::span<const std::string> country_tags) {
    std::string marker = upper(marker_tag);
    std::unordered_map<std::string, CotagShare> per_tag;
    for (const auto& t : country_tags) {
        std::string key = upper(t);
        per_tag[key].tag = key;
    }
    CotagResult result;
    for (const Cable& c : cables) {
        std::unordered_set<std::string> tags;
        for (const auto& t : c.tags) tags.insert(upper(t));
        bool has_marker = tags.count(marker) > 0;
        bool any_country = false;
        for (auto& [key, share] : per_tag) {
            if (!tags.count(key)) continue;
            any_country = true;
            ++share.total;
            if (has_marker) ++share.both;
        }
        if (any_country) {
            ++result.pooled_total;
            if (has_marker) ++result.pooled_both;
        }
    }
    for (auto& [key, share] : per_tag) {
        if (share.total > 0) {
            share.percent =
                100.0 * static_cast<double>(share.both) / static_cast<double>(share.total);
        }
        result.per_tag.push_back(share);
    }
    std::sort(result.per_tag.begin(), result.per_tag.end(),
              [](const CotagShare& a, const CotagShare& b) { return a.tag < b.tag; });
    if (result.pooled_total > 0) {
        result.pooled_percent = 100.0 * static_cast<double>(result.pooled_both) /
                                static_cast<double>(result.pooled_total);
    }
    return result;
}

std::vector<GroupSecretShare> secret_share_by_country_group(
    std::span<const Cable> cables, const std::map<std::string, std::vector<std::string>>& groups) {
    std::vector<GroupSecretShare> out;
    for (const auto& [group, tags] : groups) {
        std::unordered_set<std::string> members;
        for (const auto& t : tags) members.insert(upper(t));
        GroupSecretShare share;
        share.group = group;
        for (const Cable& c : cables) {
            bool in_group = std::any_of(c.tags.begin(), c.tags.end(), [&](const std::string& t) {
                return members.count(upper(t)) > 0;
            });
            if (!in_group) continue;
            ++share.total;
            if (is_secret(c)) ++share.secret;
        }
        if (share.total > 0) {
            share.percent =
                100.0 * static_cast<double>(share.secret) / static_cast<double>(share.total);
        }
        out.push_back(std::move(share));
    }
    return out;
}

double pearson_r(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw UsageError("pearson_r: lengths differ");
    if (x.size() < 2) throw UsageError("pearson_r: need at least two points");
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0 || syy == 0) throw DataError("pearson_r: zero variance");
    return sxy / std::sqrt(sxx * syy);
}

RegionMap RegionMap::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open region map " + path);
    RegionMap map;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto cells = split_csv_line(line);
        if (first && !cells.empty() && upper(cells[0]) == "TAG") {
            first = false;
            continue;  // header row
        }
        first = false;
        if (cells.size() < 3) throw DataError("region map rows need tag,country,region: " + line);
        map.by_tag[upper(cells[0])] = {cells[1], cells[2]};
    }
    return map;
}

const RegionMap& RegionMap::defaults() {
    // Mirrors data/regions.csv.
    static const RegionMap map = [] {
        RegionMap m;
        const char* latam[][2] = {{"AR", "Argentina"}, {"BL", "Bolivia"},  {"BR", "Brazil"},
                                  {"CI", "Chile"},     {"CO", "Colombia"}, {"EC", "Ecuador"},
                                  {"PA", "Paraguay"},  {"PE", "Peru"},     {"UY", "Uruguay"},
                                  {"VE", "Venezuela"}};
        const char* mideast[][2] = {{"EG", "Egypt"},  {"IR", "Iran"},
                                    {"IS", "Israel"}, {"JO", "Jordan"},
                                    {"KU", "Kuwait"}, {"SA", "Saudi Arabia"},
                                    {"TU", "Turkey"}, {"AE", "United Arab Emirates"},
                                    {"YE", "North Yemen"}};
        for (const auto& row : latam) m.by_tag[row[0]] = {row[1], "Latin America"};
        for (const auto& row : mideast) m.by_tag[row[0]] = {row[1], "Middle East"};
        return m;
    }();
    return map;
}

std::map<std::string, std::vector<std::string>> RegionMap::groups() const {
    std::map<std::string, std::vector<std::string>> out;
    for (const auto& [tag, entry] : by_tag) out[entry.region].push_back(tag);
    return out;
}

ScoreTable ScoreTable::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open score table " + path);
    ScoreTable table;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto cells = split_csv_line(line);
        if (first && !cells.empty() && upper(cells[0]) == "COUNTRY_TAG") {
            first = false;
            continue;
        }
        first = false;
        if (cells.size() < 3)
            throw DataError("score rows need country_tag,year,score: " + line);
        table.by_tag_year[{upper(cells[0]), std::stoi(cells[1])}] = std::stod(cells[2]);
    }
    return table;
}

std::optional<double> ScoreTable::mean_score(const std::string& tag, int year_lo,
                                             int year_hi) const {
    double sum = 0;
    int n = 0;
    for (int y = year_lo; y <= year_hi; ++y) {
        auto it = by_tag_year.find({upper(tag), y});
        if (it != by_tag_year.end()) {
            sum += it->second;
            ++n;
        }
    }
    if (n == 0) return std::nullopt;
    return sum / n;
}

CorrelationResult correlate_tag_share_with_scores(std::span<const Cable> cables,
                                                  std::string_view marker_tag,
                                                  const RegionMap& regions,
                                                  const ScoreTable& scores, int year_lo,
                                                  int year_hi) {
    std::vector<std::string> tags;
    for (const auto& [tag, _] : regions.by_tag) tags.push_back(tag);
    CotagResult shares = cotag_share(cables, marker_tag, tags);

    std::vector<double> xs, ys;
    for (const CotagShare& share : shares.per_tag) {
        if (!share.percent) continue;
        auto score = scores.mean_score(share.tag, year_lo, year_hi);
        if (!score) continue;
        xs.push_back(*share.percent);
        ys.push_back(*score);
    }
    if (xs.size() < 2) throw DataError("not enough countries with both shares and scores");
    return {pearson_r(xs, ys), xs.size()};
}

}  // namespace cablesift
