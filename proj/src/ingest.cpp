#include "cablesift/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <utility>

#include "cablesift/common.hpp"

namespace cablesift {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string decode_entities(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        if (s[i] != '&') {
            out.push_back(s[i++]);
            continue;
        }
        std::size_t semi = s.find(';', i);
        if (semi == std::string_view::npos || semi - i > 10) {
            out.push_back(s[i++]);
            continue;
        }
        std::string_view name = s.substr(i + 1, semi - i - 1);
        if (name == "amp") out.push_back('&');
        else if (name == "lt") out.push_back('<');
        else if (name == "gt") out.push_back('>');
        else if (name == "quot") out.push_back('"');
        else if (name == "apos") out.push_back('\'');
        else if (!name.empty() && name[0] == '#') {
            long code = 0;
            try {
                code = name[1] == 'x' || name[1] == 'X'
                           ? std::stol(std::string(name.substr(2)), nullptr, 16)
                           : std::stol(std::string(name.substr(1)));
            } catch (...) {
                code = -1;
            }
            if (code >= 0 && code < 128) {
                out.push_back(static_cast<char>(code));
            }  // non-ascii references are dropped
        } else {
            out.append(s.substr(i, semi - i + 1));
        }
        i = semi + 1;
    }
    return out;
}

// Minimal event scanner: element open/close tags and text. Comments, CDATA,
// processing instructions and attributes are handled just enough to skip.
struct XmlEvent {
    enum Kind { Open, Close, Text } kind;
    std::string name;  // lower-cased element name
    std::string text;
};

class XmlScanner {
  public:
    explicit XmlScanner(std::string_view xml) : xml_(xml) {}

    bool next(XmlEvent& ev) {
        if (!pending_close_.empty()) {
            ev = {XmlEvent::Close, std::exchange(pending_close_, {}), {}};
            return true;
        }
        while (pos_ < xml_.size()) {
            if (xml_[pos_] != '<') {
                std::size_t start = pos_;
                std::size_t lt = xml_.find('<', pos_);
                if (lt == std::string_view::npos) lt = xml_.size();
                pos_ = lt;
                std::string text = decode_entities(xml_.substr(start, lt - start));
                if (text.find_first_not_of(" \t\r\n") == std::string::npos) continue;
                ev = {XmlEvent::Text, {}, std::move(text)};
                return true;
            }
            if (starts_with("<!--")) {
                skip_until("-->");
                continue;
            }
            if (starts_with("<![CDATA[")) {
                std::size_t start = pos_ + 9;
                std::size_t end = xml_.find("]]>", start);
                if (end == std::string_view::npos) end = xml_.size();
                ev = {XmlEvent::Text, {}, std::string(xml_.substr(start, end - start))};
                pos_ = std::min(end + 3, xml_.size());
                return true;
            }
            if (starts_with("<?") || starts_with("<!")) {
                skip_until(">");
                continue;
            }
            std::size_t gt = xml_.find('>', pos_);
            if (gt == std::string_view::npos) {
                pos_ = xml_.size();
                return false;
            }
            std::string_view tag = xml_.substr(pos_ + 1, gt - pos_ - 1);
            pos_ = gt + 1;
            bool closing = !tag.empty() && tag.front() == '/';
            if (closing) tag.remove_prefix(1);
            bool self_closing = !tag.empty() && tag.back() == '/';
            if (self_closing) tag.remove_suffix(1);
            std::size_t name_end = 0;
            while (name_end < tag.size() &&
                   !std::isspace(static_cast<unsigned char>(tag[name_end])))
                ++name_end;
            std::string name = lower(tag.substr(0, name_end));
            if (name.empty()) continue;
            if (closing) {
                ev = {XmlEvent::Close, std::move(name), {}};
            } else if (self_closing) {
                // surface as open; caller sees an immediate close next
                pending_close_ = name;
                ev = {XmlEvent::Open, std::move(name), {}};
            } else {
                ev = {XmlEvent::Open, std::move(name), {}};
            }
            return true;
        }
        if (!pending_close_.empty()) {
            ev = {XmlEvent::Close, std::exchange(pending_close_, {}), {}};
            return true;
        }
        return false;
    }

  private:
    bool starts_with(std::string_view prefix) const {
        return xml_.substr(pos_, prefix.size()) == prefix;
    }
    void skip_until(std::string_view marker) {
        std::size_t at = xml_.find(marker, pos_);
        pos_ = at == std::string_view::npos ? xml_.size() : at + marker.size();
    }

    std::string_view xml_;
    std::size_t pos_ = 0;
    std::string pending_close_;
};

// Canonical field for an element name; empty when the element is unknown.
std::string field_for(const std::string& name) {
    if (name == "doc_id" || name == "docid" || name == "id" || name == "doc_number" ||
        name == "docnumber")
        return "doc_id";
    if (name == "body" || name == "text") return "body";
    if (name == "subject") return "subject";
    if (name == "concepts" || name == "concept") return "concepts";
    if (name == "tags" || name == "tag") return "tags";
    if (name == "from") return "from";
    if (name == "to") return "to";
    if (name == "office") return "office";
    if (name == "date") return "date";
    if (name == "origclass" || name == "classification") return "origclass";
    if (name == "cable_type" || name == "type") return "cable_type";
    return {};
}

}  // namespace

std::vector<XmlRecord> parse_xml_records(std::string_view xml) {
    std::vector<XmlRecord> records;
    XmlScanner scanner(xml);
    XmlEvent ev;
    int depth = 0;  // 0 = before root, 1 = inside root
    XmlRecord current;
    bool in_record = false;
    std::string capture_field;
    std::string capture_text;

    auto flush_capture = [&] {
        if (capture_field.empty()) return;
        current[capture_field].push_back(capture_text);
        capture_field.clear();
        capture_text.clear();
    };

    while (scanner.next(ev)) {
        switch (ev.kind) {
            case XmlEvent::Open: {
                ++depth;
                if (depth == 2) {
                    in_record = true;
                    current.clear();
                } else if (in_record) {
                    std::string field = field_for(ev.name);
                    if (!field.empty()) {
                        flush_capture();
                        capture_field = field;
                        capture_text.clear();
                    }
                }
                break;
            }
            case XmlEvent::Close: {
                if (in_record && !capture_field.empty() && field_for(ev.name) == capture_field) {
                    flush_capture();
                }
                if (depth == 2 && in_record) {
                    flush_capture();
                    if (!current.empty()) records.push_back(std::move(current));
                    current.clear();
                    in_record = false;
                }
                --depth;
                break;
            }
            case XmlEvent::Text: {
                if (!capture_field.empty()) {
                    if (!capture_text.empty()) capture_text += ' ';
                    capture_text += ev.text;
                }
                break;
            }
        }
    }
    return records;
}

nlohmann::json xml_record_to_cable_json(const XmlRecord& record) {
    nlohmann::json j;
    for (const auto& [field, values] : record) {
        if (values.empty()) continue;
        if (field == "concepts" || field == "tags") {
            j[field] = values;
        } else {
            j[field] = values.front();
        }
    }
    return j;
}

IngestStats ingest_xml_dir(const std::string& xml_dir, const std::string& out_jsonl) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(xml_dir)) throw DataError("not a directory: " + xml_dir);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(xml_dir)) {
        if (entry.is_regular_file() && lower(entry.path().extension().string()) == ".xml") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());

    std::ofstream out(out_jsonl);
    if (!out) throw DataError("cannot write " + out_jsonl);

    IngestStats stats;
    for (const auto& path : files) {
        ++stats.files;
        std::ifstream in(path);
        std::string xml((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        for (const XmlRecord& record : parse_xml_records(xml)) {
            nlohmann::json j = xml_record_to_cable_json(record);
            try {
                Cable cable = parse_cable_record(j);
                tally_cable(stats.tally, cable);
                out << cable_to_json(cable).dump() << '\n';
                ++stats.records;
            } catch (const DataError&) {
                ++stats.rejected;
            }
        }
    }
    return stats;
}

}  // namespace cablesift
