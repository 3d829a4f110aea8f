#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "cablesift/corpus.hpp"

namespace cablesift {

// One record extracted from an XML file: known field names mapped to the
// text they carried. Repeated concept/tag elements accumulate.
using XmlRecord = std::map<std::string, std::vector<std::string>>;

// Extracts records from an XML document. Each direct child element of the
// root is one record; within it, any descendant element whose (lower-cased)
// name is one of the corpus fields contributes its text. Unknown elements
// are ignored.
std::vector<XmlRecord> parse_xml_records(std::string_view xml);

nlohmann::json xml_record_to_cable_json(const XmlRecord& record);

struct IngestStats {
    std::size_t files = 0;
    std::size_t records = 0;
    std::size_t rejected = 0;
    ExclusionTally tally;
};

// Converts a directory of XML files (sorted by name) to a JSONL corpus and
// reports the exclusion accounting of the result.
IngestStats ingest_xml_dir(const std::string& xml_dir, const std::string& out_jsonl);

}  // namespace cablesift
