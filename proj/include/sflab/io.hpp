#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "sflab/structure.hpp"

namespace sflab {

// Insertion order is preserved on dump, so reports read top-down
// (provenance first) and reruns with the same config are byte-identical.
using Json = nlohmann::ordered_json;

// Structure description files: name, dimension, frame fields as exact
// rational term lists, norm family, chart box.
Json structure_to_json(const SubFinslerStructure& s);
SubFinslerStructure structure_from_json(const Json& j);

SubFinslerStructure load_structure(const std::string& path);
void save_structure(const SubFinslerStructure& s, const std::string& path);

// FNV-1a over the canonical serialization; stable across platforms.
std::string structure_hash(const SubFinslerStructure& s);

Json poly_to_json(const PolyScalar& p);
PolyScalar poly_from_json(int nvars, const Json& j);

void write_json_file(const Json& j, const std::string& path);
Json read_json_file(const std::string& path);

// RFC 4180: CRLF row endings, quotes doubled, fields quoted when they
// contain a comma, a quote, or a line break.
std::string csv_escape(const std::string& field);
std::string csv_render(const std::vector<std::string>& header,
                       const std::vector<std::vector<std::string>>& rows);
void write_csv_file(const std::string& path, const std::vector<std::string>& header,
                    const std::vector<std::vector<std::string>>& rows);

}  // namespace sflab
