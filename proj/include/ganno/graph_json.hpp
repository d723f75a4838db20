#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ganno/graph.hpp"

namespace ganno {

/// JSON interchange for one graph:
///   {"n": int, "edges": [[i,j],...], "node_feats": [[...],...], "edge_feats": [[...],...]}
/// edge_feats rows align with the edges array. Datasets are newline-delimited
/// JSON, one document per graph.
std::string write_json(const AnnotatedGraph& g);
AnnotatedGraph read_json(const std::string& text);

/// Skeleton-only documents: feature arrays may be omitted or empty.
AnnotatedGraph read_json_lenient(const std::string& text);

void write_ndjson(std::ostream& os, const std::vector<AnnotatedGraph>& graphs);
std::vector<AnnotatedGraph> read_ndjson(std::istream& is, bool lenient = false);

void write_ndjson_file(const std::string& path, const std::vector<AnnotatedGraph>& graphs);
std::vector<AnnotatedGraph> read_ndjson_file(const std::string& path, bool lenient = false);

}  // namespace ganno
