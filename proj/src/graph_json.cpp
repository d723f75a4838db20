#include "ganno/graph_json.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace ganno {

namespace {

using nlohmann::json;

Eigen::MatrixXd matrix_from(const json& j, const char* field, Eigen::Index expect_rows) {
    if (!j.is_array()) throw DataError(std::string(field) + ": expected array of rows");
    Eigen::MatrixXd m;
    if (j.empty()) {
        m.resize(expect_rows >= 0 ? expect_rows : 0, 0);
        if (expect_rows > 0) throw DataError(std::string(field) + ": row count mismatch");
        return m;
    }
    const auto rows = static_cast<Eigen::Index>(j.size());
    if (!j[0].is_array()) throw DataError(std::string(field) + ": rows must be arrays");
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    m.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j[r];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw DataError(std::string(field) + ": ragged rows");
        for (Eigen::Index c = 0; c < cols; ++c) {
            if (!row[c].is_number()) throw DataError(std::string(field) + ": non-numeric entry");
            m(r, c) = row[c].get<double>();
        }
    }
    if (expect_rows >= 0 && rows != expect_rows)
        throw DataError(std::string(field) + ": row count mismatch");
    return m;
}

AnnotatedGraph parse(const json& j, bool lenient) {
    if (!j.is_object()) throw DataError("graph: expected JSON object");
    if (!j.contains("n") || !j["n"].is_number_integer())
        throw DataError("n: missing or not an integer");
    const int n = j["n"].get<int>();
    if (!j.contains("edges") || !j["edges"].is_array())
        throw DataError("edges: missing or not an array");

    std::vector<std::array<int, 2>> edges;
    for (const auto& e : j["edges"]) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
            throw DataError("edges: each edge must be an [i, j] integer pair");
        edges.push_back({e[0].get<int>(), e[1].get<int>()});
    }

    AnnotatedGraph g;
    try {
        g.skeleton = Skeleton::make(n, std::move(edges));
    } catch (const DataError& err) {
        throw DataError(std::string("edges: ") + err.what());
    }

    const bool has_nf = j.contains("node_feats") && !j["node_feats"].empty();
    const bool has_ef = j.contains("edge_feats") && !j["edge_feats"].empty();
    if (!lenient || has_nf)
        g.node_feats = matrix_from(j.contains("node_feats") ? j["node_feats"] : json::array(),
                                   "node_feats", n);
    else
        g.node_feats.resize(n, 0);
    if (!lenient || has_ef)
        g.edge_feats = matrix_from(j.contains("edge_feats") ? j["edge_feats"] : json::array(),
                                   "edge_feats", g.skeleton.num_edges());
    else
        g.edge_feats.resize(g.skeleton.num_edges(), 0);

    if (!g.node_feats.allFinite()) throw DataError("node_feats: non-finite value");
    if (!g.edge_feats.allFinite()) throw DataError("edge_feats: non-finite value");
    return g;
}

json to_json(const AnnotatedGraph& g) {
    json j;
    j["n"] = g.skeleton.n;
    json edges = json::array();
    for (const auto& e : g.skeleton.edges) edges.push_back({e[0], e[1]});
    j["edges"] = std::move(edges);
    json nf = json::array();
    for (Eigen::Index r = 0; r < g.node_feats.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < g.node_feats.cols(); ++c) row.push_back(g.node_feats(r, c));
        nf.push_back(std::move(row));
    }
    j["node_feats"] = std::move(nf);
    json ef = json::array();
    for (Eigen::Index r = 0; r < g.edge_feats.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < g.edge_feats.cols(); ++c) row.push_back(g.edge_feats(r, c));
        ef.push_back(std::move(row));
    }
    j["edge_feats"] = std::move(ef);
    return j;
}

}  // namespace

std::string write_json(const AnnotatedGraph& g) { return to_json(g).dump(); }

AnnotatedGraph read_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("graph: malformed JSON: ") + e.what());
    }
    return parse(j, false);
}

AnnotatedGraph read_json_lenient(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("graph: malformed JSON: ") + e.what());
    }
    return parse(j, true);
}

void write_ndjson(std::ostream& os, const std::vector<AnnotatedGraph>& graphs) {
    for (const auto& g : graphs) os << write_json(g) << '\n';
}

std::vector<AnnotatedGraph> read_ndjson(std::istream& is, bool lenient) {
    std::vector<AnnotatedGraph> out;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(lenient ? read_json_lenient(line) : read_json(line));
        } catch (const DataError& e) {
            throw DataError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

void write_ndjson_file(const std::string& path, const std::vector<AnnotatedGraph>& graphs) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot open for writing: " + path);
    write_ndjson(os, graphs);
}

std::vector<AnnotatedGraph> read_ndjson_file(const std::string& path, bool lenient) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open: " + path);
    return read_ndjson(is, lenient);
}

}  // namespace ganno
