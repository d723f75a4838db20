#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ganno/graph.hpp"

namespace ganno {

/// Single-file archive of named float arrays plus free-form text entries.
/// Layout: 8-byte magic "GANNOCK1", entry count, then per entry a
/// length-prefixed name, a kind tag, and payload (shape-tagged
/// little-endian doubles for arrays, raw bytes for text).
///
/// All network parameters, optimizer moments, spectral-norm vectors, RNG
/// state and the run config ride in one archive so a checkpoint is
/// self-describing.
class Archive {
public:
    void put(const std::string& name, const Eigen::MatrixXd& m) { arrays_[name] = m; }
    void put_text(const std::string& name, std::string text) { texts_[name] = std::move(text); }

    bool has(const std::string& name) const { return arrays_.count(name) > 0; }
    bool has_text(const std::string& name) const { return texts_.count(name) > 0; }

    const Eigen::MatrixXd& get(const std::string& name) const {
        auto it = arrays_.find(name);
        if (it == arrays_.end()) throw DataError("archive: missing array: " + name);
        return it->second;
    }

    const std::string& get_text(const std::string& name) const {
        auto it = texts_.find(name);
        if (it == texts_.end()) throw DataError("archive: missing text: " + name);
        return it->second;
    }

    std::vector<std::string> array_names() const {
        std::vector<std::string> out;
        for (const auto& [k, v] : arrays_) out.push_back(k);
        return out;
    }

    void save(const std::string& path) const;
    static Archive load(const std::string& path);

private:
    std::map<std::string, Eigen::MatrixXd> arrays_;
    std::map<std::string, std::string> texts_;
};

}  // namespace ganno
