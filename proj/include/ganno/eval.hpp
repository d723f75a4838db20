#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "ganno/graph.hpp"
#include "ganno/smiles.hpp"

namespace ganno {

class EvalError : public DataError {
public:
    using DataError::DataError;
};

/// Self-contained chemical validity model: per-element maximum valence and
/// fixed bond orders (aromatic = 1.5). A molecule is valid when every atom's
/// incident bond orders sum to at most its maximum valence, every aromatic
/// bond lies on a cycle, and the graph is connected.
struct ValenceModel {
    MolSpec spec;

    static ValenceModel from(const MolSpec& spec) { return ValenceModel{spec}; }
};

bool is_valid(const AnnotatedGraph& g, const ValenceModel& vm);

/// Permutation-invariant digest: iterative color refinement seeded by node
/// features, degree and small-cycle counts, with edge features folded into
/// the neighbor multisets; n refinement rounds. Isomorphic relabelings
/// collide by construction. Continuous features are quantized to 6 decimals
/// before hashing.
std::uint64_t canonical_hash(const AnnotatedGraph& g);

/// Jensen-Shannon distance (sqrt of the base-2 JS divergence) between two
/// histograms given as nonnegative mass vectors of equal length.
double js_distance_hist(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

/// JSD between two samples of a continuous feature, discretized into `bins`
/// equal-width bins over the union range.
double js_distance_continuous(const std::vector<double>& a, const std::vector<double>& b,
                              int bins = 200);

/// JSD between two samples of a categorical feature (category indices).
double js_distance_categorical(const std::vector<int>& a, const std::vector<int>& b, int ncat);

struct JsdEntry {
    std::string feature;
    double distance;
};

struct EvalReport {
    int sample_size = 0;
    int reference_size = 0;
    // molecular metrics; absent for continuous-feature datasets
    std::optional<double> validity_pct;
    std::optional<double> uniqueness_pct;
    std::optional<double> novelty_pct;
    std::optional<double> overall_pct;
    bool degenerate = false;  // validity == 0, dependent rates reported as 0
    std::vector<JsdEntry> jsd;

    std::string to_json() const;
    std::string to_csv() const;
};

/// Validity over all samples, uniqueness within the valid set, novelty
/// within the valid-and-unique set (hashes absent from training), overall =
/// product of the three fractions.
EvalReport score_samples(const std::vector<AnnotatedGraph>& generated,
                         const std::unordered_set<std::uint64_t>& training_hashes,
                         const ValenceModel& vm);

/// Euclidean distance between the first two node-feature coordinates of
/// connected nodes, one value per edge over all graphs.
std::vector<double> connected_distance_distribution(const std::vector<AnnotatedGraph>& graphs);

/// Histogram export: equal-width bins over the union range, one mass column
/// per source. Returns CSV text (bin_lo, bin_hi, mass_a, mass_b).
std::string histogram_csv(const std::vector<double>& a, const std::vector<double>& b, int bins);

struct SkeletonStudyRow {
    int skeleton_index = 0;
    int num_samples = 0;
    double validity_pct = 0;
    double uniqueness_among_valid_pct = 0;
};

struct SkeletonStudy {
    std::vector<SkeletonStudyRow> rows;
    double avg_validity_pct = 0;
    double avg_uniqueness_pct = 0;
    double valid_and_unique_per_mille = 0;
};

/// Conditional-generation study: for each skeleton, generate n_samples
/// annotations and report validity and uniqueness among the valid set.
/// `generate` maps (skeletons, seed) to generated graphs.
SkeletonStudy fixed_skeleton_study(
    const std::function<std::vector<AnnotatedGraph>(const std::vector<Skeleton>&, std::uint64_t)>&
        generate,
    const std::vector<Skeleton>& skeletons, int n_samples, std::uint64_t seed,
    const ValenceModel& vm);

}  // namespace ganno
