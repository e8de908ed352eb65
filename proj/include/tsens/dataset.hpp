#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace tsens {

// Column-role mapping for the dataset CSV. With the default-constructed
// schema, roles are derived from the header: `study`, `arm`, `y`, covariate
// columns `w1..wp`, proxy columns `t1..tk`. Explicit name lists override the
// prefix detection.
struct Schema {
    std::string study_column = "study";
    std::string arm_column = "arm";
    std::string outcome_column = "y";
    std::vector<std::string> covariate_columns;  // empty: detect by "w" prefix
    std::vector<std::string> proxy_columns;      // empty: detect by "t" prefix
};

// Multi-study individual-level data with study-level systematic missingness
// of the outcome. Immutable after construction. Rows are stored contiguously
// by internal study index; studies are re-indexed so that every study with
// observed outcomes precedes every study without them, and original labels
// are kept for reporting.
class StudyDataset {
public:
    // Builds a dataset from parallel row arrays. `study_labels[i]` is the
    // study label of row i as it appeared in the source. Masked proxies and
    // missing outcomes are NaN. Enforces all structural invariants:
    //   - arm is 0/1, covariates finite, proxies finite where unmasked;
    //   - within a study the outcome is all-present or all-missing;
    //   - within a study each proxy column is all-present or all-missing;
    //   - at least one study observes the outcome.
    static StudyDataset from_rows(const std::vector<long long>& study_labels,
                                  const Eigen::VectorXi& arm,
                                  const Eigen::MatrixXd& covariates,
                                  const Eigen::MatrixXd& proxies,
                                  const Eigen::VectorXd& outcome,
                                  std::vector<std::string> covariate_names,
                                  std::vector<std::string> proxy_names);

    int n_rows() const { return static_cast<int>(study_.size()); }
    int n_studies() const { return static_cast<int>(study_labels_.size()); }
    int n_covariates() const { return static_cast<int>(covariates_.cols()); }
    int n_proxies() const { return static_cast<int>(proxies_.cols()); }

    // Number of studies with observed outcomes; internal ids 1..s_star.
    int s_star() const { return s_star_; }
    bool outcome_observed(int study) const { return study <= s_star_; }

    int study_of(int row) const { return study_[row]; }
    int arm_of(int row) const { return arm_[row]; }

    const Eigen::MatrixXd& covariates() const { return covariates_; }
    const Eigen::MatrixXd& proxies() const { return proxies_; }
    const Eigen::VectorXd& outcome() const { return outcome_; }

    // Half-open row range of a study (rows are contiguous per study).
    std::pair<int, int> study_span(int study) const;
    int study_size(int study) const;

    std::vector<int> rows_of(int study) const;
    std::vector<int> rows_of(int study, int arm) const;

    bool proxy_available(int study, int proxy) const;
    // Proxy columns observed in every listed study.
    std::vector<int> proxies_available_in_all(const std::vector<int>& studies) const;

    long long study_label(int study) const { return study_labels_[study - 1]; }
    // Internal id (1-based) for an original label; 0 if unknown.
    int study_from_label(long long label) const;

    const std::vector<std::string>& covariate_names() const { return covariate_names_; }
    const std::vector<std::string>& proxy_names() const { return proxy_names_; }
    int proxy_index(const std::string& name) const;  // -1 if unknown

    // New dataset with rows taken (in order) from this one; `rows` must be
    // grouped by study in internal study order, as produced by resampling
    // within study strata.
    StudyDataset take_rows(const std::vector<int>& rows) const;

    // Bitwise equality, NaN-aware.
    bool equals(const StudyDataset& other) const;

private:
    StudyDataset() = default;

    Eigen::VectorXi study_;
    Eigen::VectorXi arm_;
    Eigen::MatrixXd covariates_;
    Eigen::MatrixXd proxies_;
    Eigen::VectorXd outcome_;
    int s_star_ = 0;
    std::vector<long long> study_labels_;
    std::vector<std::pair<int, int>> spans_;
    std::vector<std::vector<char>> proxy_mask_;  // [study-1][proxy] observed?
    std::vector<std::string> covariate_names_;
    std::vector<std::string> proxy_names_;
};

// Reads the dataset CSV (header required, '#' metadata lines skipped).
StudyDataset load_dataset(std::istream& in, const Schema& schema = {});
StudyDataset load_dataset_file(const std::string& path, const Schema& schema = {});

// Writes the CSV form; a nonempty metadata line is emitted first as
// '# <metadata>'. load(save(d)) reproduces d exactly, and saving a loaded
// file reproduces the file byte for byte.
void save_dataset(const StudyDataset& data, std::ostream& out,
                  const std::string& metadata = "");
void save_dataset_file(const StudyDataset& data, const std::string& path,
                       const std::string& metadata = "");

// Empirical study weights: rows in study / total rows. The returned vector
// sums to exactly 1.0 (the largest entry absorbs the rounding residue).
Eigen::VectorXd default_weights(const StudyDataset& data);

// Proxy subsets, donor sets, and study weights for transport estimation.
// Studies are addressed by internal id. Invariants are enforced by
// validate_assumptions rather than at construction, so that invalid
// configurations can be represented and reported on.
struct ProxyConfig {
    int s_star = 0;
    std::vector<std::vector<int>> proxy_subsets;  // [study-1] -> proxy ids
    std::vector<std::vector<int>> donor_sets;     // [study-1] -> study ids
    Eigen::VectorXd weights;

    const std::vector<int>& proxy_subset(int study) const { return proxy_subsets[study - 1]; }
    const std::vector<int>& donor_set(int study) const { return donor_sets[study - 1]; }
    double weight(int study) const { return weights[study - 1]; }
    // Total weight on studies with unobserved outcomes.
    double missing_mass() const;
};

// Donors = all outcome-observed studies; proxy subset of each study = the
// proxies observed both in it and in every donor; empirical weights.
ProxyConfig default_config(const StudyDataset& data);

// Flat key-value config text:
//   s_star  = 1                  (optional, cross-checked against data)
//   weights = empirical          (or a list, by ascending study label)
//   proxy_subset.<label> = t1 t2 (empty value means the empty set)
//   donor_set.<label>    = 1     (study labels)
// Unspecified studies fall back to the defaults above.
ProxyConfig parse_proxy_config(std::istream& in, const StudyDataset& data);
ProxyConfig parse_proxy_config_file(const std::string& path, const StudyDataset& data);

// Canonical serialization used for reporting and config hashing.
std::string config_text(const ProxyConfig& cfg, const StudyDataset& data);

enum class CheckStatus { pass, warn, fail };

struct CheckResult {
    std::string name;
    CheckStatus status = CheckStatus::pass;
    std::string detail;  // offending strata, empty when clean
};

struct StratumCount {
    int study = 0;
    int arm = 0;
    int count = 0;
};

// Outcome of the empirically checkable assumption screens. A fail blocks
// estimation; warnings do not.
struct ValidationReport {
    std::vector<CheckResult> checks;
    std::vector<StratumCount> stratum_counts;  // per (study, arm)
    int min_stratum_count = 0;

    bool ok() const;
    std::string summary() const;
};

// Screens: configuration consistency (donor sets within the outcome-observed
// range and nonempty where required, proxy subsets observed in target and
// donors, weights a distribution), marginal positivity (both arms present in
// every study), and a binned-positivity heuristic (both arms present within
// per-study quartile bins of the first covariate; warning only). Per-stratum
// counts are attached for inspection. Pure: never throws, never mutates.
ValidationReport validate_assumptions(const StudyDataset& data, const ProxyConfig& cfg);

}  // namespace tsens
