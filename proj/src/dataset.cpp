#include "tsens/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "tsens/csv.hpp"
#include "tsens/errors.hpp"

namespace tsens {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string study_tag(long long label) {
    return "study " + std::to_string(label);
}

bool bitwise_equal(const double* a, const double* b, std::size_t n) {
    return n == 0 || std::memcmp(a, b, n * sizeof(double)) == 0;
}

}  // namespace

StudyDataset StudyDataset::from_rows(const std::vector<long long>& study_labels,
                                     const Eigen::VectorXi& arm,
                                     const Eigen::MatrixXd& covariates,
                                     const Eigen::MatrixXd& proxies,
                                     const Eigen::VectorXd& outcome,
                                     std::vector<std::string> covariate_names,
                                     std::vector<std::string> proxy_names) {
    const int n = static_cast<int>(study_labels.size());
    if (arm.size() != n || covariates.rows() != n || proxies.rows() != n || outcome.size() != n)
        throw StructuralError("row arrays have inconsistent lengths");
    if (n == 0) throw StructuralError("dataset has no rows");
    if (static_cast<int>(covariate_names.size()) != covariates.cols() ||
        static_cast<int>(proxy_names.size()) != proxies.cols())
        throw StructuralError("column name lists do not match column counts");

    for (int i = 0; i < n; ++i) {
        if (arm[i] != 0 && arm[i] != 1)
            throw StructuralError("row " + std::to_string(i + 1) + ": treatment arm must be 0 or 1");
        for (int j = 0; j < covariates.cols(); ++j)
            if (!std::isfinite(covariates(i, j)))
                throw StructuralError("row " + std::to_string(i + 1) + ": covariate " +
                                      covariate_names[static_cast<std::size_t>(j)] + " is not finite");
        for (int j = 0; j < proxies.cols(); ++j)
            if (!std::isnan(proxies(i, j)) && !std::isfinite(proxies(i, j)))
                throw StructuralError("row " + std::to_string(i + 1) + ": proxy " +
                                      proxy_names[static_cast<std::size_t>(j)] + " is not finite");
        if (!std::isnan(outcome[i]) && !std::isfinite(outcome[i]))
            throw StructuralError("row " + std::to_string(i + 1) + ": outcome is not finite");
    }

    // Group rows by label, preserving in-study row order.
    std::map<long long, std::vector<int>> groups;
    for (int i = 0; i < n; ++i) groups[study_labels[i]].push_back(i);

    const int k = static_cast<int>(proxies.cols());
    std::vector<long long> observed_labels;
    std::vector<long long> missing_labels;
    std::map<long long, std::vector<char>> masks;
    for (const auto& [label, rows] : groups) {
        int with_outcome = 0;
        for (int i : rows) with_outcome += std::isnan(outcome[i]) ? 0 : 1;
        if (with_outcome != 0 && with_outcome != static_cast<int>(rows.size()))
            throw StructuralError(study_tag(label) +
                                  ": outcome must be observed for all rows or none "
                                  "(missingness is systematic by study)");
        (with_outcome > 0 ? observed_labels : missing_labels).push_back(label);

        std::vector<char> mask(static_cast<std::size_t>(k), 0);
        for (int j = 0; j < k; ++j) {
            int present = 0;
            for (int i : rows) present += std::isnan(proxies(i, j)) ? 0 : 1;
            if (present != 0 && present != static_cast<int>(rows.size()))
                throw StructuralError(study_tag(label) + ": proxy " +
                                      proxy_names[static_cast<std::size_t>(j)] +
                                      " must be observed for all rows or none");
            mask[static_cast<std::size_t>(j)] = present > 0 ? 1 : 0;
        }
        masks[label] = std::move(mask);
    }
    if (observed_labels.empty())
        throw StructuralError("no study with observed outcomes");

    StudyDataset d;
    d.s_star_ = static_cast<int>(observed_labels.size());
    d.study_labels_ = observed_labels;
    d.study_labels_.insert(d.study_labels_.end(), missing_labels.begin(), missing_labels.end());
    d.covariate_names_ = std::move(covariate_names);
    d.proxy_names_ = std::move(proxy_names);

    d.study_.resize(n);
    d.arm_.resize(n);
    d.covariates_.resize(n, covariates.cols());
    d.proxies_.resize(n, proxies.cols());
    d.outcome_.resize(n);
    int out = 0;
    for (std::size_t s = 0; s < d.study_labels_.size(); ++s) {
        const long long label = d.study_labels_[s];
        const auto& rows = groups[label];
        d.spans_.emplace_back(out, out + static_cast<int>(rows.size()));
        d.proxy_mask_.push_back(masks[label]);
        for (int i : rows) {
            d.study_[out] = static_cast<int>(s) + 1;
            d.arm_[out] = arm[i];
            d.covariates_.row(out) = covariates.row(i);
            d.proxies_.row(out) = proxies.row(i);
            d.outcome_[out] = outcome[i];
            ++out;
        }
    }
    return d;
}

std::pair<int, int> StudyDataset::study_span(int study) const {
    return spans_[static_cast<std::size_t>(study - 1)];
}

int StudyDataset::study_size(int study) const {
    auto [b, e] = study_span(study);
    return e - b;
}

std::vector<int> StudyDataset::rows_of(int study) const {
    auto [b, e] = study_span(study);
    std::vector<int> rows(static_cast<std::size_t>(e - b));
    for (int i = b; i < e; ++i) rows[static_cast<std::size_t>(i - b)] = i;
    return rows;
}

std::vector<int> StudyDataset::rows_of(int study, int arm) const {
    auto [b, e] = study_span(study);
    std::vector<int> rows;
    for (int i = b; i < e; ++i)
        if (arm_[i] == arm) rows.push_back(i);
    return rows;
}

bool StudyDataset::proxy_available(int study, int proxy) const {
    return proxy_mask_[static_cast<std::size_t>(study - 1)][static_cast<std::size_t>(proxy)] != 0;
}

std::vector<int> StudyDataset::proxies_available_in_all(const std::vector<int>& studies) const {
    std::vector<int> out;
    for (int j = 0; j < n_proxies(); ++j) {
        bool everywhere = true;
        for (int s : studies)
            if (!proxy_available(s, j)) { everywhere = false; break; }
        if (everywhere) out.push_back(j);
    }
    return out;
}

int StudyDataset::study_from_label(long long label) const {
    for (std::size_t s = 0; s < study_labels_.size(); ++s)
        if (study_labels_[s] == label) return static_cast<int>(s) + 1;
    return 0;
}

int StudyDataset::proxy_index(const std::string& name) const {
    for (std::size_t j = 0; j < proxy_names_.size(); ++j)
        if (proxy_names_[j] == name) return static_cast<int>(j);
    return -1;
}

StudyDataset StudyDataset::take_rows(const std::vector<int>& rows) const {
    StudyDataset d;
    const int n = static_cast<int>(rows.size());
    d.study_.resize(n);
    d.arm_.resize(n);
    d.covariates_.resize(n, covariates_.cols());
    d.proxies_.resize(n, proxies_.cols());
    d.outcome_.resize(n);
    for (int i = 0; i < n; ++i) {
        const int r = rows[static_cast<std::size_t>(i)];
        d.study_[i] = study_[r];
        d.arm_[i] = arm_[r];
        d.covariates_.row(i) = covariates_.row(r);
        d.proxies_.row(i) = proxies_.row(r);
        d.outcome_[i] = outcome_[r];
    }
    // Recover spans; the selection must keep rows grouped in study order
    // with every study still present.
    int expect = 1;
    int start = 0;
    for (int i = 0; i <= n; ++i) {
        if (i == n || d.study_[i] != expect) {
            if (i == start) throw StructuralError("row selection empties study " + std::to_string(expect));
            d.spans_.emplace_back(start, i);
            start = i;
            ++expect;
            if (i == n) break;
            if (d.study_[i] != expect)
                throw StructuralError("row selection is not grouped by study");
        }
    }
    if (static_cast<int>(d.spans_.size()) != n_studies())
        throw StructuralError("row selection drops studies");
    d.s_star_ = s_star_;
    d.study_labels_ = study_labels_;
    d.proxy_mask_ = proxy_mask_;
    d.covariate_names_ = covariate_names_;
    d.proxy_names_ = proxy_names_;
    return d;
}

bool StudyDataset::equals(const StudyDataset& other) const {
    if (n_rows() != other.n_rows() || s_star_ != other.s_star_ ||
        study_labels_ != other.study_labels_ || spans_ != other.spans_ ||
        proxy_mask_ != other.proxy_mask_ || covariate_names_ != other.covariate_names_ ||
        proxy_names_ != other.proxy_names_)
        return false;
    if (covariates_.cols() != other.covariates_.cols() || proxies_.cols() != other.proxies_.cols())
        return false;
    for (int i = 0; i < n_rows(); ++i)
        if (study_[i] != other.study_[i] || arm_[i] != other.arm_[i]) return false;
    return bitwise_equal(covariates_.data(), other.covariates_.data(),
                         static_cast<std::size_t>(covariates_.size())) &&
           bitwise_equal(proxies_.data(), other.proxies_.data(),
                         static_cast<std::size_t>(proxies_.size())) &&
           bitwise_equal(outcome_.data(), other.outcome_.data(),
                         static_cast<std::size_t>(outcome_.size()));
}

namespace {

struct ColumnRoles {
    int study = -1;
    int arm = -1;
    int outcome = -1;
    std::vector<std::pair<int, std::string>> covariates;  // column index, name
    std::vector<std::pair<int, std::string>> proxies;
};

bool prefixed_numbered(const std::string& name, char prefix) {
    if (name.size() < 2 || name[0] != prefix) return false;
    return std::all_of(name.begin() + 1, name.end(), [](char c) { return c >= '0' && c <= '9'; });
}

ColumnRoles assign_roles(const std::vector<std::string_view>& header, const Schema& schema) {
    ColumnRoles roles;
    for (int c = 0; c < static_cast<int>(header.size()); ++c) {
        std::string name(trim(header[static_cast<std::size_t>(c)]));
        if (name == schema.study_column) {
            if (roles.study >= 0) throw ParseError("duplicate column '" + name + "'");
            roles.study = c;
        } else if (name == schema.arm_column) {
            if (roles.arm >= 0) throw ParseError("duplicate column '" + name + "'");
            roles.arm = c;
        } else if (name == schema.outcome_column) {
            if (roles.outcome >= 0) throw ParseError("duplicate column '" + name + "'");
            roles.outcome = c;
        } else if (!schema.covariate_columns.empty() || !schema.proxy_columns.empty()) {
            bool is_w = std::find(schema.covariate_columns.begin(), schema.covariate_columns.end(),
                                  name) != schema.covariate_columns.end();
            bool is_t = std::find(schema.proxy_columns.begin(), schema.proxy_columns.end(), name) !=
                        schema.proxy_columns.end();
            if (is_w == is_t)
                throw ParseError("column '" + name + "' has no unique role in the schema");
            (is_w ? roles.covariates : roles.proxies).emplace_back(c, name);
        } else if (prefixed_numbered(name, 'w')) {
            roles.covariates.emplace_back(c, name);
        } else if (prefixed_numbered(name, 't')) {
            roles.proxies.emplace_back(c, name);
        } else {
            throw ParseError("column '" + name + "' has no role (expected " + schema.study_column +
                             ", " + schema.arm_column + ", " + schema.outcome_column +
                             ", w<j>, or t<j>)");
        }
    }
    if (roles.study < 0) throw ParseError("missing column '" + schema.study_column + "'");
    if (roles.arm < 0) throw ParseError("missing column '" + schema.arm_column + "'");
    if (roles.outcome < 0) throw ParseError("missing column '" + schema.outcome_column + "'");
    return roles;
}

}  // namespace

StudyDataset load_dataset(std::istream& in, const Schema& schema) {
    LineReader reader(in);
    std::string line;
    // Header: first non-comment, non-blank line.
    for (;;) {
        if (!reader.next(line)) throw ParseError("missing header row");
        if (line.empty() || line[0] == '#') continue;
        break;
    }
    const auto header = split_csv_line(line);
    const ColumnRoles roles = assign_roles(header, schema);
    const std::size_t n_fields = header.size();

    std::vector<long long> labels;
    std::vector<int> arm;
    std::vector<double> w_flat, t_flat, y;
    const int p = static_cast<int>(roles.covariates.size());
    const int k = static_cast<int>(roles.proxies.size());

    while (reader.next(line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto fields = split_csv_line(line);
        const std::string at = "line " + std::to_string(reader.line_number());
        if (fields.size() != n_fields)
            throw ParseError(at + ": expected " + std::to_string(n_fields) + " fields, got " +
                             std::to_string(fields.size()));
        auto study = parse_int(fields[static_cast<std::size_t>(roles.study)]);
        if (!study) throw ParseError(at + ": bad study id '" +
                                     std::string(fields[static_cast<std::size_t>(roles.study)]) + "'");
        auto a = parse_int(fields[static_cast<std::size_t>(roles.arm)]);
        if (!a || (*a != 0 && *a != 1))
            throw ParseError(at + ": treatment arm must be 0 or 1");
        labels.push_back(*study);
        arm.push_back(static_cast<int>(*a));

        const std::string_view y_field = trim(fields[static_cast<std::size_t>(roles.outcome)]);
        if (y_field.empty()) {
            y.push_back(kNaN);
        } else {
            auto v = parse_double(y_field);
            if (!v || !std::isfinite(*v)) throw ParseError(at + ": bad outcome '" + std::string(y_field) + "'");
            y.push_back(*v);
        }
        for (const auto& [c, name] : roles.covariates) {
            auto v = parse_double(fields[static_cast<std::size_t>(c)]);
            if (!v || !std::isfinite(*v))
                throw ParseError(at + ": bad value for covariate " + name);
            w_flat.push_back(*v);
        }
        for (const auto& [c, name] : roles.proxies) {
            const std::string_view f = trim(fields[static_cast<std::size_t>(c)]);
            if (f.empty()) {
                t_flat.push_back(kNaN);
            } else {
                auto v = parse_double(f);
                if (!v || !std::isfinite(*v))
                    throw ParseError(at + ": bad value for proxy " + name);
                t_flat.push_back(*v);
            }
        }
    }
    const int n = static_cast<int>(labels.size());
    if (n == 0) throw ParseError("no data rows");

    Eigen::VectorXi arm_v(n);
    Eigen::MatrixXd W(n, p), T(n, k);
    Eigen::VectorXd y_v(n);
    std::vector<std::string> w_names, t_names;
    for (const auto& [c, name] : roles.covariates) w_names.push_back(name);
    for (const auto& [c, name] : roles.proxies) t_names.push_back(name);
    for (int i = 0; i < n; ++i) {
        arm_v[i] = arm[static_cast<std::size_t>(i)];
        y_v[i] = y[static_cast<std::size_t>(i)];
        for (int j = 0; j < p; ++j) W(i, j) = w_flat[static_cast<std::size_t>(i) * p + j];
        for (int j = 0; j < k; ++j) T(i, j) = t_flat[static_cast<std::size_t>(i) * k + j];
    }
    return StudyDataset::from_rows(labels, arm_v, W, T, y_v, std::move(w_names), std::move(t_names));
}

StudyDataset load_dataset_file(const std::string& path, const Schema& schema) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    return load_dataset(in, schema);
}

void save_dataset(const StudyDataset& data, std::ostream& out, const std::string& metadata) {
    if (!metadata.empty()) out << "# " << metadata << "\n";
    out << "study,arm,y";
    for (const auto& name : data.covariate_names()) out << ',' << name;
    for (const auto& name : data.proxy_names()) out << ',' << name;
    out << '\n';
    for (int i = 0; i < data.n_rows(); ++i) {
        out << data.study_label(data.study_of(i)) << ',' << data.arm_of(i) << ',';
        if (!std::isnan(data.outcome()[i])) out << format_double(data.outcome()[i]);
        for (int j = 0; j < data.n_covariates(); ++j)
            out << ',' << format_double(data.covariates()(i, j));
        for (int j = 0; j < data.n_proxies(); ++j) {
            out << ',';
            if (!std::isnan(data.proxies()(i, j))) out << format_double(data.proxies()(i, j));
        }
        out << '\n';
    }
}

void save_dataset_file(const StudyDataset& data, const std::string& path,
                       const std::string& metadata) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write '" + path + "'");
    save_dataset(data, out, metadata);
}

Eigen::VectorXd default_weights(const StudyDataset& data) {
    const int S = data.n_studies();
    Eigen::VectorXd w(S);
    const double total = data.n_rows();
    for (int s = 1; s <= S; ++s) w[s - 1] = data.study_size(s) / total;
    // The largest weight absorbs the rounding residue until sequential
    // summation in index order (how every consumer adds weights) gives
    // exactly 1.
    int argmax = 0;
    for (int s = 1; s < S; ++s)
        if (w[s] > w[argmax]) argmax = s;
    for (int pass = 0; pass < 8; ++pass) {
        double sum = 0.0;
        for (int s = 0; s < S; ++s) sum += w[s];
        if (sum == 1.0) break;
        w[argmax] += 1.0 - sum;
    }
    return w;
}

double ProxyConfig::missing_mass() const {
    double m = 0.0;
    for (int s = s_star; s < weights.size(); ++s) m += weights[s];
    return m;
}

ProxyConfig default_config(const StudyDataset& data) {
    ProxyConfig cfg;
    cfg.s_star = data.s_star();
    std::vector<int> donors;
    for (int s = 1; s <= data.s_star(); ++s) donors.push_back(s);
    for (int s = 1; s <= data.n_studies(); ++s) {
        cfg.donor_sets.push_back(donors);
        std::vector<int> scope = donors;
        scope.push_back(s);
        cfg.proxy_subsets.push_back(data.proxies_available_in_all(scope));
    }
    cfg.weights = default_weights(data);
    return cfg;
}

ProxyConfig parse_proxy_config(std::istream& in, const StudyDataset& data) {
    ProxyConfig cfg = default_config(data);
    LineReader reader(in);
    std::string line;
    std::vector<std::string> seen;
    while (reader.next(line)) {
        std::string_view sv = trim(line);
        if (sv.empty() || sv[0] == '#' || sv[0] == ';') continue;
        const std::string at = "config line " + std::to_string(reader.line_number());
        auto eq = sv.find('=');
        if (eq == std::string_view::npos) throw ParseError(at + ": expected 'key = value'");
        std::string key(trim(sv.substr(0, eq)));
        std::string value(trim(sv.substr(eq + 1)));
        if (std::find(seen.begin(), seen.end(), key) != seen.end())
            throw ParseError(at + ": duplicate key '" + key + "'");
        seen.push_back(key);

        if (key == "s_star") {
            auto v = parse_int(value);
            if (!v) throw ParseError(at + ": bad s_star");
            if (*v != data.s_star())
                throw ParseError(at + ": s_star=" + value + " but the data has " +
                                 std::to_string(data.s_star()) + " outcome-observed studies");
        } else if (key == "weights") {
            if (value == "empirical") {
                cfg.weights = default_weights(data);
            } else {
                auto tokens = split_list(value);
                if (static_cast<int>(tokens.size()) != data.n_studies())
                    throw ParseError(at + ": expected " + std::to_string(data.n_studies()) +
                                     " weights");
                // Listed by ascending study label.
                std::vector<long long> labels;
                for (int s = 1; s <= data.n_studies(); ++s) labels.push_back(data.study_label(s));
                std::vector<long long> sorted = labels;
                std::sort(sorted.begin(), sorted.end());
                Eigen::VectorXd w(data.n_studies());
                for (std::size_t i = 0; i < tokens.size(); ++i) {
                    auto v = parse_double(tokens[i]);
                    if (!v || *v < 0) throw ParseError(at + ": bad weight '" + tokens[i] + "'");
                    int internal = data.study_from_label(sorted[i]);
                    w[internal - 1] = *v;
                }
                if (std::abs(w.sum() - 1.0) > 1e-12)
                    throw ParseError(at + ": weights must sum to 1 (got " +
                                     format_double(w.sum()) + ")");
                cfg.weights = w;
            }
        } else if (key.rfind("proxy_subset.", 0) == 0) {
            auto label = parse_int(key.substr(std::strlen("proxy_subset.")));
            int s = label ? data.study_from_label(*label) : 0;
            if (s == 0) throw ParseError(at + ": unknown study label in '" + key + "'");
            std::vector<int> subset;
            for (const auto& tok : split_list(value)) {
                int j = data.proxy_index(tok);
                if (j < 0) throw ParseError(at + ": unknown proxy '" + tok + "'");
                subset.push_back(j);
            }
            std::sort(subset.begin(), subset.end());
            subset.erase(std::unique(subset.begin(), subset.end()), subset.end());
            cfg.proxy_subsets[static_cast<std::size_t>(s - 1)] = subset;
        } else if (key.rfind("donor_set.", 0) == 0) {
            auto label = parse_int(key.substr(std::strlen("donor_set.")));
            int s = label ? data.study_from_label(*label) : 0;
            if (s == 0) throw ParseError(at + ": unknown study label in '" + key + "'");
            std::vector<int> donors;
            for (const auto& tok : split_list(value)) {
                auto donor_label = parse_int(tok);
                int d = donor_label ? data.study_from_label(*donor_label) : 0;
                if (d == 0) throw ParseError(at + ": unknown study label '" + tok + "'");
                donors.push_back(d);
            }
            std::sort(donors.begin(), donors.end());
            donors.erase(std::unique(donors.begin(), donors.end()), donors.end());
            cfg.donor_sets[static_cast<std::size_t>(s - 1)] = donors;
        } else {
            throw ParseError(at + ": unknown key '" + key + "'");
        }
    }
    return cfg;
}

ProxyConfig parse_proxy_config_file(const std::string& path, const StudyDataset& data) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    return parse_proxy_config(in, data);
}

std::string config_text(const ProxyConfig& cfg, const StudyDataset& data) {
    std::ostringstream out;
    out << "s_star = " << cfg.s_star << "\n";
    out << "weights =";
    std::vector<long long> sorted;
    for (int s = 1; s <= data.n_studies(); ++s) sorted.push_back(data.study_label(s));
    std::sort(sorted.begin(), sorted.end());
    for (long long label : sorted)
        out << ' ' << format_double(cfg.weight(data.study_from_label(label)));
    out << "\n";
    for (long long label : sorted) {
        const int s = data.study_from_label(label);
        out << "proxy_subset." << label << " =";
        for (int j : cfg.proxy_subset(s)) out << ' ' << data.proxy_names()[static_cast<std::size_t>(j)];
        out << "\n";
        out << "donor_set." << label << " =";
        for (int d : cfg.donor_set(s)) out << ' ' << data.study_label(d);
        out << "\n";
    }
    return out.str();
}

bool ValidationReport::ok() const {
    return std::none_of(checks.begin(), checks.end(),
                        [](const CheckResult& c) { return c.status == CheckStatus::fail; });
}

std::string ValidationReport::summary() const {
    std::ostringstream out;
    for (const auto& c : checks) {
        const char* s = c.status == CheckStatus::pass ? "pass"
                        : c.status == CheckStatus::warn ? "warn"
                                                        : "fail";
        out << c.name << ": " << s;
        if (!c.detail.empty()) out << " (" << c.detail << ")";
        out << "\n";
    }
    out << "minimum (study, arm) stratum count: " << min_stratum_count << "\n";
    return out.str();
}

namespace {

void append_detail(std::string& detail, const std::string& item) {
    if (!detail.empty()) detail += "; ";
    detail += item;
}

CheckResult check_config(const StudyDataset& data, const ProxyConfig& cfg) {
    CheckResult c{"config", CheckStatus::pass, ""};
    const int S = data.n_studies();
    if (cfg.s_star != data.s_star())
        append_detail(c.detail, "config s_star does not match the data");
    if (static_cast<int>(cfg.donor_sets.size()) != S ||
        static_cast<int>(cfg.proxy_subsets.size()) != S || cfg.weights.size() != S) {
        append_detail(c.detail, "config not sized to the study set");
        c.status = CheckStatus::fail;
        return c;
    }
    for (int s = 0; s < S; ++s)
        if (!(cfg.weights[s] >= 0))
            append_detail(c.detail, "negative weight for " + study_tag(data.study_label(s + 1)));
    if (std::abs(cfg.weights.sum() - 1.0) > 1e-12)
        append_detail(c.detail, "weights do not sum to 1");
    for (int s = 1; s <= S; ++s) {
        const auto& donors = cfg.donor_set(s);
        for (int d : donors) {
            if (d < 1 || d > S) {
                append_detail(c.detail, "donor id out of range for " + study_tag(data.study_label(s)));
            } else if (d > data.s_star()) {
                append_detail(c.detail, "donor set of " + study_tag(data.study_label(s)) +
                                            " includes " + study_tag(data.study_label(d)) +
                                            ", which has no observed outcomes");
            }
        }
        if (s > data.s_star() && donors.empty())
            append_detail(c.detail, study_tag(data.study_label(s)) + " has an empty donor set");
        for (int j : cfg.proxy_subset(s)) {
            if (j < 0 || j >= data.n_proxies()) {
                append_detail(c.detail, "proxy id out of range for " + study_tag(data.study_label(s)));
                continue;
            }
            const std::string& name = data.proxy_names()[static_cast<std::size_t>(j)];
            if (!data.proxy_available(s, j))
                append_detail(c.detail,
                              "proxy " + name + " not observed in " + study_tag(data.study_label(s)));
            for (int d : donors)
                if (d >= 1 && d <= S && !data.proxy_available(d, j))
                    append_detail(c.detail, "proxy " + name + " not observed in donor " +
                                                study_tag(data.study_label(d)) + " of " +
                                                study_tag(data.study_label(s)));
        }
    }
    if (!c.detail.empty()) c.status = CheckStatus::fail;
    return c;
}

CheckResult check_positivity(const StudyDataset& data) {
    CheckResult c{"positivity", CheckStatus::pass, ""};
    for (int s = 1; s <= data.n_studies(); ++s)
        for (int a = 0; a < 2; ++a)
            if (data.rows_of(s, a).empty())
                append_detail(c.detail, study_tag(data.study_label(s)) + " has no arm-" +
                                            std::to_string(a) + " rows");
    if (!c.detail.empty()) c.status = CheckStatus::fail;
    return c;
}

CheckResult check_binned_positivity(const StudyDataset& data) {
    CheckResult c{"positivity-bins", CheckStatus::pass, ""};
    if (data.n_covariates() == 0) {
        c.detail = "no covariates to bin";
        return c;
    }
    for (int s = 1; s <= data.n_studies(); ++s) {
        const auto rows = data.rows_of(s);
        std::vector<double> v;
        v.reserve(rows.size());
        for (int i : rows) v.push_back(data.covariates()(i, 0));
        std::sort(v.begin(), v.end());
        // Nearest-rank quartiles, deduplicated; ties collapse bins.
        std::vector<double> edges;
        for (double q : {0.25, 0.5, 0.75}) {
            std::size_t k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
            if (k > 0) --k;
            edges.push_back(v[k]);
        }
        std::sort(edges.begin(), edges.end());
        edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
        auto bin_of = [&](double x) {
            std::size_t b = 0;
            for (double e : edges)
                if (x > e) ++b;
            return b;
        };
        std::vector<std::array<int, 2>> counts(edges.size() + 1, {0, 0});
        for (int i : rows)
            counts[bin_of(data.covariates()(i, 0))][static_cast<std::size_t>(data.arm_of(i))]++;
        for (std::size_t b = 0; b < counts.size(); ++b) {
            const bool occupied = counts[b][0] + counts[b][1] > 0;
            if (!occupied) continue;
            for (int a = 0; a < 2; ++a)
                if (counts[b][static_cast<std::size_t>(a)] == 0)
                    append_detail(c.detail, study_tag(data.study_label(s)) + " bin " +
                                                std::to_string(b) + " of " +
                                                data.covariate_names()[0] + " has no arm-" +
                                                std::to_string(a) + " rows");
        }
    }
    if (!c.detail.empty()) c.status = CheckStatus::warn;
    return c;
}

}  // namespace

ValidationReport validate_assumptions(const StudyDataset& data, const ProxyConfig& cfg) {
    ValidationReport report;
    report.checks.push_back(check_config(data, cfg));
    report.checks.push_back(check_positivity(data));
    report.checks.push_back(check_binned_positivity(data));

    report.min_stratum_count = data.n_rows();
    for (int s = 1; s <= data.n_studies(); ++s)
        for (int a = 0; a < 2; ++a) {
            const int count = static_cast<int>(data.rows_of(s, a).size());
            report.stratum_counts.push_back({s, a, count});
            report.min_stratum_count = std::min(report.min_stratum_count, count);
        }
    CheckResult cells{"stratum-counts", CheckStatus::pass,
                      "minimum rows in a (study, arm) stratum: " +
                          std::to_string(report.min_stratum_count)};
    if (report.min_stratum_count < 2) cells.status = CheckStatus::warn;
    report.checks.push_back(cells);
    return report;
}

}  // namespace tsens
