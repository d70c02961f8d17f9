#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "prescriptive/schema.hpp"

namespace prescriptive {

// Label convention: 1 = completed (positive class), 0 = non-completed.
enum class Outcome : int { non_completed = 0, completed = 1 };

// A raw cell: missing, a number, or a category label.
using Cell = std::variant<std::monostate, double, std::string>;

inline bool is_missing(const Cell& c) { return std::holds_alternative<std::monostate>(c); }

struct LearnerRecord {
    std::string learner_id;
    int academic_year = 0;
    std::vector<Cell> values;  // aligned with FeatureSchema::features
    std::optional<Outcome> outcome;

    bool operator==(const LearnerRecord&) const = default;
};

struct Provenance {
    std::string source;
    std::string version;
    bool operator==(const Provenance&) const = default;
};

struct Dataset {
    FeatureSchema schema;
    std::vector<LearnerRecord> records;
    Provenance provenance;

    const Cell& cell(std::size_t row, std::string_view feature) const;
    std::vector<std::string> learner_ids() const;
    std::vector<int> labels() const;  // throws if any outcome is absent
    double prevalence() const;        // row-level fraction of completed
};

bool same_records(const Dataset& a, const Dataset& b);

// Records file: header row with learner_id, academic_year, outcome, then every schema feature.
Dataset load_dataset(const std::string& records_path, const std::string& schema_path);
Dataset load_dataset(const std::string& records_path, const FeatureSchema& schema);
Dataset parse_records(std::string_view text, const FeatureSchema& schema, const std::string& source = "<memory>");
std::string records_to_csv(const Dataset& d);
void write_records(const Dataset& d, const std::string& path);

// Missing numeric -> 0, missing categorical -> the "__missing__" category (must be declared).
Dataset impute(const Dataset& d);

// Dense row-major matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
    std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    Matrix select_rows(std::span<const std::size_t> idx) const;
    bool operator==(const Matrix&) const = default;
};

// Number of binary columns for a categorical with the given cardinality.
std::size_t binary_width(std::size_t n_categories);

struct EncodedFeature {
    std::string name;
    FeatureKind kind = FeatureKind::numeric;
    std::size_t first_column = 0;
    std::size_t width = 1;
    std::vector<std::string> categories;
    bool operator==(const EncodedFeature&) const = default;
};

// Maps feature-level rows (categoricals held as category index) to model columns.
class Encoding {
public:
    Encoding() = default;
    Encoding(const FeatureSchema& schema, const std::vector<std::string>& feature_names);
    explicit Encoding(std::vector<EncodedFeature> features);

    std::size_t n_features() const { return features_.size(); }
    std::size_t width() const { return width_; }
    const std::vector<EncodedFeature>& features() const { return features_; }
    std::vector<std::string> feature_names() const;
    const std::vector<std::string>& column_names() const { return column_names_; }
    std::optional<std::size_t> feature_index(std::string_view name) const;

    // Which source feature produced a column.
    std::size_t feature_of_column(std::size_t column) const;

    void encode_row(std::span<const double> feature_row, std::span<double> out) const;
    std::vector<double> encode_row(std::span<const double> feature_row) const;
    Matrix encode(const Matrix& feature_rows) const;

    bool operator==(const Encoding&) const = default;

private:
    std::vector<EncodedFeature> features_;
    std::vector<std::string> column_names_;
    std::vector<std::size_t> column_owner_;
    std::size_t width_ = 0;
};

// Imputed feature-level view: numeric values as-is, categoricals as schema index.
struct FeatureFrame {
    std::vector<std::string> feature_names;
    Matrix values;
    std::vector<int> labels;  // empty when outcomes are absent
    std::vector<std::string> learner_ids;
    std::vector<int> academic_years;
};

FeatureFrame to_frame(const Dataset& d, const std::vector<std::string>& feature_names);

struct EncodedMatrix {
    Encoding encoding;
    Matrix X;
    std::vector<int> labels;
    std::vector<std::string> learner_ids;
};

EncodedMatrix impute_and_encode(const Dataset& d);
EncodedMatrix impute_and_encode(const Dataset& d, const std::vector<std::string>& feature_names);

struct Fold {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

// Folds partition learners, not rows.
std::vector<Fold> grouped_kfold(std::span<const std::string> learner_ids, std::size_t k, std::uint64_t seed);
std::vector<Fold> grouped_kfold(const Dataset& d, std::size_t k, std::uint64_t seed);

}  // namespace prescriptive
