#include "prescriptive/dataset.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "prescriptive/errors.hpp"
#include "prescriptive/random.hpp"
#include "prescriptive/util.hpp"

namespace prescriptive {

namespace {

constexpr std::string_view kLearnerColumn = "learner_id";
constexpr std::string_view kYearColumn = "academic_year";
constexpr std::string_view kOutcomeColumn = "outcome";

std::optional<Outcome> parse_outcome(const std::string& s, std::size_t row) {
    if (s.empty()) return std::nullopt;
    if (s == "completed" || s == "1") return Outcome::completed;
    if (s == "non_completed" || s == "non-completed" || s == "0") return Outcome::non_completed;
    throw RowError(row, "unrecognised outcome '" + s + "'");
}

}  // namespace

const Cell& Dataset::cell(std::size_t row, std::string_view feature) const {
    auto idx = schema.index_of(feature);
    if (!idx) throw SchemaError("unknown feature '" + std::string(feature) + "'");
    return records.at(row).values.at(*idx);
}

std::vector<std::string> Dataset::learner_ids() const {
    std::vector<std::string> ids;
    ids.reserve(records.size());
    for (const auto& r : records) ids.push_back(r.learner_id);
    return ids;
}

std::vector<int> Dataset::labels() const {
    std::vector<int> y;
    y.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!records[i].outcome) throw RowError(i, "outcome missing on a training record");
        y.push_back(static_cast<int>(*records[i].outcome));
    }
    return y;
}

double Dataset::prevalence() const {
    const auto y = labels();
    if (y.empty()) return 0.0;
    return static_cast<double>(std::accumulate(y.begin(), y.end(), 0)) / static_cast<double>(y.size());
}

bool same_records(const Dataset& a, const Dataset& b) {
    return a.schema.names() == b.schema.names() && a.records == b.records;
}

Dataset parse_records(std::string_view text, const FeatureSchema& schema, const std::string& source) {
    schema.validate();
    std::vector<std::string> lines;
    {
        std::size_t start = 0;
        while (start <= text.size()) {
            std::size_t end = text.find('\n', start);
            if (end == std::string_view::npos) end = text.size();
            std::string_view line = text.substr(start, end - start);
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            if (!trim(line).empty()) lines.emplace_back(line);
            if (end == text.size()) break;
            start = end + 1;
        }
    }
    if (lines.empty()) throw EmptyFileError("records file " + source + " is empty");

    const auto header = split_csv_line(lines.front());
    std::optional<std::size_t> learner_col, year_col, outcome_col;
    std::vector<std::optional<std::size_t>> feature_of_col(header.size());
    std::vector<bool> feature_seen(schema.features.size(), false);
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string name = trim(header[c]);
        if (name == kLearnerColumn) learner_col = c;
        else if (name == kYearColumn) year_col = c;
        else if (name == kOutcomeColumn) outcome_col = c;
        else {
            auto idx = schema.index_of(name);
            if (!idx) throw SchemaError("column '" + name + "' is not in the schema");
            if (feature_seen[*idx]) throw SchemaError("column '" + name + "' appears twice");
            feature_seen[*idx] = true;
            feature_of_col[c] = idx;
        }
    }
    if (!learner_col) throw SchemaError("records file has no '" + std::string(kLearnerColumn) + "' column");
    if (!year_col) throw SchemaError("records file has no '" + std::string(kYearColumn) + "' column");
    for (std::size_t i = 0; i < schema.features.size(); ++i) {
        if (!feature_seen[i]) throw SchemaError("schema feature '" + schema.features[i].name + "' has no column");
    }
    if (lines.size() == 1) throw EmptyFileError("records file " + source + " has a header but no rows");

    Dataset d;
    d.schema = schema;
    d.provenance = {source, schema.version};
    d.records.reserve(lines.size() - 1);
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const std::size_t row = r - 1;
        const auto fields = split_csv_line(lines[r]);
        if (fields.size() != header.size()) {
            throw RowError(row, "expected " + std::to_string(header.size()) + " fields, found " +
                                    std::to_string(fields.size()));
        }
        LearnerRecord rec;
        rec.values.resize(schema.features.size());
        rec.learner_id = trim(fields[*learner_col]);
        if (rec.learner_id.empty()) throw RowError(row, "learner_id is missing");
        double year = 0;
        if (!parse_double(fields[*year_col], year)) throw RowError(row, "unparseable academic_year");
        rec.academic_year = static_cast<int>(year);
        if (outcome_col) rec.outcome = parse_outcome(trim(fields[*outcome_col]), row);
        for (std::size_t c = 0; c < fields.size(); ++c) {
            if (!feature_of_col[c]) continue;
            const auto& spec = schema.features[*feature_of_col[c]];
            const std::string& raw = fields[c];
            if (raw.empty()) continue;  // literal empty = missing
            if (spec.kind == FeatureKind::numeric) {
                double v = 0;
                if (!parse_double(raw, v)) {
                    throw RowError(row, "unparseable numeric '" + raw + "' in column '" + spec.name + "'");
                }
                rec.values[*feature_of_col[c]] = v;
            } else {
                rec.values[*feature_of_col[c]] = raw;
            }
        }
        d.records.push_back(std::move(rec));
    }
    return d;
}

Dataset load_dataset(const std::string& records_path, const FeatureSchema& schema) {
    return parse_records(read_file(records_path), schema, records_path);
}

Dataset load_dataset(const std::string& records_path, const std::string& schema_path) {
    return load_dataset(records_path, load_schema(schema_path));
}

std::string records_to_csv(const Dataset& d) {
    std::ostringstream out;
    out << kLearnerColumn << ',' << kYearColumn << ',' << kOutcomeColumn;
    for (const auto& f : d.schema.features) out << ',' << csv_escape(f.name);
    out << '\n';
    for (const auto& r : d.records) {
        out << csv_escape(r.learner_id) << ',' << r.academic_year << ',';
        if (r.outcome) out << (*r.outcome == Outcome::completed ? "completed" : "non_completed");
        for (const auto& c : r.values) {
            out << ',';
            if (const auto* v = std::get_if<double>(&c)) out << format_double(*v);
            else if (const auto* s = std::get_if<std::string>(&c)) out << csv_escape(*s);
        }
        out << '\n';
    }
    return out.str();
}

void write_records(const Dataset& d, const std::string& path) { write_file(path, records_to_csv(d)); }

Dataset impute(const Dataset& d) {
    Dataset out = d;
    for (std::size_t f = 0; f < d.schema.features.size(); ++f) {
        const auto& spec = d.schema.features[f];
        for (std::size_t r = 0; r < out.records.size(); ++r) {
            auto& c = out.records[r].values[f];
            if (!is_missing(c)) continue;
            if (spec.kind == FeatureKind::numeric) {
                c = 0.0;
            } else {
                if (!spec.category_index(kMissingCategory)) {
                    throw EncodingError("feature '" + spec.name + "' has a missing value at row " + std::to_string(r) +
                                        " but declares no '" + std::string(kMissingCategory) + "' category");
                }
                c = std::string(kMissingCategory);
            }
        }
    }
    return out;
}

Matrix Matrix::select_rows(std::span<const std::size_t> idx) const {
    Matrix m(idx.size(), cols);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        auto src = row(idx[i]);
        std::copy(src.begin(), src.end(), m.row(i).begin());
    }
    return m;
}

std::size_t binary_width(std::size_t n_categories) {
    std::size_t c = std::max<std::size_t>(n_categories, 2);
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < c) ++bits;
    return bits;
}

Encoding::Encoding(const FeatureSchema& schema, const std::vector<std::string>& feature_names) {
    std::vector<EncodedFeature> feats;
    for (const auto& name : feature_names) {
        const auto& spec = schema.at(name);
        EncodedFeature ef;
        ef.name = spec.name;
        ef.kind = spec.kind;
        if (spec.kind == FeatureKind::categorical) {
            ef.width = binary_width(spec.categories.size());
            ef.categories = spec.categories;
        }
        feats.push_back(std::move(ef));
    }
    *this = Encoding(std::move(feats));
}

Encoding::Encoding(std::vector<EncodedFeature> features) : features_(std::move(features)) {
    std::size_t col = 0;
    for (std::size_t f = 0; f < features_.size(); ++f) {
        auto& ef = features_[f];
        ef.first_column = col;
        if (ef.kind == FeatureKind::numeric) {
            ef.width = 1;
            column_names_.push_back(ef.name);
        } else {
            ef.width = binary_width(ef.categories.size());
            for (std::size_t b = 0; b < ef.width; ++b) {
                column_names_.push_back(ef.name + "_bit" + std::to_string(b));
            }
        }
        for (std::size_t b = 0; b < ef.width; ++b) column_owner_.push_back(f);
        col += ef.width;
    }
    width_ = col;
}

std::vector<std::string> Encoding::feature_names() const {
    std::vector<std::string> out;
    for (const auto& f : features_) out.push_back(f.name);
    return out;
}

std::optional<std::size_t> Encoding::feature_index(std::string_view name) const {
    for (std::size_t i = 0; i < features_.size(); ++i) {
        if (features_[i].name == name) return i;
    }
    return std::nullopt;
}

std::size_t Encoding::feature_of_column(std::size_t column) const { return column_owner_.at(column); }

void Encoding::encode_row(std::span<const double> feature_row, std::span<double> out) const {
    if (feature_row.size() != features_.size() || out.size() != width_) {
        throw ShapeError("encode_row: expected " + std::to_string(features_.size()) + " features, got " +
                         std::to_string(feature_row.size()));
    }
    for (std::size_t f = 0; f < features_.size(); ++f) {
        const auto& ef = features_[f];
        if (ef.kind == FeatureKind::numeric) {
            out[ef.first_column] = feature_row[f];
            continue;
        }
        const double v = feature_row[f];
        if (v < 0 || v >= static_cast<double>(ef.categories.size()) || v != static_cast<double>(static_cast<std::size_t>(v))) {
            throw EncodingError("category index " + format_double(v) + " invalid for feature '" + ef.name + "'");
        }
        const auto index = static_cast<std::size_t>(v);
        // most significant bit first
        for (std::size_t b = 0; b < ef.width; ++b) {
            const std::size_t shift = ef.width - 1 - b;
            out[ef.first_column + b] = static_cast<double>((index >> shift) & 1u);
        }
    }
}

std::vector<double> Encoding::encode_row(std::span<const double> feature_row) const {
    std::vector<double> out(width_);
    encode_row(feature_row, out);
    return out;
}

Matrix Encoding::encode(const Matrix& feature_rows) const {
    Matrix out(feature_rows.rows, width_);
    for (std::size_t i = 0; i < feature_rows.rows; ++i) encode_row(feature_rows.row(i), out.row(i));
    return out;
}

FeatureFrame to_frame(const Dataset& d, const std::vector<std::string>& feature_names) {
    FeatureFrame frame;
    frame.feature_names = feature_names;
    frame.values = Matrix(d.records.size(), feature_names.size());
    std::vector<std::size_t> idx;
    for (const auto& name : feature_names) {
        auto i = d.schema.index_of(name);
        if (!i) throw SchemaError("unknown feature '" + name + "'");
        idx.push_back(*i);
    }
    bool all_labelled = true;
    for (std::size_t r = 0; r < d.records.size(); ++r) {
        const auto& rec = d.records[r];
        frame.learner_ids.push_back(rec.learner_id);
        frame.academic_years.push_back(rec.academic_year);
        if (!rec.outcome) all_labelled = false;
        for (std::size_t j = 0; j < idx.size(); ++j) {
            const auto& spec = d.schema.features[idx[j]];
            const auto& c = rec.values[idx[j]];
            double v = 0.0;
            if (spec.kind == FeatureKind::numeric) {
                if (const auto* x = std::get_if<double>(&c)) v = *x;
                else if (!is_missing(c)) throw EncodingError("non-numeric value in numeric feature '" + spec.name + "'");
            } else {
                std::string label;
                if (const auto* s = std::get_if<std::string>(&c)) label = *s;
                else if (is_missing(c)) label = std::string(kMissingCategory);
                else label = format_double(std::get<double>(c));
                auto ci = spec.category_index(label);
                if (!ci) {
                    throw EncodingError("label '" + label + "' is not a category of feature '" + spec.name + "'");
                }
                v = static_cast<double>(*ci);
            }
            frame.values(r, j) = v;
        }
    }
    if (all_labelled) {
        for (const auto& rec : d.records) frame.labels.push_back(static_cast<int>(*rec.outcome));
    }
    return frame;
}

EncodedMatrix impute_and_encode(const Dataset& d, const std::vector<std::string>& feature_names) {
    const auto frame = to_frame(d, feature_names);
    EncodedMatrix em;
    em.encoding = Encoding(d.schema, feature_names);
    em.X = em.encoding.encode(frame.values);
    em.labels = frame.labels;
    em.learner_ids = frame.learner_ids;
    return em;
}

EncodedMatrix impute_and_encode(const Dataset& d) { return impute_and_encode(d, d.schema.names()); }

std::vector<Fold> grouped_kfold(std::span<const std::string> learner_ids, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw FoldError("grouped_kfold needs k >= 2");
    // First-appearance order, so the permutation depends only on the data and the seed.
    std::vector<std::string> learners;
    std::map<std::string, std::size_t> learner_index;
    std::vector<std::size_t> row_learner(learner_ids.size());
    for (std::size_t i = 0; i < learner_ids.size(); ++i) {
        auto [it, inserted] = learner_index.emplace(learner_ids[i], learners.size());
        if (inserted) learners.push_back(learner_ids[i]);
        row_learner[i] = it->second;
    }
    if (learners.size() < k) {
        throw FoldError("cannot build " + std::to_string(k) + " grouped folds from " +
                        std::to_string(learners.size()) + " distinct learners");
    }
    std::vector<std::size_t> order(learners.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, {0x6b666f6c64ULL}));
    rng.shuffle(order);
    std::vector<std::size_t> fold_of(learners.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos) fold_of[order[pos]] = pos % k;

    std::vector<Fold> folds(k);
    for (std::size_t i = 0; i < row_learner.size(); ++i) {
        const std::size_t f = fold_of[row_learner[i]];
        for (std::size_t j = 0; j < k; ++j) {
            if (j == f) folds[j].test.push_back(i);
            else folds[j].train.push_back(i);
        }
    }
    return folds;
}

std::vector<Fold> grouped_kfold(const Dataset& d, std::size_t k, std::uint64_t seed) {
    const auto ids = d.learner_ids();
    return grouped_kfold(std::span<const std::string>(ids), k, seed);
}

}  // namespace prescriptive
