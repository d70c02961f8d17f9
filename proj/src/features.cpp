#include "prescriptive/features.hpp"

#include <cmath>
#include <sstream>

#include "prescriptive/errors.hpp"
#include "prescriptive/util.hpp"

namespace prescriptive {

namespace {
constexpr std::string_view kStatsMagic = "# prescriptive-stats v1";
}

void StatsStore::insert(CohortStats s) {
    if (s.sigma < 0.0) throw StatsError("negative sigma for " + s.cohort_key + "/" + s.feature);
    if (s.n < 1) throw StatsError("empty sample for " + s.cohort_key + "/" + s.feature);
    auto key = std::make_pair(s.cohort_key, s.feature);
    entries_[key] = std::move(s);
}

const CohortStats* StatsStore::find(const std::string& cohort_key, const std::string& feature) const {
    auto it = entries_.find({cohort_key, feature});
    return it == entries_.end() ? nullptr : &it->second;
}

const CohortStats& StatsStore::at(const std::string& cohort_key, const std::string& feature) const {
    const auto* s = find(cohort_key, feature);
    if (!s) throw StatsError("no cohort stats for feature '" + feature + "' in cohort '" + cohort_key + "'");
    return *s;
}

std::vector<CohortStats> StatsStore::entries() const {
    std::vector<CohortStats> out;
    out.reserve(entries_.size());
    for (const auto& [_, s] : entries_) out.push_back(s);
    return out;
}

std::string StatsStore::to_text() const {
    std::ostringstream out;
    out << kStatsMagic << '\n';
    out << "version," << csv_escape(version_) << '\n';
    out << "cohort_key,feature,mu,sigma,n\n";
    for (const auto& [_, s] : entries_) {
        out << csv_escape(s.cohort_key) << ',' << csv_escape(s.feature) << ',' << format_double(s.mu) << ','
            << format_double(s.sigma) << ',' << s.n << '\n';
    }
    return out.str();
}

StatsStore StatsStore::from_text(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line) || trim(line) != kStatsMagic) throw StatsError("not a stats store file");
    if (!std::getline(in, line)) throw StatsError("stats store missing version line");
    auto v = split_csv_line(line);
    if (v.size() != 2 || v[0] != "version") throw StatsError("stats store missing version line");
    StatsStore store(v[1]);
    if (!std::getline(in, line) || trim(line) != "cohort_key,feature,mu,sigma,n") {
        throw StatsError("stats store header mismatch");
    }
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() != 5) throw StatsError("malformed stats row: " + line);
        CohortStats s;
        s.cohort_key = f[0];
        s.feature = f[1];
        double n = 0;
        if (!parse_double(f[2], s.mu) || !parse_double(f[3], s.sigma) || !parse_double(f[4], n)) {
            throw StatsError("malformed stats row: " + line);
        }
        s.n = static_cast<std::size_t>(n);
        store.insert(std::move(s));
    }
    return store;
}

void StatsStore::save(const std::string& path) const { write_file(path, to_text()); }

StatsStore StatsStore::load(const std::string& path) { return from_text(read_file(path)); }

CohortFn cohort_by(const FeatureSchema& schema, const std::string& feature) {
    auto idx = schema.index_of(feature);
    if (!idx) throw SchemaError("cohort feature '" + feature + "' is not in the schema");
    const std::size_t i = *idx;
    return [i](const LearnerRecord& r) {
        std::string head;
        const auto& c = r.values.at(i);
        if (const auto* s = std::get_if<std::string>(&c)) head = *s;
        else if (const auto* v = std::get_if<double>(&c)) head = format_double(*v);
        else head = std::string(kMissingCategory);
        return head + "/" + std::to_string(r.academic_year);
    };
}

StatsStore fit_cohort_stats(const Dataset& raw, const CohortFn& cohort_of, const std::vector<std::string>& features) {
    // Two passes per (cohort, feature): mean, then centred sum of squares.
    struct Acc {
        std::vector<double> values;
    };
    std::map<std::pair<std::string, std::string>, Acc> acc;
    std::vector<std::size_t> idx;
    for (const auto& name : features) {
        auto i = raw.schema.index_of(name);
        if (!i) throw SchemaError("unknown feature '" + name + "'");
        if (raw.schema.features[*i].kind != FeatureKind::numeric) {
            throw StatsError("feature '" + name + "' is not numeric");
        }
        idx.push_back(*i);
    }
    for (const auto& rec : raw.records) {
        const std::string key = cohort_of(rec);
        for (std::size_t j = 0; j < idx.size(); ++j) {
            auto& a = acc[{key, features[j]}];
            if (const auto* v = std::get_if<double>(&rec.values[idx[j]])) a.values.push_back(*v);
        }
    }
    StatsStore store(raw.provenance.version.empty() ? "1" : raw.provenance.version);
    for (const auto& [key, a] : acc) {
        if (a.values.empty()) {
            throw StatsError("feature '" + key.second + "' has no observed values in cohort '" + key.first + "'");
        }
        const double n = static_cast<double>(a.values.size());
        double sum = 0.0;
        for (double v : a.values) sum += v;
        const double mu = sum / n;
        double ss = 0.0;
        for (double v : a.values) ss += (v - mu) * (v - mu);
        CohortStats s{key.first, key.second, mu, std::sqrt(ss / n), a.values.size()};
        store.insert(std::move(s));
    }
    return store;
}

StatsStore fit_cohort_stats(const Dataset& raw, const CohortFn& cohort_of) {
    std::vector<std::string> features;
    for (const auto& f : raw.schema.features)
        if (f.engineered) features.push_back(f.name);
    return fit_cohort_stats(raw, cohort_of, features);
}

double zscore(double x, const CohortStats& s) {
    if (s.sigma == 0.0) {
        warn("degenerate cohort '" + s.cohort_key + "' for feature '" + s.feature + "': sigma = 0, z-score set to 0");
        return 0.0;
    }
    return (x - s.mu) / s.sigma;
}

double zscore_inverse(double z, const CohortStats& s) {
    if (s.sigma < 0.0) throw StatsError("invalid stats: negative sigma");
    return s.mu + z * s.sigma;
}

Dataset engineer(const Dataset& raw, const StatsStore& stats, const CohortFn& cohort_of) {
    Dataset out = raw;
    for (auto& rec : out.records) {
        const std::string key = cohort_of(rec);
        for (std::size_t f = 0; f < out.schema.features.size(); ++f) {
            const auto& spec = out.schema.features[f];
            if (!spec.engineered) continue;
            if (auto* v = std::get_if<double>(&rec.values[f])) *v = zscore(*v, stats.at(key, spec.name));
        }
    }
    out.provenance.version = raw.provenance.version + "+engineered";
    return out;
}

double round_raw(double value, Unit unit) {
    switch (unit) {
        case Unit::grade:
        case Unit::percent: return std::round(value * 10.0) / 10.0;
        case Unit::count:
        case Unit::credits:
        case Unit::years: return std::round(value);
        case Unit::none: break;
    }
    return std::round(value * 100.0) / 100.0;
}

std::string format_raw(double value, Unit unit) {
    switch (unit) {
        case Unit::grade:
        case Unit::percent: return format_fixed(value, 1);
        case Unit::count:
        case Unit::credits:
        case Unit::years: return format_fixed(value, 0);
        case Unit::none: break;
    }
    return format_fixed(value, 2);
}

std::string unit_suffix(Unit unit) {
    switch (unit) {
        case Unit::grade:
        case Unit::percent: return "%";
        case Unit::credits: return " credits";
        case Unit::years: return " years";
        default: return "";
    }
}

}  // namespace prescriptive
