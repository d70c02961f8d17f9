#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "prescriptive/dataset.hpp"

namespace prescriptive {

struct CohortStats {
    std::string cohort_key;
    std::string feature;
    double mu = 0.0;     // raw units
    double sigma = 0.0;  // population standard deviation, raw units
    std::size_t n = 0;

    bool operator==(const CohortStats&) const = default;
};

class StatsStore {
public:
    StatsStore() = default;
    explicit StatsStore(std::string version) : version_(std::move(version)) {}

    const std::string& version() const { return version_; }
    void insert(CohortStats s);
    const CohortStats& at(const std::string& cohort_key, const std::string& feature) const;
    const CohortStats* find(const std::string& cohort_key, const std::string& feature) const;
    std::size_t size() const { return entries_.size(); }
    std::vector<CohortStats> entries() const;

    std::string to_text() const;
    static StatsStore from_text(std::string_view text);
    void save(const std::string& path) const;
    static StatsStore load(const std::string& path);

    bool operator==(const StatsStore&) const = default;

private:
    std::string version_ = "1";
    std::map<std::pair<std::string, std::string>, CohortStats> entries_;
};

using CohortFn = std::function<std::string(const LearnerRecord&)>;

// Cohort = value of `feature` (e.g. programme) plus academic year, joined with '/'.
CohortFn cohort_by(const FeatureSchema& schema, const std::string& feature = "programme_title");

// Stats for every engineered feature of the schema (or the given list).
StatsStore fit_cohort_stats(const Dataset& raw, const CohortFn& cohort_of);
StatsStore fit_cohort_stats(const Dataset& raw, const CohortFn& cohort_of, const std::vector<std::string>& features);

// (x - mu) / sigma; sigma == 0 returns 0 and emits a degenerate-cohort warning.
double zscore(double x, const CohortStats& s);
double zscore_inverse(double z, const CohortStats& s);

// Replaces engineered features with their cohort z-scores. Missing cells stay missing.
Dataset engineer(const Dataset& raw, const StatsStore& stats, const CohortFn& cohort_of);

// Raw-unit rounding for display: grades and percentages to 1 decimal, counts/credits/years to integers.
double round_raw(double value, Unit unit);
std::string format_raw(double value, Unit unit);
std::string unit_suffix(Unit unit);

}  // namespace prescriptive
