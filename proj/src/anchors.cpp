#include "prescriptive/anchors.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "prescriptive/errors.hpp"
#include "prescriptive/random.hpp"
#include "prescriptive/util.hpp"

namespace prescriptive {

using nlohmann::json;

std::string_view op_symbol(PredicateOp op) {
    switch (op) {
        case PredicateOp::le: return "<=";
        case PredicateOp::gt: return ">";
        case PredicateOp::eq: break;
    }
    return "=";
}

bool Predicate::holds(double v) const {
    switch (op) {
        case PredicateOp::le: return v <= value;
        case PredicateOp::gt: return v > value;
        case PredicateOp::eq: break;
    }
    return v == value;
}

bool Predicate::holds(std::span<const double> row) const {
    if (feature >= row.size()) throw ShapeError("predicate feature index outside the row");
    return holds(row[feature]);
}

std::string Predicate::key() const { return name + " " + std::string(op_symbol(op)) + " " + format_double(value); }

bool AnchorRule::holds(std::span<const double> row) const {
    return std::all_of(predicates.begin(), predicates.end(), [&](const Predicate& p) { return p.holds(row); });
}

std::string AnchorRule::key() const {
    std::string out;
    for (const auto& p : predicates) {
        if (!out.empty()) out += " AND ";
        out += p.key();
    }
    return out;
}

void AnchorConfig::validate() const {
    if (!(tau > 0.5 && tau <= 1.0)) throw ConfigError("anchor tau must be in (0.5, 1]");
    if (beam_width < 1) throw ConfigError("anchor beam width must be >= 1");
    if (max_length < 1) throw ConfigError("anchor max length must be >= 1");
    if (n_samples < 1) throw ConfigError("anchor n_samples must be >= 1");
    if (!(z > 0)) throw ConfigError("anchor z must be positive");
}

std::pair<double, double> wilson_interval(std::size_t k, std::size_t n, double z) {
    if (n == 0) throw ExplainError("wilson interval needs at least one trial");
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(k) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double centre = p + z2 / (2.0 * nn);
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
    return {std::max(0.0, (centre - half) / denom), std::min(1.0, (centre + half) / denom)};
}

double rule_coverage(const std::vector<Predicate>& rule, const Matrix& rows) {
    if (rows.rows == 0) throw ExplainError("coverage needs at least one data row");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < rows.rows; ++i) {
        auto r = rows.row(i);
        if (std::all_of(rule.begin(), rule.end(), [&](const Predicate& p) { return p.holds(r); })) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(rows.rows);
}

namespace {

void check_data(const AnchorData& data) {
    if (data.rows.rows == 0) throw ExplainError("anchor data is empty");
    if (data.names.size() != data.rows.cols || data.kinds.size() != data.rows.cols) {
        throw ShapeError("anchor data names/kinds do not match its width");
    }
}

struct Counts {
    std::size_t hits = 0;
    std::size_t n = 0;
};

// Per-feature pools of values the rule allows.
std::vector<std::vector<double>> restricted_pools(const std::vector<Predicate>& rule, const AnchorData& data,
                                                  std::span<const double> row) {
    std::vector<std::vector<double>> pools(data.rows.cols);
    for (std::size_t j = 0; j < data.rows.cols; ++j) {
        std::vector<const Predicate*> on_j;
        for (const auto& p : rule) {
            if (p.feature >= data.rows.cols) throw ShapeError("predicate feature index outside the data");
            if (p.feature == j) on_j.push_back(&p);
        }
        auto& pool = pools[j];
        pool.reserve(data.rows.rows);
        for (std::size_t i = 0; i < data.rows.rows; ++i) {
            const double v = data.rows(i, j);
            if (std::all_of(on_j.begin(), on_j.end(), [v](const Predicate* p) { return p->holds(v); })) {
                pool.push_back(v);
            }
        }
        if (pool.empty() && !row.empty() &&
            std::all_of(on_j.begin(), on_j.end(), [&](const Predicate* p) { return p->holds(row[j]); })) {
            pool.push_back(row[j]);
        }
        if (pool.empty()) {
            throw ExplainError("undefined precision: no value of '" + data.names[j] + "' satisfies the rule");
        }
    }
    return pools;
}

Counts sample_counts(const std::vector<Predicate>& rule, int target, const ClassFn& model, const AnchorData& data,
                     std::span<const double> row, std::size_t n_samples, std::uint64_t seed) {
    const auto pools = restricted_pools(rule, data, row);
    Rng rng(seed);
    std::vector<double> z(data.rows.cols);
    Counts c;
    for (std::size_t s = 0; s < n_samples; ++s) {
        for (std::size_t j = 0; j < z.size(); ++j) z[j] = pools[j][rng.below(pools[j].size())];
        if (model(z) == target) ++c.hits;
        ++c.n;
    }
    return c;
}

PrecisionEstimate finish(const Counts& c, double coverage, double z) {
    if (c.n == 0) throw ExplainError("undefined precision: no perturbation satisfies the rule");
    PrecisionEstimate e;
    e.precision = static_cast<double>(c.hits) / static_cast<double>(c.n);
    std::tie(e.lower, e.upper) = wilson_interval(c.hits, c.n, z);
    e.coverage = coverage;
    e.n_samples = c.n;
    return e;
}

}  // namespace

PrecisionEstimate estimate_precision_coverage(const std::vector<Predicate>& rule, int target_class,
                                              const ClassFn& model, const AnchorData& data, std::size_t n_samples,
                                              std::uint64_t seed, double z) {
    check_data(data);
    const auto counts = sample_counts(rule, target_class, model, data, {}, n_samples, seed);
    return finish(counts, rule_coverage(rule, data.rows), z);
}

std::vector<Predicate> candidate_predicates(std::span<const double> row, const AnchorData& data) {
    check_data(data);
    if (row.size() != data.rows.cols) throw ShapeError("row width does not match anchor data");
    std::vector<Predicate> out;
    std::vector<double> col(data.rows.rows);
    for (std::size_t j = 0; j < data.rows.cols; ++j) {
        if (data.kinds[j] == FeatureKind::categorical) {
            out.push_back({j, data.names[j], PredicateOp::eq, row[j]});
            continue;
        }
        for (std::size_t i = 0; i < data.rows.rows; ++i) col[i] = data.rows(i, j);
        std::sort(col.begin(), col.end());
        std::set<double> thresholds{row[j]};
        for (double q : {0.25, 0.5, 0.75}) {
            thresholds.insert(col[static_cast<std::size_t>(std::floor(q * static_cast<double>(col.size() - 1)))]);
        }
        for (double t : thresholds) {
            Predicate p{j, data.names[j], row[j] <= t ? PredicateOp::le : PredicateOp::gt, t};
            if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(std::move(p));
        }
    }
    return out;
}

namespace {

struct Scored {
    AnchorRule rule;
    std::uint64_t seed = 0;
};

void evaluate_all(std::vector<Scored>& level, const ClassFn& model, std::span<const double> row,
                  const AnchorData& data, const AnchorConfig& cfg) {
    parallel_for(level.size(), [&](std::size_t i) {
        auto& r = level[i].rule;
        const auto counts = sample_counts(r.predicates, r.predicted_class, model, data, row, cfg.n_samples, level[i].seed);
        const auto est = finish(counts, rule_coverage(r.predicates, data.rows), cfg.z);
        r.precision = est.precision;
        r.precision_lower = est.lower;
        r.precision_upper = est.upper;
        r.coverage = est.coverage;
        r.n_samples = est.n_samples;
    });
}

// Confirms a passing rule on a fresh batch; the reported estimate pools both batches.
bool confirm(AnchorRule& r, std::uint64_t seed, const ClassFn& model, std::span<const double> row,
             const AnchorData& data, const AnchorConfig& cfg) {
    Counts first;
    first.n = r.n_samples;
    first.hits = static_cast<std::size_t>(std::llround(r.precision * static_cast<double>(r.n_samples)));
    const auto second = sample_counts(r.predicates, r.predicted_class, model, data, row, cfg.n_samples,
                                      derive_seed(seed, {0x636f6e66ULL}));
    Counts pooled{first.hits + second.hits, first.n + second.n};
    const auto est = finish(pooled, r.coverage, cfg.z);
    r.precision = est.precision;
    r.precision_lower = est.lower;
    r.precision_upper = est.upper;
    r.n_samples = est.n_samples;
    return est.lower >= cfg.tau;
}

bool better_best(const AnchorRule& a, const AnchorRule& b) {
    if (a.precision_lower != b.precision_lower) return a.precision_lower > b.precision_lower;
    if (a.predicates.size() != b.predicates.size()) return a.predicates.size() < b.predicates.size();
    if (a.coverage != b.coverage) return a.coverage > b.coverage;
    return a.key() < b.key();
}

}  // namespace

AnchorRule find_anchor(const ClassFn& model, std::span<const double> row, const AnchorData& data,
                       const AnchorConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    check_data(data);
    if (row.size() != data.rows.cols) throw ShapeError("row width does not match anchor data");
    const int target = model(row);
    const auto candidates = candidate_predicates(row, data);
    auto seed_for = [seed](const std::string& key) { return derive_seed(seed, {fnv1a(key)}); };

    std::vector<Scored> level{{AnchorRule{}, seed_for("")}};
    level[0].rule.predicted_class = target;
    evaluate_all(level, model, row, data, cfg);
    AnchorRule best = level[0].rule;
    if (best.precision_lower >= cfg.tau && confirm(level[0].rule, level[0].seed, model, row, data, cfg)) {
        level[0].rule.anchored = true;
        return level[0].rule;
    }

    std::vector<AnchorRule> beam{level[0].rule};
    for (std::size_t length = 1; length <= cfg.max_length; ++length) {
        std::set<std::string> seen;
        level.clear();
        for (const auto& base : beam) {
            for (const auto& cand : candidates) {
                if (std::any_of(base.predicates.begin(), base.predicates.end(),
                                [&](const Predicate& p) { return p.feature == cand.feature; })) {
                    continue;
                }
                AnchorRule r;
                r.predicted_class = target;
                r.predicates = base.predicates;
                r.predicates.push_back(cand);
                std::sort(r.predicates.begin(), r.predicates.end(),
                          [](const Predicate& a, const Predicate& b) { return a.feature < b.feature; });
                auto key = r.key();
                if (!seen.insert(key).second) continue;
                level.push_back({std::move(r), seed_for(key)});
            }
        }
        if (level.empty()) break;
        evaluate_all(level, model, row, data, cfg);

        std::vector<std::size_t> order(level.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        // Passing rules: highest coverage first, then canonical text.
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const auto& ra = level[a].rule;
            const auto& rb = level[b].rule;
            if (ra.coverage != rb.coverage) return ra.coverage > rb.coverage;
            return ra.key() < rb.key();
        });
        for (auto i : order) {
            if (level[i].rule.precision_lower < cfg.tau) continue;
            AnchorRule r = level[i].rule;
            if (confirm(r, level[i].seed, model, row, data, cfg)) {
                r.anchored = true;
                return r;
            }
        }
        for (const auto& s : level) {
            if (better_best(s.rule, best)) best = s.rule;
        }

        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const auto& ra = level[a].rule;
            const auto& rb = level[b].rule;
            if (ra.precision != rb.precision) return ra.precision > rb.precision;
            if (ra.coverage != rb.coverage) return ra.coverage > rb.coverage;
            return ra.key() < rb.key();
        });
        beam.clear();
        for (std::size_t i = 0; i < order.size() && beam.size() < cfg.beam_width; ++i) beam.push_back(level[order[i]].rule);
    }
    best.anchored = false;
    return best;
}

std::string render_rule(const AnchorRule& rule, const ValueFormatter& fmt) {
    std::string out;
    for (const auto& p : rule.predicates) {
        out += p.name + " " + std::string(op_symbol(p.op)) + " " + (fmt ? fmt(p) : format_double(p.value)) + "\n";
    }
    return out;
}

json anchor_to_json(const AnchorRule& rule, std::span<const double> row, const ValueFormatter& fmt,
                    const std::function<std::string(std::size_t)>& actual) {
    json preds = json::array();
    for (const auto& p : rule.predicates) {
        json jp{{"feature", p.name},
                {"op", op_symbol(p.op)},
                {"value", p.value},
                {"condition", p.name + " " + std::string(op_symbol(p.op)) + " " + (fmt ? fmt(p) : format_double(p.value))}};
        if (!row.empty() && p.feature < row.size()) {
            jp["actual"] = actual ? actual(p.feature) : format_double(row[p.feature]);
        }
        preds.push_back(std::move(jp));
    }
    return json{{"predicates", preds},
                {"precision", rule.precision},
                {"precision_lower", rule.precision_lower},
                {"precision_upper", rule.precision_upper},
                {"coverage", rule.coverage},
                {"n_samples", rule.n_samples},
                {"predicted_class", rule.predicted_class == 1 ? "completed" : "non_completed"},
                {"anchored", rule.anchored}};
}

}  // namespace prescriptive
