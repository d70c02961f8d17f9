#include "prescriptive/counterfactual.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "prescriptive/gbm.hpp"
#include "prescriptive/random.hpp"
#include "prescriptive/util.hpp"

namespace prescriptive {

using nlohmann::json;

std::vector<double> CfFeature::grid() const {
    std::vector<double> g;
    if (kind == FeatureKind::categorical) {
        for (std::size_t i = 0; i < n_categories; ++i) {
            if (static_cast<long>(i) != missing_category) g.push_back(static_cast<double>(i));
        }
        return g;
    }
    if (!(step > 0)) throw ConfigError("grid step for '" + name + "' must be positive");
    for (std::size_t i = 0;; ++i) {
        const double v = lo + static_cast<double>(i) * step;
        if (v > hi + 1e-9 * std::max(1.0, std::abs(hi))) break;
        g.push_back(v);
    }
    return g;
}

double CfFeature::scale() const {
    if (kind == FeatureKind::categorical) return 1.0;
    return hi > lo ? hi - lo : 1.0;
}

std::vector<CfFeature> cf_space(const FeatureSchema& schema, const std::vector<std::string>& feature_names) {
    std::vector<CfFeature> out;
    for (const auto& name : feature_names) {
        const auto& spec = schema.at(name);
        CfFeature f;
        f.name = name;
        f.kind = spec.kind;
        if (spec.is_categorical()) {
            f.n_categories = spec.categories.size();
            if (auto m = spec.category_index(kMissingCategory)) f.missing_category = static_cast<long>(*m);
            f.lo = 0;
            f.hi = static_cast<double>(f.n_categories) - 1;
            f.step = 1;
        } else if (spec.engineered) {
            f.lo = -kZGridBound;
            f.hi = kZGridBound;
            f.step = spec.step > 0 ? spec.step : kZGridStep;
        } else {
            f.lo = spec.lo;
            f.hi = spec.hi;
            if (spec.step > 0) {
                f.step = spec.step;
            } else if (spec.unit == Unit::none || spec.unit == Unit::grade || spec.unit == Unit::percent) {
                f.step = (spec.hi - spec.lo) / 24.0;
            } else {
                f.step = 1.0;
            }
        }
        out.push_back(std::move(f));
    }
    return out;
}

namespace {

const CfFeature* find_feature(const std::vector<CfFeature>& space, const std::string& name) {
    for (const auto& f : space) {
        if (f.name == name) return &f;
    }
    return nullptr;
}

std::string_view monotone_name(Monotone m) {
    switch (m) {
        case Monotone::increase_only: return "increase_only";
        case Monotone::decrease_only: return "decrease_only";
        case Monotone::any: break;
    }
    return "any";
}

Monotone monotone_from(std::string_view s) {
    if (s == "increase_only" || s == "increase") return Monotone::increase_only;
    if (s == "decrease_only" || s == "decrease") return Monotone::decrease_only;
    if (s == "any") return Monotone::any;
    throw ConfigError("unknown monotone hint '" + std::string(s) + "'");
}

bool monotone_ok(Monotone m, double from, double to) {
    if (m == Monotone::increase_only) return to >= from;
    if (m == Monotone::decrease_only) return to <= from;
    return true;
}

}  // namespace

void CfConstraints::validate(const std::vector<CfFeature>& space) const {
    for (const auto& a : actionable) {
        if (frozen.count(a)) throw ConfigError("feature '" + a + "' is both actionable and frozen");
        if (!find_feature(space, a)) throw ConfigError("actionable feature '" + a + "' is not in the model");
    }
    for (const auto& [name, r] : ranges) {
        const auto* f = find_feature(space, name);
        if (!f) throw ConfigError("range given for unknown feature '" + name + "'");
        if (r.first > r.second) throw ConfigError("range for '" + name + "' has lo > hi");
        if (f->kind == FeatureKind::numeric && (r.first < f->lo - 1e-9 || r.second > f->hi + 1e-9)) {
            throw ConfigError("range for '" + name + "' widens its valid range");
        }
    }
    for (const auto& [name, m] : monotone) {
        if (!find_feature(space, name)) throw ConfigError("monotone hint for unknown feature '" + name + "'");
    }
}

json CfConstraints::to_json() const {
    json r = json::object();
    for (const auto& [name, lohi] : ranges) r[name] = {lohi.first, lohi.second};
    json m = json::object();
    for (const auto& [name, hint] : monotone) m[name] = monotone_name(hint);
    return json{{"actionable", actionable}, {"frozen", frozen}, {"ranges", r}, {"max_changed", max_changed}, {"monotone", m}};
}

CfConstraints CfConstraints::from_json(const json& j) {
    CfConstraints c;
    try {
        if (j.contains("actionable")) c.actionable = j["actionable"].get<std::set<std::string>>();
        if (j.contains("frozen")) c.frozen = j["frozen"].get<std::set<std::string>>();
        if (j.contains("max_changed")) c.max_changed = j["max_changed"].get<std::size_t>();
        if (j.contains("ranges")) {
            for (const auto& [name, v] : j["ranges"].items()) c.ranges[name] = {v.at(0).get<double>(), v.at(1).get<double>()};
        }
        if (j.contains("monotone")) {
            for (const auto& [name, v] : j["monotone"].items()) c.monotone[name] = monotone_from(v.get<std::string>());
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed constraints: ") + e.what());
    }
    return c;
}

CfConstraints default_constraints(const FeatureSchema& schema, const std::vector<std::string>& feature_names) {
    CfConstraints c;
    for (const auto& name : feature_names) {
        const auto& spec = schema.at(name);
        if (!spec.is_mutable) {
            c.frozen.insert(name);
        } else if (spec.prescriptive_feedback) {
            c.actionable.insert(name);
        }
    }
    return c;
}

json CfWeights::to_json() const {
    return json{{"validity", validity}, {"proximity", proximity}, {"sparsity", sparsity}, {"diversity", diversity}};
}

CfWeights CfWeights::from_json(const json& j) {
    CfWeights w;
    w.validity = j.value("validity", w.validity);
    w.proximity = j.value("proximity", w.proximity);
    w.sparsity = j.value("sparsity", w.sparsity);
    w.diversity = j.value("diversity", w.diversity);
    return w;
}

json GaConfig::to_json() const {
    return json{{"population", population},
                {"generations", generations},
                {"elitism", elitism},
                {"mutation_rate", mutation_rate},
                {"decision_threshold", decision_threshold}};
}

GaConfig GaConfig::from_json(const json& j) {
    GaConfig g;
    g.population = j.value("population", g.population);
    g.generations = j.value("generations", g.generations);
    g.elitism = j.value("elitism", g.elitism);
    g.mutation_rate = j.value("mutation_rate", g.mutation_rate);
    g.decision_threshold = j.value("decision_threshold", g.decision_threshold);
    if (g.population < 2) throw ConfigError("population must be >= 2");
    if (!(g.elitism >= 0 && g.elitism < 1)) throw ConfigError("elitism must be in [0, 1)");
    if (!(g.decision_threshold > 0 && g.decision_threshold < 1)) throw ConfigError("decision threshold must be in (0, 1)");
    return g;
}

double candidate_distance(std::span<const double> a, std::span<const double> b, const std::vector<CfFeature>& space) {
    if (a.size() != space.size() || b.size() != space.size()) throw ShapeError("candidate width does not match the space");
    double d = 0.0;
    for (std::size_t j = 0; j < space.size(); ++j) {
        if (a[j] == b[j]) continue;
        d += space[j].kind == FeatureKind::categorical ? 1.0 : std::abs(a[j] - b[j]) / space[j].scale();
    }
    return d;
}

CfScores score_candidate(const MarginFn& model, std::span<const double> row, std::span<const double> candidate,
                         const CfConstraints& c, const std::vector<CfFeature>& space, const CfWeights& w,
                         const std::vector<std::vector<double>>& others, double threshold) {
    if (row.size() != space.size() || candidate.size() != space.size()) {
        throw ShapeError("candidate width does not match the space");
    }
    CfScores s;
    for (std::size_t j = 0; j < space.size(); ++j) {
        if (candidate[j] == row[j]) continue;
        const auto& name = space[j].name;
        if (c.frozen.count(name)) throw ConstraintViolation("candidate modifies frozen feature '" + name + "'");
        if (auto it = c.ranges.find(name); it != c.ranges.end()) {
            if (candidate[j] < it->second.first - 1e-12 || candidate[j] > it->second.second + 1e-12) {
                throw ConstraintViolation("candidate moves '" + name + "' outside its range");
            }
        }
        ++s.sparsity;
    }
    const double margin = model(candidate);
    s.validity = sigmoid(margin) >= threshold;
    s.hinge = std::max(0.0, logit(threshold) - margin);
    s.proximity = candidate_distance(row, candidate, space);
    if (!others.empty()) {
        double total = 0.0;
        for (const auto& o : others) total += candidate_distance(candidate, o, space);
        s.diversity = total / static_cast<double>(others.size());
    }
    s.total = w.validity * s.hinge + w.proximity * s.proximity + w.sparsity * static_cast<double>(s.sparsity) -
              w.diversity * s.diversity;
    return s;
}

namespace {

using Genome = std::vector<int>;  // -1 = keep, otherwise index into the gene's allowed values

struct Gene {
    std::size_t feature;
    std::vector<double> allowed;
};

struct Evaluated {
    double margin = 0.0;
    double loss = 0.0;  // diversity-free loss
};

class Search {
public:
    Search(const MarginFn& model, std::span<const double> row, const CfConstraints& c,
           const std::vector<CfFeature>& space, const CfWeights& w, const GaConfig& ga)
        : model_(model), row_(row.begin(), row.end()), c_(c), space_(space), w_(w), ga_(ga) {
        for (std::size_t j = 0; j < space.size(); ++j) {
            const auto& f = space[j];
            if (!c.actionable.count(f.name) || c.frozen.count(f.name)) continue;
            Gene g{j, {}};
            auto range = c.ranges.find(f.name);
            auto mono = c.monotone.find(f.name);
            for (double v : f.grid()) {
                if (v == row_[j]) continue;
                if (range != c.ranges.end() && (v < range->second.first - 1e-12 || v > range->second.second + 1e-12)) {
                    continue;
                }
                if (mono != c.monotone.end() && !monotone_ok(mono->second, row_[j], v)) continue;
                g.allowed.push_back(v);
            }
            if (!g.allowed.empty()) genes_.push_back(std::move(g));
        }
    }

    const std::vector<Gene>& genes() const { return genes_; }

    std::vector<double> materialise(const Genome& g) const {
        std::vector<double> r = row_;
        for (std::size_t i = 0; i < genes_.size(); ++i) {
            if (g[i] >= 0) r[genes_[i].feature] = genes_[i].allowed[static_cast<std::size_t>(g[i])];
        }
        return r;
    }

    static std::size_t changed(const Genome& g) {
        return static_cast<std::size_t>(std::count_if(g.begin(), g.end(), [](int v) { return v >= 0; }));
    }

    void evaluate(const std::vector<Genome>& pop) {
        std::vector<Genome> fresh;
        for (const auto& g : pop) {
            if (!archive_.count(g) && std::find(fresh.begin(), fresh.end(), g) == fresh.end()) fresh.push_back(g);
        }
        std::vector<double> margins(fresh.size());
        parallel_for(fresh.size(), [&](std::size_t i) { margins[i] = model_(materialise(fresh[i])); });
        for (std::size_t i = 0; i < fresh.size(); ++i) {
            const auto r = materialise(fresh[i]);
            Evaluated e;
            e.margin = margins[i];
            e.loss = w_.validity * std::max(0.0, logit(ga_.decision_threshold) - e.margin) +
                     w_.proximity * candidate_distance(row_, r, space_) +
                     w_.sparsity * static_cast<double>(changed(fresh[i]));
            archive_.emplace(fresh[i], e);
        }
    }

    const Evaluated& at(const Genome& g) const { return archive_.at(g); }
    const std::map<Genome, Evaluated>& archive() const { return archive_; }

    void repair(Genome& g, Rng& rng) const {
        std::vector<std::size_t> on;
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (g[i] >= 0) on.push_back(i);
        }
        while (on.size() > c_.max_changed) {
            const std::size_t k = rng.below(on.size());
            g[on[k]] = -1;
            on.erase(on.begin() + static_cast<std::ptrdiff_t>(k));
        }
        if (on.empty()) randomise_gene(g, rng.below(g.size()), rng);
    }

    void randomise_gene(Genome& g, std::size_t i, Rng& rng) const {
        g[i] = static_cast<int>(rng.below(genes_[i].allowed.size()));
    }

private:
    const MarginFn& model_;
    std::vector<double> row_;
    const CfConstraints& c_;
    const std::vector<CfFeature>& space_;
    const CfWeights& w_;
    const GaConfig& ga_;
    std::vector<Gene> genes_;
    std::map<Genome, Evaluated> archive_;
};

Counterfactual make_cf(const MarginFn& model, std::span<const double> row, const std::vector<double>& candidate,
                       const CfConstraints& c, const std::vector<CfFeature>& space, const CfWeights& w,
                       const std::vector<std::vector<double>>& others, double threshold) {
    Counterfactual cf;
    cf.row = candidate;
    for (std::size_t j = 0; j < space.size(); ++j) {
        if (candidate[j] != row[j]) cf.deltas.push_back({j, space[j].name, row[j], candidate[j]});
    }
    cf.scores = score_candidate(model, row, candidate, c, space, w, others, threshold);
    cf.prob_after = sigmoid(model(candidate));
    cf.feasible = cf.deltas.size() <= c.max_changed;
    return cf;
}

}  // namespace

std::vector<Counterfactual> generate_counterfactuals(const MarginFn& model, std::span<const double> row, std::size_t k,
                                                     const CfConstraints& c, const std::vector<CfFeature>& space,
                                                     const CfWeights& w, const GaConfig& ga, std::uint64_t seed) {
    if (row.size() != space.size()) throw ShapeError("row width does not match the counterfactual space");
    if (k < 1) throw ConfigError("k must be >= 1");
    if (ga.population < 2) throw ConfigError("population must be >= 2");
    c.validate(space);
    if (sigmoid(model(row)) >= ga.decision_threshold) {
        throw ExplainError("row is already predicted to complete; nothing to counter");
    }

    Search search(model, row, c, space, w, ga);
    const auto& genes = search.genes();
    if (genes.empty() || c.max_changed == 0) {
        throw NoFeasiblePathway("no feasible pathway: no actionable feature can change under the constraints",
                                std::nullopt);
    }
    const std::size_t n_genes = genes.size();
    Rng rng(derive_seed(seed, {0x6366ULL}));

    std::vector<Genome> pop;
    for (std::size_t i = 0; i < ga.population; ++i) {
        Genome g(n_genes, -1);
        const std::size_t n_change = 1 + rng.below(std::min(c.max_changed, n_genes));
        std::vector<std::size_t> idx(n_genes);
        for (std::size_t j = 0; j < n_genes; ++j) idx[j] = j;
        for (std::size_t j = 0; j < n_change; ++j) {
            std::swap(idx[j], idx[j + rng.below(n_genes - j)]);
            search.randomise_gene(g, idx[j], rng);
        }
        pop.push_back(std::move(g));
    }
    search.evaluate(pop);

    auto by_loss = [&search](const Genome& a, const Genome& b) {
        const double la = search.at(a).loss, lb = search.at(b).loss;
        if (la != lb) return la < lb;
        return a < b;
    };
    const auto n_elite = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(ga.elitism * static_cast<double>(ga.population))));

    for (std::size_t gen = 0; gen < ga.generations; ++gen) {
        std::sort(pop.begin(), pop.end(), by_loss);
        std::vector<Genome> next;
        for (const auto& g : pop) {
            if (next.size() >= n_elite) break;
            if (std::find(next.begin(), next.end(), g) == next.end()) next.push_back(g);
        }
        auto tournament = [&]() -> const Genome& {
            const auto& a = pop[rng.below(pop.size())];
            const auto& b = pop[rng.below(pop.size())];
            return by_loss(a, b) ? a : b;
        };
        while (next.size() < ga.population) {
            const Genome& pa = tournament();
            const Genome& pb = tournament();
            Genome child(n_genes);
            for (std::size_t i = 0; i < n_genes; ++i) child[i] = rng.bernoulli(0.5) ? pa[i] : pb[i];
            if (rng.bernoulli(ga.mutation_rate)) {
                const std::size_t i = rng.below(n_genes);
                if (child[i] >= 0 && rng.bernoulli(0.3)) {
                    child[i] = -1;
                } else {
                    search.randomise_gene(child, i, rng);
                }
            }
            search.repair(child, rng);
            next.push_back(std::move(child));
        }
        pop = std::move(next);
        search.evaluate(pop);
    }

    std::vector<const Genome*> valid;
    const Genome* best_invalid = nullptr;
    for (const auto& [g, e] : search.archive()) {
        if (Search::changed(g) > c.max_changed) continue;
        if (sigmoid(e.margin) >= ga.decision_threshold) {
            valid.push_back(&g);
        } else if (!best_invalid || by_loss(g, *best_invalid)) {
            best_invalid = &g;
        }
    }
    if (valid.empty()) {
        std::optional<Counterfactual> diag;
        if (best_invalid) {
            diag = make_cf(model, row, search.materialise(*best_invalid), c, space, w, {}, ga.decision_threshold);
        }
        throw NoFeasiblePathway("no feasible pathway: no candidate reached the completion threshold after " +
                                    std::to_string(ga.generations) + " generations",
                                std::move(diag));
    }
    std::sort(valid.begin(), valid.end(), [&](const Genome* a, const Genome* b) { return by_loss(*a, *b); });

    // Greedy selection: loss minus the diversity bonus against already chosen pathways.
    std::vector<std::vector<double>> chosen_rows;
    std::vector<std::size_t> chosen;
    std::vector<char> used(valid.size(), 0);
    while (chosen.size() < k && chosen.size() < valid.size()) {
        std::size_t pick = valid.size();
        double pick_score = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < valid.size(); ++i) {
            if (used[i]) continue;
            double score = search.at(*valid[i]).loss;
            if (!chosen_rows.empty()) {
                const auto r = search.materialise(*valid[i]);
                double d = 0.0;
                for (const auto& o : chosen_rows) d += candidate_distance(r, o, space);
                score -= w.diversity * d / static_cast<double>(chosen_rows.size());
            }
            if (score < pick_score) {
                pick_score = score;
                pick = i;
            }
        }
        used[pick] = 1;
        chosen.push_back(pick);
        chosen_rows.push_back(search.materialise(*valid[pick]));
    }

    std::vector<Counterfactual> out;
    for (std::size_t i = 0; i < chosen_rows.size(); ++i) {
        std::vector<std::vector<double>> others;
        for (std::size_t o = 0; o < chosen_rows.size(); ++o) {
            if (o != i) others.push_back(chosen_rows[o]);
        }
        out.push_back(make_cf(model, row, chosen_rows[i], c, space, w, others, ga.decision_threshold));
    }
    return out;
}

std::vector<Counterfactual> filter_feasible(const std::vector<Counterfactual>& cfs, const CfConstraints& c) {
    std::vector<Counterfactual> out;
    for (const auto& cf : cfs) {
        bool ok = cf.deltas.size() <= c.max_changed;
        for (const auto& d : cf.deltas) {
            if (!ok) break;
            if (c.frozen.count(d.name)) ok = false;
            if (!c.actionable.empty() && !c.actionable.count(d.name)) ok = false;
            if (auto it = c.ranges.find(d.name); it != c.ranges.end()) {
                if (d.to < it->second.first - 1e-12 || d.to > it->second.second + 1e-12) ok = false;
            }
            if (auto it = c.monotone.find(d.name); it != c.monotone.end() && !monotone_ok(it->second, d.from, d.to)) {
                ok = false;
            }
        }
        if (ok) out.push_back(cf);
    }
    return out;
}

std::string CfTable::to_csv() const {
    std::string out;
    auto line = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += csv_escape(cells[i]);
        }
        out += '\n';
    };
    line(columns);
    for (const auto& r : rows) line(r);
    return out;
}

json CfTable::to_json() const { return json{{"columns", columns}, {"rows", rows}}; }

CfTable cf_table(std::span<const double> row, const std::vector<Counterfactual>& cfs,
                 const std::vector<CfFeature>& space, const CfFormatter& fmt) {
    auto show = [&](std::size_t j, double v) { return fmt ? fmt(j, v) : format_double(v); };
    CfTable t;
    t.columns = {"feature", "actual"};
    for (std::size_t i = 0; i < cfs.size(); ++i) t.columns.push_back("PF" + std::to_string(i + 1));
    std::vector<char> touched(space.size(), 0);
    for (const auto& cf : cfs) {
        for (const auto& d : cf.deltas) touched.at(d.feature) = 1;
    }
    for (std::size_t j = 0; j < space.size(); ++j) {
        if (!touched[j]) continue;
        std::vector<std::string> r{space[j].name, show(j, row[j])};
        for (const auto& cf : cfs) {
            auto it = std::find_if(cf.deltas.begin(), cf.deltas.end(), [j](const CfDelta& d) { return d.feature == j; });
            r.push_back(it == cf.deltas.end() ? "-" : show(j, it->to));
        }
        t.rows.push_back(std::move(r));
    }
    return t;
}

json counterfactual_to_json(const Counterfactual& cf) {
    json deltas = json::array();
    for (const auto& d : cf.deltas) {
        deltas.push_back({{"feature_index", d.feature}, {"feature", d.name}, {"from", d.from}, {"to", d.to}});
    }
    return json{{"row", cf.row},
                {"deltas", deltas},
                {"prob_after", cf.prob_after},
                {"feasible", cf.feasible},
                {"scores",
                 {{"validity", cf.scores.validity},
                  {"hinge", cf.scores.hinge},
                  {"proximity", cf.scores.proximity},
                  {"sparsity", cf.scores.sparsity},
                  {"diversity", cf.scores.diversity},
                  {"total", cf.scores.total}}}};
}

Counterfactual counterfactual_from_json(const json& j) {
    Counterfactual cf;
    try {
        cf.row = j.at("row").get<std::vector<double>>();
        for (const auto& d : j.at("deltas")) {
            cf.deltas.push_back({d.at("feature_index").get<std::size_t>(), d.at("feature").get<std::string>(),
                                 d.at("from").get<double>(), d.at("to").get<double>()});
        }
        cf.prob_after = j.at("prob_after").get<double>();
        cf.feasible = j.value("feasible", true);
        const auto& s = j.at("scores");
        cf.scores.validity = s.at("validity").get<bool>();
        cf.scores.hinge = s.at("hinge").get<double>();
        cf.scores.proximity = s.at("proximity").get<double>();
        cf.scores.sparsity = s.at("sparsity").get<std::size_t>();
        cf.scores.diversity = s.at("diversity").get<double>();
        cf.scores.total = s.at("total").get<double>();
    } catch (const json::exception& e) {
        throw ExplainError(std::string("malformed counterfactual document: ") + e.what());
    }
    return cf;
}

}  // namespace prescriptive
