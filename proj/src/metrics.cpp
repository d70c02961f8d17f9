#include "prescriptive/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "prescriptive/errors.hpp"
#include "prescriptive/random.hpp"
#include "prescriptive/util.hpp"

namespace prescriptive {

using nlohmann::json;

double roc_auc(std::span<const int> labels, std::span<const double> scores) {
    if (labels.size() != scores.size()) throw ShapeError("labels and scores differ in length");
    std::vector<std::size_t> idx(labels.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double rank_sum_pos = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t t = i; t < j; ++t) {
            if (labels[idx[t]] == 1) {
                rank_sum_pos += avg_rank;
                ++n_pos;
            }
        }
        i = j;
    }
    const std::size_t n_neg = labels.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) throw MetricError("AUC is undefined when the test set holds a single class");
    const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

double f1_from(double precision, double recall) {
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

FoldScores score_fold(std::span<const int> labels, std::span<const int> predicted, std::span<const double> scores) {
    if (labels.empty()) throw MetricError("empty test set");
    if (labels.size() != predicted.size()) throw ShapeError("labels and predictions differ in length");
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (predicted[i] == 1) (labels[i] == 1 ? tp : fp)++;
        else (labels[i] == 1 ? fn : tn)++;
    }
    FoldScores s;
    const double precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    s.precision = 100.0 * precision;
    s.recall = 100.0 * recall;
    s.f1 = 100.0 * f1_from(precision, recall);
    s.accuracy = 100.0 * static_cast<double>(tp + tn) / static_cast<double>(labels.size());
    try {
        s.auc = 100.0 * roc_auc(labels, scores);
    } catch (const MetricError& e) {
        s.auc_error = e.what();
    }
    return s;
}

namespace {

MetricSummary summary_of(const std::vector<double>& v) {
    MetricSummary m;
    if (v.empty()) return m;
    m.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - m.mean) * (x - m.mean);
    m.std = std::sqrt(ss / static_cast<double>(v.size()));
    return m;
}

json summary_json(const MetricSummary& s) { return json{{"mean", s.mean}, {"std", s.std}}; }

}  // namespace

Metrics summarize(std::vector<FoldScores> folds) {
    Metrics m;
    std::vector<double> f1, acc, auc, rec, prec;
    for (const auto& f : folds) {
        f1.push_back(f.f1);
        acc.push_back(f.accuracy);
        if (f.auc) auc.push_back(*f.auc);
        rec.push_back(f.recall);
        prec.push_back(f.precision);
    }
    m.f1 = summary_of(f1);
    m.accuracy = summary_of(acc);
    m.auc = summary_of(auc);
    m.recall = summary_of(rec);
    m.precision = summary_of(prec);
    m.folds = std::move(folds);
    return m;
}

json Metrics::to_json() const {
    json folds_json = json::array();
    for (const auto& f : folds) {
        json j{{"f1", f.f1}, {"accuracy", f.accuracy}, {"recall", f.recall}, {"precision", f.precision}};
        if (f.auc) j["auc"] = *f.auc;
        else j["auc_error"] = f.auc_error;
        folds_json.push_back(j);
    }
    return json{{"f1", summary_json(f1)},         {"accuracy", summary_json(accuracy)},
                {"auc", summary_json(auc)},       {"recall", summary_json(recall)},
                {"precision", summary_json(precision)}, {"folds", folds_json}};
}

std::vector<int> BaselineModel::predict(std::size_t n, std::uint64_t stream) const {
    std::vector<int> out(n, majority);
    if (kind == BaselineKind::stratified) {
        Rng rng(derive_seed(seed, {stream, 0x7374726174ULL}));
        for (auto& y : out) y = rng.bernoulli(prevalence) ? 1 : 0;
    }
    return out;
}

BaselineModel train_baseline(BaselineKind kind, std::span<const int> labels, std::uint64_t seed) {
    BaselineModel m;
    m.kind = kind;
    m.seed = seed;
    std::size_t pos = 0;
    for (int y : labels) pos += y == 1 ? 1 : 0;
    m.prevalence = labels.empty() ? 0.0 : static_cast<double>(pos) / static_cast<double>(labels.size());
    m.majority = 2 * pos >= labels.size() ? 1 : 0;
    return m;
}

Metrics evaluate(const TreeEnsemble& m, const Matrix& X, std::span<const int> labels) {
    const auto proba = m.predict_proba(X);
    std::vector<int> pred(proba.size());
    for (std::size_t i = 0; i < proba.size(); ++i) pred[i] = proba[i] >= 0.5 ? 1 : 0;
    return summarize({score_fold(labels, pred, proba)});
}

Metrics evaluate(const BaselineModel& m, std::span<const int> labels, std::uint64_t stream) {
    const auto pred = m.predict(labels.size(), stream);
    std::vector<double> scores(pred.begin(), pred.end());
    return summarize({score_fold(labels, pred, scores)});
}

namespace {

std::vector<int> take(const std::vector<int>& v, const std::vector<std::size_t>& idx) {
    std::vector<int> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(v[i]);
    return out;
}

}  // namespace

Metrics cross_validate(const EncodedMatrix& data, const std::vector<Fold>& folds, const Hyperparams& hp,
                       std::uint64_t seed) {
    std::vector<FoldScores> scores(folds.size());
    parallel_for(folds.size(), [&](std::size_t f) {
        const auto& fold = folds[f];
        const auto Xtr = data.X.select_rows(fold.train);
        const auto ytr = take(data.labels, fold.train);
        const auto model = train_gbm(Xtr, ytr, hp, derive_seed(seed, {f}), data.encoding);
        const auto Xte = data.X.select_rows(fold.test);
        const auto yte = take(data.labels, fold.test);
        scores[f] = evaluate(model, Xte, yte).folds.front();
    });
    return summarize(std::move(scores));
}

Metrics cross_validate_baseline(const EncodedMatrix& data, const std::vector<Fold>& folds, BaselineKind kind,
                                std::uint64_t seed) {
    std::vector<FoldScores> scores;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        const auto ytr = take(data.labels, folds[f].train);
        const auto yte = take(data.labels, folds[f].test);
        const auto model = train_baseline(kind, ytr, derive_seed(seed, {f}));
        scores.push_back(evaluate(model, yte).folds.front());
    }
    return summarize(std::move(scores));
}

}  // namespace prescriptive
