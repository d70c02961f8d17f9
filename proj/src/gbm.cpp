#include "prescriptive/gbm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <sstream>

#include "prescriptive/errors.hpp"
#include "prescriptive/random.hpp"
#include "prescriptive/util.hpp"

namespace prescriptive {

using nlohmann::json;

namespace {
constexpr std::string_view kModelMagic = "PRESCRIPTIVE-GBM";
constexpr int kModelFormatVersion = 1;
constexpr double kProbFloor = 1e-12;
}  // namespace

double sigmoid(double x) {
    if (x >= 0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

double Tree::predict(std::span<const double> row) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
        const auto& n = nodes[i];
        i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes[i].value;
}

std::size_t Tree::depth() const {
    if (nodes.empty()) return 0;
    std::vector<std::size_t> d(nodes.size(), 0);
    std::size_t best = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        best = std::max(best, d[i]);
        if (!nodes[i].is_leaf()) {
            d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
            d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
        }
    }
    return best;
}

void Hyperparams::validate() const {
    if (n_estimators < 0) throw ConfigError("n_estimators must be >= 0");
    if (max_depth < 1) throw ConfigError("max_depth must be >= 1");
    if (!(learning_rate > 0)) throw ConfigError("learning_rate must be > 0");
    if (!(subsample > 0 && subsample <= 1)) throw ConfigError("subsample must lie in (0, 1]");
    if (!(min_samples_leaf > 0)) throw ConfigError("min_samples_leaf must be > 0");
    if (!(min_samples_split > 0)) throw ConfigError("min_samples_split must be > 0");
}

json Hyperparams::to_json() const {
    return json{{"n_estimators", n_estimators},         {"max_depth", max_depth},
                {"learning_rate", learning_rate},       {"subsample", subsample},
                {"min_samples_leaf", min_samples_leaf}, {"min_samples_split", min_samples_split}};
}

Hyperparams Hyperparams::from_json(const json& j) {
    Hyperparams hp;
    hp.n_estimators = j.value("n_estimators", hp.n_estimators);
    hp.max_depth = j.value("max_depth", hp.max_depth);
    hp.learning_rate = j.value("learning_rate", hp.learning_rate);
    hp.subsample = j.value("subsample", hp.subsample);
    hp.min_samples_leaf = j.value("min_samples_leaf", hp.min_samples_leaf);
    hp.min_samples_split = j.value("min_samples_split", hp.min_samples_split);
    hp.validate();
    return hp;
}

std::string Hyperparams::to_string() const {
    std::ostringstream s;
    s << "n_estimators=" << n_estimators << ", max_depth=" << max_depth
      << ", learning_rate=" << format_double(learning_rate) << ", subsample=" << format_double(subsample)
      << ", min_samples_leaf=" << format_double(min_samples_leaf)
      << ", min_samples_split=" << format_double(min_samples_split);
    return s.str();
}

double TreeEnsemble::margin(std::span<const double> encoded_row) const {
    if (encoded_row.size() != width()) {
        throw ShapeError("row width " + std::to_string(encoded_row.size()) + " does not match model width " +
                         std::to_string(width()));
    }
    double sum = 0.0;
    for (const auto& t : trees) sum += t.predict(encoded_row);
    return base_score + learning_rate * sum;
}

double TreeEnsemble::predict_proba(std::span<const double> encoded_row) const {
    return std::clamp(sigmoid(margin(encoded_row)), kProbFloor, 1.0 - kProbFloor);
}

std::vector<double> TreeEnsemble::predict_proba(const Matrix& encoded_rows) const {
    std::vector<double> out(encoded_rows.rows);
    for (std::size_t i = 0; i < encoded_rows.rows; ++i) out[i] = predict_proba(encoded_rows.row(i));
    return out;
}

double TreeEnsemble::margin_features(std::span<const double> feature_row) const {
    return margin(encoding.encode_row(feature_row));
}

double TreeEnsemble::proba_features(std::span<const double> feature_row) const {
    return std::clamp(sigmoid(margin_features(feature_row)), kProbFloor, 1.0 - kProbFloor);
}

namespace {

std::size_t resolve_min(double v, std::size_t n) {
    if (v < 1.0) return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(v * static_cast<double>(n))));
    return static_cast<std::size_t>(v);
}

constexpr std::uint32_t kNoNode = std::numeric_limits<std::uint32_t>::max();

// Level-wise exact greedy growth over presorted columns. Each level costs one
// pass over every column's sorted order.
class TreeBuilder {
public:
    TreeBuilder(const Matrix& X, const std::vector<std::vector<std::uint32_t>>& sorted, const Hyperparams& hp)
        : X_(X), sorted_(sorted), hp_(hp) {}

    Tree build(const std::vector<double>& grad, const std::vector<double>& hess, const std::vector<std::uint32_t>& rows) {
        const std::size_t n_sample = rows.size();
        const std::size_t min_leaf = resolve_min(hp_.min_samples_leaf, n_sample);
        const std::size_t min_split = std::max<std::size_t>(2, resolve_min(hp_.min_samples_split, n_sample));

        Tree tree;
        tree.nodes.push_back(TreeNode{});
        node_of_.assign(X_.rows, kNoNode);
        for (auto r : rows) node_of_[r] = 0;

        std::vector<std::uint32_t> frontier{0};
        for (int depth = 0; depth < hp_.max_depth && !frontier.empty(); ++depth) {
            // gradient totals per frontier node
            std::vector<std::int64_t> slot(tree.nodes.size(), -1);
            for (std::size_t s = 0; s < frontier.size(); ++s) slot[frontier[s]] = static_cast<std::int64_t>(s);
            std::vector<double> G(frontier.size(), 0.0);
            std::vector<std::size_t> N(frontier.size(), 0);
            for (auto r : rows) {
                const auto nd = node_of_[r];
                if (nd == kNoNode || slot[nd] < 0) continue;
                G[static_cast<std::size_t>(slot[nd])] += grad[r];
                ++N[static_cast<std::size_t>(slot[nd])];
            }
            std::vector<bool> active(frontier.size());
            for (std::size_t s = 0; s < frontier.size(); ++s) {
                active[s] = N[s] >= min_split && N[s] >= 2 * min_leaf;
            }

            struct Best {
                double gain = 1e-12;
                int feature = -1;
                double threshold = 0.0;
            };
            std::vector<Best> best(frontier.size());
            std::vector<double> gl(frontier.size());
            std::vector<std::size_t> nl(frontier.size());
            std::vector<double> last(frontier.size());
            std::vector<bool> seen(frontier.size());

            for (std::size_t c = 0; c < X_.cols; ++c) {
                std::fill(gl.begin(), gl.end(), 0.0);
                std::fill(nl.begin(), nl.end(), 0);
                std::fill(seen.begin(), seen.end(), false);
                for (auto r : sorted_[c]) {
                    const auto nd = node_of_[r];
                    if (nd == kNoNode || slot[nd] < 0) continue;
                    const auto s = static_cast<std::size_t>(slot[nd]);
                    if (!active[s]) continue;
                    const double v = X_(r, c);
                    if (seen[s] && v > last[s]) {
                        const std::size_t n_left = nl[s];
                        const std::size_t n_right = N[s] - n_left;
                        if (n_left >= min_leaf && n_right >= min_leaf) {
                            const double gr = G[s] - gl[s];
                            const double gain = gl[s] * gl[s] / static_cast<double>(n_left) +
                                                gr * gr / static_cast<double>(n_right) -
                                                G[s] * G[s] / static_cast<double>(N[s]);
                            if (gain > best[s].gain) {
                                double thr = last[s] + (v - last[s]) / 2.0;
                                if (!(thr < v)) thr = last[s];
                                best[s] = {gain, static_cast<int>(c), thr};
                            }
                        }
                    }
                    gl[s] += grad[r];
                    ++nl[s];
                    last[s] = v;
                    seen[s] = true;
                }
            }

            std::vector<std::uint32_t> next;
            for (std::size_t s = 0; s < frontier.size(); ++s) {
                if (best[s].feature < 0) continue;
                const auto id = frontier[s];
                const auto left = static_cast<std::uint32_t>(tree.nodes.size());
                tree.nodes.push_back(TreeNode{});
                tree.nodes.push_back(TreeNode{});
                auto& node = tree.nodes[id];
                node.feature = best[s].feature;
                node.threshold = best[s].threshold;
                node.left = static_cast<int>(left);
                node.right = static_cast<int>(left + 1);
                next.push_back(left);
                next.push_back(left + 1);
            }
            if (next.empty()) break;
            for (auto r : rows) {
                const auto nd = node_of_[r];
                const auto& node = tree.nodes[nd];
                if (node.is_leaf()) continue;
                node_of_[r] = static_cast<std::uint32_t>(X_(r, static_cast<std::size_t>(node.feature)) <= node.threshold
                                                             ? node.left
                                                             : node.right);
            }
            frontier = std::move(next);
        }

        // Newton leaf values.
        std::vector<double> sg(tree.nodes.size(), 0.0), sh(tree.nodes.size(), 0.0);
        for (auto r : rows) {
            sg[node_of_[r]] += grad[r];
            sh[node_of_[r]] += hess[r];
        }
        for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
            if (!tree.nodes[i].is_leaf()) continue;
            tree.nodes[i].value = std::abs(sh[i]) < 1e-150 ? 0.0 : sg[i] / sh[i];
        }
        return tree;
    }

private:
    const Matrix& X_;
    const std::vector<std::vector<std::uint32_t>>& sorted_;
    const Hyperparams& hp_;
    std::vector<std::uint32_t> node_of_;
};

Encoding numeric_encoding(std::size_t cols) {
    std::vector<EncodedFeature> feats;
    for (std::size_t c = 0; c < cols; ++c) {
        EncodedFeature f;
        f.name = "x" + std::to_string(c);
        feats.push_back(f);
    }
    return Encoding(std::move(feats));
}

}  // namespace

TreeEnsemble train_gbm(const Matrix& X, std::span<const int> labels, const Hyperparams& hp, std::uint64_t seed,
                       const Encoding& encoding) {
    hp.validate();
    if (X.rows != labels.size()) throw ShapeError("label count does not match row count");
    if (X.rows == 0) throw FitError("no training rows");
    std::size_t positives = 0;
    for (int y : labels) {
        if (y != 0 && y != 1) throw FitError("labels must be binary");
        positives += static_cast<std::size_t>(y);
    }
    if (positives == 0 || positives == labels.size()) {
        throw FitError("training data holds a single class; a classifier cannot be fitted");
    }

    TreeEnsemble m;
    m.encoding = encoding.n_features() == 0 ? numeric_encoding(X.cols) : encoding;
    if (m.encoding.width() != X.cols) throw ShapeError("encoding width does not match matrix width");
    m.learning_rate = hp.learning_rate;
    m.hyperparams = hp;
    m.seed = seed;
    const double prevalence = static_cast<double>(positives) / static_cast<double>(labels.size());
    m.base_score = logit(prevalence);

    std::vector<std::vector<std::uint32_t>> sorted(X.cols);
    for (std::size_t c = 0; c < X.cols; ++c) {
        auto& idx = sorted[c];
        idx.resize(X.rows);
        std::iota(idx.begin(), idx.end(), 0u);
        std::stable_sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) { return X(a, c) < X(b, c); });
    }

    std::vector<double> score(X.rows, m.base_score);
    std::vector<double> grad(X.rows), hess(X.rows);
    const auto n_sub = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(hp.subsample * static_cast<double>(X.rows))));
    std::vector<std::uint32_t> all(X.rows);
    std::iota(all.begin(), all.end(), 0u);

    TreeBuilder builder(X, sorted, hp);
    for (int t = 0; t < hp.n_estimators; ++t) {
        for (std::size_t i = 0; i < X.rows; ++i) {
            const double p = sigmoid(score[i]);
            grad[i] = static_cast<double>(labels[i]) - p;
            hess[i] = p * (1.0 - p);
        }
        std::vector<std::uint32_t> rows;
        if (n_sub >= X.rows) {
            rows = all;
        } else {
            Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(t)}));
            rows = all;
            for (std::size_t i = 0; i < n_sub; ++i) std::swap(rows[i], rows[i + rng.below(rows.size() - i)]);
            rows.resize(n_sub);
            std::sort(rows.begin(), rows.end());
        }
        Tree tree = builder.build(grad, hess, rows);
        for (std::size_t i = 0; i < X.rows; ++i) score[i] += hp.learning_rate * tree.predict(X.row(i));
        m.trees.push_back(std::move(tree));
    }
    return m;
}

TreeEnsemble train_gbm(const EncodedMatrix& data, const Hyperparams& hp, std::uint64_t seed) {
    return train_gbm(data.X, data.labels, hp, seed, data.encoding);
}

std::string model_to_text(const TreeEnsemble& m) {
    json doc;
    doc["schema_version"] = m.schema_version;
    doc["seed"] = m.seed;
    doc["hyperparams"] = m.hyperparams.to_json();
    doc["learning_rate"] = m.learning_rate;
    doc["base_score"] = m.base_score;
    json feats = json::array();
    for (const auto& f : m.encoding.features()) {
        json j{{"name", f.name}, {"kind", to_string(f.kind)}};
        if (f.kind == FeatureKind::categorical) j["categories"] = f.categories;
        feats.push_back(j);
    }
    doc["features"] = feats;
    json trees = json::array();
    for (const auto& t : m.trees) {
        json nodes = json::array();
        for (const auto& n : t.nodes) {
            if (n.is_leaf()) nodes.push_back(json::array({n.value}));
            else nodes.push_back(json::array({n.feature, n.threshold, n.left, n.right}));
        }
        trees.push_back(nodes);
    }
    doc["trees"] = trees;
    std::ostringstream out;
    out << kModelMagic << " v" << kModelFormatVersion << '\n' << doc.dump() << '\n';
    return out.str();
}

TreeEnsemble model_from_text(std::string_view text) {
    const auto nl = text.find('\n');
    const std::string header = trim(text.substr(0, nl));
    const std::string expected = std::string(kModelMagic) + " v" + std::to_string(kModelFormatVersion);
    if (header.rfind(kModelMagic, 0) != 0) throw Error("not a model file (bad magic header)");
    if (header != expected) throw Error("unsupported model format '" + header + "', expected '" + expected + "'");
    TreeEnsemble m;
    try {
        const json doc = json::parse(text.substr(nl == std::string_view::npos ? text.size() : nl + 1));
        m.schema_version = doc.at("schema_version").get<std::string>();
        m.seed = doc.at("seed").get<std::uint64_t>();
        m.hyperparams = Hyperparams::from_json(doc.at("hyperparams"));
        m.learning_rate = doc.at("learning_rate").get<double>();
        m.base_score = doc.at("base_score").get<double>();
        std::vector<EncodedFeature> feats;
        for (const auto& j : doc.at("features")) {
            EncodedFeature f;
            f.name = j.at("name").get<std::string>();
            f.kind = j.at("kind").get<std::string>() == "categorical" ? FeatureKind::categorical : FeatureKind::numeric;
            if (f.kind == FeatureKind::categorical) f.categories = j.at("categories").get<std::vector<std::string>>();
            feats.push_back(std::move(f));
        }
        m.encoding = Encoding(std::move(feats));
        for (const auto& jt : doc.at("trees")) {
            Tree t;
            for (const auto& jn : jt) {
                TreeNode n;
                if (jn.size() == 1) {
                    n.value = jn[0].get<double>();
                } else {
                    n.feature = jn[0].get<int>();
                    n.threshold = jn[1].get<double>();
                    n.left = jn[2].get<int>();
                    n.right = jn[3].get<int>();
                    if (n.feature < 0 || static_cast<std::size_t>(n.feature) >= m.encoding.width()) {
                        throw Error("split column out of range");
                    }
                }
                t.nodes.push_back(n);
            }
            if (t.nodes.empty()) throw Error("empty tree");
            m.trees.push_back(std::move(t));
        }
    } catch (const json::exception& e) {
        throw Error(std::string("malformed model file: ") + e.what());
    }
    return m;
}

void save_model(const TreeEnsemble& m, const std::string& path) { write_file(path, model_to_text(m)); }

TreeEnsemble load_model(const std::string& path) { return model_from_text(read_file(path)); }

}  // namespace prescriptive
