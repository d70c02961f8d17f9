#include <cmath>
#include <map>
#include <set>

#include "doctest.h"

#include "prescriptive/dataset.hpp"
#include "prescriptive/errors.hpp"
#include "prescriptive/features.hpp"
#include "prescriptive/random.hpp"
#include "prescriptive/synth.hpp"
#include "prescriptive/util.hpp"

using namespace prescriptive;

namespace {

FeatureSchema tiny_schema() {
    FeatureSchema s;
    s.version = "tiny";
    FeatureSpec x;
    x.name = "x";
    x.display_name = "x value";
    x.predictive = true;
    x.engineered = true;
    x.lo = 0;
    x.hi = 100;
    x.unit = Unit::grade;
    FeatureSpec c;
    c.name = "c";
    c.kind = FeatureKind::categorical;
    c.predictive = true;
    c.categories = {"a", "b", "d", std::string(kMissingCategory)};
    FeatureSpec p;
    p.name = "prog";
    p.kind = FeatureKind::categorical;
    p.categories = {"p1", "p2"};
    s.features = {x, c, p};
    s.validate();
    return s;
}

const char* kHeader = "learner_id,academic_year,outcome,x,c,prog\n";

}  // namespace

TEST_CASE("format_double round-trips and sha256 matches the published vector") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.125, 0.0}) {
        double back = 0;
        REQUIRE(parse_double(format_double(v), back));
        CHECK(back == v);
    }
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(format_fixed(4.05, 1).size() == 3);
}

TEST_CASE("csv splitting handles quoted commas and doubled quotes") {
    const auto f = split_csv_line(R"(a,"b,c","say ""hi""",)");
    REQUIRE(f.size() == 4);
    CHECK(f[1] == "b,c");
    CHECK(f[2] == "say \"hi\"");
    CHECK(f[3].empty());
    CHECK(csv_escape("x,y") == "\"x,y\"");
}

TEST_CASE("parallel_for visits every index once and rethrows") {
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits) CHECK(h == 1);
    CHECK_THROWS_AS(parallel_for(10, [](std::size_t i) {
                        if (i == 7) throw ConfigError("boom");
                    }),
                    ConfigError);
}

TEST_CASE("derive_seed separates streams") {
    CHECK(derive_seed(1, {2}) != derive_seed(1, {3}));
    CHECK(derive_seed(1, {2}) != derive_seed(2, {2}));
    CHECK(derive_seed(5, {7, 9}) == derive_seed(5, {7, 9}));
    Rng r(3);
    std::vector<int> counts(5, 0);
    for (int i = 0; i < 5000; ++i) counts[r.below(5)]++;
    for (int c : counts) CHECK(c > 850);
}

TEST_CASE("records parse, round-trip and report row errors") {
    const auto schema = tiny_schema();
    const std::string text = std::string(kHeader) +
                             "L1,2020,completed,55.5,a,p1\n"
                             "L1,2021,1,,b,p1\n"
                             "L2,2020,non_completed,12,,p2\n";
    const auto d = parse_records(text, schema);
    REQUIRE(d.records.size() == 3);
    CHECK(d.labels() == std::vector<int>{1, 1, 0});
    CHECK(is_missing(d.cell(1, "x")));
    CHECK(is_missing(d.cell(2, "c")));
    CHECK(std::get<double>(d.cell(0, "x")) == 55.5);
    CHECK(d.prevalence() == doctest::Approx(2.0 / 3.0));

    const auto back = parse_records(records_to_csv(d), schema);
    CHECK(same_records(d, back));

    CHECK_THROWS_AS(parse_records("", schema), EmptyFileError);
    CHECK_THROWS_AS(parse_records(kHeader, schema), EmptyFileError);
    CHECK_THROWS_AS(parse_records("learner_id,academic_year,outcome,x,c\nL,1,1,2,a\n", schema), SchemaError);
    CHECK_THROWS_AS(parse_records("learner_id,academic_year,outcome,x,c,prog,zz\nL,1,1,2,a,p1,3\n", schema),
                    SchemaError);
    try {
        parse_records(std::string(kHeader) + "L1,2020,1,1,a,p1\nL2,2020,1,abc,a,p1\n", schema);
        FAIL("expected RowError");
    } catch (const RowError& e) {
        CHECK(e.row_index == 1);
        CHECK(std::string(e.what()).find("x") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_records(std::string(kHeader) + "L1,2020,maybe,1,a,p1\n", schema), RowError);
    CHECK_THROWS_AS(parse_records(std::string(kHeader) + "L1,2020,1,1,a\n", schema), RowError);
}

TEST_CASE("imputation and binary encoding") {
    const auto schema = tiny_schema();
    const auto d = parse_records(std::string(kHeader) + "L1,2020,1,,d,p2\nL2,2020,0,7,,p1\n", schema);
    const auto em = impute_and_encode(d);
    // x: 1 column; c: 4 categories -> 2 bits; prog: 2 categories -> 1 bit.
    REQUIRE(em.X.cols == 4);
    CHECK(binary_width(2) == 1);
    CHECK(binary_width(4) == 2);
    CHECK(binary_width(5) == 3);
    CHECK(em.X(0, 0) == 0.0);
    CHECK(em.X(1, 0) == 7.0);
    // Distinct categories must map to distinct codes.
    std::set<std::vector<double>> codes;
    Encoding enc(schema, {"c"});
    for (double k = 0; k < 4; ++k) codes.insert(enc.encode_row(std::vector<double>{k}));
    CHECK(codes.size() == 4);
    CHECK(enc.feature_of_column(1) == 0);
    CHECK_THROWS_AS(enc.encode_row(std::vector<double>{4.0}), EncodingError);
    CHECK_THROWS_AS(enc.encode_row(std::vector<double>{1.0, 2.0}), ShapeError);
}

TEST_CASE("grouped k-fold keeps every learner in exactly one test fold") {
    std::vector<std::string> ids;
    for (int l = 0; l < 97; ++l)
        for (int y = 0; y <= l % 4; ++y) ids.push_back("L" + std::to_string(l));
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto folds = grouped_kfold(ids, 10, seed);
        REQUIRE(folds.size() == 10);
        std::vector<int> tested(ids.size(), 0);
        for (const auto& f : folds) {
            std::set<std::string> train_ids, test_ids;
            for (auto i : f.train) train_ids.insert(ids[i]);
            for (auto i : f.test) {
                test_ids.insert(ids[i]);
                tested[i]++;
            }
            for (const auto& t : test_ids) CHECK(train_ids.count(t) == 0);
            CHECK(f.train.size() + f.test.size() == ids.size());
        }
        for (int t : tested) CHECK(t == 1);
    }
    CHECK(grouped_kfold(ids, 5, 1)[0].test == grouped_kfold(ids, 5, 1)[0].test);
    CHECK_THROWS_AS(grouped_kfold(ids, 1, 0), FoldError);
    std::vector<std::string> few{"a", "a", "b"};
    CHECK_THROWS_AS(grouped_kfold(few, 3, 0), FoldError);
}

TEST_CASE("cohort stats match a direct population computation") {
    const auto schema = tiny_schema();
    const auto d = parse_records(std::string(kHeader) +
                                     "L1,2020,1,10,a,p1\nL2,2020,0,20,a,p1\nL3,2020,1,60,a,p1\n"
                                     "L4,2020,1,5,a,p2\nL5,2021,1,9,a,p1\nL6,2021,0,,a,p1\n",
                                 schema);
    const auto stats = fit_cohort_stats(d, cohort_by(schema, "prog"));
    const auto& s = stats.at("p1/2020", "x");
    const double mu = 30.0;
    const double sd = std::sqrt(((10 - mu) * (10 - mu) + (20 - mu) * (20 - mu) + (60 - mu) * (60 - mu)) / 3.0);
    CHECK(s.mu == doctest::Approx(mu).epsilon(1e-12));
    CHECK(s.sigma == doctest::Approx(sd).epsilon(1e-12));
    CHECK(s.n == 3);
    CHECK(stats.at("p1/2021", "x").n == 1);
    CHECK_THROWS_AS(stats.at("p9/2020", "x"), StatsError);

    const auto back = StatsStore::from_text(stats.to_text());
    CHECK(back == stats);
    CHECK_THROWS_AS(StatsStore::from_text("garbage\n"), StatsError);

    const auto eng = engineer(d, stats, cohort_by(schema, "prog"));
    CHECK(std::get<double>(eng.cell(0, "x")) == doctest::Approx((10 - mu) / sd));
    CHECK(is_missing(eng.cell(5, "x")));
}

TEST_CASE("z-score inverse round-trips and sigma 0 warns") {
    Rng rng(11);
    for (int i = 0; i < 1000; ++i) {
        CohortStats s{"k", "f", rng.uniform(-50, 50), rng.uniform(0.1, 30), 10};
        const double x = rng.uniform(-100, 100);
        CHECK(zscore_inverse(zscore(x, s), s) == doctest::Approx(x).epsilon(1e-9));
    }
    std::vector<std::string> warnings;
    set_warning_handler([&](std::string_view m) { warnings.emplace_back(m); });
    CHECK(zscore(5.0, CohortStats{"solo/2020", "x", 5.0, 0.0, 1}) == 0.0);
    set_warning_handler({});
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("solo/2020") != std::string::npos);
}

TEST_CASE("raw rounding per unit") {
    CHECK(format_raw(round_raw(8.249, Unit::percent), Unit::percent) == "8.2");
    CHECK(format_raw(round_raw(11.6, Unit::count), Unit::count) == "12");
    CHECK(unit_suffix(Unit::percent) == "%");
    CHECK(unit_suffix(Unit::count).empty());
}

TEST_CASE("synthetic generator hits the prevalence exactly and is seeded") {
    auto cfg = GeneratorConfig::defaults();
    cfg.n_rows = 2000;
    const auto a = generate_synthetic(cfg, 5);
    const auto b = generate_synthetic(cfg, 5);
    const auto c = generate_synthetic(cfg, 6);
    CHECK(a.records.size() == 2000);
    CHECK(same_records(a, b));
    CHECK_FALSE(same_records(a, c));
    CHECK(std::abs(a.prevalence() - 0.719) <= 0.5 / 2000);
    // One outcome per learner, and years are distinct within a learner.
    std::map<std::string, std::set<int>> years;
    std::map<std::string, std::set<int>> outcomes;
    for (const auto& r : a.records) {
        CHECK(years[r.learner_id].insert(r.academic_year).second);
        outcomes[r.learner_id].insert(static_cast<int>(*r.outcome));
    }
    for (const auto& [id, o] : outcomes) CHECK(o.size() == 1);
    // Every value lies in the schema range.
    for (const auto& r : a.records)
        for (std::size_t j = 0; j < a.schema.features.size(); ++j) {
            const auto& spec = a.schema.features[j];
            if (spec.kind == FeatureKind::numeric && std::holds_alternative<double>(r.values[j])) {
                const double v = std::get<double>(r.values[j]);
                CHECK((v >= spec.lo && v <= spec.hi));
            }
        }
    cfg.prevalence = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
