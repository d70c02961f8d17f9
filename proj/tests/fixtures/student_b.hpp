// Hand-built "Student B" case: five prescriptive features, one stump per feature,
// learning rate 1, base score 0.35, and fixed cohort stats. Shared by unit and acceptance tests.
#pragma once

#include <string>
#include <vector>

#include "prescriptive/counterfactual.hpp"
#include "prescriptive/feedback.hpp"
#include "prescriptive/features.hpp"
#include "prescriptive/gbm.hpp"
#include "prescriptive/pipeline.hpp"
#include "prescriptive/schema.hpp"

namespace student_b {

using namespace prescriptive;

inline const std::string kCohort = "bachelor_science/2021";

inline std::vector<std::string> names() {
    return {"qualification_percent_completed", "full_time_status", "on_time_submission_count", "grade_mark_mean",
            "student_mode"};
}

// qual z = -1 (4.1%), part-time, on-time z = -1 (8), grade z = 0.6 (66.0%), on-campus.
inline std::vector<double> row() { return {-1.0, 0.0, -1.0, 0.6, 1.0}; }

inline Tree stump(int column, double threshold, double left, double right) {
    Tree t;
    t.nodes.push_back({column, threshold, 1, 2, 0.0});
    t.nodes.push_back({-1, 0.0, -1, -1, left});
    t.nodes.push_back({-1, 0.0, -1, -1, right});
    return t;
}

inline TreeEnsemble model() {
    TreeEnsemble m;
    m.learning_rate = 1.0;
    m.base_score = 0.35;
    m.encoding = Encoding(default_schema(), names());
    m.trees = {stump(0, -0.8, -1.0, 1.2), stump(1, 0.5, -0.8, 0.9), stump(2, 0.0, -0.5, 0.6),
               stump(3, 0.0, -0.3, 0.4), stump(4, 0.5, 0.2, -0.6)};
    return m;
}

inline StatsStore stats() {
    StatsStore s("student-b");
    s.insert({kCohort, "qualification_percent_completed", 20.5, 16.4, 40});
    s.insert({kCohort, "on_time_submission_count", 12.0, 4.0, 40});
    s.insert({kCohort, "grade_mark_mean", 61.2, 8.0, 40});
    return s;
}

inline StudentFacts facts() {
    const auto schema = default_schema();
    const auto st = stats();
    const auto r = row();
    StudentFacts f;
    f.programme = "bachelor of science";
    f.completion_likelihood = percent_text(model().proba_features(r));
    const auto ns = names();
    for (std::size_t j = 0; j < ns.size(); ++j) {
        const auto& spec = schema.at(ns[j]);
        f.current.push_back({spec.name, spec.display_name, display_value(spec, r[j], kCohort, st)});
    }
    return f;
}

// Three-change pathway: switch to full-time, on-time submissions up to the cohort mean,
// qualification completion from 4.1% to 8.2%.
inline Counterfactual remedial_pathway() {
    Counterfactual cf;
    cf.row = row();
    cf.row[0] = -0.75;
    cf.row[1] = 1.0;
    cf.row[2] = 0.0;
    cf.deltas = {{0, "qualification_percent_completed", -1.0, -0.75},
                 {1, "full_time_status", 0.0, 1.0},
                 {2, "on_time_submission_count", -1.0, 0.0}};
    cf.prob_after = model().proba_features(cf.row);
    return cf;
}

}  // namespace student_b
