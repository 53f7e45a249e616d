#include "charl/classifier.hpp"

#include "charl/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>

namespace charl {

double llr(double p_in, double p_out, ltl::RuleCounts counts) {
    if (counts.n == 0) return 0.0;
    const double h = static_cast<double>(counts.h);
    const double miss = static_cast<double>(counts.n - counts.h);
    double v = 0.0;
    // Skipping zero-count terms keeps 0 * log(...) at 0 even for unsmoothed inputs.
    if (counts.h > 0) v += h * std::log(p_in / p_out);
    if (counts.n > counts.h) v += miss * std::log((1.0 - p_in) / (1.0 - p_out));
    return v;
}

double rule_llr(const TemporalRule& rule, const SegmentView& segment) {
    return llr(rule.p_in, rule.p_out, ltl::count_rule(segment, rule.src, rule.dst, rule.lag, rule.polarity));
}

std::vector<double> mean_activations(const SegmentView& segment) {
    std::vector<double> mean(segment.width, 0.0);
    if (segment.length == 0) return mean;
    for (std::size_t t = 0; t < segment.length; ++t) {
        const auto row = segment.row(t);
        for (std::size_t m = 0; m < segment.width; ++m) mean[m] += row[m];
    }
    for (auto& v : mean) v /= static_cast<double>(segment.length);
    return mean;
}

std::size_t core_size(std::size_t available, double core_fraction) {
    if (available == 0) return 0;
    const auto k = static_cast<std::size_t>(std::ceil(core_fraction * static_cast<double>(available) - 1e-9));
    return std::clamp<std::size_t>(k, 1, available);
}

std::vector<ClassScore> score_classes(const RuleBase& rb, const SegmentView& segment, const ScoringOptions& options) {
    std::vector<ClassScore> scores(rb.activities.size());
    std::optional<std::vector<double>> mean;
    for (std::size_t a = 0; a < rb.activities.size(); ++a) {
        ClassScore& s = scores[a];
        s.activity = rb.activities[a];
        const auto& rules = rb.rules[a];
        if (rules.empty()) {
            if (!rb.prototypes[a]) throw DataError("no rules and no prototype for '" + s.activity + "'");
            if (!mean) mean = mean_activations(segment);
            const auto& mu = *rb.prototypes[a];
            double dev = 0.0;
            for (std::size_t m = 0; m < mu.size(); ++m) dev += std::abs((*mean)[m] - mu[m]);
            s.fallback_score = -options.fallback_weight * dev / static_cast<double>(mu.size());
            s.used_fallback = true;
            continue;
        }
        const std::size_t k = core_size(rules.size(), options.core_fraction);
        double total = 0.0;
        for (std::size_t i = 0; i < k; ++i) total += rules[i].weight;
        s.uniform_weights = !(total > 0.0);
        double score = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const double w = s.uniform_weights ? 1.0 / static_cast<double>(k) : rules[i].weight / total;
            score += w * rule_llr(rules[i], segment);
        }
        s.rule_score = score;
    }
    return scores;
}

std::size_t predict_index(const std::vector<ClassScore>& scores) {
    if (scores.empty()) throw DataError("predict: no activities to score");
    std::size_t best = 0;
    for (std::size_t a = 1; a < scores.size(); ++a)
        if (scores[a].value() > scores[best].value()) best = a;
    return best;
}

std::string predict(const RuleBase& rb, const SegmentView& segment, const ScoringOptions& options) {
    return rb.activities[predict_index(score_classes(rb, segment, options))];
}

std::vector<std::vector<double>> fit_prototypes(const LabeledDataset& train) {
    std::vector<std::vector<double>> protos;
    for (const auto& activity : train.activities) {
        const auto segs = train.segments_of(activity);
        if (segs.empty()) throw DataError("prototype: activity '" + activity + "' has no training segments");
        std::vector<double> mu(segs.front()->width(), 0.0);
        for (const Segment* seg : segs) {
            const auto m = mean_activations(seg->view());
            for (std::size_t i = 0; i < mu.size(); ++i) mu[i] += m[i];
        }
        for (auto& v : mu) v /= static_cast<double>(segs.size());
        protos.push_back(std::move(mu));
    }
    return protos;
}

std::vector<Prediction> classify(const RuleBase& rb, const LabeledDataset& data, const ScoringOptions& options) {
    std::vector<Prediction> out(data.segments.size());
    parallel_for(data.segments.size(), [&](std::size_t i) {
        const Segment& seg = data.segments[i];
        const auto scores = score_classes(rb, seg.view(), options);
        const std::size_t best = predict_index(scores);
        out[i] = {seg.source_id(), seg.start_time(), seg.label(), rb.activities[best], scores[best].used_fallback};
    });
    return out;
}

std::vector<Prediction> majority_vote(const std::vector<Prediction>& predictions, std::size_t window) {
    if (window <= 1) return predictions;
    std::vector<Prediction> out = predictions;
    const std::size_t half = window / 2;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const std::size_t lo = i >= half ? i - half : 0;
        const std::size_t hi = std::min(predictions.size(), i + (window - half));
        std::vector<std::pair<std::string, int>> counts;
        for (std::size_t j = lo; j < hi; ++j) {
            if (predictions[j].source_id != predictions[i].source_id) continue;
            auto it = std::find_if(counts.begin(), counts.end(),
                                   [&](const auto& c) { return c.first == predictions[j].predicted; });
            if (it == counts.end())
                counts.emplace_back(predictions[j].predicted, 1);
            else
                ++it->second;
        }
        const auto best = std::max_element(counts.begin(), counts.end(),
                                           [](const auto& x, const auto& y) { return x.second < y.second; });
        out[i].predicted = best->first;
    }
    return out;
}

EvaluationReport tally(const std::vector<std::string>& activities, const std::vector<Prediction>& predictions) {
    EvaluationReport r;
    r.activities = activities;
    const std::size_t A = activities.size();
    r.confusion.assign(A, std::vector<long>(A, 0));
    const auto index = [&](const std::string& name) {
        const auto it = std::find(activities.begin(), activities.end(), name);
        if (it == activities.end()) throw DataError("evaluation: unknown activity '" + name + "'");
        return static_cast<std::size_t>(it - activities.begin());
    };
    for (const auto& p : predictions) {
        ++r.confusion[index(p.label)][index(p.predicted)];
        if (p.used_fallback) ++r.fallback_decisions;
    }
    r.segment_count = static_cast<long>(predictions.size());
    long correct = 0;
    r.precision.assign(A, 0.0);
    r.recall.assign(A, 0.0);
    for (std::size_t a = 0; a < A; ++a) {
        correct += r.confusion[a][a];
        long row = 0, col = 0;
        for (std::size_t b = 0; b < A; ++b) {
            row += r.confusion[a][b];
            col += r.confusion[b][a];
        }
        if (col > 0) r.precision[a] = static_cast<double>(r.confusion[a][a]) / static_cast<double>(col);
        if (row > 0) r.recall[a] = static_cast<double>(r.confusion[a][a]) / static_cast<double>(row);
    }
    r.accuracy = r.segment_count > 0 ? static_cast<double>(correct) / static_cast<double>(r.segment_count) : 0.0;
    return r;
}

EvaluationReport evaluate(const RuleBase& rb, const LabeledDataset& test, const ScoringOptions& options) {
    if (test.segments.empty()) throw DataError("evaluation: empty test set");
    return tally(rb.activities, classify(rb, test, options));
}

nlohmann::json to_json(const EvaluationReport& report) {
    nlohmann::json per_class = nlohmann::json::array();
    for (std::size_t a = 0; a < report.activities.size(); ++a) {
        long support = 0;
        for (long c : report.confusion[a]) support += c;
        per_class.push_back({{"activity", report.activities[a]},
                             {"precision", report.precision[a]},
                             {"recall", report.recall[a]},
                             {"support", support}});
    }
    return {{"activities", report.activities},
            {"confusion", report.confusion},
            {"per_class", per_class},
            {"accuracy", report.accuracy},
            {"segment_count", report.segment_count},
            {"fallback_decisions", report.fallback_decisions}};
}

nlohmann::json to_json(const std::vector<Prediction>& predictions) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& p : predictions)
        out.push_back({{"source", p.source_id},
                       {"start", p.start_time},
                       {"label", p.label},
                       {"predicted", p.predicted},
                       {"used_fallback", p.used_fallback}});
    return out;
}

std::vector<Prediction> predictions_from_json(const nlohmann::json& j) {
    try {
        std::vector<Prediction> out;
        for (const auto& p : j)
            out.push_back({p.at("source").get<std::string>(), p.at("start").get<std::size_t>(),
                           p.at("label").get<std::string>(), p.at("predicted").get<std::string>(),
                           p.value("used_fallback", false)});
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("predictions: ") + e.what());
    }
}

std::string confusion_table(const EvaluationReport& report) {
    std::size_t w = 4;
    for (const auto& a : report.activities) w = std::max(w, a.size());
    for (const auto& row : report.confusion)
        for (long c : row) w = std::max(w, std::to_string(c).size());
    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(w)) << "true" << " |";
    for (const auto& a : report.activities) out << ' ' << std::right << std::setw(static_cast<int>(w)) << a;
    out << '\n' << std::string(w + 2 + report.activities.size() * (w + 1), '-') << '\n';
    for (std::size_t a = 0; a < report.activities.size(); ++a) {
        out << std::left << std::setw(static_cast<int>(w)) << report.activities[a] << " |";
        for (long c : report.confusion[a]) out << ' ' << std::right << std::setw(static_cast<int>(w)) << c;
        out << '\n';
    }
    out << "accuracy " << std::fixed << std::setprecision(4) << report.accuracy << " over " << report.segment_count
        << " segments\n";
    return out.str();
}

}  // namespace charl
