#include "coughnet/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace coughnet {

RocCurve roc_auc(const std::vector<std::pair<double, int>>& scored) {
    std::size_t n_pos = 0, n_neg = 0;
    for (const auto& [score, label] : scored) {
        (label == 1 ? n_pos : n_neg) += 1;
        if (!std::isfinite(score)) throw Error("roc_auc: non-finite score");
    }
    if (n_pos == 0 || n_neg == 0) {
        throw DegenerateLabels("roc_auc: both classes must be present");
    }

    std::vector<std::pair<double, int>> sorted = scored;
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });

    RocCurve curve;
    curve.thresholds.push_back(std::numeric_limits<double>::infinity());
    curve.fpr.push_back(0.0);
    curve.tpr.push_back(0.0);

    // sweep distinct scores; count pairs for the rank-statistic AUC
    double u = 0.0;  // sum over positives of (negatives below + 0.5 * ties)
    std::size_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i;
        std::size_t pos_here = 0, neg_here = 0;
        while (j < sorted.size() && sorted[j].first == sorted[i].first) {
            (sorted[j].second == 1 ? pos_here : neg_here) += 1;
            ++j;
        }
        const std::size_t neg_above = fp;  // negatives strictly above this score
        u += static_cast<double>(pos_here) *
             (static_cast<double>(n_neg - neg_above - neg_here) + 0.5 * static_cast<double>(neg_here));
        tp += pos_here;
        fp += neg_here;
        curve.thresholds.push_back(sorted[i].first);
        curve.tpr.push_back(static_cast<double>(tp) / static_cast<double>(n_pos));
        curve.fpr.push_back(static_cast<double>(fp) / static_cast<double>(n_neg));
        i = j;
    }
    curve.auc = u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
    return curve;
}

double eer_threshold(const RocCurve& roc) {
    if (roc.thresholds.empty()) throw EmptyInput("eer_threshold: empty curve");
    double best_diff = std::numeric_limits<double>::infinity();
    double best_threshold = roc.thresholds.front();
    for (std::size_t i = 0; i < roc.thresholds.size(); ++i) {
        const double fnr = 1.0 - roc.tpr[i];
        const double diff = std::fabs(roc.fpr[i] - fnr);
        // thresholds descend, so the first strict improvement keeps the
        // largest threshold among ties
        if (diff < best_diff) {
            best_diff = diff;
            best_threshold = roc.thresholds[i];
        }
    }
    return best_threshold;
}

PatientScore covid_indexes(const std::string& patient_id,
                           const std::vector<double>& per_cough_phat,
                           const std::vector<double>& per_segment_probs, double gamma_ee,
                           int label) {
    if (per_cough_phat.empty()) throw EmptyInput("covid_indexes: patient has no coughs");
    if (per_segment_probs.empty()) throw EmptyInput("covid_indexes: patient has no blocks");
    PatientScore score;
    score.patient_id = patient_id;
    score.label = label;
    score.n1 = per_cough_phat.size();
    score.n2 = per_segment_probs.size();
    std::size_t crossing = 0;
    for (double p : per_cough_phat) {
        if (p >= gamma_ee) ++crossing;
    }
    score.covid_i1 = static_cast<double>(crossing) / static_cast<double>(score.n1);
    double acc = 0.0;
    for (double p : per_segment_probs) acc += p;
    score.covid_i2 = acc / static_cast<double>(score.n2);
    return score;
}

std::string score_function_name(ScoreFunction fn) {
    return fn == ScoreFunction::I1 ? "I1" : "I2";
}

ScoreFunction parse_score_function(const std::string& name) {
    if (name == "I1") return ScoreFunction::I1;
    if (name == "I2") return ScoreFunction::I2;
    throw Error("unknown score function '" + name + "'");
}

namespace {

struct Confusion {
    double sensitivity = 0.0, specificity = 0.0, accuracy = 0.0;
};

Confusion confusion_at(const std::vector<PatientScore>& scores, ScoreFunction fn,
                       double threshold) {
    std::size_t tp = 0, tn = 0, fp = 0, fn_count = 0;
    for (const auto& s : scores) {
        const double index = fn == ScoreFunction::I1 ? s.covid_i1 : s.covid_i2;
        const bool predicted = index >= threshold;
        if (s.label == 1) {
            (predicted ? tp : fn_count) += 1;
        } else {
            (predicted ? fp : tn) += 1;
        }
    }
    Confusion c;
    c.sensitivity = tp + fn_count ? static_cast<double>(tp) / static_cast<double>(tp + fn_count) : 0.0;
    c.specificity = tn + fp ? static_cast<double>(tn) / static_cast<double>(tn + fp) : 0.0;
    c.accuracy = static_cast<double>(tp + tn) / static_cast<double>(scores.size());
    return c;
}

}  // namespace

EvalReport report(const std::vector<PatientScore>& scores, ScoreFunction score_function,
                  double decision_threshold) {
    if (scores.empty()) throw EmptyInput("report: no patients");
    std::vector<std::pair<double, int>> scored;
    scored.reserve(scores.size());
    for (const auto& s : scores) {
        scored.emplace_back(score_function == ScoreFunction::I1 ? s.covid_i1 : s.covid_i2, s.label);
    }
    EvalReport rep;
    rep.roc = roc_auc(scored);
    rep.auc = rep.roc.auc;
    rep.gamma_ee = eer_threshold(rep.roc);
    rep.decision_threshold = decision_threshold;
    rep.score_function = score_function;
    rep.n_patients = scores.size();

    const Confusion at_threshold = confusion_at(scores, score_function, decision_threshold);
    rep.sensitivity = at_threshold.sensitivity;
    rep.specificity = at_threshold.specificity;
    rep.accuracy = at_threshold.accuracy;
    const Confusion at_eer = confusion_at(scores, score_function, rep.gamma_ee);
    rep.eer_sensitivity = at_eer.sensitivity;
    rep.eer_specificity = at_eer.specificity;
    rep.eer_accuracy = at_eer.accuracy;
    return rep;
}

void write_roc_csv(const RocCurve& roc, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "threshold,fpr,tpr\n";
    for (std::size_t i = 0; i < roc.thresholds.size(); ++i) {
        if (std::isinf(roc.thresholds[i])) {
            out << "inf";
        } else {
            out << roc.thresholds[i];
        }
        out << ',' << roc.fpr[i] << ',' << roc.tpr[i] << '\n';
    }
    if (!out) throw IoError("failed writing " + path);
}

std::string format_report(const EvalReport& rep) {
    std::ostringstream out;
    out << "patients: " << rep.n_patients << '\n';
    out << "score_function: " << score_function_name(rep.score_function) << '\n';
    out << "auc: " << rep.auc << '\n';
    out << "gamma_ee: " << rep.gamma_ee << '\n';
    out << "decision_threshold: " << rep.decision_threshold << '\n';
    out << "sensitivity: " << rep.sensitivity << '\n';
    out << "specificity: " << rep.specificity << '\n';
    out << "accuracy: " << rep.accuracy << '\n';
    out << "eer_sensitivity: " << rep.eer_sensitivity << '\n';
    out << "eer_specificity: " << rep.eer_specificity << '\n';
    out << "eer_accuracy: " << rep.eer_accuracy << '\n';
    return out.str();
}

}  // namespace coughnet
