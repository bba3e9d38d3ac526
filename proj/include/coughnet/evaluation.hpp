#pragma once

#include <string>
#include <vector>

#include "coughnet/error.hpp"

namespace coughnet {

/// ROC curve swept over every distinct score, thresholds descending from
/// +infinity; endpoints are (0,0) and (1,1). AUC is the rank statistic
/// (ties count one half), which equals the trapezoidal area.
struct RocCurve {
    std::vector<double> thresholds;
    std::vector<double> fpr;
    std::vector<double> tpr;
    double auc = 0.0;
};

RocCurve roc_auc(const std::vector<std::pair<double, int>>& scored);

/// Threshold minimizing |FPR - FNR|; ties resolve to the larger threshold.
double eer_threshold(const RocCurve& roc);

/// Patient-level scores per the two index definitions: I1 = fraction of
/// coughs whose mean probability clears gamma_ee, I2 = flat mean of all
/// block probabilities.
struct PatientScore {
    std::string patient_id;
    double covid_i1 = 0.0;
    double covid_i2 = 0.0;
    std::size_t n1 = 0;  // coughs
    std::size_t n2 = 0;  // probability blocks (segments, or coughs for matrix models)
    int label = 0;       // 1 = COVID positive
};

PatientScore covid_indexes(const std::string& patient_id,
                           const std::vector<double>& per_cough_phat,
                           const std::vector<double>& per_segment_probs, double gamma_ee,
                           int label);

enum class ScoreFunction { I1, I2 };

std::string score_function_name(ScoreFunction fn);
ScoreFunction parse_score_function(const std::string& name);

struct EvalReport {
    RocCurve roc;  // patient-level, over the chosen index
    double auc = 0.0;
    double gamma_ee = 0.0;  // EER threshold of the patient-level curve
    double decision_threshold = 0.5;
    double sensitivity = 0.0;
    double specificity = 0.0;
    double accuracy = 0.0;
    // the same confusion metrics at the EER operating point
    double eer_sensitivity = 0.0;
    double eer_specificity = 0.0;
    double eer_accuracy = 0.0;
    ScoreFunction score_function = ScoreFunction::I2;
    std::size_t n_patients = 0;
};

/// Patient-level report: predicted positive iff the chosen index clears
/// decision_threshold; ROC/AUC computed over the same index.
EvalReport report(const std::vector<PatientScore>& scores, ScoreFunction score_function,
                  double decision_threshold);

void write_roc_csv(const RocCurve& roc, const std::string& path);
std::string format_report(const EvalReport& report);

/// Published reference results for this method, recorded as documentation
/// targets; they require the original private datasets and full-scale
/// training and are not reproduced here.
namespace reference_targets {
inline constexpr double kResnet50Auc = 0.9759;
inline constexpr double kResnet50Specificity = 0.98;
inline constexpr double kResnet50Sensitivity = 0.93;
inline constexpr double kResnet50Accuracy = 0.953;
inline constexpr double kLstmSfsAuc = 0.9375;
}  // namespace reference_targets

}  // namespace coughnet
