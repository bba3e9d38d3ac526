#pragma once

#include <optional>
#include <string>
#include <vector>

#include "coughnet/audio.hpp"

namespace coughnet {

/// One patient with at least one cough recording.
struct PatientRecord {
    std::string patient_id;
    Label label = Label::Unlabeled;
    std::vector<std::string> clip_paths;
    std::optional<std::string> age;
    std::optional<std::string> gender;
    std::optional<std::string> country;
};

/// Loads a UTF-8 CSV manifest with header
///   patient_id,cough_path,label[,age,gender,country]
/// Lines starting with '#' are ignored. Rows are grouped by patient_id in
/// first-appearance order; labels parse case-insensitively from
/// {positive, negative, healthy}. Throws ManifestError on unknown labels,
/// duplicate (patient_id, cough_path) pairs, or conflicting patient labels.
std::vector<PatientRecord> load_manifest(const std::string& path);

/// Same contract, parsing from a string (used by tests).
std::vector<PatientRecord> parse_manifest(const std::string& text);

void write_manifest(const std::string& path, const std::vector<PatientRecord>& records);

}  // namespace coughnet
