#include "coughnet/manifest.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

namespace coughnet {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        // trim surrounding whitespace
        std::size_t b = field.find_first_not_of(" \t\r");
        std::size_t e = field.find_last_not_of(" \t\r");
        fields.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

}  // namespace

std::vector<PatientRecord> parse_manifest(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;

    std::vector<PatientRecord> records;
    std::unordered_map<std::string, std::size_t> index_by_patient;
    std::set<std::pair<std::string, std::string>> seen_pairs;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;  // header row: column names, not data
            continue;
        }
        const auto fields = split_csv_line(line);
        if (fields.size() < 3) {
            throw ManifestError(line_no, "expected at least 3 columns, got " +
                                             std::to_string(fields.size()));
        }
        const std::string& patient_id = fields[0];
        const std::string& cough_path = fields[1];
        if (patient_id.empty()) throw ManifestError(line_no, "empty patient_id");
        if (cough_path.empty()) throw ManifestError(line_no, "empty cough_path");
        const Label label = parse_label(fields[2], line_no);

        if (!seen_pairs.insert({patient_id, cough_path}).second) {
            throw ManifestError(line_no, "duplicate (patient_id, cough_path): " + patient_id +
                                             ", " + cough_path);
        }

        auto it = index_by_patient.find(patient_id);
        if (it == index_by_patient.end()) {
            PatientRecord rec;
            rec.patient_id = patient_id;
            rec.label = label;
            rec.clip_paths.push_back(cough_path);
            if (fields.size() > 3 && !fields[3].empty()) rec.age = fields[3];
            if (fields.size() > 4 && !fields[4].empty()) rec.gender = fields[4];
            if (fields.size() > 5 && !fields[5].empty()) rec.country = fields[5];
            index_by_patient.emplace(patient_id, records.size());
            records.push_back(std::move(rec));
        } else {
            PatientRecord& rec = records[it->second];
            if (rec.label != label) {
                throw ManifestError(line_no, "conflicting labels for patient " + patient_id);
            }
            rec.clip_paths.push_back(cough_path);
        }
    }
    return records;
}

std::vector<PatientRecord> load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_manifest(ss.str());
}

void write_manifest(const std::string& path, const std::vector<PatientRecord>& records) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "patient_id,cough_path,label\n";
    for (const auto& rec : records) {
        for (const auto& clip : rec.clip_paths) {
            out << rec.patient_id << ',' << clip << ',' << label_name(rec.label) << '\n';
        }
    }
    if (!out) throw IoError("failed writing " + path);
}

}  // namespace coughnet
