#include "coughnet/selection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "coughnet/parallel.hpp"

namespace coughnet {

namespace {

/// Restricts a dataset to the given dimensions: column subset for
/// vector-input families, zero-masking (shape preserved) otherwise.
std::vector<PatientFeatures> mask_dataset(const std::vector<PatientFeatures>& dataset,
                                          const std::vector<std::size_t>& dims, bool reduce) {
    std::vector<PatientFeatures> out = dataset;
    for (auto& patient : out) {
        for (auto& cough : patient.coughs) {
            const Matrix2D& src = cough.values;
            if (reduce) {
                Matrix2D reduced(src.rows(), dims.size());
                std::vector<std::string> names;
                names.reserve(dims.size());
                for (std::size_t c = 0; c < dims.size(); ++c) {
                    for (std::size_t r = 0; r < src.rows(); ++r) {
                        reduced(r, c) = src(r, dims[c]);
                    }
                    if (dims[c] < cough.dim_names.size()) names.push_back(cough.dim_names[dims[c]]);
                }
                cough.values = std::move(reduced);
                cough.dim_names = std::move(names);
            } else {
                Matrix2D masked(src.rows(), src.cols(), 0.0);
                for (std::size_t d : dims) {
                    for (std::size_t r = 0; r < src.rows(); ++r) masked(r, d) = src(r, d);
                }
                cough.values = std::move(masked);
            }
        }
    }
    return out;
}

}  // namespace

SfsResult sfs(const std::vector<PatientFeatures>& dataset, const ModelSpec& spec,
              const std::vector<InnerSplit>& splits, const SfsOptions& options) {
    if (dataset.empty()) throw EmptyInput("sfs: empty dataset");
    if (splits.empty()) throw InvalidPlan("sfs: no splits");
    const auto& first = dataset.front().coughs;
    if (first.empty()) throw EmptyInput("sfs: patient without coughs");
    const std::size_t d = first.front().values.cols();
    if (d < 2) throw InvalidLength("sfs: need at least 2 feature dimensions");
    const std::vector<std::string> dim_names = first.front().dim_names;
    const bool reduce = is_vector_family(spec.family);

    const std::size_t max_steps = options.max_dims == 0 ? d : std::min(options.max_dims, d);

    std::vector<std::size_t> selected;
    std::vector<std::size_t> remaining(d);
    for (std::size_t i = 0; i < d; ++i) remaining[i] = i;

    SfsResult result;
    while (selected.size() < max_steps && !remaining.empty()) {
        std::vector<double> candidate_auc(remaining.size(),
                                          -std::numeric_limits<double>::infinity());
        parallel_for(remaining.size(), options.workers, [&](std::size_t ci) {
            std::vector<std::size_t> dims = selected;
            dims.push_back(remaining[ci]);
            std::sort(dims.begin(), dims.end());
            const auto masked = mask_dataset(dataset, dims, reduce);
            double acc = 0.0;
            std::size_t ok = 0;
            for (std::size_t s = 0; s < splits.size(); ++s) {
                const std::uint64_t seed =
                    Rng::derive(options.seed, {0x5f5, selected.size(), remaining[ci], s});
                const SplitScore score = score_split(masked, splits[s], spec,
                                                     options.score_function, options.smote, seed);
                if (!std::isnan(score.dev_auc)) {
                    acc += score.dev_auc;
                    ++ok;
                }
            }
            if (ok > 0) candidate_auc[ci] = acc / static_cast<double>(ok);
        });

        std::size_t best_ci = remaining.size();
        double best_auc = -std::numeric_limits<double>::infinity();
        for (std::size_t ci = 0; ci < remaining.size(); ++ci) {
            // strict > keeps the lowest dim index among ties (remaining is sorted)
            if (candidate_auc[ci] > best_auc) {
                best_auc = candidate_auc[ci];
                best_ci = ci;
            }
        }
        if (best_ci == remaining.size()) break;  // every remaining dim diverged

        const std::size_t dim = remaining[best_ci];
        selected.push_back(dim);
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best_ci));
        SfsStep step;
        step.dim_index = dim;
        step.dim_name = dim < dim_names.size() ? dim_names[dim] : std::to_string(dim);
        step.dev_auc = best_auc;
        step.subset_size = selected.size();
        result.steps.push_back(std::move(step));
    }

    if (result.steps.empty()) throw SearchFailed("sfs: no dimension could be evaluated");
    std::size_t best_step = 0;
    for (std::size_t i = 1; i < result.steps.size(); ++i) {
        if (result.steps[i].dev_auc > result.steps[best_step].dev_auc) best_step = i;
    }
    result.best_auc = result.steps[best_step].dev_auc;
    for (std::size_t i = 0; i <= best_step; ++i) {
        result.best_subset.push_back(result.steps[i].dim_index);
    }
    return result;
}

void write_sfs_csv(const SfsResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "step,dim_name,dev_auc\n";
    for (std::size_t i = 0; i < result.steps.size(); ++i) {
        out << (i + 1) << ',' << result.steps[i].dim_name << ',' << result.steps[i].dev_auc << '\n';
    }
    if (!out) throw IoError("failed writing " + path);
}

}  // namespace coughnet
