#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace hefl {

/// Class-probability rows P_Hi of one hospital's global model, in the shared
/// evaluation order.
struct ProbabilityMatrix {
    std::string hospital_id;
    std::string model_id;
    std::size_t num_classes = 0;
    std::vector<std::vector<double>> rows;

    std::size_t size() const noexcept { return rows.size(); }
    /// Throws Error(kInvalidArgument) if a row is not a distribution.
    void validate() const;
};

struct EnsembleWeights {
    std::vector<double> alpha;
    bool normalized = false;
};

/// Candidate values W in [0, 1], sorted ascending.
struct WeightGrid {
    std::vector<double> values;

    /// {0, step, 2 step, ..., 1}. Values are k / n when step = 1 / n.
    static WeightGrid with_step(double step);
    void validate() const;
};

/// alpha / sum |alpha|. Throws Error(kAllZeroWeights).
EnsembleWeights l1_normalize(std::span<const double> alpha);

/// Per-row argmax of sum_i alpha_i P_Hi; ties go to the lowest class.
std::vector<int> ensemble_predict(std::span<const ProbabilityMatrix> mats, const EnsembleWeights& alpha);

double accuracy_score(std::span<const int> predicted, std::span<const int> truth);

struct TuningResult {
    EnsembleWeights alpha_best;
    double accuracy = 0.0;
    std::size_t correct = 0;
    std::size_t candidates_evaluated = 0;
    std::size_t candidates_skipped = 0;  // all-zero or duplicate after normalization
};

/// Exhaustive search over W^h in lexicographic order. A candidate replaces
/// the incumbent only on strictly higher accuracy.
TuningResult grid_search_weights(std::span<const ProbabilityMatrix> mats, std::span<const int> truth,
                                 const WeightGrid& grid);

/// Throws Error(kAlignmentMismatch) if the matrices do not share row count,
/// class count and the label count.
void check_alignment(std::span<const ProbabilityMatrix> mats, std::size_t labels);

/// CSV: header "hospital_id,model_id,sample,label,p0,...,p{C-1}", one row per
/// sample. Probabilities are printed with 17 significant digits.
void write_probability_csv(std::ostream& out, const ProbabilityMatrix& mat, std::span<const int> labels);
void write_probability_csv(const std::string& path, const ProbabilityMatrix& mat, std::span<const int> labels);
ProbabilityMatrix read_probability_csv(const std::string& path, std::vector<int>* labels);

}  // namespace hefl
