#include "hefl/ensemble.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "hefl/error.hpp"

namespace hefl {

void ProbabilityMatrix::validate() const {
    require(num_classes > 0, ErrorCode::kInvalidArgument, "probability matrix has no classes");
    for (std::size_t i = 0; i < rows.size(); ++i) {
        require(rows[i].size() == num_classes, ErrorCode::kAlignmentMismatch,
                hospital_id + ": row " + std::to_string(i) + " has the wrong class count");
        double sum = 0.0;
        for (double p : rows[i]) {
            require(std::isfinite(p) && p >= 0.0, ErrorCode::kInvalidArgument,
                    hospital_id + ": negative or non-finite probability in row " + std::to_string(i));
            sum += p;
        }
        require(std::fabs(sum - 1.0) <= 1e-6, ErrorCode::kInvalidArgument,
                hospital_id + ": row " + std::to_string(i) + " sums to " + std::to_string(sum));
    }
}

WeightGrid WeightGrid::with_step(double step) {
    require(std::isfinite(step) && step > 0.0 && step <= 1.0, ErrorCode::kConfig, "grid step must be in (0, 1]");
    const long long n = std::llround(1.0 / step);
    require(n >= 1 && std::fabs(static_cast<double>(n) * step - 1.0) < 1e-9, ErrorCode::kConfig,
            "grid step must divide 1 evenly");
    WeightGrid g;
    for (long long k = 0; k <= n; ++k) g.values.push_back(static_cast<double>(k) / static_cast<double>(n));
    return g;
}

void WeightGrid::validate() const {
    require(!values.empty(), ErrorCode::kConfig, "weight grid is empty");
    for (std::size_t i = 0; i < values.size(); ++i) {
        require(values[i] >= 0.0 && values[i] <= 1.0, ErrorCode::kConfig, "grid values must lie in [0, 1]");
        require(i == 0 || values[i - 1] < values[i], ErrorCode::kConfig, "grid values must be strictly ascending");
    }
}

EnsembleWeights l1_normalize(std::span<const double> alpha) {
    double sum = 0.0;
    for (double a : alpha) {
        require(std::isfinite(a), ErrorCode::kInvalidArgument, "non-finite ensemble weight");
        sum += std::fabs(a);
    }
    require(sum > 0.0, ErrorCode::kAllZeroWeights, "cannot normalize an all-zero weight vector");
    EnsembleWeights w;
    w.normalized = true;
    for (double a : alpha) w.alpha.push_back(a / sum);
    return w;
}

void check_alignment(std::span<const ProbabilityMatrix> mats, std::size_t labels) {
    require(!mats.empty(), ErrorCode::kAlignmentMismatch, "no probability matrices");
    require(labels > 0, ErrorCode::kEmptyEvalSet, "evaluation set is empty");
    for (const auto& m : mats) {
        require(m.size() == labels, ErrorCode::kAlignmentMismatch,
                m.hospital_id + " has " + std::to_string(m.size()) + " rows, expected " + std::to_string(labels));
        require(m.num_classes == mats[0].num_classes, ErrorCode::kAlignmentMismatch,
                m.hospital_id + " disagrees on the class count");
        for (const auto& row : m.rows)
            require(row.size() == m.num_classes, ErrorCode::kAlignmentMismatch, m.hospital_id + " has a ragged row");
    }
}

std::vector<int> ensemble_predict(std::span<const ProbabilityMatrix> mats, const EnsembleWeights& alpha) {
    require(!mats.empty(), ErrorCode::kAlignmentMismatch, "no probability matrices");
    check_alignment(mats, mats[0].size());
    require(alpha.alpha.size() == mats.size(), ErrorCode::kAlignmentMismatch, "one weight per hospital required");
    const std::size_t n = mats[0].size(), c = mats[0].num_classes;
    std::vector<int> out(n);
    std::vector<double> acc(c);
    for (std::size_t r = 0; r < n; ++r) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t i = 0; i < mats.size(); ++i)
            for (std::size_t k = 0; k < c; ++k) acc[k] += alpha.alpha[i] * mats[i].rows[r][k];
        std::size_t best = 0;
        for (std::size_t k = 1; k < c; ++k)
            if (acc[k] > acc[best]) best = k;
        out[r] = static_cast<int>(best);
    }
    return out;
}

double accuracy_score(std::span<const int> predicted, std::span<const int> truth) {
    require(predicted.size() == truth.size(), ErrorCode::kLengthMismatch, "prediction and label counts differ");
    require(!truth.empty(), ErrorCode::kEmptyEvalSet, "accuracy over zero samples");
    std::size_t hit = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hit += predicted[i] == truth[i];
    return static_cast<double>(hit) / static_cast<double>(truth.size());
}

TuningResult grid_search_weights(std::span<const ProbabilityMatrix> mats, std::span<const int> truth,
                                 const WeightGrid& grid) {
    check_alignment(mats, truth.size());
    grid.validate();
    const std::size_t h = mats.size(), g = grid.values.size();

    TuningResult best;
    bool have = false;
    std::set<std::vector<long long>> seen;
    std::vector<std::size_t> idx(h, 0);
    std::vector<double> cand(h);
    while (true) {
        for (std::size_t i = 0; i < h; ++i) cand[i] = grid.values[idx[i]];
        bool all_zero = true;
        for (double v : cand) all_zero = all_zero && v == 0.0;
        if (all_zero) {
            ++best.candidates_skipped;
        } else {
            EnsembleWeights w = l1_normalize(cand);
            std::vector<long long> key(h);
            for (std::size_t i = 0; i < h; ++i) key[i] = std::llround(w.alpha[i] * 1e12);
            if (!seen.insert(key).second) {
                ++best.candidates_skipped;
            } else {
                ++best.candidates_evaluated;
                const auto pred = ensemble_predict(mats, w);
                std::size_t correct = 0;
                for (std::size_t r = 0; r < truth.size(); ++r) correct += pred[r] == truth[r];
                if (!have || correct > best.correct) {
                    have = true;
                    best.correct = correct;
                    best.alpha_best = std::move(w);
                }
            }
        }
        // Lexicographic successor; the last hospital's index varies fastest.
        std::size_t pos = h;
        while (pos > 0 && idx[pos - 1] + 1 == g) idx[--pos] = 0;
        if (pos == 0) break;
        ++idx[pos - 1];
    }
    require(have, ErrorCode::kAllZeroWeights, "the grid yields only all-zero candidates");
    best.accuracy = static_cast<double>(best.correct) / static_cast<double>(truth.size());
    return best;
}

void write_probability_csv(std::ostream& out, const ProbabilityMatrix& mat, std::span<const int> labels) {
    require(labels.size() == mat.size(), ErrorCode::kAlignmentMismatch, "label count does not match rows");
    out << "hospital_id,model_id,sample,label";
    for (std::size_t k = 0; k < mat.num_classes; ++k) out << ",p" << k;
    out << '\n';
    char buf[32];
    for (std::size_t r = 0; r < mat.size(); ++r) {
        out << mat.hospital_id << ',' << mat.model_id << ',' << r << ',' << labels[r];
        for (double p : mat.rows[r]) {
            std::snprintf(buf, sizeof buf, "%.17g", p);
            out << ',' << buf;
        }
        out << '\n';
    }
}

void write_probability_csv(const std::string& path, const ProbabilityMatrix& mat, std::span<const int> labels) {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::kIo, "cannot write " + path);
    write_probability_csv(out, mat, labels);
    if (!out) fail(ErrorCode::kIo, "write failed for " + path);
}

ProbabilityMatrix read_probability_csv(const std::string& path, std::vector<int>* labels) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::kIo, "cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) fail(ErrorCode::kIo, path + ": empty file");
    auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::stringstream ss(s);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        return cells;
    };
    const auto header = split(line);
    if (header.size() < 5 || header[0] != "hospital_id" || header[1] != "model_id")
        fail(ErrorCode::kIo, path + ": not a probability matrix");
    ProbabilityMatrix m;
    m.num_classes = header.size() - 4;
    if (labels) labels->clear();
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split(line);
        const std::string where = path + ":" + std::to_string(row);
        if (cells.size() != header.size()) fail(ErrorCode::kIo, where + ": wrong column count");
        if (m.rows.empty()) {
            m.hospital_id = cells[0];
            m.model_id = cells[1];
        } else if (cells[0] != m.hospital_id || cells[1] != m.model_id) {
            fail(ErrorCode::kIo, where + ": mixed hospital or model ids");
        }
        try {
            if (std::stoul(cells[2]) != m.rows.size()) fail(ErrorCode::kIo, where + ": samples out of order");
            if (labels) labels->push_back(std::stoi(cells[3]));
            std::vector<double> p(m.num_classes);
            for (std::size_t k = 0; k < m.num_classes; ++k) p[k] = std::stod(cells[4 + k]);
            m.rows.push_back(std::move(p));
        } catch (const std::logic_error&) {
            fail(ErrorCode::kIo, where + ": malformed number");
        }
    }
    m.validate();
    return m;
}

}  // namespace hefl
