#include "hefl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>

namespace hefl {

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

template <class T>
T parse_number(std::string_view text, const std::string& where) {
    text = trim(text);
    T v{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size())
        fail(ErrorCode::kIo, where + ": cannot parse '" + std::string(text) + "'");
    return v;
}

std::uint32_t read_be32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) fail(ErrorCode::kIo, path + ": truncated IDX header");
    return std::uint32_t{b[0]} << 24 | std::uint32_t{b[1]} << 16 | std::uint32_t{b[2]} << 8 | b[3];
}

}  // namespace

LabeledDataset load_csv_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::kIo, "cannot open dataset " + path);
    std::string line;
    if (!std::getline(in, line)) fail(ErrorCode::kIo, path + ": empty file");
    const auto header = split_commas(line);
    if (header.size() < 2) fail(ErrorCode::kIo, path + ": header must list input dims and the class count");

    LabeledDataset data;
    for (std::size_t i = 0; i + 1 < header.size(); ++i)
        data.input_shape.push_back(parse_number<std::size_t>(header[i], path + " header"));
    data.num_classes = parse_number<std::size_t>(header.back(), path + " header");
    const std::size_t d = shape_size(data.input_shape);

    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto cells = split_commas(line);
        const std::string where = path + ":" + std::to_string(row);
        if (cells.size() != d + 1)
            fail(ErrorCode::kIo, where + ": expected " + std::to_string(d + 1) + " columns, got " +
                                     std::to_string(cells.size()));
        std::vector<double> x(d);
        for (std::size_t i = 0; i < d; ++i) x[i] = parse_number<double>(cells[i], where);
        data.inputs.push_back(std::move(x));
        data.labels.push_back(parse_number<int>(cells[d], where));
    }
    data.validate();
    minmax_scale(data);
    return data;
}

LabeledDataset load_idx_dataset(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary), lab(labels_path, std::ios::binary);
    if (!img) fail(ErrorCode::kIo, "cannot open " + images_path);
    if (!lab) fail(ErrorCode::kIo, "cannot open " + labels_path);
    if (read_be32(img, images_path) != 0x00000803) fail(ErrorCode::kIo, images_path + ": not an IDX image file");
    if (read_be32(lab, labels_path) != 0x00000801) fail(ErrorCode::kIo, labels_path + ": not an IDX label file");
    const std::size_t n = read_be32(img, images_path);
    const std::size_t rows = read_be32(img, images_path), cols = read_be32(img, images_path);
    if (read_be32(lab, labels_path) != n) fail(ErrorCode::kIo, "IDX image and label counts differ");

    LabeledDataset data;
    data.input_shape = {1, rows, cols};
    std::vector<unsigned char> buf(rows * cols);
    int max_label = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size())))
            fail(ErrorCode::kIo, images_path + ": truncated pixel data");
        char label = 0;
        if (!lab.get(label)) fail(ErrorCode::kIo, labels_path + ": truncated label data");
        data.inputs.emplace_back(buf.begin(), buf.end());
        data.labels.push_back(static_cast<unsigned char>(label));
        max_label = std::max(max_label, data.labels.back());
    }
    data.num_classes = static_cast<std::size_t>(max_label) + 1;
    data.validate();
    minmax_scale(data);
    return data;
}

LabeledDataset make_blobs(std::size_t samples, std::size_t features, std::size_t classes, double spread, Rng& rng) {
    require(samples > 0 && features > 0 && classes > 0, ErrorCode::kInvalidArgument, "blobs need positive sizes");
    require(spread >= 0.0 && std::isfinite(spread), ErrorCode::kInvalidArgument, "blob spread must be >= 0");
    std::vector<std::vector<double>> centres(classes, std::vector<double>(features));
    for (auto& c : centres)
        for (double& v : c) v = rng.uniform(-1.0, 1.0);
    LabeledDataset data;
    data.input_shape = {features};
    data.num_classes = classes;
    for (std::size_t i = 0; i < samples; ++i) {
        const std::size_t y = i % classes;
        std::vector<double> x(features);
        for (std::size_t k = 0; k < features; ++k) x[k] = centres[y][k] + spread * rng.normal();
        data.inputs.push_back(std::move(x));
        data.labels.push_back(static_cast<int>(y));
    }
    return data;
}

void minmax_scale(LabeledDataset& data) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& x : data.inputs)
        for (double v : x) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    if (!(hi > lo)) {
        for (auto& x : data.inputs) std::fill(x.begin(), x.end(), 0.0);
        return;
    }
    const double inv = 1.0 / (hi - lo);
    for (auto& x : data.inputs)
        for (double& v : x) v = (v - lo) * inv;
}

DataSplits split_dataset(const LabeledDataset& data, double train_fraction, double validation_fraction, Rng& rng) {
    require(train_fraction > 0.0 && validation_fraction > 0.0 && train_fraction + validation_fraction < 1.0,
            ErrorCode::kConfig, "split fractions must be positive and leave room for a test set");
    std::vector<std::size_t> idx(data.size());
    std::iota(idx.begin(), idx.end(), 0);
    rng.shuffle(idx);
    const auto n_train = static_cast<std::size_t>(static_cast<double>(data.size()) * train_fraction);
    const auto n_val = static_cast<std::size_t>(static_cast<double>(data.size()) * validation_fraction);
    std::span<const std::size_t> all(idx);
    DataSplits out;
    out.train = data.subset(all.subspan(0, n_train));
    out.validation = data.subset(all.subspan(n_train, n_val));
    out.test = data.subset(all.subspan(n_train + n_val));
    return out;
}

}  // namespace hefl
