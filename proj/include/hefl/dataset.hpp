#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hefl/neural.hpp"
#include "hefl/rng.hpp"

namespace hefl {

/// CSV: first row "d1,...,dk,num_classes" giving the input shape, then one
/// row per sample: flattened input values followed by the integer label.
/// Inputs are min-max scaled to [0, 1] over the whole file.
LabeledDataset load_csv_dataset(const std::string& path);

/// IDX (big-endian, magic 0x00000803 images / 0x00000801 labels). Pixel
/// values are min-max scaled to [0, 1]; num_classes = max label + 1.
LabeledDataset load_idx_dataset(const std::string& images_path, const std::string& labels_path);

/// Isotropic Gaussian clusters around random centres in [-1, 1]^features.
LabeledDataset make_blobs(std::size_t samples, std::size_t features, std::size_t classes,
                          double spread, Rng& rng);

/// Min-max scale every feature value in place to [0, 1] using the global range.
void minmax_scale(LabeledDataset& data);

struct DataSplits {
    LabeledDataset train;
    LabeledDataset validation;
    LabeledDataset test;
};

/// Seeded shuffle, then contiguous train / validation / test slices.
DataSplits split_dataset(const LabeledDataset& data, double train_fraction,
                         double validation_fraction, Rng& rng);

}  // namespace hefl
