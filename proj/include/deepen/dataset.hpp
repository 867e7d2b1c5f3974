#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "deepen/matrix.hpp"

namespace deepen {

/// Supervised classification dataset: one feature row and one one-hot label
/// row per sample.
struct Dataset {
    Matrix features;  // N x d
    Matrix labels;    // N x c, one-hot rows

    std::size_t size() const { return features.rows; }
    std::size_t feature_dim() const { return features.cols; }
    std::size_t label_dim() const { return labels.cols; }

    /// Column-vector view (copy) of sample i's features / label.
    Matrix input(std::size_t i) const;
    Matrix label(std::size_t i) const;
    int label_index(std::size_t i) const;

    /// Rows [begin, end) as a new dataset.
    Dataset slice(std::size_t begin, std::size_t end) const;
};

/// Two-class planar spiral task. Class c draws its arm parameter t uniformly
/// from (0, turns*2*pi]; the point sits at radius t/(turns*2*pi) and angle
/// t + c*pi, plus Gaussian coordinate noise of std noise_std. Exactly
/// n_total/2 points per class (n_total must be even); deterministic in seed.
Dataset generate_spirals(int n_total, double noise_std, double turns, std::uint64_t seed);

struct TrainTestSplit {
    Dataset train;
    Dataset test;
    std::vector<int> roles;  // per original row: 0 = train, 1 = test
};

/// Seeded stratified split: per class, a shuffled n_train/num_classes prefix
/// goes to train, the rest to test. Keeps both splits within a few percent
/// of the original class balance.
TrainTestSplit split_train_test(const Dataset& full, int n_train, std::uint64_t seed);

TrainTestSplit apply_roles(const Dataset& full, const std::vector<int>& roles);

/// CSV with header x0,...,x{d-1},label,role; one row per sample in original
/// order, floats at 17 significant digits, role in {train,test}.
void write_dataset_csv(const std::string& path, const Dataset& full,
                       const std::vector<int>& roles);

struct LoadedDataset {
    Dataset full;
    std::vector<int> roles;
};

LoadedDataset load_dataset_csv(const std::string& path);

}  // namespace deepen
