#include "deepen/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "deepen/rng.hpp"

namespace deepen {

Matrix Dataset::input(std::size_t i) const {
    Matrix v(features.cols, 1);
    for (std::size_t j = 0; j < features.cols; ++j) v(j, 0) = features(i, j);
    return v;
}

Matrix Dataset::label(std::size_t i) const {
    Matrix v(labels.cols, 1);
    for (std::size_t j = 0; j < labels.cols; ++j) v(j, 0) = labels(i, j);
    return v;
}

int Dataset::label_index(std::size_t i) const {
    for (std::size_t j = 0; j < labels.cols; ++j) {
        if (labels(i, j) == 1.0) return static_cast<int>(j);
    }
    throw std::runtime_error("Dataset: row without one-hot label");
}

Dataset Dataset::slice(std::size_t begin, std::size_t end) const {
    if (begin > end || end > size()) throw std::out_of_range("Dataset::slice: bad range");
    Dataset out;
    out.features = Matrix(end - begin, features.cols);
    out.labels = Matrix(end - begin, labels.cols);
    for (std::size_t i = begin; i < end; ++i) {
        for (std::size_t j = 0; j < features.cols; ++j) out.features(i - begin, j) = features(i, j);
        for (std::size_t j = 0; j < labels.cols; ++j) out.labels(i - begin, j) = labels(i, j);
    }
    return out;
}

Dataset generate_spirals(int n_total, double noise_std, double turns, std::uint64_t seed) {
    if (n_total <= 0 || n_total % 2 != 0) {
        throw std::invalid_argument("generate_spirals: n_total must be positive and even");
    }
    if (noise_std < 0.0) throw std::invalid_argument("generate_spirals: noise_std must be >= 0");

    const int per_class = n_total / 2;
    const double t_max = turns * 2.0 * 3.14159265358979323846;

    Dataset out;
    out.features = Matrix(static_cast<std::size_t>(n_total), 2);
    out.labels = Matrix(static_cast<std::size_t>(n_total), 2);

    RandomStream stream(seed, "spiral-data");
    std::size_t row = 0;
    for (int cls = 0; cls < 2; ++cls) {
        const double phase = cls * 3.14159265358979323846;
        for (int i = 0; i < per_class; ++i, ++row) {
            const double t = (1.0 - stream.next_unit()) * t_max;  // (0, t_max]
            const double radius = t / t_max;
            const double angle = t + phase;
            out.features(row, 0) = radius * std::cos(angle) + noise_std * stream.normal();
            out.features(row, 1) = radius * std::sin(angle) + noise_std * stream.normal();
            out.labels(row, cls == 0 ? 0 : 1) = 1.0;
        }
    }
    return out;
}

TrainTestSplit apply_roles(const Dataset& full, const std::vector<int>& roles) {
    if (roles.size() != full.size()) {
        throw std::invalid_argument("apply_roles: role count does not match dataset size");
    }
    std::size_t n_train = 0;
    for (int r : roles) n_train += (r == 0);

    TrainTestSplit out;
    out.roles = roles;
    out.train.features = Matrix(n_train, full.features.cols);
    out.train.labels = Matrix(n_train, full.labels.cols);
    out.test.features = Matrix(full.size() - n_train, full.features.cols);
    out.test.labels = Matrix(full.size() - n_train, full.labels.cols);

    std::size_t ti = 0, si = 0;
    for (std::size_t i = 0; i < full.size(); ++i) {
        Matrix& f = roles[i] == 0 ? out.train.features : out.test.features;
        Matrix& l = roles[i] == 0 ? out.train.labels : out.test.labels;
        const std::size_t r = roles[i] == 0 ? ti++ : si++;
        for (std::size_t j = 0; j < full.features.cols; ++j) f(r, j) = full.features(i, j);
        for (std::size_t j = 0; j < full.labels.cols; ++j) l(r, j) = full.labels(i, j);
    }
    return out;
}

TrainTestSplit split_train_test(const Dataset& full, int n_train, std::uint64_t seed) {
    const std::size_t n = full.size();
    if (n_train <= 0 || static_cast<std::size_t>(n_train) >= n) {
        throw std::invalid_argument("split_train_test: n_train must be in (0, N)");
    }

    const std::size_t num_classes = full.labels.cols;
    std::vector<std::vector<std::size_t>> by_class(num_classes);
    for (std::size_t i = 0; i < n; ++i) {
        by_class[static_cast<std::size_t>(full.label_index(i))].push_back(i);
    }

    RandomStream stream(seed, "train-test-split");
    std::vector<int> roles(n, 1);
    // Per class, a shuffled prefix proportional to the class share goes to
    // train; leftover slots (from rounding) are filled from the largest
    // classes first so the totals come out exact.
    std::vector<std::size_t> take(num_classes);
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < num_classes; ++c) {
        stream.shuffle(by_class[c]);
        take[c] = static_cast<std::size_t>(n_train) * by_class[c].size() / n;
        assigned += take[c];
    }
    std::size_t shortfall = static_cast<std::size_t>(n_train) - assigned;
    for (std::size_t c = 0; shortfall > 0; c = (c + 1) % num_classes) {
        if (take[c] < by_class[c].size()) {
            ++take[c];
            --shortfall;
        }
    }
    for (std::size_t c = 0; c < num_classes; ++c) {
        for (std::size_t k = 0; k < take[c]; ++k) roles[by_class[c][k]] = 0;
    }
    return apply_roles(full, roles);
}

namespace {
std::string format_double_17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
}  // namespace

void write_dataset_csv(const std::string& path, const Dataset& full,
                       const std::vector<int>& roles) {
    if (roles.size() != full.size()) {
        throw std::invalid_argument("write_dataset_csv: role count mismatch");
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_dataset_csv: cannot open " + path);
    for (std::size_t j = 0; j < full.features.cols; ++j) out << "x" << j << ",";
    out << "label,role\n";
    for (std::size_t i = 0; i < full.size(); ++i) {
        for (std::size_t j = 0; j < full.features.cols; ++j) {
            out << format_double_17(full.features(i, j)) << ",";
        }
        out << full.label_index(i) << "," << (roles[i] == 0 ? "train" : "test") << "\n";
    }
}

LoadedDataset load_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_dataset_csv: cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_dataset_csv: empty file " + path);
    std::size_t dim = 0;
    {
        std::stringstream header(line);
        std::string col;
        while (std::getline(header, col, ',')) {
            if (!col.empty() && col[0] == 'x') ++dim;
        }
    }
    if (dim == 0) throw std::runtime_error("load_dataset_csv: no feature columns in " + path);

    std::vector<double> feats;
    std::vector<int> labels;
    std::vector<int> roles;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string cell;
        for (std::size_t j = 0; j < dim; ++j) {
            if (!std::getline(row, cell, ',')) {
                throw std::runtime_error("load_dataset_csv: short row in " + path);
            }
            feats.push_back(std::stod(cell));
        }
        if (!std::getline(row, cell, ',')) throw std::runtime_error("load_dataset_csv: missing label");
        labels.push_back(std::stoi(cell));
        if (!std::getline(row, cell, ',')) throw std::runtime_error("load_dataset_csv: missing role");
        if (cell != "train" && cell != "test") {
            throw std::runtime_error("load_dataset_csv: bad role '" + cell + "'");
        }
        roles.push_back(cell == "train" ? 0 : 1);
    }

    const std::size_t n = labels.size();
    int max_label = 0;
    for (int l : labels) max_label = std::max(max_label, l);

    LoadedDataset out;
    out.roles = std::move(roles);
    out.full.features = Matrix(n, dim);
    out.full.labels = Matrix(n, static_cast<std::size_t>(max_label) + 1);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < dim; ++j) out.full.features(i, j) = feats[i * dim + j];
        out.full.labels(i, static_cast<std::size_t>(labels[i])) = 1.0;
    }
    return out;
}

}  // namespace deepen
