#include "sphdir/classify.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "sphdir/density.hpp"
#include "sphdir/parallel.hpp"

namespace sphdir {

LabeledSample::LabeledSample(DirectionalSample Y_, std::vector<int> labels_) : Y(std::move(Y_)), labels(std::move(labels_)) {
    if (static_cast<Eigen::Index>(labels.size()) != Y.n()) throw DimensionError("label count differs from the sample size");
    for (int l : labels) {
        if (l < 1) throw DomainError("labels must be positive integers");
        J = std::max(J, l);
    }
}

std::vector<Eigen::Index> LabeledSample::group_indices(int group) const {
    std::vector<Eigen::Index> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == group) idx.push_back(static_cast<Eigen::Index>(i));
    return idx;
}

LabeledSample LabeledSample::subset(const std::vector<Eigen::Index>& idx) const {
    std::vector<int> sub;
    sub.reserve(idx.size());
    for (Eigen::Index i : idx) sub.push_back(labels[static_cast<std::size_t>(i)]);
    LabeledSample out(Y.subset(idx), std::move(sub));
    out.J = std::max(out.J, J);
    return out;
}

Classifier train(const LabeledSample& data, Family family) {
    if (data.J < 2) throw DomainError("discrimination needs at least 2 groups");
    Classifier clf{family, {}};
    for (int j = 1; j <= data.J; ++j) {
        const auto idx = data.group_indices(j);
        if (idx.size() < 2)
            throw DomainError("group " + std::to_string(j) + " has fewer than 2 training observations");
        clf.groups.push_back(fit_mle(data.Y.subset(idx), family).params);
    }
    return clf;
}

int predict_class(const Classifier& clf, const UnitVector& y0) {
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < clf.groups.size(); ++j) {
        const double s = logpdf(y0, clf.groups[j]);
        if (s > best_score) {
            best_score = s;
            best = static_cast<int>(j);
        }
    }
    return best + 1;
}

std::vector<int> predict_classes(const Classifier& clf, const DirectionalSample& Y) {
    const Eigen::Index n = Y.n();
    Matrix scores(n, static_cast<Eigen::Index>(clf.groups.size()));
    for (std::size_t j = 0; j < clf.groups.size(); ++j)
        scores.col(static_cast<Eigen::Index>(j)) = logpdf_rows(Y, clf.groups[j]);
    std::vector<int> out(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index arg = 0;
        for (Eigen::Index j = 1; j < scores.cols(); ++j)
            if (scores(i, j) > scores(i, arg)) arg = j;
        out[static_cast<std::size_t>(i)] = static_cast<int>(arg) + 1;
    }
    return out;
}

double sc_discriminant_score(const SphericalParams& group, const Vector& y0) {
    const Vector& mu = group.mu();
    return std::log(std::sqrt(mu.squaredNorm() + 1.0) - y0.dot(mu));
}

double accuracy(const std::vector<int>& truth, const std::vector<int>& predicted) {
    if (truth.size() != predicted.size()) throw DimensionError("label vectors differ in length");
    if (truth.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hits += truth[i] == predicted[i];
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

namespace {

// Per-group shuffle, then deal consecutive positions round-robin over folds.
std::vector<int> stratified_folds(const LabeledSample& data, int folds, RngStream& rng) {
    std::vector<int> fold(data.labels.size(), 0);
    int cursor = 0;
    for (int j = 1; j <= data.J; ++j) {
        auto idx = data.group_indices(j);
        std::shuffle(idx.begin(), idx.end(), rng.engine());
        for (Eigen::Index i : idx) fold[static_cast<std::size_t>(i)] = cursor++ % folds;
    }
    return fold;
}

}  // namespace

CvSummary cross_validate(const LabeledSample& data, Family family, int folds, int repeats, const RngStream& rng) {
    if (folds < 2) throw DomainError("cross-validation needs at least 2 folds");
    if (repeats < 1) throw DomainError("cross-validation needs at least 1 repeat");
    std::vector<double> acc(static_cast<std::size_t>(repeats), 0.0);
    std::vector<int> skipped(static_cast<std::size_t>(repeats), 0);

    parallel_for(acc.size(), [&](std::size_t r) {
        RngStream local = rng.child(r);
        const std::vector<int> fold = stratified_folds(data, folds, local);
        std::size_t hits = 0, total = 0;
        for (int f = 0; f < folds; ++f) {
            std::vector<Eigen::Index> tr, te;
            for (std::size_t i = 0; i < fold.size(); ++i)
                (fold[i] == f ? te : tr).push_back(static_cast<Eigen::Index>(i));
            if (te.empty()) continue;
            Classifier clf;
            try {
                clf = train(data.subset(tr), family);
            } catch (const Error&) {
                ++skipped[r];
                continue;
            }
            const LabeledSample test = data.subset(te);
            const std::vector<int> pred = predict_classes(clf, test.Y);
            for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == test.labels[i];
            total += pred.size();
        }
        acc[r] = total == 0 ? std::nan("") : static_cast<double>(hits) / static_cast<double>(total);
    });

    CvSummary out;
    for (std::size_t r = 0; r < acc.size(); ++r) {
        out.skipped_folds += skipped[r];
        if (!std::isnan(acc[r])) out.accuracies.push_back(acc[r]);
    }
    if (out.skipped_folds > 0)
        std::cerr << "warning: " << out.skipped_folds << " cross-validation fold(s) skipped (untrainable group)\n";
    if (out.accuracies.empty()) throw NumericalError("cross-validation: every fold was skipped");
    out.mean = std::accumulate(out.accuracies.begin(), out.accuracies.end(), 0.0) / out.accuracies.size();
    std::vector<double> sorted = out.accuracies;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();
    out.median = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
    return out;
}

}  // namespace sphdir
