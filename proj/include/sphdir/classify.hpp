#pragma once

#include <vector>

#include "sphdir/mle.hpp"

namespace sphdir {

// Observations with group labels in 1..J.
struct LabeledSample {
    LabeledSample(DirectionalSample Y, std::vector<int> labels);

    DirectionalSample Y;
    std::vector<int> labels;
    int J = 0;

    std::vector<Eigen::Index> group_indices(int group) const;
    LabeledSample subset(const std::vector<Eigen::Index>& idx) const;
};

struct Classifier {
    Family family = Family::SC;
    std::vector<SphericalParams> groups;  // group j + 1 at index j
};

Classifier train(const LabeledSample& data, Family family);

// Allocation by the largest group log-density; exact ties go to the lowest group index. Returns 1..J.
int predict_class(const Classifier& clf, const UnitVector& y0);
std::vector<int> predict_classes(const Classifier& clf, const DirectionalSample& Y);

// log(sqrt(|mu|^2 + 1) - y0'mu); the SC rule picks the group with the smallest value.
double sc_discriminant_score(const SphericalParams& group, const Vector& y0);

struct CvSummary {
    std::vector<double> accuracies;  // one per repeat
    double mean = 0.0;
    double median = 0.0;
    int skipped_folds = 0;
};

// Stratified k-fold cross-validation repeated `repeats` times on streams rng.child(r).
CvSummary cross_validate(const LabeledSample& data, Family family, int folds, int repeats, const RngStream& rng);

// Fraction of equal labels.
double accuracy(const std::vector<int>& truth, const std::vector<int>& predicted);

}  // namespace sphdir
