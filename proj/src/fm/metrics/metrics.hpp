// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fm/motion/motion.hpp"

namespace fm::metrics {

inline constexpr int kFeatureDim = 64;

using Feature = std::vector<double>;

/// Frozen motion embedder: per-feature temporal mean and std pooling, a
/// seeded Gaussian projection, then tanh.
class FeatureExtractor {
 public:
  FeatureExtractor(const FeatureLayout& layout, uint64_t seed = 0x5EEDF00Dull, int dim = kFeatureDim);
  /// Loads a [2D x dim] projection from a JSON array of rows.
  static FeatureExtractor from_file(const FeatureLayout& layout, const std::string& path);

  Feature extract(const MotionTensor& m) const;
  std::vector<Feature> extract(const std::vector<const MotionTensor*>& motions) const;
  std::string version() const { return version_; }
  int dim() const { return dim_; }

 private:
  FeatureLayout layout_;
  int dim_;
  std::vector<double> projection_;  // [2D, dim]
  std::string version_;
};

/// Frechet distance between Gaussian fits (unbiased covariance). Throws
/// std::invalid_argument with fewer than two samples per side and
/// NumericError when a covariance is not PSD within tolerance.
double fid(const std::vector<Feature>& a, const std::vector<Feature>& b);

/// Mean Euclidean distance over constrained (frame, joint) pairs.
double average_error(const MotionTensor& generated, const TrajectoryHint& hint);

/// Mean distance over up to `pairs` disjoint random pairs.
double diversity(const std::vector<Feature>& feats, int pairs, uint64_t seed);

struct FootSkateOptions {
  double height = 0.05;    // foot counts as grounded below this height
  double distance = 0.1;   // horizontal displacement per frame that counts as sliding
};
/// Fraction of frame transitions in which some grounded foot slides.
double foot_skate_ratio(const MotionTensor& m, const FootSkateOptions& opt = {});

struct RetrievalResult {
  std::vector<int> ks;
  std::vector<double> recall;  // percent, one per k
  double avg_rank = 0.0;
  std::vector<int> ranks;      // 1-based
};
RetrievalResult retrieval_metrics(const std::vector<Feature>& edited, const std::vector<Feature>& targets, const std::vector<int>& ks = {1, 2, 3});

/// Mean pelvis distance after aligning initial pelvis positions, over the common prefix.
double tsi(const MotionTensor& source, const MotionTensor& generated);

struct Timing {
  double mean = 0.0;
  double variance = 0.0;
  int trials = 0;
};
/// Seconds per call of `sampler`, averaged over `trials` after one warm-up call.
Timing aits(const std::function<void()>& sampler, int trials);

/// Nearest-centroid classifier over motion features.
class CentroidClassifier {
 public:
  void fit(const std::vector<Feature>& feats, const std::vector<int>& labels);
  int predict(const Feature& f) const;
  double accuracy(const std::vector<Feature>& feats, const std::vector<int>& labels) const;

 private:
  std::vector<int> labels_;
  std::vector<Feature> centroids_;
};

double feature_distance(const Feature& a, const Feature& b);

}  // namespace fm::metrics
