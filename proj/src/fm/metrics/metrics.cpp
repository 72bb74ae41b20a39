// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#include "fm/metrics/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>

#include <json.hpp>

#include "fm/util/errors.hpp"
#include "fm/util/rng.hpp"

namespace fm::metrics {

FeatureExtractor::FeatureExtractor(const FeatureLayout& layout, uint64_t seed, int dim) : layout_(layout), dim_(dim) {
  if (dim <= 0) throw std::invalid_argument("feature dimension must be positive");
  const int in = 2 * layout.features;
  projection_.resize(static_cast<size_t>(in) * static_cast<size_t>(dim));
  Rng rng(seed);
  const double s = 1.0 / std::sqrt(static_cast<double>(in));
  for (auto& w : projection_) w = s * rng.normal();
  version_ = "meanstd-proj-tanh/" + std::to_string(seed) + "/" + std::to_string(dim);
}

FeatureExtractor FeatureExtractor::from_file(const FeatureLayout& layout, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open feature projection '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("feature projection '" + path + "': " + e.what());
  }
  auto rows = j.get<std::vector<std::vector<double>>>();
  if (static_cast<int>(rows.size()) != 2 * layout.features || rows.empty()) throw IoError("feature projection '" + path + "' must have 2D rows");
  FeatureExtractor f(layout, 0, static_cast<int>(rows[0].size()));
  for (size_t r = 0; r < rows.size(); ++r) {
    if (static_cast<int>(rows[r].size()) != f.dim_) throw IoError("feature projection '" + path + "' has ragged rows");
    for (int c = 0; c < f.dim_; ++c) f.projection_[r * static_cast<size_t>(f.dim_) + static_cast<size_t>(c)] = rows[r][static_cast<size_t>(c)];
  }
  f.version_ = "file:" + path;
  return f;
}

Feature FeatureExtractor::extract(const MotionTensor& m) const {
  if (m.frames < 1 || m.values.empty()) throw std::invalid_argument("feature_extract: empty motion");
  if (m.features() != layout_.features) throw std::invalid_argument("feature_extract: motion layout differs from the extractor's");
  const int D = m.features();
  std::vector<double> pooled(static_cast<size_t>(2 * D), 0.0);
  for (int f = 0; f < m.frames; ++f)
    for (int k = 0; k < D; ++k) pooled[static_cast<size_t>(k)] += m.at(f, k);
  for (int k = 0; k < D; ++k) pooled[static_cast<size_t>(k)] /= m.frames;
  for (int f = 0; f < m.frames; ++f)
    for (int k = 0; k < D; ++k) {
      const double r = m.at(f, k) - pooled[static_cast<size_t>(k)];
      pooled[static_cast<size_t>(D + k)] += r * r;
    }
  for (int k = 0; k < D; ++k) pooled[static_cast<size_t>(D + k)] = std::sqrt(pooled[static_cast<size_t>(D + k)] / m.frames);
  Feature out(static_cast<size_t>(dim_), 0.0);
  for (size_t r = 0; r < pooled.size(); ++r)
    for (int c = 0; c < dim_; ++c) out[static_cast<size_t>(c)] += pooled[r] * projection_[r * static_cast<size_t>(dim_) + static_cast<size_t>(c)];
  for (auto& v : out) v = std::tanh(v);
  return out;
}

std::vector<Feature> FeatureExtractor::extract(const std::vector<const MotionTensor*>& motions) const {
  std::vector<Feature> out;
  out.reserve(motions.size());
  for (const auto* m : motions) out.push_back(extract(*m));
  return out;
}

namespace {

using Mat = Eigen::MatrixXd;
using VecX = Eigen::VectorXd;

void gaussian_fit(const std::vector<Feature>& x, VecX& mu, Mat& cov) {
  const auto n = static_cast<Eigen::Index>(x.size());
  const auto d = static_cast<Eigen::Index>(x[0].size());
  Mat m(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(x[static_cast<size_t>(i)].size()) != d) throw std::invalid_argument("fid: features differ in dimension");
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = x[static_cast<size_t>(i)][static_cast<size_t>(j)];
  }
  mu = m.colwise().mean().transpose();
  Mat c = m.rowwise() - mu.transpose();
  cov = (c.transpose() * c) / static_cast<double>(n - 1);
}

// Symmetric PSD square root with eigenvalues clamped at zero.
Mat psd_sqrt(const Mat& a, const char* what) {
  Eigen::SelfAdjointEigenSolver<Mat> es(a);
  if (es.info() != Eigen::Success) throw NumericError(std::string("fid: eigendecomposition of ") + what + " failed");
  VecX ev = es.eigenvalues();
  const double tol = 1e-8 * std::max(1.0, ev.cwiseAbs().maxCoeff());
  if (ev.minCoeff() < -tol) throw NumericError(std::string("fid: ") + what + " is not PSD, min eigenvalue " + std::to_string(ev.minCoeff()));
  for (Eigen::Index i = 0; i < ev.size(); ++i) ev(i) = std::sqrt(std::max(0.0, ev(i)));
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double fid(const std::vector<Feature>& a, const std::vector<Feature>& b) {
  if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("fid: needs at least two samples per side");
  VecX mu_a, mu_b;
  Mat ca, cb;
  gaussian_fit(a, mu_a, ca);
  gaussian_fit(b, mu_b, cb);
  if (mu_a.size() != mu_b.size()) throw std::invalid_argument("fid: feature dimensions differ");
  // tr((A B)^{1/2}) = tr((A^{1/2} B A^{1/2})^{1/2}); the inner matrix is symmetric PSD.
  const Mat sa = psd_sqrt(ca, "covariance A");
  Mat inner = sa * cb * sa;
  inner = 0.5 * (inner + inner.transpose());
  const Mat root = psd_sqrt(inner, "covariance product");
  const double value = (mu_a - mu_b).squaredNorm() + ca.trace() + cb.trace() - 2.0 * root.trace();
  return std::max(0.0, value);
}

double average_error(const MotionTensor& generated, const TrajectoryHint& hint) {
  if (hint.count() == 0) throw std::invalid_argument("average_error: hint mask is empty");
  if (hint.frames != generated.frames || hint.joints != generated.layout.joints)
    throw std::invalid_argument("average_error: hint shape (" + std::to_string(hint.frames) + ", " + std::to_string(hint.joints) + ") does not match motion (" +
                                std::to_string(generated.frames) + ", " + std::to_string(generated.layout.joints) + ")");
  double s = 0.0;
  int n = 0;
  for (int f = 0; f < hint.frames; ++f)
    for (int j = 0; j < hint.joints; ++j) {
      if (!hint.constrained(f, j)) continue;
      auto p = generated.position(f, j);
      auto q = hint.coord(f, j);
      double d2 = 0.0;
      for (size_t a = 0; a < 3; ++a) d2 += (static_cast<double>(p[a]) - q[a]) * (static_cast<double>(p[a]) - q[a]);
      s += std::sqrt(d2);
      ++n;
    }
  return s / n;
}

double feature_distance(const Feature& a, const Feature& b) {
  if (a.size() != b.size()) throw std::invalid_argument("feature_distance: dimension mismatch");
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

double diversity(const std::vector<Feature>& feats, int pairs, uint64_t seed) {
  if (feats.size() < 2) throw std::invalid_argument("diversity: needs at least two motions");
  std::vector<int> idx(feats.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng.engine());
  const int available = static_cast<int>(feats.size() / 2);
  const int n = pairs <= 0 ? available : std::min(pairs, available);
  double s = 0.0;
  for (int p = 0; p < n; ++p) s += feature_distance(feats[static_cast<size_t>(idx[static_cast<size_t>(2 * p)])], feats[static_cast<size_t>(idx[static_cast<size_t>(2 * p + 1)])]);
  return s / n;
}

double foot_skate_ratio(const MotionTensor& m, const FootSkateOptions& opt) {
  const auto& l = m.layout;
  if (l.foot_joints.empty()) throw std::invalid_argument("foot_skate_ratio: layout '" + l.name + "' designates no foot joints");
  if (m.frames < 2) return 0.0;
  const int up = l.up_axis;
  int sliding = 0;
  for (int f = 0; f + 1 < m.frames; ++f) {
    bool any = false;
    for (int j : l.foot_joints) {
      auto p = m.position(f, j), q = m.position(f + 1, j);
      if (p[static_cast<size_t>(up)] >= opt.height) continue;
      double d2 = 0.0;
      for (int a = 0; a < 3; ++a)
        if (a != up) d2 += (static_cast<double>(q[static_cast<size_t>(a)]) - p[static_cast<size_t>(a)]) * (static_cast<double>(q[static_cast<size_t>(a)]) - p[static_cast<size_t>(a)]);
      if (std::sqrt(d2) > opt.distance) any = true;
    }
    sliding += any;
  }
  return static_cast<double>(sliding) / (m.frames - 1);
}

RetrievalResult retrieval_metrics(const std::vector<Feature>& edited, const std::vector<Feature>& targets, const std::vector<int>& ks) {
  const size_t b = edited.size();
  if (b < 2) throw std::invalid_argument("retrieval_metrics: batch size must be at least 2");
  if (targets.size() != b) throw std::invalid_argument("retrieval_metrics: edited and target batches differ in size");
  RetrievalResult r;
  r.ks = ks;
  r.recall.assign(ks.size(), 0.0);
  double total = 0.0;
  for (size_t i = 0; i < b; ++i) {
    const double own = feature_distance(edited[i], targets[i]);
    int rank = 1;
    for (size_t j = 0; j < b; ++j)
      if (j != i && feature_distance(edited[i], targets[j]) < own) ++rank;
    r.ranks.push_back(rank);
    total += rank;
    for (size_t k = 0; k < ks.size(); ++k)
      if (rank <= ks[k]) r.recall[k] += 1.0;
  }
  for (auto& v : r.recall) v = 100.0 * v / static_cast<double>(b);
  r.avg_rank = total / static_cast<double>(b);
  return r;
}

double tsi(const MotionTensor& source, const MotionTensor& generated) {
  const int pelvis = source.layout.pelvis_joint;
  const int n = std::min(source.frames, generated.frames);
  if (n < 1) throw std::invalid_argument("tsi: empty motion");
  auto s0 = source.position(0, pelvis), g0 = generated.position(0, pelvis);
  double total = 0.0;
  for (int f = 0; f < n; ++f) {
    auto s = source.position(f, pelvis), g = generated.position(f, pelvis);
    double d2 = 0.0;
    for (size_t a = 0; a < 3; ++a) {
      const double r = (static_cast<double>(g[a]) - g0[a]) - (static_cast<double>(s[a]) - s0[a]);
      d2 += r * r;
    }
    total += std::sqrt(d2);
  }
  return total / n;
}

Timing aits(const std::function<void()>& sampler, int trials) {
  if (trials < 3) throw std::invalid_argument("aits: needs at least 3 trials");
  sampler();
  std::vector<double> t(static_cast<size_t>(trials));
  for (auto& v : t) {
    const auto a = std::chrono::steady_clock::now();
    sampler();
    v = std::chrono::duration<double>(std::chrono::steady_clock::now() - a).count();
  }
  Timing r;
  r.trials = trials;
  for (double v : t) r.mean += v;
  r.mean /= trials;
  for (double v : t) r.variance += (v - r.mean) * (v - r.mean);
  r.variance /= trials - 1;
  return r;
}

void CentroidClassifier::fit(const std::vector<Feature>& feats, const std::vector<int>& labels) {
  if (feats.size() != labels.size() || feats.empty()) throw std::invalid_argument("classifier: features and labels must be non-empty and aligned");
  std::map<int, std::pair<Feature, int>> acc;
  for (size_t i = 0; i < feats.size(); ++i) {
    auto& [sum, n] = acc[labels[i]];
    if (sum.empty()) sum.assign(feats[i].size(), 0.0);
    for (size_t k = 0; k < sum.size(); ++k) sum[k] += feats[i][k];
    ++n;
  }
  labels_.clear();
  centroids_.clear();
  for (auto& [label, sn] : acc) {
    for (auto& v : sn.first) v /= sn.second;
    labels_.push_back(label);
    centroids_.push_back(std::move(sn.first));
  }
}

int CentroidClassifier::predict(const Feature& f) const {
  if (centroids_.empty()) throw std::logic_error("classifier: not fitted");
  size_t best = 0;
  double bd = feature_distance(f, centroids_[0]);
  for (size_t i = 1; i < centroids_.size(); ++i) {
    const double d = feature_distance(f, centroids_[i]);
    if (d < bd) bd = d, best = i;
  }
  return labels_[best];
}

double CentroidClassifier::accuracy(const std::vector<Feature>& feats, const std::vector<int>& labels) const {
  if (feats.size() != labels.size() || feats.empty()) throw std::invalid_argument("classifier: features and labels must be non-empty and aligned");
  int hit = 0;
  for (size_t i = 0; i < feats.size(); ++i) hit += predict(feats[i]) == labels[i];
  return 100.0 * hit / static_cast<double>(feats.size());
}

}  // namespace fm::metrics
