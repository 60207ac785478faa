#pragma once

// Online two-class Naive Bayes over discretized features with add-alpha
// smoothing. Counts are the whole state, so training order never matters.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mrsim/core.hpp"
#include "mrsim/error.hpp"

namespace mrsim {

struct Posterior {
  double p_good = 0.5;
  double log_score_good = 0.0;
  double log_score_bad = 0.0;

  double p_bad() const { return 1.0 - p_good; }
};

class NaiveBayesClassifier {
 public:
  NaiveBayesClassifier(std::size_t features = kDefaultFeatureCount,
                       int levels = kLevels, double alpha = 1.0)
      : n_(features), levels_(levels), alpha_(alpha) {
    if (features < 1) throw ConfigError("classifier needs at least one feature");
    if (levels < 2) throw ConfigError("classifier needs at least two levels");
    if (!(alpha > 0.0) || !std::isfinite(alpha))
      throw ConfigError("classifier smoothing alpha must be > 0");
    cond_.assign(2 * n_ * static_cast<std::size_t>(levels_), 0);
  }

  std::size_t feature_count() const { return n_; }
  int levels() const { return levels_; }
  double alpha() const { return alpha_; }

  std::uint64_t class_count(Label c) const { return class_[idx(c)]; }
  std::uint64_t total() const { return class_[0] + class_[1]; }

  // Count of observations of class c whose feature j had level `level` (1-based).
  std::uint64_t cond_count(Label c, std::size_t j, int level) const {
    return cond_[slot(c, j, level)];
  }

  void observe(const FeatureVector& f, Label label) {
    check(f);
    ++class_[idx(label)];
    for (std::size_t j = 0; j < n_; ++j) ++cond_[slot(label, j, f.levels[j])];
  }

  Posterior posterior(const FeatureVector& f) const {
    check(f);
    Posterior p;
    p.log_score_good = log_score(f, Label::good);
    p.log_score_bad = log_score(f, Label::bad);
    // Logistic form of the two-term log-sum-exp; exactly 0.5 when scores tie.
    const double d = p.log_score_bad - p.log_score_good;
    p.p_good = d >= 0.0 ? std::exp(-d) / (1.0 + std::exp(-d)) : 1.0 / (1.0 + std::exp(d));
    return p;
  }

  Label classify(const FeatureVector& f) const {
    return posterior(f).p_good >= 0.5 ? Label::good : Label::bad;
  }

  // Invariant: for every class and feature the level counts sum to the class count.
  bool marginals_consistent() const {
    for (Label c : {Label::good, Label::bad}) {
      for (std::size_t j = 0; j < n_; ++j) {
        std::uint64_t sum = 0;
        for (int v = 1; v <= levels_; ++v) sum += cond_count(c, j, v);
        if (sum != class_count(c)) return false;
      }
    }
    return true;
  }

  // Replaces all counts; used to restore a serialized state.
  void load_counts(std::uint64_t good, std::uint64_t bad,
                   const std::vector<std::uint64_t>& cond_good,
                   const std::vector<std::uint64_t>& cond_bad) {
    const std::size_t per_class = n_ * static_cast<std::size_t>(levels_);
    if (cond_good.size() != per_class || cond_bad.size() != per_class)
      throw ConfigError("classifier count table has wrong dimensions");
    NaiveBayesClassifier probe(n_, levels_, alpha_);
    probe.class_ = {good, bad};
    std::copy(cond_good.begin(), cond_good.end(), probe.cond_.begin());
    std::copy(cond_bad.begin(), cond_bad.end(), probe.cond_.begin() + per_class);
    if (!probe.marginals_consistent())
      throw ConfigError("classifier count table violates marginal consistency");
    *this = std::move(probe);
  }

  // Flattened [feature][level] table for one class.
  std::vector<std::uint64_t> cond_table(Label c) const {
    const std::size_t per_class = n_ * static_cast<std::size_t>(levels_);
    const auto begin = cond_.begin() + idx(c) * per_class;
    return {begin, begin + per_class};
  }

  bool operator==(const NaiveBayesClassifier&) const = default;

 private:
  static std::size_t idx(Label c) { return c == Label::good ? 0 : 1; }

  std::size_t slot(Label c, std::size_t j, int level) const {
    return (idx(c) * n_ + j) * static_cast<std::size_t>(levels_) +
           static_cast<std::size_t>(level - 1);
  }

  void check(const FeatureVector& f) const {
    if (f.size() != n_)
      throw DomainError("feature vector has " + std::to_string(f.size()) +
                        " entries, classifier expects " + std::to_string(n_));
    for (int l : f.levels)
      if (l < 1 || l > levels_)
        throw DomainError("feature level " + std::to_string(l) + " outside 1.." +
                          std::to_string(levels_));
  }

  double log_score(const FeatureVector& f, Label c) const {
    const double nc = static_cast<double>(class_[idx(c)]);
    double s = std::log((nc + alpha_) / (static_cast<double>(total()) + 2.0 * alpha_));
    const double denom = nc + levels_ * alpha_;
    for (std::size_t j = 0; j < n_; ++j)
      s += std::log((static_cast<double>(cond_[slot(c, j, f.levels[j])]) + alpha_) / denom);
    return s;
  }

  std::size_t n_;
  int levels_;
  double alpha_;
  std::array<std::uint64_t, 2> class_{0, 0};
  std::vector<std::uint64_t> cond_;  // [class][feature][level]
};

}  // namespace mrsim
