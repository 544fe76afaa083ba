// Single-pass accumulation of central moments up to fourth order, with an
// associative merge (Pebay's update formulas) so batches combine in any
// grouping without changing the result for a fixed batch order.

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace lpmc {

class MomentAccumulator {
 public:
  void add(double x) {
    std::uint64_t n1 = n_;
    n_ += 1;
    double delta = x - mean_;
    double delta_n = delta / static_cast<double>(n_);
    double delta_n2 = delta_n * delta_n;
    double term1 = delta * delta_n * static_cast<double>(n1);
    mean_ += delta_n;
    m4_ += term1 * delta_n2 * (static_cast<double>(n_) * n_ - 3.0 * n_ + 3.0) +
           6.0 * delta_n2 * m2_ - 4.0 * delta_n * m3_;
    m3_ += term1 * delta_n * (static_cast<double>(n_) - 2.0) - 3.0 * delta_n * m2_;
    m2_ += term1;
  }

  void merge(const MomentAccumulator& other) {
    if (other.n_ == 0) return;
    if (n_ == 0) {
      *this = other;
      return;
    }
    double na = static_cast<double>(n_);
    double nb = static_cast<double>(other.n_);
    double n = na + nb;
    double delta = other.mean_ - mean_;
    double d2 = delta * delta;

    double m2 = m2_ + other.m2_ + d2 * na * nb / n;
    double m3 = m3_ + other.m3_ + d2 * delta * na * nb * (na - nb) / (n * n) +
                3.0 * delta * (na * other.m2_ - nb * m2_) / n;
    double m4 = m4_ + other.m4_ +
                d2 * d2 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n) +
                6.0 * d2 * (na * na * other.m2_ + nb * nb * m2_) / (n * n) +
                4.0 * delta * (na * other.m3_ - nb * m3_) / n;

    mean_ += delta * nb / n;
    m2_ = m2;
    m3_ = m3;
    m4_ = m4;
    n_ += other.n_;
  }

  std::uint64_t count() const { return n_; }
  double mean() const { return n_ ? mean_ : 0.0; }

  // Unbiased sample variance.
  double variance() const {
    if (n_ < 2) return 0.0;
    return m2_ / static_cast<double>(n_ - 1);
  }

  double fourth_central_moment() const {
    if (n_ == 0) return 0.0;
    return m4_ / static_cast<double>(n_);
  }

  // Delta-method standard error of the sample variance.
  double variance_stderr() const {
    if (n_ < 2) return 0.0;
    double v = variance();
    double spread = fourth_central_moment() - v * v;
    if (spread < 0.0) spread = 0.0;
    return std::sqrt(spread / static_cast<double>(n_));
  }

  double mean_stderr() const {
    if (n_ < 2) return 0.0;
    return std::sqrt(variance() / static_cast<double>(n_));
  }

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  double m3_ = 0.0;
  double m4_ = 0.0;
};

}  // namespace lpmc
