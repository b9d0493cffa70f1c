#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <unordered_map>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace dpmlab {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

// Largest integer strictly below x, so strict_floor(2.0) == 1.
int strict_floor(double x);

class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> entries);
  MultiIndex(std::initializer_list<int> entries);
  static MultiIndex zero(int dimension);
  static MultiIndex unit(int dimension, int axis);

  int dimension() const { return static_cast<int>(entries_.size()); }
  int order() const { return order_; }
  int operator[](int axis) const { return entries_[static_cast<std::size_t>(axis)]; }
  const std::vector<int>& entries() const { return entries_; }

  BigInt factorial() const;  // k! = prod k_j!
  double factorial_value() const;
  bool all_even() const;
  // Weighted order <k, alpha>.
  double weighted_order(const std::vector<double>& alpha) const;
  bool dominated_by(const MultiIndex& other) const;  // componentwise <=

  MultiIndex operator+(const MultiIndex& other) const;
  MultiIndex operator-(const MultiIndex& other) const;
  bool operator==(const MultiIndex& other) const { return entries_ == other.entries_; }
  bool operator!=(const MultiIndex& other) const { return !(*this == other); }

  std::string to_string() const;

 private:
  std::vector<int> entries_;
  int order_ = 0;
};

// Graded lexicographic: lower order first, then larger leading entries first.
bool graded_lex_less(const MultiIndex& a, const MultiIndex& b);

struct MultiIndexHash {
  std::size_t operator()(const MultiIndex& k) const;
};

std::vector<MultiIndex> enumerate_multiindices(int dimension, int max_order);

// All multi-indices componentwise dominated by `bound`, in graded-lex order.
std::vector<MultiIndex> enumerate_dominated(const MultiIndex& bound);

BigInt gaussian_moment_exact(const MultiIndex& k);
double gaussian_moment(const MultiIndex& k);

struct CoefficientEntry {
  MultiIndex index;
  Rational c;
  Rational d;
};

class CoefficientTable {
 public:
  static constexpr int kMaxOrder = 32;

  CoefficientTable(int dimension, int max_order, std::vector<CoefficientEntry> entries);

  int dimension() const { return dimension_; }
  int max_order() const { return max_order_; }
  const std::vector<CoefficientEntry>& entries() const { return entries_; }

  const CoefficientEntry* find(const MultiIndex& k) const;
  const Rational& c_exact(const MultiIndex& k) const;
  const Rational& d_exact(const MultiIndex& k) const;
  double c(const MultiIndex& k) const;
  double d(const MultiIndex& k) const;

  std::string to_json() const;

 private:
  const CoefficientEntry& at(const MultiIndex& k) const;

  int dimension_;
  int max_order_;
  std::vector<CoefficientEntry> entries_;
  std::unordered_map<MultiIndex, std::size_t, MultiIndexHash> lookup_;
};

// Throws std::invalid_argument for dimension < 1 or max_order outside [0, 32].
CoefficientTable cd_coefficients(int dimension, int max_order);

std::string rational_to_string(const Rational& q);

}  // namespace dpmlab
