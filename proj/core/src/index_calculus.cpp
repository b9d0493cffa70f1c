#include "dpmlab/index_calculus.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "dpmlab/report_io.hpp"

namespace dpmlab {

int strict_floor(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("strict_floor: non-finite argument");
  return static_cast<int>(std::ceil(x)) - 1;
}

MultiIndex::MultiIndex(std::vector<int> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw std::invalid_argument("MultiIndex: dimension must be >= 1");
  for (int e : entries_) {
    if (e < 0) throw std::invalid_argument("MultiIndex: negative entry");
    order_ += e;
  }
}

MultiIndex::MultiIndex(std::initializer_list<int> entries)
    : MultiIndex(std::vector<int>(entries)) {}

MultiIndex MultiIndex::zero(int dimension) {
  return MultiIndex(std::vector<int>(static_cast<std::size_t>(dimension), 0));
}

MultiIndex MultiIndex::unit(int dimension, int axis) {
  std::vector<int> e(static_cast<std::size_t>(dimension), 0);
  e.at(static_cast<std::size_t>(axis)) = 1;
  return MultiIndex(std::move(e));
}

BigInt MultiIndex::factorial() const {
  BigInt out = 1;
  for (int e : entries_)
    for (int i = 2; i <= e; ++i) out *= i;
  return out;
}

double MultiIndex::factorial_value() const {
  double out = 1.0;
  for (int e : entries_) out *= std::tgamma(e + 1.0);
  return out;
}

bool MultiIndex::all_even() const {
  for (int e : entries_)
    if (e % 2 != 0) return false;
  return true;
}

double MultiIndex::weighted_order(const std::vector<double>& alpha) const {
  if (alpha.size() != entries_.size())
    throw std::invalid_argument("weighted_order: anisotropy dimension mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < entries_.size(); ++j) s += entries_[j] * alpha[j];
  return s;
}

bool MultiIndex::dominated_by(const MultiIndex& other) const {
  if (other.dimension() != dimension()) return false;
  for (std::size_t j = 0; j < entries_.size(); ++j)
    if (entries_[j] > other.entries_[j]) return false;
  return true;
}

MultiIndex MultiIndex::operator+(const MultiIndex& other) const {
  if (other.dimension() != dimension()) throw std::invalid_argument("MultiIndex: dimension mismatch");
  std::vector<int> e(entries_);
  for (std::size_t j = 0; j < e.size(); ++j) e[j] += other.entries_[j];
  return MultiIndex(std::move(e));
}

MultiIndex MultiIndex::operator-(const MultiIndex& other) const {
  if (other.dimension() != dimension()) throw std::invalid_argument("MultiIndex: dimension mismatch");
  std::vector<int> e(entries_);
  for (std::size_t j = 0; j < e.size(); ++j) e[j] -= other.entries_[j];
  return MultiIndex(std::move(e));
}

std::string MultiIndex::to_string() const {
  std::ostringstream os;
  os << '(';
  for (std::size_t j = 0; j < entries_.size(); ++j) os << (j ? "," : "") << entries_[j];
  os << ')';
  return os.str();
}

bool graded_lex_less(const MultiIndex& a, const MultiIndex& b) {
  if (a.order() != b.order()) return a.order() < b.order();
  // Within an order, larger leading entries come first: (1,0) before (0,1).
  return a.entries() > b.entries();
}

std::size_t MultiIndexHash::operator()(const MultiIndex& k) const {
  std::size_t h = 1469598103934665603ULL;
  for (int e : k.entries()) {
    h ^= static_cast<std::size_t>(e) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

namespace {

// Compositions of `total` into `parts` non-negative entries, leading entry descending.
void compositions(int total, int parts, std::vector<int>& prefix, std::vector<MultiIndex>& out) {
  if (parts == 1) {
    prefix.push_back(total);
    out.emplace_back(prefix);
    prefix.pop_back();
    return;
  }
  for (int first = total; first >= 0; --first) {
    prefix.push_back(first);
    compositions(total - first, parts - 1, prefix, out);
    prefix.pop_back();
  }
}

}  // namespace

std::vector<MultiIndex> enumerate_multiindices(int dimension, int max_order) {
  if (dimension < 1) throw std::invalid_argument("enumerate_multiindices: dimension must be >= 1");
  if (max_order < 0) throw std::invalid_argument("enumerate_multiindices: max_order must be >= 0");
  std::vector<MultiIndex> out;
  std::vector<int> prefix;
  for (int order = 0; order <= max_order; ++order) compositions(order, dimension, prefix, out);
  return out;
}

std::vector<MultiIndex> enumerate_dominated(const MultiIndex& bound) {
  std::vector<MultiIndex> out;
  const auto& top = bound.entries();
  std::vector<int> cur(top.size(), 0);
  while (true) {
    out.emplace_back(cur);
    std::size_t j = 0;
    while (j < cur.size() && cur[j] == top[j]) cur[j++] = 0;
    if (j == cur.size()) break;
    ++cur[j];
  }
  std::sort(out.begin(), out.end(), graded_lex_less);
  return out;
}

BigInt gaussian_moment_exact(const MultiIndex& k) {
  BigInt out = 1;
  for (int e : k.entries()) {
    if (e % 2 != 0) return 0;
    for (int i = e - 1; i > 1; i -= 2) out *= i;  // (e-1)!!
  }
  return out;
}

double gaussian_moment(const MultiIndex& k) {
  return gaussian_moment_exact(k).convert_to<double>();
}

CoefficientTable::CoefficientTable(int dimension, int max_order,
                                   std::vector<CoefficientEntry> entries)
    : dimension_(dimension), max_order_(max_order), entries_(std::move(entries)) {
  lookup_.reserve(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) lookup_.emplace(entries_[i].index, i);
}

const CoefficientEntry* CoefficientTable::find(const MultiIndex& k) const {
  auto it = lookup_.find(k);
  return it == lookup_.end() ? nullptr : &entries_[it->second];
}

const CoefficientEntry& CoefficientTable::at(const MultiIndex& k) const {
  const CoefficientEntry* e = find(k);
  if (!e) throw std::out_of_range("CoefficientTable: index " + k.to_string() + " not in table");
  return *e;
}

const Rational& CoefficientTable::c_exact(const MultiIndex& k) const { return at(k).c; }
const Rational& CoefficientTable::d_exact(const MultiIndex& k) const { return at(k).d; }
double CoefficientTable::c(const MultiIndex& k) const { return at(k).c.convert_to<double>(); }
double CoefficientTable::d(const MultiIndex& k) const { return at(k).d.convert_to<double>(); }

std::string rational_to_string(const Rational& q) {
  const BigInt num = boost::multiprecision::numerator(q);
  const BigInt den = boost::multiprecision::denominator(q);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

std::string CoefficientTable::to_json() const {
  Json doc;
  doc["dimension"] = dimension_;
  doc["max_order"] = max_order_;
  Json rows = Json::array();
  for (const auto& e : entries_) {
    rows.push_back(Json{{"index", e.index.entries()},
                        {"c", rational_to_string(e.c)},
                        {"d", rational_to_string(e.d)}});
  }
  doc["entries"] = std::move(rows);
  return canonical_json(doc);
}

CoefficientTable cd_coefficients(int dimension, int max_order) {
  if (dimension < 1) throw std::invalid_argument("cd_coefficients: dimension must be >= 1");
  if (max_order < 0 || max_order > CoefficientTable::kMaxOrder)
    throw std::invalid_argument("cd_coefficients: max_order must lie in [0, 32]");

  const std::vector<MultiIndex> all = enumerate_multiindices(dimension, max_order);
  std::vector<CoefficientEntry> entries;
  entries.reserve(all.size());
  std::unordered_map<MultiIndex, std::size_t, MultiIndexHash> pos;

  for (const MultiIndex& n : all) {
    if (n.order() == 0) continue;
    const Rational m_n(gaussian_moment_exact(n), n.factorial());
    Rational c = 0;
    Rational d;
    if (n.order() == 1) {
      d = -m_n;
    } else {
      // Splits n = l + k with both orders >= 1; only all-even k carry non-zero moments.
      for (const MultiIndex& k : enumerate_dominated(n)) {
        if (k.order() == 0 || k.order() == n.order() || !k.all_even()) continue;
        const MultiIndex l = n - k;
        const Rational& d_l = entries[pos.at(l)].d;
        if (d_l == 0) continue;
        Rational term(gaussian_moment_exact(k), k.factorial());
        if (k.order() % 2 != 0) term = -term;
        c -= term * d_l;
      }
      d = (n.order() % 2 == 0 ? m_n : Rational(-m_n)) + c;
    }
    pos.emplace(n, entries.size());
    entries.push_back(CoefficientEntry{n, c, d});
  }
  return CoefficientTable(dimension, max_order, std::move(entries));
}

}  // namespace dpmlab
