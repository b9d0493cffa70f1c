#include "dpmlab/mixing_measure.hpp"

#include <cmath>
#include <stdexcept>

#include "dpmlab/report_io.hpp"

namespace dpmlab {

MixingMeasure MixingMeasure::dirac(const Eigen::VectorXd& at) {
  MixingMeasure m;
  m.atoms.push_back(at);
  m.weights.push_back(1.0);
  return m;
}

void MixingMeasure::validate(double tolerance) const {
  if (atoms.empty()) throw std::invalid_argument("MixingMeasure: no atoms");
  if (atoms.size() != weights.size())
    throw std::invalid_argument("MixingMeasure: atom and weight counts differ");
  const auto d = atoms.front().size();
  double total = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (atoms[i].size() != d) throw std::invalid_argument("MixingMeasure: mixed atom dimensions");
    if (!atoms[i].allFinite()) throw std::invalid_argument("MixingMeasure: non-finite atom");
    if (!(weights[i] >= 0.0)) throw std::invalid_argument("MixingMeasure: negative weight");
    if (radius && atoms[i].norm() > *radius * (1.0 + 1e-12))
      throw std::invalid_argument("MixingMeasure: atom outside declared radius");
    total += weights[i];
  }
  if (std::abs(total - 1.0) > tolerance)
    throw std::invalid_argument("MixingMeasure: weights do not sum to one");
}

double MixingMeasure::moment(const std::vector<int>& exponents) const {
  double s = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    double term = weights[i];
    for (std::size_t j = 0; j < exponents.size(); ++j)
      term *= std::pow(atoms[i][static_cast<Eigen::Index>(j)], exponents[j]);
    s += term;
  }
  return s;
}

std::string MixingMeasure::to_json() const {
  Json doc;
  Json a = Json::array();
  for (const auto& z : atoms) a.push_back(std::vector<double>(z.data(), z.data() + z.size()));
  doc["atoms"] = std::move(a);
  doc["weights"] = weights;
  if (radius) doc["radius"] = *radius;
  return canonical_json(doc);
}

MixingMeasure MixingMeasure::from_json(const std::string& text) {
  const Json doc = Json::parse(text);
  MixingMeasure m;
  for (const auto& row : doc.at("atoms")) {
    const auto v = row.get<std::vector<double>>();
    m.atoms.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
  }
  m.weights = doc.at("weights").get<std::vector<double>>();
  if (doc.contains("radius")) m.radius = doc["radius"].get<double>();
  m.validate(1e-9);
  return m;
}

}  // namespace dpmlab
