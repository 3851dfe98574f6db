#ifndef KDTL_ELEMENTS_HPP
#define KDTL_ELEMENTS_HPP

#include <algorithm>
#include <cctype>
#include <map>
#include <string>
#include <string_view>
#include <utility>

#include "kdtl/error.hpp"
#include "kdtl/text.hpp"

namespace kdtl {

/// Symbol -> standard atomic weight in amu.
using AtomicWeightTable = std::map<std::string, double, std::less<>>;

/// IUPAC 2021 abridged standard atomic weights; mirrors data/atomic_weights_2021.txt.
inline const AtomicWeightTable& standard_atomic_weights() {
  static const AtomicWeightTable table{
    {"H", 1.008},
    {"He", 4.0026},
    {"Li", 6.94},
    {"Be", 9.0122},
    {"B", 10.81},
    {"C", 12.011},
    {"N", 14.007},
    {"O", 15.999},
    {"F", 18.998},
    {"Ne", 20.180},
    {"Na", 22.990},
    {"Mg", 24.305},
    {"Al", 26.982},
    {"Si", 28.085},
    {"P", 30.974},
    {"S", 32.06},
    {"Cl", 35.45},
    {"Ar", 39.95},
    {"K", 39.098},
    {"Ca", 40.078},
    {"Sc", 44.956},
    {"Ti", 47.867},
    {"V", 50.942},
    {"Cr", 51.996},
    {"Mn", 54.938},
    {"Fe", 55.845},
    {"Co", 58.933},
    {"Ni", 58.693},
    {"Cu", 63.546},
    {"Zn", 65.38},
    {"Ga", 69.723},
    {"Ge", 72.630},
    {"As", 74.922},
    {"Se", 78.971},
    {"Br", 79.904},
    {"Kr", 83.798},
    {"Rb", 85.468},
    {"Sr", 87.62},
    {"Y", 88.906},
    {"Zr", 91.224},
    {"Nb", 92.906},
    {"Mo", 95.95},
    {"Ru", 101.07},
    {"Rh", 102.91},
    {"Pd", 106.42},
    {"Ag", 107.87},
    {"Cd", 112.41},
    {"In", 114.82},
    {"Sn", 118.71},
    {"Sb", 121.76},
    {"Te", 127.60},
    {"I", 126.90},
    {"Xe", 131.29},
    {"Cs", 132.91},
    {"Ba", 137.33},
    {"La", 138.91},
    {"Ce", 140.12},
    {"Pr", 140.91},
    {"Nd", 144.24},
    {"Sm", 150.36},
    {"Eu", 151.96},
    {"Gd", 157.25},
    {"Tb", 158.93},
    {"Dy", 162.50},
    {"Ho", 164.93},
    {"Er", 167.26},
    {"Tm", 168.93},
    {"Yb", 173.05},
    {"Lu", 174.97},
    {"Hf", 178.49},
    {"Ta", 180.95},
    {"W", 183.84},
    {"Re", 186.21},
    {"Os", 190.23},
    {"Ir", 192.22},
    {"Pt", 195.08},
    {"Au", 196.97},
    {"Hg", 200.59},
    {"Tl", 204.38},
    {"Pb", 207.2},
    {"Bi", 208.98},
    {"Th", 232.04},
    {"Pa", 231.04},
    {"U", 238.03},
  };
  return table;
}

inline AtomicWeightTable parse_atomic_weights(std::string_view document) {
  AtomicWeightTable out;
  for (const auto& kv : text::parse_kv(document)) {
    const auto& sym = kv.key;
    const bool shape_ok = !sym.empty() && sym.size() <= 3 && std::isupper(static_cast<unsigned char>(sym[0])) &&
                          std::all_of(sym.begin() + 1, sym.end(), [](char c) { return std::islower(static_cast<unsigned char>(c)) != 0; });
    if (!shape_ok) throw FormatError("invalid element symbol '" + sym + "'", kv.line);
    const auto w = text::parse_double(kv.value);
    if (!w || !(*w > 0.0)) throw FormatError("bad atomic weight for '" + sym + "'", kv.line);
    out.emplace(sym, *w);
  }
  return out;
}

inline AtomicWeightTable load_atomic_weights(const std::string& path) {
  return parse_atomic_weights(text::read_file(path));
}

/// Element counts of a flat formula such as "C30H12F30N2O4".
/// Grammar: (Symbol [count])+, Symbol = upper [lower]*, count = positive integer.
/// Repeated symbols accumulate ("CH3CH3" == "C2H6").
inline std::map<std::string, long long> formula_counts(std::string_view formula,
                                                       const AtomicWeightTable& table = standard_atomic_weights()) {
  if (text::trim(formula).empty()) throw FormulaError("empty formula");
  std::map<std::string, long long> counts;
  std::size_t i = 0;
  while (i < formula.size()) {
    const std::size_t start = i;
    if (!std::isupper(static_cast<unsigned char>(formula[i]))) {
      throw FormulaError("unexpected token '" + std::string(formula.substr(i)) + "' in formula '" +
                         std::string(formula) + "'");
    }
    ++i;
    while (i < formula.size() && std::islower(static_cast<unsigned char>(formula[i]))) ++i;
    const std::string symbol(formula.substr(start, i - start));
    const std::size_t digits = i;
    while (i < formula.size() && std::isdigit(static_cast<unsigned char>(formula[i]))) ++i;
    long long count = 1;
    if (i > digits) {
      const auto parsed = text::parse_int(formula.substr(digits, i - digits));
      if (!parsed) throw FormulaError("count out of range in token '" + std::string(formula.substr(start, i - start)) + "'");
      count = *parsed;
      if (count == 0) throw FormulaError("zero count in token '" + std::string(formula.substr(start, i - start)) + "'");
    }
    if (!table.contains(symbol)) throw FormulaError("unknown element '" + symbol + "'");
    counts[symbol] += count;
  }
  return counts;
}

/// Molar mass of a flat formula, in amu.
inline double parse_formula(std::string_view formula, const AtomicWeightTable& table = standard_atomic_weights()) {
  double mass = 0.0;
  // std::map iterates in symbol order, so the summation order (and result) is independent of how
  // the element groups were written.
  for (const auto& [symbol, count] : formula_counts(formula, table)) {
    mass += table.find(symbol)->second * static_cast<double>(count);
  }
  return mass;
}

}  // namespace kdtl

#endif  // KDTL_ELEMENTS_HPP
