#ifndef KDTL_MOLECULE_HPP
#define KDTL_MOLECULE_HPP

#include <string>

#include "kdtl/error.hpp"

namespace kdtl {

/// The particle being interfered. Polarizabilities are volumes in A^3 (alpha_SI / 4 pi eps0).
struct MoleculeSpec {
  std::string name;
  double mass_amu = 0.0;
  double alpha_stat_a3 = 0.0;
  double alpha_opt_a3 = 0.0;
  double sigma_abs_cm2 = 0.0;

  void validate() const {
    if (!(mass_amu > 0.0)) throw DomainError("molecule mass must be positive");
    if (!(alpha_stat_a3 >= 0.0)) throw DomainError("alpha_stat must be non-negative");
    if (!(alpha_opt_a3 >= 0.0)) throw DomainError("alpha_opt must be non-negative");
    if (!(sigma_abs_cm2 >= 0.0)) throw DomainError("sigma_abs must be non-negative");
  }
};

}  // namespace kdtl

#endif  // KDTL_MOLECULE_HPP
