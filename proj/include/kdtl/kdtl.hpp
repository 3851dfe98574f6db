#ifndef KDTL_KDTL_HPP
#define KDTL_KDTL_HPP

#include "kdtl/beam.hpp"
#include "kdtl/config.hpp"
#include "kdtl/conformer.hpp"
#include "kdtl/constants.hpp"
#include "kdtl/deflection.hpp"
#include "kdtl/elements.hpp"
#include "kdtl/error.hpp"
#include "kdtl/fit.hpp"
#include "kdtl/interferometer.hpp"
#include "kdtl/kinematics.hpp"
#include "kdtl/least_squares.hpp"
#include "kdtl/molecule.hpp"
#include "kdtl/scan.hpp"
#include "kdtl/text.hpp"

#endif  // KDTL_KDTL_HPP
