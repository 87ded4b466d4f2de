#pragma once

#include "gap/distributions.hpp"
#include "gap/error.hpp"
#include "gap/inference.hpp"
#include "gap/io.hpp"
#include "gap/marginal.hpp"
#include "gap/model.hpp"
#include "gap/parallel.hpp"
#include "gap/rng.hpp"
#include "gap/sparse.hpp"
#include "gap/special.hpp"

namespace gap {

inline constexpr const char* kVersion = "0.1.0";

} // namespace gap
