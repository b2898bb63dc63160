#ifndef CTBOOST_CTBOOST_HPP
#define CTBOOST_CTBOOST_HPP

#include "ctboost/core.hpp"
#include "ctboost/flow.hpp"
#include "ctboost/trajectory.hpp"
#include "ctboost/controls.hpp"
#include "ctboost/discrete.hpp"
#include "ctboost/geometry.hpp"
#include "ctboost/dataset.hpp"

#endif  // CTBOOST_CTBOOST_HPP
