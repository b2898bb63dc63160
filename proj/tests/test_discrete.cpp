#include <catch2/catch_amalgamated.hpp>
#include "ctboost/ctboost.hpp"
