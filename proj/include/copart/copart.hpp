#pragma once

#include "copart/error.hpp"
#include "copart/global.hpp"
#include "copart/impurity.hpp"
#include "copart/io.hpp"
#include "copart/iterative.hpp"
#include "copart/matrix.hpp"
#include "copart/objective.hpp"
#include "copart/prob.hpp"
#include "copart/report.hpp"
