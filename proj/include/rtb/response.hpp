#pragma once

// User response prediction models.

#include "rtb/fm.hpp"
#include "rtb/ftrl.hpp"
#include "rtb/linear.hpp"
#include "rtb/probit.hpp"
#include "rtb/trees.hpp"
