#pragma once

#include "mimocap/common.hpp"
#include "mimocap/sphere.hpp"
#include "mimocap/antenna.hpp"
#include "mimocap/spread.hpp"
#include "mimocap/operators.hpp"
#include "mimocap/capacity.hpp"
#include "mimocap/analysis.hpp"
#include "mimocap/asymptotics.hpp"
#include "mimocap/config.hpp"
#include "mimocap/io.hpp"
