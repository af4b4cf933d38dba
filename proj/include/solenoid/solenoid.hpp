#pragma once

#include "solenoid/common.hpp"
#include "solenoid/rng.hpp"
#include "solenoid/parallel.hpp"
#include "solenoid/symbolic.hpp"
#include "solenoid/grid_measure.hpp"
#include "solenoid/measure.hpp"
#include "solenoid/entropy.hpp"
#include "solenoid/projection.hpp"
#include "solenoid/conservation.hpp"
#include "solenoid/dimension.hpp"
#include "solenoid/hypothesis.hpp"
#include "solenoid/rotation.hpp"
#include "solenoid/config.hpp"
#include "solenoid/experiments.hpp"
