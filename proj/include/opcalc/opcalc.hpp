#pragma once

#include "opcalc/linalg.hpp"
#include "opcalc/random.hpp"
#include "opcalc/functions.hpp"
#include "opcalc/divdiff.hpp"
#include "opcalc/moi.hpp"
#include "opcalc/paths.hpp"
#include "opcalc/calculus.hpp"
#include "opcalc/io.hpp"
#include "opcalc/harness.hpp"
