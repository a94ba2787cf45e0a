#pragma once

#include "stableprod/analytics.hpp"
#include "stableprod/bridge.hpp"
#include "stableprod/errors.hpp"
#include "stableprod/estimators.hpp"
#include "stableprod/parallel.hpp"
#include "stableprod/paths.hpp"
#include "stableprod/rng.hpp"
#include "stableprod/version.hpp"
