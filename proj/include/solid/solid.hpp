#pragma once

#include "acquisition.hpp"
#include "design.hpp"
#include "gp.hpp"
#include "loop.hpp"
#include "mcmc.hpp"
#include "normal.hpp"
#include "optimum.hpp"
#include "random.hpp"
#include "region.hpp"
#include "report.hpp"
#include "testbed.hpp"
#include "varsel.hpp"
