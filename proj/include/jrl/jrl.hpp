#pragma once

#include "errors.hpp"
#include "series.hpp"
#include "specfun.hpp"
#include "voa.hpp"
#include "reduction.hpp"
#include "report.hpp"
#include "checks.hpp"
