#pragma once

#include "lakelab/config.hpp"
#include "lakelab/cutoff.hpp"
#include "lakelab/depth.hpp"
#include "lakelab/elliptic.hpp"
#include "lakelab/errors.hpp"
#include "lakelab/geometry.hpp"
#include "lakelab/grid.hpp"
#include "lakelab/hodge.hpp"
#include "lakelab/limits.hpp"
#include "lakelab/transport.hpp"
#include "lakelab/verify.hpp"
