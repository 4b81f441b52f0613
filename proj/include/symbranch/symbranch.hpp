#pragma once

#include "symbranch/aging.hpp"
#include "symbranch/asymptotics.hpp"
#include "symbranch/chain.hpp"
#include "symbranch/config.hpp"
#include "symbranch/curve_cache.hpp"
#include "symbranch/errors.hpp"
#include "symbranch/io.hpp"
#include "symbranch/kernel.hpp"
#include "symbranch/kernel_spec.hpp"
#include "symbranch/lattice.hpp"
#include "symbranch/lyapunov.hpp"
#include "symbranch/moments.hpp"
#include "symbranch/montecarlo.hpp"
#include "symbranch/return_curve.hpp"
#include "symbranch/return_source.hpp"
#include "symbranch/validation.hpp"
#include "symbranch/version.hpp"
#include "symbranch/volterra.hpp"
