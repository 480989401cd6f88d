#ifndef OCCUDEV_OCCUDEV_HPP_
#define OCCUDEV_OCCUDEV_HPP_

#include "occudev/config.hpp"
#include "occudev/diffusion.hpp"
#include "occudev/geometry.hpp"
#include "occudev/harness.hpp"
#include "occudev/local_time.hpp"
#include "occudev/paths.hpp"
#include "occudev/rng.hpp"
#include "occudev/statistics.hpp"

#endif // OCCUDEV_OCCUDEV_HPP_
