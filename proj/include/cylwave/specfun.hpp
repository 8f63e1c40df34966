#pragma once

#include "airy.hpp"
#include "bessel.hpp"
#include "uniform.hpp"
#include "zeta.hpp"
