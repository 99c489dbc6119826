#pragma once

#include "bosefeed/config.hpp"
#include "bosefeed/corrdyn.hpp"
#include "bosefeed/errors.hpp"
#include "bosefeed/freeprop.hpp"
#include "bosefeed/hilbert.hpp"
#include "bosefeed/linalg.hpp"
#include "bosefeed/observables.hpp"
#include "bosefeed/oracle.hpp"
#include "bosefeed/quadrature.hpp"
