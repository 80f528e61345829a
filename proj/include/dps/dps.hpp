#pragma once

#include "dps/constants.hpp"
#include "dps/error.hpp"
#include "dps/rfcore.hpp"
#include "dps/circuit.hpp"
#include "dps/geometry.hpp"
#include "dps/config.hpp"
#include "dps/sensitivity.hpp"
#include "dps/soilcal.hpp"
#include "dps/fft.hpp"
#include "dps/dispersion_sim.hpp"
#include "dps/io/format.hpp"
#include "dps/io/touchstone.hpp"
#include "dps/io/csv.hpp"
