#pragma once

#include "dps/config.hpp"
#include "dps/sensitivity.hpp"

namespace testing_support {

/// Sensor model built from the bundled geometry file.
inline dps::SensorModel table_model() {
    const dps::Config cfg = dps::Config::load(DPS_DATA_DIR "/sensor.cfg");
    dps::SensorModel m;
    m.geometry = dps::load_geometry(cfg);
    m.inductors = dps::load_inductors(cfg);
    m.extraction = dps::load_extraction_options(cfg);
    return m;
}

}  // namespace testing_support
