#pragma once

#include "biot_hdg/errors.hpp"
#include "biot_hdg/mesh.hpp"
#include "biot_hdg/quadrature.hpp"
#include "biot_hdg/basis.hpp"
#include "biot_hdg/fe_spaces.hpp"
#include "biot_hdg/sparse.hpp"
#include "biot_hdg/assembly.hpp"
#include "biot_hdg/condensation.hpp"
#include "biot_hdg/time_integration.hpp"
#include "biot_hdg/problems.hpp"
#include "biot_hdg/scenarios.hpp"
#include "biot_hdg/io.hpp"
