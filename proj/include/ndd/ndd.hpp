#pragma once

#include "ndd/core_model.hpp"
#include "ndd/monotone_analysis.hpp"
#include "ndd/genecircuit.hpp"
#include "ndd/families.hpp"
#include "ndd/characteristics.hpp"
#include "ndd/integrator.hpp"
#include "ndd/netsim.hpp"
#include "ndd/networks.hpp"
#include "ndd/certification.hpp"
#include "ndd/config.hpp"
#include "ndd/experiments.hpp"
