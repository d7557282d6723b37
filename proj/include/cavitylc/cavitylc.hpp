#pragma once

#include "cavitylc/classify.hpp"
#include "cavitylc/config.hpp"
#include "cavitylc/dynamics.hpp"
#include "cavitylc/error.hpp"
#include "cavitylc/fourier.hpp"
#include "cavitylc/model.hpp"
#include "cavitylc/parallel.hpp"
#include "cavitylc/rhs.hpp"
#include "cavitylc/stability.hpp"
#include "cavitylc/steady_state.hpp"
#include "cavitylc/sweep.hpp"
#include "cavitylc/twa.hpp"
