#pragma once

#include "nashseek/errors.hpp"
#include "nashseek/linalg.hpp"
#include "nashseek/random.hpp"
#include "nashseek/game.hpp"
#include "nashseek/graph.hpp"
#include "nashseek/state.hpp"
#include "nashseek/dynamics.hpp"
#include "nashseek/integrator.hpp"
#include "nashseek/diagnostics.hpp"
#include "nashseek/config.hpp"
#include "nashseek/run.hpp"
#include "nashseek/io.hpp"
