#pragma once

#include "sociallearn/agent.hpp"
#include "sociallearn/csv_io.hpp"
#include "sociallearn/dp.hpp"
#include "sociallearn/experiments.hpp"
#include "sociallearn/gridworld.hpp"
#include "sociallearn/layout_io.hpp"
#include "sociallearn/metrics.hpp"
#include "sociallearn/optimizer.hpp"
#include "sociallearn/parallel.hpp"
#include "sociallearn/rl.hpp"
#include "sociallearn/rng.hpp"
#include "sociallearn/social.hpp"
#include "sociallearn/stats.hpp"
