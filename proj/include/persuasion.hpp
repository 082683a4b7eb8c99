#pragma once

#include "persuasion/errors.hpp"
#include "persuasion/tolerances.hpp"
#include "persuasion/tensor.hpp"
#include "persuasion/random.hpp"
#include "persuasion/model.hpp"
#include "persuasion/agent.hpp"
#include "persuasion/lp.hpp"
#include "persuasion/eval.hpp"
#include "persuasion/solver.hpp"
#include "persuasion/instances.hpp"
#include "persuasion/io.hpp"
#include "persuasion/experiment.hpp"
