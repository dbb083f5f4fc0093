#pragma once

#include "cwyc/numerics/adam.hpp"
#include "cwyc/numerics/mlp.hpp"
#include "cwyc/numerics/rng.hpp"
#include "cwyc/numerics/running_stats.hpp"
#include "cwyc/numerics/serialize.hpp"

#include "cwyc/env/playground.hpp"
#include "cwyc/world_model/forward_model.hpp"
#include "cwyc/world_model/surprise.hpp"
#include "cwyc/curriculum/curriculum.hpp"
#include "cwyc/task_graph/task_graph.hpp"
#include "cwyc/goal_proposal/relational_net.hpp"
#include "cwyc/goal_proposal/goal_proposal.hpp"
#include "cwyc/control/policy.hpp"
#include "cwyc/control/replay_buffer.hpp"
#include "cwyc/control/actor_critic.hpp"

#include "cwyc/orchestrator/config.hpp"
#include "cwyc/orchestrator/agent.hpp"
#include "cwyc/orchestrator/rollout.hpp"
#include "cwyc/orchestrator/train_phase.hpp"
#include "cwyc/orchestrator/experiment.hpp"
