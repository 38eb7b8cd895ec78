// Copyright 2026 The hetlearn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef HETLEARN_HETLEARN_HPP_
#define HETLEARN_HETLEARN_HPP_

#include "hetlearn/diagnostics.hpp"
#include "hetlearn/equilibrium_oracle.hpp"
#include "hetlearn/errors.hpp"
#include "hetlearn/export.hpp"
#include "hetlearn/game_model.hpp"
#include "hetlearn/matrix_learners.hpp"
#include "hetlearn/plot.hpp"
#include "hetlearn/response_kernel.hpp"
#include "hetlearn/rng.hpp"
#include "hetlearn/sg_learners.hpp"
#include "hetlearn/sim_harness.hpp"

#endif  // HETLEARN_HETLEARN_HPP_
