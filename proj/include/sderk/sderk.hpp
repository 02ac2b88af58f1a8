/*
   Copyright 2026 The sderk Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include "sderk/brownian.hpp"
#include "sderk/convergence.hpp"
#include "sderk/csv.hpp"
#include "sderk/driver.hpp"
#include "sderk/ensemble.hpp"
#include "sderk/error.hpp"
#include "sderk/parallel.hpp"
#include "sderk/quantum.hpp"
#include "sderk/rng.hpp"
#include "sderk/run_config.hpp"
#include "sderk/sde_system.hpp"
#include "sderk/stepper.hpp"
#include "sderk/tableau.hpp"
#include "sderk/version.hpp"
