/*
 * Copyright 2026 The cachesig Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/*!
  \file cachesig.hpp
  \brief Umbrella header
*/

#pragma once

#include "algorithms.hpp"
#include "amplifier.hpp"
#include "asm_emitter.hpp"
#include "cache_model.hpp"
#include "errors.hpp"
#include "gadgets.hpp"
#include "logic/counter.hpp"
#include "logic/execute.hpp"
#include "logic/lower.hpp"
#include "logic/netlist.hpp"
#include "logic/text_format.hpp"
#include "random.hpp"
#include "speculation.hpp"
#include "timing.hpp"
