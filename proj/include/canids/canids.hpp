// Copyright 2026 The canids Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CANIDS_CANIDS_HPP
#define CANIDS_CANIDS_HPP

#include "canids/can.hpp"
#include "canids/error.hpp"
#include "canids/layers.hpp"
#include "canids/metrics.hpp"
#include "canids/model.hpp"
#include "canids/model_io.hpp"
#include "canids/quant.hpp"
#include "canids/quant_io.hpp"
#include "canids/rng.hpp"
#include "canids/stream.hpp"
#include "canids/tensor.hpp"
#include "canids/trace.hpp"
#include "canids/train.hpp"
#include "canids/window.hpp"

#endif  // CANIDS_CANIDS_HPP
