// Copyright 2026 The rnncoref Authors.
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


// Convenience header pulling in the whole library.

#pragma once

#include "rnncoref/corpus.hpp"
#include "rnncoref/eval.hpp"
#include "rnncoref/features.hpp"
#include "rnncoref/hungarian.hpp"
#include "rnncoref/inference.hpp"
#include "rnncoref/model.hpp"
#include "rnncoref/model_io.hpp"
#include "rnncoref/nn.hpp"
#include "rnncoref/predictions.hpp"
#include "rnncoref/synthetic.hpp"
#include "rnncoref/train.hpp"
