// Copyright 2026 The fedgraph Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#ifndef FEDGRAPH_FEDGRAPH_HPP_
#define FEDGRAPH_FEDGRAPH_HPP_

#include "fedgraph/checkpoint.hpp"
#include "fedgraph/common.hpp"
#include "fedgraph/data.hpp"
#include "fedgraph/eval.hpp"
#include "fedgraph/experiment.hpp"
#include "fedgraph/federation.hpp"
#include "fedgraph/graph.hpp"
#include "fedgraph/ldp.hpp"
#include "fedgraph/model.hpp"
#include "fedgraph/parallel.hpp"
#include "fedgraph/rng.hpp"
#include "fedgraph/synthetic.hpp"

#endif  // FEDGRAPH_FEDGRAPH_HPP_
