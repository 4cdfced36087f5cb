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

#ifndef RTAP_RTAP_HPP
#define RTAP_RTAP_HPP

#include "rtap/baselines.hpp"
#include "rtap/classify.hpp"
#include "rtap/common.hpp"
#include "rtap/csv.hpp"
#include "rtap/features.hpp"
#include "rtap/forest.hpp"
#include "rtap/hours.hpp"
#include "rtap/logistic.hpp"
#include "rtap/metrics.hpp"
#include "rtap/model_io.hpp"
#include "rtap/parallel.hpp"
#include "rtap/pipeline.hpp"
#include "rtap/preprocess.hpp"
#include "rtap/records.hpp"
#include "rtap/rng.hpp"
#include "rtap/severity.hpp"
#include "rtap/stacking.hpp"
#include "rtap/synthgen.hpp"
#include "rtap/tree.hpp"

#endif  // RTAP_RTAP_HPP
