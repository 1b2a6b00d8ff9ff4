// Copyright (c) 2026 The PUP Authors. All Rights Reserved.
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

#include "pup/autodiff.hpp"
#include "pup/binary_io.hpp"
#include "pup/config.hpp"
#include "pup/decoding.hpp"
#include "pup/embedding.hpp"
#include "pup/error.hpp"
#include "pup/metrics.hpp"
#include "pup/ngram_lm.hpp"
#include "pup/nn.hpp"
#include "pup/pipeline.hpp"
#include "pup/reward.hpp"
#include "pup/text.hpp"
#include "pup/toy_corpus.hpp"
#include "pup/trainer.hpp"
#include "pup/vae.hpp"
