// speechfeat/speechfeat.hpp

// Copyright 2026  speechfeat authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "speechfeat/audio.hpp"
#include "speechfeat/error.hpp"
#include "speechfeat/eval.hpp"
#include "speechfeat/features.hpp"
#include "speechfeat/framing.hpp"
#include "speechfeat/gmm.hpp"
#include "speechfeat/mel.hpp"
#include "speechfeat/parallel.hpp"
#include "speechfeat/pipeline.hpp"
#include "speechfeat/pitch.hpp"
#include "speechfeat/postproc.hpp"
#include "speechfeat/spectral.hpp"
#include "speechfeat/vtln.hpp"
