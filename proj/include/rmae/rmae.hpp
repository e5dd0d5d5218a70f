/*
 * Copyright 2026 The rmae Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef RMAE_RMAE_HPP_
#define RMAE_RMAE_HPP_

#include "rmae/checkpoint.hpp"
#include "rmae/energy_model.hpp"
#include "rmae/error.hpp"
#include "rmae/layers.hpp"
#include "rmae/occupancy_loss.hpp"
#include "rmae/occupancy_net.hpp"
#include "rmae/optimizer.hpp"
#include "rmae/parallel.hpp"
#include "rmae/pointcloud.hpp"
#include "rmae/radial_mask.hpp"
#include "rmae/rng.hpp"
#include "rmae/trainer.hpp"
#include "rmae/voxelizer.hpp"

#endif  // RMAE_RMAE_HPP_
