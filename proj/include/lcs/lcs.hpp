#pragma once

#include "lcs/types.hpp"
#include "lcs/trust.hpp"
#include "lcs/config.hpp"
#include "lcs/kinematics.hpp"
#include "lcs/spatial_index.hpp"
#include "lcs/line_expert.hpp"
#include "lcs/circle_expert.hpp"
#include "lcs/square_expert.hpp"
#include "lcs/pipeline.hpp"
#include "lcs/scene_synth.hpp"
#include "lcs/fast9.hpp"
#include "lcs/io.hpp"
#include "lcs/render.hpp"
