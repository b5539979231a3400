#pragma once

#include "fic/image.hpp"
#include "fic/geometry.hpp"
#include "fic/fractal_dimension.hpp"
#include "fic/fd_index.hpp"
#include "fic/codec.hpp"
#include "fic/code_format.hpp"
#include "fic/bench.hpp"
