#pragma once

// Quaternion nonnegative matrix factorization.

#include "qnmf/errors.hpp"
#include "qnmf/imaging.hpp"
#include "qnmf/init.hpp"
#include "qnmf/io.hpp"
#include "qnmf/metrics.hpp"
#include "qnmf/projection.hpp"
#include "qnmf/quat_matrix.hpp"
#include "qnmf/quaternion.hpp"
#include "qnmf/solvers.hpp"
#include "qnmf/synth.hpp"
