#pragma once

#include "rotsync/error.hpp"
#include "rotsync/eval.hpp"
#include "rotsync/io.hpp"
#include "rotsync/lowrank_sparse.hpp"
#include "rotsync/so3.hpp"
#include "rotsync/sync.hpp"
#include "rotsync/synth.hpp"
