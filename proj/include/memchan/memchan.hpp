#pragma once

// Umbrella header.

#include "memchan/channel.hpp"
#include "memchan/entropy.hpp"
#include "memchan/errors.hpp"
#include "memchan/linalg.hpp"
#include "memchan/mc_oracle.hpp"
#include "memchan/optimizer.hpp"
