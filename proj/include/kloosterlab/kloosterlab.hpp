#pragma once

#include "kloosterlab/arith.hpp"
#include "kloosterlab/config.hpp"
#include "kloosterlab/envelopes.hpp"
#include "kloosterlab/fft.hpp"
#include "kloosterlab/io_cache.hpp"
#include "kloosterlab/kloosterman.hpp"
#include "kloosterlab/reduce.hpp"
#include "kloosterlab/report.hpp"
#include "kloosterlab/sequences.hpp"
#include "kloosterlab/sums.hpp"
#include "kloosterlab/verify.hpp"
