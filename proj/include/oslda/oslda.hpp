#pragma once

#include "oslda/error.hpp"
#include "oslda/linalg.hpp"
#include "oslda/image.hpp"
#include "oslda/haar.hpp"
#include "oslda/stump.hpp"
#include "oslda/scatter.hpp"
#include "oslda/threshold.hpp"
#include "oslda/greedy.hpp"
#include "oslda/online.hpp"
#include "oslda/cascade.hpp"
#include "oslda/dataset.hpp"
#include "oslda/serialize.hpp"
#include "oslda/synthetic.hpp"
#include "oslda/bench.hpp"
