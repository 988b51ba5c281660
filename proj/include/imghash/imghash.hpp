#pragma once

#include "imghash/attacks.hpp"
#include "imghash/errors.hpp"
#include "imghash/harness.hpp"
#include "imghash/hash_codec.hpp"
#include "imghash/image.hpp"
#include "imghash/integral.hpp"
#include "imghash/kmeans.hpp"
#include "imghash/parallel.hpp"
#include "imghash/rng.hpp"
#include "imghash/surf.hpp"
#include "imghash/synth.hpp"
#include "imghash/verifier.hpp"
