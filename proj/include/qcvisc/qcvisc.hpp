#pragma once
// Umbrella header.

#include "qcvisc/random.hpp"
#include "qcvisc/parallel.hpp"
#include "qcvisc/linalg.hpp"
#include "qcvisc/jet.hpp"
#include "qcvisc/subequation.hpp"
#include "qcvisc/quasiconvex.hpp"
#include "qcvisc/sampled_io.hpp"
#include "qcvisc/geometry.hpp"
#include "qcvisc/contact.hpp"
#include "qcvisc/theorems.hpp"
#include "qcvisc/scene.hpp"
