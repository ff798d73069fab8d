// Umbrella header: loosely coupled spectral/spatial meeting diarization and
// separation — STFT front-end, directional mixture models, mask extraction,
// MVDR beamforming, scenario simulation, and scoring.
#pragma once

#include "diasep/archive.hpp"
#include "diasep/beamform.hpp"
#include "diasep/cacg.hpp"
#include "diasep/cacgmm.hpp"
#include "diasep/init.hpp"
#include "diasep/loose.hpp"
#include "diasep/masks.hpp"
#include "diasep/metrics.hpp"
#include "diasep/observation.hpp"
#include "diasep/parallel.hpp"
#include "diasep/postprocess.hpp"
#include "diasep/rng.hpp"
#include "diasep/simulate.hpp"
#include "diasep/state_io.hpp"
#include "diasep/stft.hpp"
#include "diasep/tensor.hpp"
#include "diasep/tight.hpp"
#include "diasep/vmf.hpp"
#include "diasep/wav.hpp"
