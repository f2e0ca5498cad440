#pragma once

// Umbrella header pulling in the whole library.

#include "temotts/core/common.hpp"
#include "temotts/core/random.hpp"
#include "temotts/core/tensor.hpp"
#include "temotts/core/nn.hpp"
#include "temotts/core/optim.hpp"
#include "temotts/core/serialize.hpp"

#include "temotts/audio/fft.hpp"
#include "temotts/audio/stft.hpp"
#include "temotts/audio/mel.hpp"
#include "temotts/audio/melinvert.hpp"
#include "temotts/audio/pitch.hpp"
#include "temotts/audio/resample.hpp"
#include "temotts/audio/wav.hpp"

#include "temotts/corpus/types.hpp"
#include "temotts/corpus/manifest.hpp"
#include "temotts/corpus/g2p.hpp"
#include "temotts/corpus/align.hpp"
#include "temotts/corpus/split.hpp"
#include "temotts/corpus/features.hpp"

#include "temotts/acoustic/model.hpp"
#include "temotts/style/gst.hpp"

#include "temotts/emotion/provider.hpp"
#include "temotts/emotion/prune.hpp"
#include "temotts/adaptation/net.hpp"

#include "temotts/pipeline/optimizer.hpp"
#include "temotts/pipeline/checkpoint.hpp"
#include "temotts/pipeline/train1.hpp"
#include "temotts/pipeline/pairs.hpp"
#include "temotts/pipeline/synth.hpp"
#include "temotts/pipeline/runconfig.hpp"

#include "temotts/eval/textmetrics.hpp"
#include "temotts/eval/confusion.hpp"
#include "temotts/eval/pitchcontour.hpp"
#include "temotts/eval/tsne.hpp"
#include "temotts/eval/project.hpp"

#include "temotts/viz/png.hpp"
