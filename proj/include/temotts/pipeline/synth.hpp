#pragma once

// Text-only synthesis: no reference audio, no emotion label. Text is
// phonemized and emotion-embedded; the adaptation net turns the embedding
// into GST weights; the combined style token conditions the acoustic encoder;
// the variance adaptor runs in inference mode and the decoded mel optionally
// goes through the spectral-inversion vocoder.

#include <optional>
#include <string>
#include <vector>

#include "temotts/audio/melinvert.hpp"
#include "temotts/corpus/g2p.hpp"
#include "temotts/emotion/provider.hpp"
#include "temotts/pipeline/checkpoint.hpp"

namespace temotts::pipeline {

struct SynthesisOptions {
  std::string vocoder = "griffinlim";  // or "none"
  audio::MelConfig mel;                // framing used for inversion
  audio::GriffinLimConfig griffinlim;
};

struct SynthesisResult {
  audio::MelSpectrogram mel;
  std::vector<double> waveform;  // empty when vocoder == "none"
  bool has_waveform = false;
  std::vector<std::string> phonemes;
  std::vector<std::size_t> durations;
  emotion::EmotionAnalysis analysis;
  std::vector<double> gst_weights;
};

// Fails fast when artifacts from different runs are mixed together.
inline void check_compatibility(const Stage1Bundle& stage1, const AdaptationBundle& adaptation,
                                const emotion::EmotionProvider& provider) {
  if (!adaptation.stage1_fingerprint.empty() && !stage1.source_fingerprint.empty() &&
      adaptation.stage1_fingerprint != stage1.source_fingerprint)
    throw Error("adaptation checkpoint was trained against stage-I checkpoint " +
                adaptation.stage1_fingerprint + " but the loaded one is " +
                stage1.source_fingerprint);
  if (!adaptation.provider_id.empty() && adaptation.provider_id != provider.id())
    throw Error("adaptation checkpoint expects emotion provider '" + adaptation.provider_id +
                "' but got '" + provider.id() + "'");
  if (adaptation.net.input_dim() != provider.embedding_dim())
    throw Error("adaptation net expects embedding dimension " +
                std::to_string(adaptation.net.input_dim()) + ", provider yields " +
                std::to_string(provider.embedding_dim()));
}

inline SynthesisResult synthesize(const std::string& text, const Stage1Bundle& stage1,
                                  const AdaptationBundle& adaptation,
                                  const emotion::EmotionProvider& provider,
                                  const corpus::G2p& g2p, const SynthesisOptions& opts = {}) {
  if (text.empty()) throw Error("synthesize: empty text");
  check_compatibility(stage1, adaptation, provider);

  SynthesisResult res;
  res.phonemes = g2p.phonemize(text);
  if (res.phonemes.empty()) throw Error("synthesize: text produced no phonemes");
  const auto ids = stage1.inventory.encode(res.phonemes);

  res.analysis = provider.classify(text);
  res.gst_weights = adaptation.net.predict_weights(provider.embed(text));

  nn::Ctx ctx = nn::Ctx::eval();
  nn::Tensor weights =
      nn::Tensor::make({1, res.gst_weights.size()}, res.gst_weights);
  nn::Tensor style = stage1.gst.combine_tokens(weights);
  nn::Tensor hidden = stage1.acoustic.encode_text(ids, ctx, &style);
  auto var = stage1.acoustic.variance_adapt(hidden, ctx, nullptr);
  res.durations = var.durations;
  nn::Tensor mel = stage1.acoustic.decode_mel(var.frame_hidden, ctx);

  res.mel.frames = mel.dim(0);
  res.mel.n_mels = mel.dim(1);
  res.mel.hop = opts.mel.hop;
  res.mel.values = mel.data();

  if (opts.vocoder == "griffinlim") {
    res.waveform = audio::mel_to_waveform(res.mel, opts.mel, opts.griffinlim);
    res.has_waveform = true;
  } else if (opts.vocoder == "none") {
    log::info("vocoder 'none': returning mel only, waveform omitted");
  } else {
    throw Error("unknown vocoder '" + opts.vocoder + "' (want griffinlim or none)");
  }
  return res;
}

// Portable mel dump (tensor-store container with the text in the metadata).
inline void save_mel(const std::filesystem::path& path, const audio::MelSpectrogram& mel,
                     const std::string& text = "") {
  TensorStore store;
  store.meta["kind"] = "mel";
  store.meta["text"] = text;
  store.meta["hop_length"] = mel.hop;
  store.add("mel", nn::Tensor::make({mel.frames, mel.n_mels}, mel.values));
  save_tensor_store(path, store);
}

inline audio::MelSpectrogram load_mel(const std::filesystem::path& path) {
  TensorStore store = load_tensor_store(path);
  const nn::Tensor* t = store.find("mel");
  if (!t || t->rank() != 2) throw Error(path.string() + ": no mel tensor inside");
  audio::MelSpectrogram mel;
  mel.frames = t->shape()[0];
  mel.n_mels = t->shape()[1];
  mel.hop = store.meta.value("hop_length", std::size_t{256});
  mel.values = t->data();
  return mel;
}

}  // namespace temotts::pipeline
