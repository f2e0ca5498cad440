#pragma once

// Forced-alignment ingestion. Alignments arrive as per-utterance text files
// ("phoneme<TAB>duration" rows, durations either in mel frames or in
// seconds), and raw durations get corrected by largest remainder so every
// utterance satisfies sum(durations) == mel frame count exactly.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "temotts/core/common.hpp"
#include "temotts/corpus/types.hpp"

namespace temotts::corpus {

struct AlignConfig {
  bool durations_in_seconds = false;  // false: values already in mel frames
  double sample_rate = 22050.0;
  double hop_length = 256.0;
  // Maximum |sum(raw) - frames| the corrector will absorb, as a fraction of
  // the frame count. Beyond this the alignment is considered inconsistent.
  double max_mismatch_fraction = 0.2;
};

struct AlignedPhones {
  std::vector<std::string> phonemes;
  std::vector<double> raw_durations;  // pre-correction, in frames
};

// Rounds fractional durations to integers whose sum is exactly
// `target_frames` (largest-remainder): floor everything, then hand out the
// missing frames to the entries with the biggest fractional parts. A deficit
// (sum of floors above target) removes frames from the smallest remainders
// instead, never dropping a phoneme below one frame when avoidable.
inline std::vector<std::size_t> allocate_durations(const std::vector<double>& raw,
                                                   std::size_t target_frames) {
  if (raw.empty()) throw Error("cannot allocate durations for empty phoneme sequence");
  const double total = std::accumulate(raw.begin(), raw.end(), 0.0);
  if (total <= 0.0) throw Error("alignment durations sum to zero");

  // Scale so the fractional durations sum to the target, then round.
  const double scale = static_cast<double>(target_frames) / total;
  std::vector<double> scaled(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) scaled[i] = raw[i] * scale;

  std::vector<std::size_t> out(raw.size());
  std::vector<std::pair<double, std::size_t>> remainders(raw.size());
  long long assigned = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out[i] = static_cast<std::size_t>(std::floor(scaled[i]));
    remainders[i] = {scaled[i] - std::floor(scaled[i]), i};
    assigned += static_cast<long long>(out[i]);
  }

  long long diff = static_cast<long long>(target_frames) - assigned;
  if (diff > 0) {
    // Largest fractional parts win the leftover frames. Ties break by index
    // for determinism.
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    for (long long k = 0; k < diff; ++k) out[remainders[static_cast<std::size_t>(k) % out.size()].second] += 1;
  } else if (diff < 0) {
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return a.second < b.second;
    });
    long long to_remove = -diff;
    std::size_t idx = 0;
    while (to_remove > 0) {
      const std::size_t i = remainders[idx % remainders.size()].second;
      if (out[i] > 1 || to_remove >= static_cast<long long>(raw.size())) {
        if (out[i] > 0) {
          out[i] -= 1;
          --to_remove;
        }
      }
      ++idx;
      if (idx > raw.size() * (static_cast<std::size_t>(-diff) + 2)) {
        throw Error("duration correction failed to converge");
      }
    }
  }
  return out;
}

// Reads one alignment file: rows of "phoneme<TAB>duration" (whitespace also
// accepted). Blank lines and lines starting with '#' are skipped.
inline AlignedPhones read_alignment_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw MissingArtifactError(path.string(), "alignment file");
  AlignedPhones out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    auto toks = split_whitespace(line);
    if (toks.empty()) continue;
    if (toks.size() != 2)
      throw Error(path.string() + ":" + std::to_string(line_no) +
                  ": expected 'phoneme duration', got '" + line + "'");
    double dur = 0.0;
    try {
      dur = std::stod(toks[1]);
    } catch (const std::exception&) {
      throw Error(path.string() + ":" + std::to_string(line_no) + ": bad duration '" + toks[1] + "'");
    }
    if (dur < 0.0)
      throw Error(path.string() + ":" + std::to_string(line_no) + ": negative duration");
    out.phonemes.push_back(toks[0]);
    out.raw_durations.push_back(dur);
  }
  if (out.phonemes.empty()) throw Error(path.string() + ": alignment file has no rows");
  return out;
}

// Attaches an alignment to an utterance whose mel is already computed:
// converts seconds to frames if needed, validates the mismatch budget, and
// corrects durations to sum exactly to the mel frame count.
inline void apply_alignment(Utterance& utt, const AlignedPhones& aligned, const AlignConfig& cfg) {
  if (!utt.mel.has_value()) throw Error(utt.id + ": alignment applied before mel extraction");
  if (!utt.phonemes.empty() && utt.phonemes.size() != aligned.phonemes.size()) {
    throw Error(utt.id + ": phoneme count mismatch, utterance has " +
                std::to_string(utt.phonemes.size()) + " phonemes but alignment has " +
                std::to_string(aligned.phonemes.size()) + " entries");
  }
  const std::size_t frames = utt.mel->frames;

  std::vector<double> raw = aligned.raw_durations;
  if (cfg.durations_in_seconds) {
    const double frames_per_second = cfg.sample_rate / cfg.hop_length;
    for (auto& d : raw) d *= frames_per_second;
  }

  const double total = std::accumulate(raw.begin(), raw.end(), 0.0);
  const double mismatch = std::abs(total - static_cast<double>(frames));
  if (frames == 0) throw Error(utt.id + ": mel has zero frames");
  if (mismatch > cfg.max_mismatch_fraction * static_cast<double>(frames)) {
    throw Error(utt.id + ": alignment length mismatch, durations sum to " + std::to_string(total) +
                " but mel has " + std::to_string(frames) + " frames");
  }

  utt.phonemes = aligned.phonemes;
  utt.durations = allocate_durations(raw, frames);
}

// Locates "<dir>/<id>.align" for every utterance; utterances without a file
// are excluded with a warning rather than failing the whole corpus.
inline std::vector<Utterance> ingest_alignments(std::vector<Utterance> utts,
                                                const std::filesystem::path& align_dir,
                                                const AlignConfig& cfg) {
  std::vector<Utterance> kept;
  kept.reserve(utts.size());
  for (auto& utt : utts) {
    const auto path = align_dir / (utt.id + ".align");
    if (!std::filesystem::exists(path)) {
      log::warn("no alignment for '" + utt.id + "', excluding utterance");
      continue;
    }
    auto aligned = read_alignment_file(path);
    apply_alignment(utt, aligned, cfg);
    kept.push_back(std::move(utt));
  }
  return kept;
}

}  // namespace temotts::corpus
