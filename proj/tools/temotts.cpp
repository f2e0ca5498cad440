// temotts: command-line driver for the two-stage emotional TTS pipeline.
//
//   preprocess -> train-stage1 -> prune -> build-pairs -> train-stage2 -> synth
//
// plus eval (cerwer / ser / pitch) and viz utilities. Exit codes: 0 ok,
// 2 usage error, 3 missing prerequisite artifact, 4 runtime failure. Logs go
// to stderr; machine-readable results go to files only.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "temotts/temotts.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace temotts;

namespace {

// ---- shared options ---------------------------------------------------------

struct CommonOpts {
  std::string config_path;
  std::string run_dir;
  bool toy = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "run config JSON (defaults merged in)");
  cmd->add_option("--run", o.run_dir, "run directory for artifacts");
  cmd->add_flag("--toy", o.toy, "desk-scale preset: tiny model, short training");
}

// Precedence: built-in defaults < --config file < snapshot in the run
// directory (only when no --config is given) < individual flags.
pipeline::RunConfig resolve_config(const CommonOpts& o) {
  pipeline::RunConfig cfg;
  if (!o.config_path.empty()) {
    cfg = pipeline::load_run_config(o.config_path);
  } else if (!o.run_dir.empty()) {
    const fs::path snap = fs::path(o.run_dir) / "config.json";
    if (fs::exists(snap)) cfg = pipeline::load_run_config(snap);
  }
  if (!o.run_dir.empty()) cfg.run_dir = o.run_dir;
  if (cfg.run_dir.empty()) throw Error("no run directory; pass --run or set run_dir in the config");
  if (o.toy) {
    cfg.acoustic = acoustic::AcousticConfig::toy();
    cfg.style = style::StyleConfig::toy();
    cfg.optimizer.warmup_steps = 50;
    cfg.stage1_train.max_steps = 300;
    cfg.stage1_train.val_every = 50;
    cfg.stage2_train.max_epochs = 150;
    cfg.provider_dim = 32;
  }
  return cfg;
}

corpus::G2p make_g2p(const pipeline::RunConfig& cfg) {
  corpus::G2pConfig gcfg;
  gcfg.dictionary_path = cfg.g2p_dictionary;
  return corpus::G2p(gcfg);
}

void write_json(const fs::path& path, const json& j) {
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  std::ofstream os(path);
  os << j.dump(2) << '\n';
  if (!os) throw Error("cannot write " + path.string());
}

json read_json(const fs::path& path, const std::string& hint) {
  std::ifstream is(path);
  if (!is) throw MissingArtifactError(path.string(), hint);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
  return j;
}

// ---- features.json ----------------------------------------------------------

struct FeatureEntry {
  std::string id;
  std::string path;
  std::string text;
};

struct FeaturesManifest {
  std::string feature_hash;
  fs::path cache_dir;
  corpus::PhonemeInventory inventory;
  std::vector<FeatureEntry> records;
};

FeaturesManifest load_features_manifest(const fs::path& path) {
  const json j = read_json(path, "feature manifest (run `temotts preprocess` first)");
  FeaturesManifest fm;
  fm.feature_hash = j.value("feature_hash", "");
  fm.cache_dir = j.value("cache_dir", "");
  fm.inventory = corpus::PhonemeInventory::from_json(j.at("inventory"));
  for (const auto& r : j.at("records"))
    fm.records.push_back({r.at("id").get<std::string>(), r.at("path").get<std::string>(),
                          r.value("text", "")});
  return fm;
}

std::vector<corpus::FeatureRecord> load_records(const FeaturesManifest& fm,
                                                const std::vector<std::string>& ids) {
  std::map<std::string, const FeatureEntry*> by_id;
  for (const auto& e : fm.records) by_id[e.id] = &e;
  std::vector<corpus::FeatureRecord> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw Error("id '" + id + "' is not in the feature manifest");
    if (!fs::exists(it->second->path))
      throw MissingArtifactError(it->second->path, "cached features (re-run `temotts preprocess`)");
    out.push_back(corpus::load_feature_record(it->second->path));
  }
  return out;
}

// ---- subcommands ------------------------------------------------------------

struct PreprocessOpts : CommonOpts {
  std::string manifest;
  std::string align_dir;
  std::string cache_dir;
};

int cmd_preprocess(const PreprocessOpts& o) {
  auto cfg = resolve_config(o);
  if (!o.manifest.empty()) cfg.manifest = o.manifest;
  if (!o.align_dir.empty()) cfg.align_dir = o.align_dir;
  if (!o.cache_dir.empty()) cfg.cache_dir = o.cache_dir;
  cfg.validate();
  if (cfg.manifest.empty()) throw Error("no corpus manifest; pass --manifest");
  if (cfg.align_dir.empty()) throw Error("no alignment directory; pass --align-dir");

  pipeline::RunPaths paths(cfg.run_dir);
  pipeline::snapshot_config(cfg, paths);
  pipeline::RunLock lock(paths);

  auto manifest = corpus::load_manifest(cfg.manifest);
  for (const auto& e : manifest.errors)
    log::warn(cfg.manifest + ":" + std::to_string(e.line) + ": " + e.message);

  const corpus::G2p g2p = make_g2p(cfg);
  struct Item {
    corpus::Utterance utt;
    corpus::AlignedPhones aligned;
  };
  std::vector<Item> items;
  for (auto& utt : manifest.utterances) {
    try {
      utt.phonemes = g2p.phonemize(utt.text);
    } catch (const Error& e) {
      log::warn("'" + utt.id + "' excluded: " + e.what());
      continue;
    }
    const fs::path apath = fs::path(cfg.align_dir) / (utt.id + ".align");
    if (!fs::exists(apath)) {
      log::warn("no alignment for '" + utt.id + "', excluding utterance");
      continue;
    }
    items.push_back({std::move(utt), corpus::read_alignment_file(apath)});
  }
  if (items.empty()) throw Error("preprocess: no usable utterances (check manifest and alignments)");

  // Inventory covers everything either the G2P or the alignments can emit.
  std::set<std::string> symbols;
  for (const auto& s : g2p.inventory()) symbols.insert(s);
  for (const auto& it : items)
    for (const auto& p : it.aligned.phonemes) symbols.insert(p);
  corpus::PhonemeInventory inventory;
  for (const auto& s : symbols) inventory.add(s);

  const fs::path cache = cfg.resolved_cache_dir();
  std::size_t fresh = 0, reused = 0;
  json records = json::array();
  for (const auto& it : items) {
    bool extracted = false;
    corpus::FeatureRecord rec;
    try {
      rec = corpus::extract_features_cached(it.utt, it.aligned, cfg.features, cache, &extracted);
    } catch (const Error& e) {
      log::warn("'" + it.utt.id + "' excluded: " + e.what());
      continue;
    }
    ++(extracted ? fresh : reused);
    records.push_back({{"id", rec.id},
                       {"path", corpus::feature_cache_path(cache, rec.id, cfg.features).string()},
                       {"text", rec.text}});
  }
  if (records.empty()) throw Error("preprocess: feature extraction failed for every utterance");

  write_json(paths.features_manifest(), json{{"feature_hash", cfg.features.hash()},
                                             {"cache_dir", cache.string()},
                                             {"inventory", inventory.to_json()},
                                             {"records", records}});

  std::vector<std::string> ids;
  for (const auto& r : records) ids.push_back(r.at("id").get<std::string>());
  const auto split = corpus::split_ids(ids, cfg.split);
  write_json(paths.splits(),
             json{{"train", split.train}, {"val", split.val}, {"test", split.test}});

  log::info("preprocess: " + std::to_string(records.size()) + " utterances (" +
            std::to_string(fresh) + " extracted, " + std::to_string(reused) + " cached), split " +
            std::to_string(split.train.size()) + "/" + std::to_string(split.val.size()) + "/" +
            std::to_string(split.test.size()));
  return 0;
}

struct TrainStage1Opts : CommonOpts {
  std::size_t steps = 0;
  std::uint64_t seed = 0;
  bool have_seed = false;
};

int cmd_train_stage1(const TrainStage1Opts& o) {
  auto cfg = resolve_config(o);
  if (o.steps > 0) cfg.stage1_train.max_steps = o.steps;
  if (o.have_seed) cfg.stage1_train.seed = o.seed;
  cfg.validate();

  pipeline::RunPaths paths(cfg.run_dir);
  pipeline::snapshot_config(cfg, paths);
  pipeline::RunLock lock(paths);

  const auto fm = load_features_manifest(paths.features_manifest());
  const json splits = read_json(paths.splits(), "corpus splits (run `temotts preprocess` first)");
  const auto train_recs = load_records(fm, splits.at("train").get<std::vector<std::string>>());
  const auto val_recs = load_records(fm, splits.at("val").get<std::vector<std::string>>());

  cfg.stage1_train.log_progress = true;
  auto res = pipeline::train_stage1(train_recs, val_recs, cfg.acoustic, cfg.style, fm.inventory,
                                    cfg.optimizer, cfg.stage1_train);
  pipeline::save_stage1(paths.stage1_ckpt(), res.bundle);
  pipeline::write_loss_curve_csv(paths.stage1_curve(), res.curve);
  res.bundle.gst.export_token_bank(paths.token_bank());

  std::ostringstream msg;
  msg.precision(6);
  msg << "stage I done: best val " << res.best_val << " at step " << res.best_step
      << ", train mel-L1 " << res.initial_train_mel_l1 << " -> " << res.final_train_mel_l1
      << "; wrote " << paths.stage1_ckpt().string();
  log::info(msg.str());
  return 0;
}

struct PruneOpts : CommonOpts {
  double pth = -1.0;
};

int cmd_prune(const PruneOpts& o) {
  auto cfg = resolve_config(o);
  if (o.pth >= 0.0) cfg.pruning.threshold = o.pth;
  cfg.validate();

  pipeline::RunPaths paths(cfg.run_dir);
  pipeline::snapshot_config(cfg, paths);
  pipeline::RunLock lock(paths);

  const auto fm = load_features_manifest(paths.features_manifest());
  std::vector<corpus::Utterance> utts;
  for (const auto& e : fm.records) {
    corpus::Utterance u;
    u.id = e.id;
    u.text = e.text;
    utts.push_back(std::move(u));
  }

  const auto provider = emotion::make_provider(cfg.provider, cfg.provider_dim, cfg.seed);
  const auto result = emotion::prune_corpus(utts, *provider, cfg.pruning);
  write_json(paths.prune_report(), result.report);
  log::info("prune: kept " + std::to_string(result.kept.size()) + " of " +
            std::to_string(utts.size()) + " utterances at threshold " +
            std::to_string(cfg.pruning.threshold) + "; wrote " + paths.prune_report().string());
  return 0;
}

int cmd_build_pairs(const CommonOpts& o) {
  auto cfg = resolve_config(o);
  cfg.validate();

  pipeline::RunPaths paths(cfg.run_dir);
  pipeline::snapshot_config(cfg, paths);
  pipeline::RunLock lock(paths);

  const auto bundle = pipeline::load_stage1(paths.stage1_ckpt());
  const auto fm = load_features_manifest(paths.features_manifest());
  const json report = read_json(paths.prune_report(), "pruning report (run `temotts prune` first)");
  const auto kept_ids = report.at("kept_ids").get<std::vector<std::string>>();
  if (kept_ids.empty()) throw Error("pruning kept no utterances; lower the threshold");
  const auto records = load_records(fm, kept_ids);

  const auto provider = emotion::make_provider(cfg.provider, cfg.provider_dim, cfg.seed);
  auto ds = pipeline::build_stage2_dataset(bundle, records, *provider);
  pipeline::save_pairs(paths.pairs(), ds);
  log::info("build-pairs: " + std::to_string(ds.pairs.size()) + " pairs; wrote " +
            paths.pairs().string());
  return 0;
}

struct TrainStage2Opts : CommonOpts {
  std::size_t epochs = 0;
  std::uint64_t seed = 0;
  bool have_seed = false;
};

int cmd_train_stage2(const TrainStage2Opts& o) {
  auto cfg = resolve_config(o);
  if (o.epochs > 0) cfg.stage2_train.max_epochs = o.epochs;
  if (o.have_seed) cfg.stage2_train.seed = o.seed;
  cfg.validate();

  pipeline::RunPaths paths(cfg.run_dir);
  pipeline::snapshot_config(cfg, paths);
  pipeline::RunLock lock(paths);

  const auto ds = pipeline::load_pairs(paths.pairs());
  adaptation::AdaptationConfig acfg = cfg.adaptation;
  acfg.input_dim_override = ds.meta.value("embedding_dim", ds.pairs[0].embedding.size());

  auto res = adaptation::train_adaptation(ds.pairs, acfg, cfg.stage2_train);

  pipeline::AdaptationBundle bundle;
  bundle.cfg = acfg;
  bundle.net = std::move(res.net);
  bundle.provider_id = ds.meta.value("provider_id", "");
  bundle.stage1_fingerprint = ds.meta.value("stage1_fingerprint", "");
  bundle.train_metrics = {{"best_val", res.best_val},
                          {"best_epoch", res.best_epoch},
                          {"epochs", res.curve.size()},
                          {"diverged", res.diverged}};
  pipeline::save_adaptation(paths.adaptation_ckpt(), bundle);

  std::ofstream curve(paths.stage2_curve());
  curve << "epoch,train_loss,val_loss\n";
  curve.precision(10);
  for (std::size_t i = 0; i < res.curve.size(); ++i)
    curve << (i + 1) << ',' << res.curve[i].train << ',' << res.curve[i].val << '\n';

  std::ostringstream msg;
  msg.precision(6);
  msg << "stage II done: best val " << res.best_val << " at epoch " << res.best_epoch
      << (res.diverged ? " (diverged, best kept)" : "") << "; wrote "
      << paths.adaptation_ckpt().string();
  log::info(msg.str());
  return 0;
}

struct SynthOpts : CommonOpts {
  std::string text;
  std::string out;
  std::string mel_out;
  std::string vocoder;
};

int cmd_synth(const SynthOpts& o) {
  auto cfg = resolve_config(o);
  if (!o.vocoder.empty()) cfg.vocoder = o.vocoder;
  cfg.validate();

  pipeline::RunPaths paths(cfg.run_dir);
  const auto stage1 = pipeline::load_stage1(paths.stage1_ckpt());
  const auto adapt = pipeline::load_adaptation(paths.adaptation_ckpt());
  const auto provider = emotion::make_provider(cfg.provider, cfg.provider_dim, cfg.seed);
  const corpus::G2p g2p = make_g2p(cfg);

  pipeline::SynthesisOptions opts;
  opts.vocoder = cfg.vocoder;
  opts.mel = cfg.features.mel;
  opts.griffinlim.phase_seed = cfg.seed;
  const auto res = pipeline::synthesize(o.text, stage1, adapt, *provider, g2p, opts);

  fs::path wav_path = o.out.empty() ? paths.synth_dir() / "output.wav" : fs::path(o.out);
  fs::path mel_path = o.mel_out.empty() ? fs::path(wav_path).replace_extension(".mel")
                                        : fs::path(o.mel_out);
  if (!mel_path.parent_path().empty()) fs::create_directories(mel_path.parent_path());
  pipeline::save_mel(mel_path, res.mel, o.text);
  std::string wrote = mel_path.string();
  if (res.has_waveform) {
    audio::write_wav(wav_path, res.waveform, cfg.features.mel.sample_rate);
    wrote += " and " + wav_path.string();
  }
  log::info("synth: '" + res.analysis.dominant_class + "' text, " +
            std::to_string(res.phonemes.size()) + " phonemes -> " +
            std::to_string(res.mel.frames) + " frames; wrote " + wrote);
  return 0;
}

struct EvalCerWerOpts {
  std::string pairs_path;
  std::string out;
};

int cmd_eval_cerwer(const EvalCerWerOpts& o) {
  std::ifstream is(o.pairs_path);
  if (!is) throw MissingArtifactError(o.pairs_path, "transcript pairs JSONL (id, reference, hypothesis)");

  json items = json::array();
  double cer_sum = 0.0, wer_sum = 0.0;
  std::size_t char_edits = 0, char_total = 0, word_edits = 0, word_total = 0, n = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(o.pairs_path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    eval::TranscriptPair pair{j.at("reference").get<std::string>(),
                              j.at("hypothesis").get<std::string>()};
    const double c = eval::cer(pair);
    const double w = eval::wer(pair);
    cer_sum += c;
    wer_sum += w;
    ++n;

    const auto ref_c = eval::utf8_codepoints(eval::normalize_transcript(pair.reference));
    const auto hyp_c = eval::utf8_codepoints(eval::normalize_transcript(pair.hypothesis));
    const auto ref_w = split_whitespace(eval::normalize_transcript(pair.reference));
    const auto hyp_w = split_whitespace(eval::normalize_transcript(pair.hypothesis));
    char_edits += eval::levenshtein(ref_c, hyp_c);
    char_total += ref_c.size();
    word_edits += eval::levenshtein(ref_w, hyp_w);
    word_total += ref_w.size();

    items.push_back({{"id", j.value("id", std::to_string(line_no))}, {"cer", c}, {"wer", w}});
  }
  if (n == 0) throw Error(o.pairs_path + ": no transcript pairs found");

  const json report{
      {"items", items},
      {"aggregate",
       {{"count", n},
        {"mean_cer", cer_sum / static_cast<double>(n)},
        {"mean_wer", wer_sum / static_cast<double>(n)},
        {"pooled_cer", static_cast<double>(char_edits) / static_cast<double>(char_total)},
        {"pooled_wer", static_cast<double>(word_edits) / static_cast<double>(word_total)}}}};
  const fs::path out = o.out.empty() ? fs::path(o.pairs_path).replace_extension(".cerwer.json")
                                     : fs::path(o.out);
  write_json(out, report);

  std::ostringstream msg;
  msg.precision(4);
  msg << "cerwer: " << n << " pairs, mean CER " << (cer_sum / static_cast<double>(n))
      << ", mean WER " << (wer_sum / static_cast<double>(n)) << "; wrote " << out.string();
  log::info(msg.str());
  return 0;
}

struct EvalSerOpts {
  std::string labels_path;
  std::string out;
};

int cmd_eval_ser(const EvalSerOpts& o) {
  std::ifstream is(o.labels_path);
  if (!is) throw MissingArtifactError(o.labels_path, "label JSONL (id, true, predicted)");

  std::vector<std::string> truth, predicted;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(o.labels_path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    truth.push_back(j.at("true").get<std::string>());
    predicted.push_back(j.at("predicted").get<std::string>());
  }
  if (truth.empty()) throw Error(o.labels_path + ": no label records found");

  const auto cm = eval::ser_confusion(truth, predicted);
  const fs::path out = o.out.empty() ? fs::path(o.labels_path).replace_extension(".ser.json")
                                     : fs::path(o.out);
  write_json(out, cm.to_json());

  std::ostringstream msg;
  msg.precision(4);
  msg << "ser: " << truth.size() << " samples, accuracy " << cm.accuracy() << "; wrote "
      << out.string();
  log::info(msg.str());
  return 0;
}

struct EvalPitchOpts {
  std::string wav_path;
  std::string out;
};

int cmd_eval_pitch(const EvalPitchOpts& o) {
  if (!fs::exists(o.wav_path)) throw MissingArtifactError(o.wav_path, "input waveform");
  const auto wav = audio::read_wav(o.wav_path);
  const auto contour = eval::extract_pitch_contour(wav.samples, wav.sample_rate);
  const fs::path out = o.out.empty() ? fs::path(o.wav_path).replace_extension(".f0.csv")
                                     : fs::path(o.out);
  eval::write_contour_csv(out, contour);

  std::ostringstream msg;
  msg.precision(5);
  msg << "pitch: " << contour.f0.size() << " frames, median voiced F0 "
      << eval::median_voiced_f0(contour) << " Hz; wrote " << out.string();
  log::info(msg.str());
  return 0;
}

struct VizOpts : CommonOpts {
  std::string out;
  std::string coords;
};

int cmd_viz(const VizOpts& o) {
  auto cfg = resolve_config(o);
  pipeline::RunPaths paths(cfg.run_dir);
  const auto ds = pipeline::load_pairs(paths.pairs());

  std::vector<std::vector<double>> weights, embeddings;
  std::vector<std::string> ids;
  for (const auto& p : ds.pairs) {
    weights.push_back(p.target_weights);
    embeddings.push_back(p.embedding);
    ids.push_back(p.id);
  }
  std::vector<std::string> classes = ds.classes;
  classes.resize(ds.pairs.size());

  std::map<std::string, std::size_t> class_index;
  for (const auto& c : classes) class_index.emplace(c, 0);
  std::size_t next = 0;
  for (auto& [_, idx] : class_index) idx = next++;
  std::vector<std::size_t> class_ids;
  for (const auto& c : classes) class_ids.push_back(class_index.at(c));

  const auto proj = eval::project_spaces(weights, embeddings, cfg.seed);
  const fs::path png = o.out.empty() ? paths.root / "projection.png" : fs::path(o.out);
  const fs::path csv = o.coords.empty() ? paths.root / "projection.csv" : fs::path(o.coords);
  eval::render_projection_figure(png, proj, class_ids);
  eval::write_coords_csv(csv, proj, ids, classes);
  log::info("viz: projected " + std::to_string(ds.pairs.size()) + " points over " +
            std::to_string(class_index.size()) + " classes; wrote " + png.string() + " and " +
            csv.string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"temotts: label-free emotional text-to-speech, desk scale"};
  app.require_subcommand(1);

  PreprocessOpts pre;
  auto* c_pre = app.add_subcommand(
      "preprocess", "extract mel/pitch/energy features, build the inventory and splits");
  add_common(c_pre, pre);
  c_pre->add_option("--manifest", pre.manifest, "corpus manifest (JSONL: id, audio_path, text)");
  c_pre->add_option("--align-dir", pre.align_dir, "directory with <id>.align phoneme durations");
  c_pre->add_option("--cache-dir", pre.cache_dir, "feature cache directory");

  TrainStage1Opts t1;
  auto* c_t1 = app.add_subcommand("train-stage1",
                                  "train the acoustic model and style tokens jointly");
  add_common(c_t1, t1);
  c_t1->add_option("--steps", t1.steps, "training steps (overrides config)");
  c_t1->add_option("--seed", t1.seed, "training seed (overrides config)")
      ->each([&](const std::string&) { t1.have_seed = true; });

  PruneOpts pr;
  auto* c_pr = app.add_subcommand("prune", "keep utterances whose dominant emotion is confident");
  add_common(c_pr, pr);
  c_pr->add_option("--pth", pr.pth, "dominant-probability threshold (strict >)")
      ->check(CLI::Range(0.0, 1.0));

  CommonOpts bp;
  auto* c_bp = app.add_subcommand(
      "build-pairs", "pair text emotion embeddings with style-token weights from stage I");
  add_common(c_bp, bp);

  TrainStage2Opts t2;
  auto* c_t2 = app.add_subcommand("train-stage2",
                                  "train the text-emotion to style-weight adaptation net");
  add_common(c_t2, t2);
  c_t2->add_option("--epochs", t2.epochs, "training epochs (overrides config)");
  c_t2->add_option("--seed", t2.seed, "training seed (overrides config)")
      ->each([&](const std::string&) { t2.have_seed = true; });

  SynthOpts sy;
  auto* c_sy = app.add_subcommand("synth", "synthesize speech from text alone");
  add_common(c_sy, sy);
  c_sy->add_option("--text", sy.text, "sentence to synthesize")->required();
  c_sy->add_option("--out", sy.out, "output WAV path (default <run>/synth/output.wav)");
  c_sy->add_option("--mel-out", sy.mel_out, "output mel path (default: WAV path with .mel)");
  c_sy->add_option("--vocoder", sy.vocoder, "griffinlim or none")
      ->check(CLI::IsMember({"griffinlim", "none"}));

  auto* c_ev = app.add_subcommand("eval", "objective evaluation utilities");
  c_ev->require_subcommand(1);

  EvalCerWerOpts ecw;
  auto* c_ecw = c_ev->add_subcommand("cerwer", "character/word error rates from transcript pairs");
  c_ecw->add_option("--pairs", ecw.pairs_path, "JSONL with id, reference, hypothesis")->required();
  c_ecw->add_option("--out", ecw.out, "report path (default: input with .cerwer.json)");

  EvalSerOpts ese;
  auto* c_ese = c_ev->add_subcommand("ser", "4-class emotion confusion matrix from label pairs");
  c_ese->add_option("--labels", ese.labels_path, "JSONL with id, true, predicted")->required();
  c_ese->add_option("--out", ese.out, "report path (default: input with .ser.json)");

  EvalPitchOpts epi;
  auto* c_epi = c_ev->add_subcommand("pitch", "extract an F0 contour from a waveform");
  c_epi->add_option("--wav", epi.wav_path, "input WAV")->required();
  c_epi->add_option("--out", epi.out, "contour CSV path (default: input with .f0.csv)");

  VizOpts vz;
  auto* c_vz = app.add_subcommand("viz",
                                  "2-D projection of style weights next to text embeddings");
  add_common(c_vz, vz);
  c_vz->add_option("--out", vz.out, "figure PNG path (default <run>/projection.png)");
  c_vz->add_option("--coords", vz.coords, "coordinates CSV path (default <run>/projection.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*c_pre) return cmd_preprocess(pre);
    if (*c_t1) return cmd_train_stage1(t1);
    if (*c_pr) return cmd_prune(pr);
    if (*c_bp) return cmd_build_pairs(bp);
    if (*c_t2) return cmd_train_stage2(t2);
    if (*c_sy) return cmd_synth(sy);
    if (*c_ecw) return cmd_eval_cerwer(ecw);
    if (*c_ese) return cmd_eval_ser(ese);
    if (*c_epi) return cmd_eval_pitch(epi);
    if (*c_vz) return cmd_viz(vz);
  } catch (const MissingArtifactError& e) {
    log::error(e.what());
    return 3;
  } catch (const std::exception& e) {
    log::error(e.what());
    return 4;
  }
  return 0;
}
