// Pipeline glue: warmup schedule, checkpoint round trips, stage-II dataset
// construction, text-only synthesis, and run-directory bookkeeping (config
// snapshots, cache resolution, the run lock).

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "temotts/pipeline/checkpoint.hpp"
#include "temotts/pipeline/optimizer.hpp"
#include "temotts/pipeline/pairs.hpp"
#include "temotts/pipeline/runconfig.hpp"
#include "temotts/pipeline/synth.hpp"

using namespace temotts;
using Catch::Matchers::WithinAbs;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("temotts_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

acoustic::AcousticConfig tiny_acoustic() {
  auto cfg = acoustic::AcousticConfig::toy();
  cfg.d_model = 8;
  cfg.encoder_layers = 1;
  cfg.decoder_layers = 1;
  cfg.ffn_hidden = 12;
  cfg.predictor_hidden = 8;
  cfg.n_mels = 8;
  return cfg;
}

style::StyleConfig tiny_style() {
  auto cfg = style::StyleConfig::toy();
  cfg.d_style = 8;
  cfg.n_mels = 8;
  return cfg;
}

corpus::PhonemeInventory letter_inventory() {
  corpus::PhonemeInventory inv;
  for (char c = 'A'; c <= 'Z'; ++c) inv.add(std::string(1, c));
  return inv;
}

audio::MelSpectrogram make_mel(std::size_t frames, std::size_t n_mels, Rng& rng) {
  audio::MelSpectrogram mel;
  mel.frames = frames;
  mel.n_mels = n_mels;
  mel.values.resize(frames * n_mels);
  for (auto& v : mel.values) v = rng.uniform(-4.0, 1.0);
  return mel;
}

pipeline::AdaptationBundle make_adaptation(std::size_t input_dim, const std::string& provider_id,
                                           const std::string& stage1_fp, std::uint64_t seed) {
  adaptation::AdaptationConfig cfg;
  cfg.layer_sizes = {input_dim, 12, 16};
  Rng rng(seed);
  pipeline::AdaptationBundle b;
  b.cfg = cfg;
  b.net = adaptation::AdaptationNet(cfg, input_dim, rng);
  b.provider_id = provider_id;
  b.stage1_fingerprint = stage1_fp;
  b.train_metrics = {{"best_val", 1.0}};
  return b;
}

}  // namespace

TEST_CASE("noam schedule warms up then decays") {
  pipeline::OptimizerConfig cfg;  // warmup 4000, base 1e-3, noam
  const double peak = cfg.lr_at(cfg.warmup_steps);
  for (std::size_t s = 1; s < cfg.warmup_steps; ++s)
    REQUIRE(cfg.lr_at(s) < cfg.lr_at(s + 1));  // strictly increasing to the peak
  for (std::size_t s = cfg.warmup_steps; s < 20000; s += 97)
    REQUIRE(cfg.lr_at(s) >= cfg.lr_at(s + 97));  // non-increasing after
  REQUIRE(peak >= cfg.lr_at(1));
  REQUIRE(peak >= cfg.lr_at(20000));

  pipeline::OptimizerConfig flat = cfg;
  flat.schedule = "constant";
  REQUIRE(flat.lr_at(1) == flat.base_lr);
  REQUIRE(flat.lr_at(100000) == flat.base_lr);

  pipeline::OptimizerConfig bad = cfg;
  bad.schedule = "cosine";
  REQUIRE_THROWS_WITH(bad.validate(), Catch::Matchers::ContainsSubstring("cosine"));
  bad = cfg;
  bad.beta1 = 0.9999;  // >= beta2
  REQUIRE_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("stage-I checkpoints round-trip exactly") {
  const auto dir = scratch_dir("ckpt1");
  auto bundle = pipeline::make_stage1_bundle(tiny_acoustic(), tiny_style(), letter_inventory(), 7);
  bundle.step = 123;
  bundle.val_metrics = {{"mel_l1", 3.25}};

  const auto path = dir / "stage1.ckpt";
  pipeline::save_stage1(path, bundle);
  auto loaded = pipeline::load_stage1(path);

  REQUIRE(loaded.step == 123);
  REQUIRE(loaded.val_metrics["mel_l1"] == 3.25);
  REQUIRE(loaded.inventory.size() == bundle.inventory.size());
  REQUIRE(loaded.inventory.id("Q") == bundle.inventory.id("Q"));
  REQUIRE_FALSE(loaded.source_fingerprint.empty());

  // forward passes agree bit-for-bit after the round trip
  const std::vector<std::size_t> ids{1, 5, 3, 9};
  auto h0 = bundle.acoustic.encode_text(ids, nn::Ctx::eval());
  auto h1 = loaded.acoustic.encode_text(ids, nn::Ctx::eval());
  REQUIRE(h0.data() == h1.data());

  Rng rng(9);
  auto mel = make_mel(12, 8, rng);
  REQUIRE(bundle.gst.extract_weights(mel) == loaded.gst.extract_weights(mel));

  SECTION("kind and schema are enforced") {
    auto ad = make_adaptation(4, "p", "", 5);
    const auto wrong = dir / "adaptation.ckpt";
    pipeline::save_adaptation(wrong, ad);
    REQUIRE_THROWS_WITH(pipeline::load_stage1(wrong),
                        Catch::Matchers::ContainsSubstring("not a stage-I checkpoint"));
    REQUIRE_THROWS_AS(pipeline::load_stage1(dir / "absent.ckpt"), MissingArtifactError);
  }
  SECTION("mismatched dimensions are rejected at bundle construction") {
    auto scfg = tiny_style();
    scfg.d_style = 16;
    REQUIRE_THROWS_WITH(
        pipeline::make_stage1_bundle(tiny_acoustic(), scfg, letter_inventory(), 7),
        Catch::Matchers::ContainsSubstring("d_model"));
  }
}

TEST_CASE("adaptation checkpoints round-trip exactly") {
  const auto dir = scratch_dir("ckpt2");
  auto bundle = make_adaptation(6, "stub:builtin:dim6:seed5", "fingerprint123", 11);
  const auto path = dir / "adaptation.ckpt";
  pipeline::save_adaptation(path, bundle);
  auto loaded = pipeline::load_adaptation(path);

  REQUIRE(loaded.provider_id == bundle.provider_id);
  REQUIRE(loaded.stage1_fingerprint == "fingerprint123");
  REQUIRE(loaded.train_metrics["best_val"] == 1.0);
  REQUIRE(loaded.net.input_dim() == 6);
  REQUIRE(loaded.net.output_dim() == 16);

  const std::vector<double> emb{0.5, -1.0, 2.0, 0.0, 1.5, -0.25};
  REQUIRE(loaded.net.predict_weights(emb) == bundle.net.predict_weights(emb));

  pipeline::save_stage1(dir / "stage1.ckpt",
                        pipeline::make_stage1_bundle(tiny_acoustic(), tiny_style(),
                                                     letter_inventory(), 7));
  REQUIRE_THROWS_WITH(pipeline::load_adaptation(dir / "stage1.ckpt"),
                      Catch::Matchers::ContainsSubstring("not an adaptation checkpoint"));
}

TEST_CASE("stage-II dataset pairs embeddings with extracted weights") {
  const auto dir = scratch_dir("pairs");
  auto bundle = pipeline::make_stage1_bundle(tiny_acoustic(), tiny_style(), letter_inventory(), 3);
  const auto ckpt = dir / "stage1.ckpt";
  pipeline::save_stage1(ckpt, bundle);
  auto stage1 = pipeline::load_stage1(ckpt);
  const std::string fp_before = file_fingerprint(ckpt);

  emotion::LexiconProvider provider("", 6, 5);
  Rng rng(13);
  std::vector<corpus::FeatureRecord> recs(3);
  recs[0].id = "a";
  recs[0].text = "sad unhappy miserable";
  recs[1].id = "b";
  recs[1].text = "happy excited glad";
  recs[2].id = "c";
  recs[2].text = "angry furious rage";
  for (auto& r : recs) r.mel = make_mel(10 + 2 * (&r - recs.data()), 8, rng);

  auto ds = pipeline::build_stage2_dataset(stage1, recs, provider);
  REQUIRE(ds.pairs.size() == 3);
  REQUIRE(ds.classes == std::vector<std::string>{"sadness", "joy", "anger"});
  for (std::size_t i = 0; i < 3; ++i) {
    REQUIRE(ds.pairs[i].id == recs[i].id);
    REQUIRE(ds.pairs[i].embedding == provider.embed(recs[i].text));
    REQUIRE(ds.pairs[i].target_weights == stage1.gst.extract_weights(recs[i].mel));
  }
  REQUIRE(ds.meta["provider_id"] == provider.id());
  REQUIRE(ds.meta["stage1_fingerprint"] == stage1.source_fingerprint);
  REQUIRE(ds.meta["embedding_dim"] == 6);
  REQUIRE(ds.meta["n_tokens"] == 16);

  // building the dataset reads but never rewrites the stage-I artifact
  auto ds2 = pipeline::build_stage2_dataset(stage1, recs, provider);
  REQUIRE(file_fingerprint(ckpt) == fp_before);
  for (std::size_t i = 0; i < 3; ++i) {
    REQUIRE(ds2.pairs[i].embedding == ds.pairs[i].embedding);
    REQUIRE(ds2.pairs[i].target_weights == ds.pairs[i].target_weights);
  }

  SECTION("pair files round-trip") {
    const auto path = dir / "pairs.jsonl";
    pipeline::save_pairs(path, ds);
    auto back = pipeline::load_pairs(path);
    REQUIRE(back.pairs.size() == ds.pairs.size());
    REQUIRE(back.classes == ds.classes);
    REQUIRE(back.meta == ds.meta);
    for (std::size_t i = 0; i < ds.pairs.size(); ++i) {
      REQUIRE(back.pairs[i].id == ds.pairs[i].id);
      REQUIRE(back.pairs[i].embedding == ds.pairs[i].embedding);
      REQUIRE(back.pairs[i].target_weights == ds.pairs[i].target_weights);
    }
    REQUIRE_THROWS_AS(pipeline::load_pairs(dir / "absent.jsonl"), MissingArtifactError);
  }
  SECTION("empty input is rejected") {
    REQUIRE_THROWS_WITH(pipeline::build_stage2_dataset(stage1, {}, provider),
                        Catch::Matchers::ContainsSubstring("pruned data"));
  }
}

TEST_CASE("text-only synthesis is deterministic and checks compatibility") {
  auto stage1 = pipeline::make_stage1_bundle(tiny_acoustic(), tiny_style(), letter_inventory(), 3);
  emotion::LexiconProvider provider("", 6, 5);
  auto adapt = make_adaptation(6, provider.id(), "", 11);
  corpus::G2p g2p;

  pipeline::SynthesisOptions opts;
  opts.vocoder = "none";
  opts.mel.n_mels = 8;

  auto r1 = pipeline::synthesize("zyx qvw", stage1, adapt, provider, g2p, opts);
  auto r2 = pipeline::synthesize("zyx qvw", stage1, adapt, provider, g2p, opts);

  REQUIRE(r1.phonemes == std::vector<std::string>{"Z", "Y", "X", "Q", "V", "W"});
  REQUIRE(r1.durations.size() == 6);
  REQUIRE(r1.mel.n_mels == 8);
  std::size_t total = 0;
  for (auto d : r1.durations) total += d;
  REQUIRE(r1.mel.frames == total);
  REQUIRE_FALSE(r1.has_waveform);
  REQUIRE(r1.waveform.empty());
  REQUIRE(r1.mel.values == r2.mel.values);
  REQUIRE(r1.gst_weights == r2.gst_weights);

  double wsum = 0.0;
  for (double w : r1.gst_weights) {
    REQUIRE(w >= 0.0);
    wsum += w;
  }
  REQUIRE_THAT(wsum, WithinAbs(1.0, 1e-12));

  SECTION("waveform synthesis through spectral inversion") {
    pipeline::SynthesisOptions gl = opts;
    gl.vocoder = "griffinlim";
    auto r = pipeline::synthesize("zyx", stage1, adapt, provider, g2p, gl);
    REQUIRE(r.has_waveform);
    REQUIRE_FALSE(r.waveform.empty());
  }
  SECTION("unknown vocoder") {
    pipeline::SynthesisOptions bad = opts;
    bad.vocoder = "wavenet";
    REQUIRE_THROWS_WITH(pipeline::synthesize("zyx", stage1, adapt, provider, g2p, bad),
                        Catch::Matchers::ContainsSubstring("wavenet"));
  }
  SECTION("empty text") {
    REQUIRE_THROWS_WITH(pipeline::synthesize("", stage1, adapt, provider, g2p, opts),
                        Catch::Matchers::ContainsSubstring("empty"));
  }
  SECTION("provider identity mismatch") {
    auto wrong = make_adaptation(6, "stub:other:dim6:seed9", "", 11);
    REQUIRE_THROWS_WITH(pipeline::synthesize("zyx", stage1, wrong, provider, g2p, opts),
                        Catch::Matchers::ContainsSubstring("emotion provider"));
  }
  SECTION("stage-I fingerprint mismatch") {
    auto wrong = make_adaptation(6, provider.id(), "other-run", 11);
    stage1.source_fingerprint = "this-run";
    REQUIRE_THROWS_WITH(pipeline::synthesize("zyx", stage1, wrong, provider, g2p, opts),
                        Catch::Matchers::ContainsSubstring("stage-I checkpoint"));
  }
  SECTION("embedding width mismatch") {
    auto wrong = make_adaptation(9, provider.id(), "", 11);
    REQUIRE_THROWS_WITH(pipeline::synthesize("zyx", stage1, wrong, provider, g2p, opts),
                        Catch::Matchers::ContainsSubstring("embedding dimension"));
  }
}

TEST_CASE("mel dumps round-trip") {
  const auto dir = scratch_dir("meldump");
  Rng rng(17);
  auto mel = make_mel(9, 8, rng);
  mel.hop = 128;
  pipeline::save_mel(dir / "x.mel", mel, "some text");
  auto back = pipeline::load_mel(dir / "x.mel");
  REQUIRE(back.frames == 9);
  REQUIRE(back.n_mels == 8);
  REQUIRE(back.hop == 128);
  REQUIRE(back.values == mel.values);
}

TEST_CASE("run config round-trips and resolves its cache directory") {
  pipeline::RunConfig cfg;
  cfg.manifest = "/data/m.jsonl";
  cfg.run_dir = "/tmp/run";
  cfg.acoustic = tiny_acoustic();
  cfg.style = tiny_style();
  cfg.pruning.threshold = 0.8;
  cfg.provider_dim = 32;
  cfg.seed = 99;

  auto back = pipeline::RunConfig::from_json(cfg.to_json());
  REQUIRE(back.manifest == cfg.manifest);
  REQUIRE(back.acoustic.d_model == 8);
  REQUIRE(back.style.d_style == 8);
  REQUIRE(back.pruning.threshold == 0.8);
  REQUIRE(back.provider_dim == 32);
  REQUIRE(back.seed == 99);
  REQUIRE(back.to_json() == cfg.to_json());

  SECTION("cache priority: environment, then config, then run dir") {
    unsetenv("TEMOTTS_CACHE_DIR");
    REQUIRE(cfg.resolved_cache_dir() == fs::path("/tmp/run/cache"));
    cfg.cache_dir = "/var/cache/temotts";
    REQUIRE(cfg.resolved_cache_dir() == fs::path("/var/cache/temotts"));
    setenv("TEMOTTS_CACHE_DIR", "/env/cache", 1);
    REQUIRE(cfg.resolved_cache_dir() == fs::path("/env/cache"));
    unsetenv("TEMOTTS_CACHE_DIR");
  }
  SECTION("mismatched model widths fail validation") {
    pipeline::RunConfig bad = cfg;
    bad.style.d_style = 16;
    REQUIRE_THROWS_WITH(bad.validate(), Catch::Matchers::ContainsSubstring("d_style"));
  }
  REQUIRE_THROWS_AS(pipeline::load_run_config("/absent/config.json"), MissingArtifactError);
}

TEST_CASE("config snapshots are write-once") {
  const auto dir = scratch_dir("snapshot");
  pipeline::RunPaths paths{dir};
  pipeline::RunConfig cfg;
  cfg.acoustic = tiny_acoustic();
  cfg.style = tiny_style();
  cfg.run_dir = dir.string();

  pipeline::snapshot_config(cfg, paths);
  REQUIRE(fs::exists(paths.config_snapshot()));
  std::ifstream is(paths.config_snapshot());
  const std::string original((std::istreambuf_iterator<char>(is)), {});

  pipeline::RunConfig changed = cfg;
  changed.seed = 4321;
  pipeline::snapshot_config(changed, paths);  // warns, never rewrites

  std::ifstream is2(paths.config_snapshot());
  const std::string after((std::istreambuf_iterator<char>(is2)), {});
  REQUIRE(after == original);

  // the snapshot reloads as the original configuration
  auto reloaded = pipeline::load_run_config(paths.config_snapshot());
  REQUIRE(reloaded.seed == cfg.seed);
}

TEST_CASE("run lock is exclusive until released") {
  const auto dir = scratch_dir("lock");
  pipeline::RunPaths paths{dir};
  {
    pipeline::RunLock lock(paths);
    REQUIRE(fs::exists(paths.lock()));
    REQUIRE_THROWS_WITH(pipeline::RunLock(paths), Catch::Matchers::ContainsSubstring("lock"));
  }
  REQUIRE_FALSE(fs::exists(paths.lock()));  // destructor releases
  pipeline::RunLock again(paths);           // and the directory is reusable
}
