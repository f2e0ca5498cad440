// Stage-I training loop: loss decreases on a memorizable dataset, the curve
// is recorded with the scheduled learning rate, preparation skips unusable
// records, and runs are reproducible.

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <numeric>

#include "temotts/pipeline/train1.hpp"

using namespace temotts;
namespace fs = std::filesystem;

namespace {

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

corpus::PhonemeInventory small_inventory() {
  corpus::PhonemeInventory inv;
  for (const char* p : {"A", "B", "C", "D"}) inv.add(p);
  return inv;
}

corpus::FeatureRecord make_record(const std::string& id, std::size_t n_phones, Rng& rng) {
  corpus::FeatureRecord rec;
  rec.id = id;
  rec.text = id;
  for (std::size_t i = 0; i < n_phones; ++i)
    rec.phonemes.push_back(std::string(1, static_cast<char>('A' + rng.index(4))));
  rec.durations.assign(n_phones, 0);
  std::size_t frames = 0;
  for (auto& d : rec.durations) {
    d = 2 + rng.index(3);
    frames += d;
  }
  rec.mel.frames = frames;
  rec.mel.n_mels = 8;
  rec.mel.values.resize(frames * 8);
  for (auto& v : rec.mel.values) v = rng.uniform(-4.0, 0.0);
  rec.pitch.resize(n_phones);
  rec.energy.resize(n_phones);
  for (auto& p : rec.pitch) p = rng.uniform(4.5, 5.5);
  for (auto& e : rec.energy) e = rng.uniform(0.5, 2.0);
  return rec;
}

pipeline::OptimizerConfig constant_opt(double lr) {
  pipeline::OptimizerConfig cfg;
  cfg.schedule = "constant";
  cfg.base_lr = lr;
  return cfg;
}

}  // namespace

TEST_CASE("training memorizes a tiny corpus") {
  Rng rng(61);
  std::vector<corpus::FeatureRecord> train{make_record("t0", 4, rng), make_record("t1", 5, rng),
                                           make_record("t2", 3, rng)};
  std::vector<corpus::FeatureRecord> val{make_record("v0", 4, rng)};

  pipeline::Stage1TrainConfig tcfg;
  tcfg.max_steps = 60;
  tcfg.val_every = 20;
  tcfg.seed = 5;
  tcfg.log_progress = false;

  auto res = pipeline::train_stage1(train, val, tiny_acoustic(), tiny_style(), small_inventory(),
                                    constant_opt(3e-3), tcfg);

  REQUIRE(res.curve.size() == 60);
  REQUIRE(res.final_train_mel_l1 < res.initial_train_mel_l1);
  REQUIRE(std::isfinite(res.best_val));
  REQUIRE(res.best_step >= 20);
  REQUIRE(res.bundle.step == 60);
  REQUIRE(res.bundle.val_metrics["initial_train_mel_l1"] == res.initial_train_mel_l1);
  REQUIRE(res.bundle.val_metrics["final_train_mel_l1"] == res.final_train_mel_l1);
  REQUIRE(res.bundle.val_metrics["best_step"] == res.best_step);

  // the recorded lr column follows the schedule
  for (const auto& s : res.curve) {
    REQUIRE(s.lr == 3e-3);
    REQUIRE(s.total >= s.mel_l1);  // total includes the variance terms
  }
  REQUIRE(res.curve.front().step == 1);
  REQUIRE(res.curve.back().step == 60);

  SECTION("loss curve csv") {
    const auto path = fs::temp_directory_path() / "temotts_curve.csv";
    pipeline::write_loss_curve_csv(path, res.curve);
    std::ifstream is(path);
    std::string header;
    std::getline(is, header);
    REQUIRE(header == "step,lr,total,mel_l1,duration_mse,pitch_mse,energy_mse");
    std::size_t rows = 0;
    std::string line;
    while (std::getline(is, line))
      if (!line.empty()) ++rows;
    REQUIRE(rows == res.curve.size());
    fs::remove(path);
  }
}

TEST_CASE("training is reproducible for a fixed seed") {
  Rng rng(67);
  std::vector<corpus::FeatureRecord> train{make_record("a", 4, rng), make_record("b", 4, rng)};

  pipeline::Stage1TrainConfig tcfg;
  tcfg.max_steps = 15;
  tcfg.val_every = 5;
  tcfg.seed = 17;
  tcfg.log_progress = false;

  auto r1 = pipeline::train_stage1(train, {}, tiny_acoustic(), tiny_style(), small_inventory(),
                                   constant_opt(1e-3), tcfg);
  auto r2 = pipeline::train_stage1(train, {}, tiny_acoustic(), tiny_style(), small_inventory(),
                                   constant_opt(1e-3), tcfg);
  REQUIRE(r1.curve.size() == r2.curve.size());
  for (std::size_t i = 0; i < r1.curve.size(); ++i) {
    REQUIRE(r1.curve[i].total == r2.curve[i].total);
    REQUIRE(r1.curve[i].mel_l1 == r2.curve[i].mel_l1);
  }
  REQUIRE(r1.best_val == r2.best_val);

  // the returned bundles produce identical mels
  const std::vector<std::size_t> ids{1, 2, 3};
  auto h1 = r1.bundle.acoustic.encode_text(ids, nn::Ctx::eval());
  auto h2 = r2.bundle.acoustic.encode_text(ids, nn::Ctx::eval());
  REQUIRE(h1.data() == h2.data());
}

TEST_CASE("preparation skips records the model cannot train on") {
  Rng rng(71);
  auto good = make_record("good", 4, rng);

  auto no_durations = make_record("nodur", 4, rng);
  no_durations.durations.clear();

  auto short_mel = make_record("short", 2, rng);
  short_mel.durations = {2, 2};  // 4 frames < the reference encoder minimum of 8
  short_mel.mel.frames = 4;
  short_mel.mel.values.resize(4 * 8);

  auto unknown_phoneme = make_record("oov", 3, rng);
  unknown_phoneme.phonemes[1] = "ZZ";

  pipeline::Stage1TrainConfig tcfg;
  tcfg.max_steps = 3;
  tcfg.val_every = 3;
  tcfg.log_progress = false;

  // the three bad records are skipped, training proceeds on the good one
  auto res = pipeline::train_stage1({good, no_durations, short_mel, unknown_phoneme}, {},
                                    tiny_acoustic(), tiny_style(), small_inventory(),
                                    constant_opt(1e-3), tcfg);
  REQUIRE(res.curve.size() == 3);

  // nothing trainable at all is an error
  REQUIRE_THROWS_WITH(pipeline::train_stage1({no_durations}, {}, tiny_acoustic(), tiny_style(),
                                             small_inventory(), constant_opt(1e-3), tcfg),
                      Catch::Matchers::ContainsSubstring("no trainable utterances"));
}
