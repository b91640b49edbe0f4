#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "spgnn/checkpoint.hpp"
#include "spgnn/synth.hpp"
#include "spgnn/trainer.hpp"

using namespace spgnn;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

// Small enough that a step takes well under a second.
RunConfig tiny_config(const std::string& out_dir) {
    RunConfig cfg;
    cfg.depths = {1, 1, 1, 1};
    cfg.dims = {4, 8, 8, 8};
    cfg.k = 4;
    cfg.heads = 2;
    cfg.width_scale = 0.03;  // fpn 8, gcn hidden 4, head width 31
    cfg.m_target = 32;
    cfg.slic_iters = 3;
    cfg.pre_nms_top = 200;
    cfg.post_nms_top = 50;
    cfg.batch = 2;
    cfg.epochs = 3;
    cfg.steps = 4;
    cfg.seed = 77;
    cfg.out_dir = out_dir;
    return cfg;
}

TrainData tiny_data() {
    SyntheticSpec spec;
    spec.seed = 31;
    spec.size = 64;
    spec.count = 4;
    fs::path dir = fs::temp_directory_path() / "spgnn_trainer_data";
    fs::remove_all(dir);
    synth_generate(spec, dir.string());
    return load_train_data(dir.string());
}

}  // namespace

TEST_CASE("training writes a finite trace, checkpoints, and a config echo") {
    TrainData data = tiny_data();
    CHECK(data.images.size() == 4);
    for (size_t i = 0; i < data.images.size(); ++i) {
        CHECK(data.images[i].dim(1) == 64);
        CHECK(data.images[i].dim(2) == 64);
        CHECK(!data.per_image[i].empty());
        for (const GroundTruthBox& b : data.per_image[i])
            CHECK(b.image_id == data.gt.images[i].id);
    }

    fs::path out = fs::temp_directory_path() / "spgnn_trainer_a";
    fs::remove_all(out);
    RunConfig cfg = tiny_config(out.string());
    SpgnnModel model(cfg);
    Rng init_rng(cfg.seed);
    model.init(init_rng);
    TrainStats stats = train_run(cfg, model, data);

    CHECK_FALSE(stats.aborted);
    CHECK_FALSE(stats.early_stopped);
    REQUIRE(stats.trace.size() == 4);  // 4 images / batch 2, capped at 4 steps
    for (size_t i = 0; i < stats.trace.size(); ++i) {
        const LossRow& r = stats.trace[i];
        CHECK(r.step == static_cast<int>(i) + 1);
        for (double v : {r.rpn_cls, r.rpn_reg, r.head_cls, r.head_reg, r.total}) {
            CHECK(std::isfinite(v));
            CHECK(v >= 0.0);
        }
        CHECK(r.total == doctest::Approx(r.rpn_cls + r.rpn_reg + r.head_cls + r.head_reg)
                             .epsilon(1e-12));
    }

    // trace file: header plus one line per step
    std::string trace = slurp(stats.trace_path);
    CHECK(trace.rfind("step,rpn_cls,rpn_reg,head_cls,head_reg,total\n", 0) == 0);
    CHECK(std::count(trace.begin(), trace.end(), '\n') == 5);

    CHECK(fs::exists(out / "ckpt_init.bin"));
    CHECK(fs::exists(out / "ckpt_epoch_001.bin"));
    CHECK_FALSE(fs::exists(out / "ckpt_epoch_002.bin"));  // step cap hit mid-epoch 2
    CHECK(fs::exists(out / "ckpt_final.bin"));
    CHECK(stats.last_checkpoint == (out / "ckpt_final.bin").string());

    RunConfig echoed = config_load((out / "config.json").string());
    CHECK(echoed.seed == cfg.seed);
    CHECK(echoed.steps == cfg.steps);
    CHECK(echoed.width_scale == cfg.width_scale);

    // the final checkpoint restores the trained weights bit-exactly
    SpgnnModel reloaded(cfg);
    load_checkpoint(stats.last_checkpoint, reloaded.params());
    std::vector<Detection> want = run_detect(model, data.images[0]);
    std::vector<Detection> got = run_detect(reloaded, data.images[0]);
    REQUIRE(got.size() == want.size());
    for (size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].cls == want[i].cls);
        CHECK(got[i].score == want[i].score);
        CHECK(got[i].box.x1 == want[i].box.x1);
        CHECK(got[i].box.y1 == want[i].box.y1);
        CHECK(got[i].box.x2 == want[i].box.x2);
        CHECK(got[i].box.y2 == want[i].box.y2);
    }
    fs::remove_all(out);
}

TEST_CASE("same seed reproduces the loss trace byte for byte") {
    TrainData data = tiny_data();
    fs::path out_a = fs::temp_directory_path() / "spgnn_trainer_b1";
    fs::path out_b = fs::temp_directory_path() / "spgnn_trainer_b2";
    fs::remove_all(out_a);
    fs::remove_all(out_b);

    RunConfig cfg_a = tiny_config(out_a.string());
    SpgnnModel model_a(cfg_a);
    Rng rng_a(cfg_a.seed);
    model_a.init(rng_a);
    TrainStats stats_a = train_run(cfg_a, model_a, data);

    RunConfig cfg_b = tiny_config(out_b.string());
    SpgnnModel model_b(cfg_b);
    Rng rng_b(cfg_b.seed);
    model_b.init(rng_b);
    TrainStats stats_b = train_run(cfg_b, model_b, data);

    CHECK(slurp(stats_a.trace_path) == slurp(stats_b.trace_path));
    CHECK(slurp(out_a / "ckpt_final.bin") == slurp(out_b / "ckpt_final.bin"));

    // a different seed changes the trace
    fs::path out_c = fs::temp_directory_path() / "spgnn_trainer_b3";
    fs::remove_all(out_c);
    RunConfig cfg_c = tiny_config(out_c.string());
    cfg_c.seed = 78;
    SpgnnModel model_c(cfg_c);
    Rng rng_c(cfg_c.seed);
    model_c.init(rng_c);
    TrainStats stats_c = train_run(cfg_c, model_c, data);
    CHECK(slurp(stats_a.trace_path) != slurp(stats_c.trace_path));

    fs::remove_all(out_a);
    fs::remove_all(out_b);
    fs::remove_all(out_c);
}

TEST_CASE("train-set AP50 evaluation runs during training when requested") {
    TrainData data = tiny_data();
    fs::path out = fs::temp_directory_path() / "spgnn_trainer_c";
    fs::remove_all(out);
    RunConfig cfg = tiny_config(out.string());
    cfg.early_ap50 = 1.0;  // evaluated but effectively never reached here
    cfg.eval_every = 2;
    SpgnnModel model(cfg);
    Rng rng(cfg.seed);
    model.init(rng);
    TrainStats stats = train_run(cfg, model, data);
    CHECK(stats.final_ap50 >= 0.0);
    CHECK(stats.final_ap50 <= 1.0);
    fs::remove_all(out);
}

TEST_CASE("a diverging run aborts and keeps the last good checkpoint") {
    TrainData data = tiny_data();
    fs::path out = fs::temp_directory_path() / "spgnn_trainer_d";
    fs::remove_all(out);
    RunConfig cfg = tiny_config(out.string());
    cfg.lr = 1e12;  // guarantees overflow within a step or two
    cfg.steps = 10;
    SpgnnModel model(cfg);
    Rng rng(cfg.seed);
    model.init(rng);
    TrainStats stats = train_run(cfg, model, data);
    CHECK(stats.aborted);
    CHECK(stats.trace.size() < 10);
    CHECK(fs::exists(stats.last_checkpoint));
    // every written row is still finite: the bad step was never logged
    for (const LossRow& r : stats.trace) CHECK(std::isfinite(r.total));
    fs::remove_all(out);
}

TEST_CASE("loading training data validates the directory") {
    CHECK_THROWS((void)load_train_data((fs::temp_directory_path() / "spgnn_missing").string()));
}
