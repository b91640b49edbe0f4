#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "spgnn/config.hpp"

using namespace spgnn;

namespace {

// Tests must see a clean environment regardless of the caller's shell.
struct SeedEnvGuard {
    SeedEnvGuard() { unsetenv("SPGNN_SEED"); }
    ~SeedEnvGuard() { unsetenv("SPGNN_SEED"); }
    void set(const char* v) { setenv("SPGNN_SEED", v, 1); }
};

RunConfig parse(const std::string& text) { return config_from_json_text(text, "test"); }

}  // namespace

TEST_CASE("empty config object yields all defaults") {
    SeedEnvGuard env;
    RunConfig cfg = parse("{}");
    CHECK(cfg.depths == std::vector<int>{2, 2, 6, 2});
    CHECK(cfg.dims == std::vector<int>{80, 160, 400, 640});
    CHECK(cfg.k == 9);
    CHECK(cfg.heads == 4);
    CHECK(cfg.width_scale == 1.0);
    CHECK(cfg.sprpn);
    CHECK(cfg.fusion == FuseMode::concat);
    CHECK(cfg.m_target == 196);
    CHECK(cfg.compactness == 10.0);
    CHECK(cfg.slic_iters == 10);
    CHECK(cfg.rpn_nms_iou == 0.7);
    CHECK(cfg.pre_nms_top == 1000);
    CHECK(cfg.post_nms_top == 300);
    CHECK(cfg.lr == 0.0);
    CHECK(cfg.effective_lr() == 0.02 * 2 / 16.0);
    CHECK(cfg.momentum == 0.9);
    CHECK(cfg.weight_decay == 1e-4);
    CHECK(cfg.batch == 2);
    CHECK(cfg.epochs == 12);
    CHECK(cfg.steps == 0);
    CHECK(cfg.seed == 7);
    CHECK(cfg.num_classes == 5);
}

TEST_CASE("explicit keys override defaults") {
    SeedEnvGuard env;
    RunConfig cfg = parse(R"({
      "seed": 99, "classes": 3, "fusion": "add", "sprpn": false,
      "model": {"depths": [1,1,2,1], "dims": [10,20,50,80], "k": 6, "heads": 2,
                "width_scale": 0.125},
      "superpixel": {"m_target": 64, "compactness": 8.5, "iters": 4},
      "rpn": {"nms_iou": 0.6, "pre_nms_top": 500, "post_nms_top": 100},
      "optimizer": {"lr": 0.01, "momentum": 0.8, "weight_decay": 0.0, "batch": 4},
      "schedule": {"epochs": 3, "steps": 40, "warmup": 5, "early_ap50": 0.9, "eval_every": 10},
      "paths": {"data": "d", "out": "o"}
    })");
    CHECK(cfg.seed == 99);
    CHECK(cfg.num_classes == 3);
    CHECK(cfg.fusion == FuseMode::add);
    CHECK_FALSE(cfg.sprpn);
    CHECK(cfg.depths == std::vector<int>{1, 1, 2, 1});
    CHECK(cfg.dims == std::vector<int>{10, 20, 50, 80});
    CHECK(cfg.k == 6);
    CHECK(cfg.heads == 2);
    CHECK(cfg.width_scale == 0.125);
    CHECK(cfg.m_target == 64);
    CHECK(cfg.compactness == 8.5);
    CHECK(cfg.slic_iters == 4);
    CHECK(cfg.rpn_nms_iou == 0.6);
    CHECK(cfg.pre_nms_top == 500);
    CHECK(cfg.post_nms_top == 100);
    CHECK(cfg.lr == 0.01);
    CHECK(cfg.effective_lr() == 0.01);
    CHECK(cfg.momentum == 0.8);
    CHECK(cfg.weight_decay == 0.0);
    CHECK(cfg.batch == 4);
    CHECK(cfg.epochs == 3);
    CHECK(cfg.steps == 40);
    CHECK(cfg.warmup == 5);
    CHECK(cfg.early_ap50 == 0.9);
    CHECK(cfg.eval_every == 10);
    CHECK(cfg.data_dir == "d");
    CHECK(cfg.out_dir == "o");
}

TEST_CASE("fusion accepts concat and rejects other strings") {
    SeedEnvGuard env;
    CHECK(parse(R"({"fusion": "concat"})").fusion == FuseMode::concat);
    CHECK_THROWS_AS(parse(R"({"fusion": "mul"})"), std::invalid_argument);
}

TEST_CASE("unknown keys are rejected with their full path") {
    SeedEnvGuard env;
    auto message_of = [](const std::string& text) {
        try {
            config_from_json_text(text, "test");
        } catch (const std::invalid_argument& e) {
            return std::string(e.what());
        }
        return std::string("(no throw)");
    };
    CHECK(message_of(R"({"fussion": "concat"})").find("fussion") != std::string::npos);
    CHECK(message_of(R"({"model": {"depth": [1,1,1,1]}})").find("model.depth") !=
          std::string::npos);
    CHECK(message_of(R"({"optimizer": {"learning_rate": 0.1}})").find("optimizer.learning_rate") !=
          std::string::npos);
    CHECK(message_of(R"({"schedule": {"step": 3}})").find("schedule.step") != std::string::npos);
}

TEST_CASE("bad value types name the offending key") {
    SeedEnvGuard env;
    auto message_of = [](const std::string& text) {
        try {
            config_from_json_text(text, "test");
        } catch (const std::invalid_argument& e) {
            return std::string(e.what());
        }
        return std::string("(no throw)");
    };
    std::string m = message_of(R"({"model": {"k": "nine"}})");
    CHECK(m.find("bad value") != std::string::npos);
    CHECK(m.find("model.k") != std::string::npos);
    CHECK(message_of(R"({"optimizer": {"lr": "fast"}})").find("optimizer.lr") !=
          std::string::npos);
    CHECK_THROWS_AS(parse("[1,2]"), std::invalid_argument);
    CHECK_THROWS_AS(parse("not json"), std::invalid_argument);
}

TEST_CASE("SPGNN_SEED overrides the config seed") {
    SeedEnvGuard env;
    env.set("12345");
    CHECK(parse(R"({"seed": 5})").seed == 12345);
    CHECK(parse("{}").seed == 12345);
    env.set("0");
    CHECK(parse(R"({"seed": 5})").seed == 0);
    env.set("twelve");
    CHECK_THROWS_AS(parse("{}"), std::invalid_argument);
    env.set("12x");
    CHECK_THROWS_AS(parse("{}"), std::invalid_argument);
}

TEST_CASE("config text round-trips through the echo form") {
    SeedEnvGuard env;
    RunConfig cfg = parse(R"({
      "seed": 42, "fusion": "add", "sprpn": false,
      "model": {"dims": [8,16,32,64], "heads": 2, "width_scale": 0.25},
      "optimizer": {"lr": 0.005, "batch": 1},
      "schedule": {"steps": 17}
    })");
    RunConfig back = config_from_json_text(config_to_json_text(cfg), "echo");
    CHECK(back.seed == cfg.seed);
    CHECK(back.fusion == cfg.fusion);
    CHECK(back.sprpn == cfg.sprpn);
    CHECK(back.dims == cfg.dims);
    CHECK(back.heads == cfg.heads);
    CHECK(back.width_scale == cfg.width_scale);
    CHECK(back.lr == cfg.lr);
    CHECK(back.batch == cfg.batch);
    CHECK(back.steps == cfg.steps);
    CHECK(back.data_dir == cfg.data_dir);
    CHECK(back.out_dir == cfg.out_dir);
}

TEST_CASE("config_load reads files and rejects missing ones") {
    SeedEnvGuard env;
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "spgnn_config_test";
    fs::create_directories(dir);
    fs::path p = dir / "cfg.json";
    {
        std::ofstream out(p);
        out << R"({"model": {"k": 12}})";
    }
    CHECK(config_load(p.string()).k == 12);
    CHECK_THROWS_AS(config_load((dir / "missing.json").string()), std::invalid_argument);
    fs::remove_all(dir);
}

TEST_CASE("validation rejects out-of-range settings") {
    SeedEnvGuard env;
    CHECK_THROWS_AS(parse(R"({"model": {"depths": [1,1,1]}})"), std::invalid_argument);
    CHECK_THROWS_AS(parse(R"({"model": {"dims": [10,20,50,81]}})"), std::invalid_argument);
    CHECK_THROWS_AS(parse(R"({"model": {"k": 0}})"), std::invalid_argument);
    CHECK_THROWS_AS(parse(R"({"model": {"width_scale": 0.0}})"), std::invalid_argument);
    CHECK_THROWS_AS(parse(R"({"model": {"width_scale": 5.0}})"), std::invalid_argument);
    CHECK_THROWS_AS(parse(R"({"superpixel": {"m_target": 1}})"), std::invalid_argument);
    CHECK_THROWS_AS(parse(R"({"superpixel": {"iters": 0}})"), std::invalid_argument);
    CHECK_THROWS_AS(parse(R"({"rpn": {"nms_iou": 1.0}})"), std::invalid_argument);
    CHECK_THROWS_AS(parse(R"({"optimizer": {"momentum": 1.0}})"), std::invalid_argument);
    CHECK_THROWS_AS(parse(R"({"optimizer": {"batch": 0}})"), std::invalid_argument);
    CHECK_THROWS_AS(parse(R"({"schedule": {"epochs": 0}})"), std::invalid_argument);
    CHECK_THROWS_AS(parse(R"({"schedule": {"early_ap50": 1.5}})"), std::invalid_argument);
    CHECK_THROWS_AS(parse(R"({"schedule": {"eval_every": 0}})"), std::invalid_argument);
    CHECK_THROWS_AS(parse(R"({"classes": 0})"), std::invalid_argument);
}

TEST_CASE("derived widths scale from the full-size values with floors") {
    SeedEnvGuard env;
    RunConfig full;
    CHECK(scaled_fpn_dim(full) == 256);
    CHECK(scaled_sp_hidden(full) == 64);
    CHECK(scaled_head_width(full) == 1024);
    RunConfig desk;
    desk.width_scale = 0.125;
    CHECK(scaled_fpn_dim(desk) == 32);
    CHECK(scaled_sp_hidden(desk) == 8);
    CHECK(scaled_head_width(desk) == 128);
    RunConfig tiny;
    tiny.width_scale = 0.001;
    CHECK(scaled_fpn_dim(tiny) == 8);
    CHECK(scaled_sp_hidden(tiny) == 4);
    CHECK(scaled_head_width(tiny) == 16);
}
