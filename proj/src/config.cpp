#include "spgnn/config.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace spgnn {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& origin, const std::string& msg) {
    throw std::invalid_argument(origin + ": " + msg);
}

void check_keys(const json& j, const std::string& origin, const std::string& prefix,
                std::initializer_list<const char*> allowed) {
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (item.key() == a) {
                ok = true;
                break;
            }
        if (!ok) fail(origin, "unknown key: " + prefix + item.key());
    }
}

template <class T>
void read_key(const json& j, const char* key, const std::string& origin,
              const std::string& prefix, T& out) {
    if (!j.contains(key)) return;
    try {
        j.at(key).get_to(out);
    } catch (const json::exception&) {
        fail(origin, "bad value for key: " + prefix + key);
    }
}

int scaled_width(double scale, int full, int floor_at) {
    int v = static_cast<int>(std::lround(full * scale));
    return v < floor_at ? floor_at : v;
}

}  // namespace

int scaled_fpn_dim(const RunConfig& cfg) { return scaled_width(cfg.width_scale, 256, 8); }
int scaled_sp_hidden(const RunConfig& cfg) { return scaled_width(cfg.width_scale, 64, 4); }
int scaled_head_width(const RunConfig& cfg) { return scaled_width(cfg.width_scale, 1024, 16); }

void RunConfig::validate() const {
    auto bad = [](const std::string& msg) { throw std::invalid_argument("config: " + msg); };
    if (depths.size() != 4) bad("model.depths must have 4 entries");
    if (dims.size() != 4) bad("model.dims must have 4 entries");
    for (int d : depths)
        if (d < 1) bad("model.depths entries must be >= 1");
    for (int d : dims) {
        if (d < 1) bad("model.dims entries must be >= 1");
        if (d % heads != 0) bad("model.dims entries must be divisible by model.heads");
    }
    if (k < 1) bad("model.k must be >= 1");
    if (heads < 1) bad("model.heads must be >= 1");
    if (!(width_scale > 0.0) || width_scale > 4.0) bad("model.width_scale must be in (0, 4]");
    if (m_target < 2) bad("superpixel.m_target must be >= 2");
    if (!(compactness > 0.0)) bad("superpixel.compactness must be > 0");
    if (slic_iters < 1) bad("superpixel.iters must be >= 1");
    if (!(rpn_nms_iou > 0.0) || rpn_nms_iou >= 1.0) bad("rpn.nms_iou must be in (0, 1)");
    if (pre_nms_top < 1) bad("rpn.pre_nms_top must be >= 1");
    if (post_nms_top < 1) bad("rpn.post_nms_top must be >= 1");
    if (lr < 0.0 || !std::isfinite(lr)) bad("optimizer.lr must be >= 0 (0 derives the default)");
    if (momentum < 0.0 || momentum >= 1.0) bad("optimizer.momentum must be in [0, 1)");
    if (weight_decay < 0.0) bad("optimizer.weight_decay must be >= 0");
    if (batch < 1) bad("optimizer.batch must be >= 1");
    if (epochs < 1) bad("schedule.epochs must be >= 1");
    if (steps < 0) bad("schedule.steps must be >= 0");
    if (warmup < 0) bad("schedule.warmup must be >= 0");
    if (early_ap50 < 0.0 || early_ap50 > 1.0) bad("schedule.early_ap50 must be in [0, 1]");
    if (eval_every < 1) bad("schedule.eval_every must be >= 1");
    if (num_classes < 1) bad("classes must be >= 1");
}

RunConfig config_from_json_text(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw std::invalid_argument(origin + ": " + e.what());
    }
    if (!j.is_object()) fail(origin, "config root must be a JSON object");

    RunConfig cfg;
    check_keys(j, origin, "",
               {"seed", "classes", "fusion", "sprpn", "model", "superpixel", "rpn", "optimizer",
                "schedule", "paths"});
    read_key(j, "seed", origin, "", cfg.seed);
    read_key(j, "classes", origin, "", cfg.num_classes);
    read_key(j, "sprpn", origin, "", cfg.sprpn);
    if (j.contains("fusion")) {
        std::string mode;
        read_key(j, "fusion", origin, "", mode);
        try {
            cfg.fusion = parse_fuse_mode(mode);
        } catch (const std::exception& e) {
            fail(origin, std::string("fusion: ") + e.what());
        }
    }
    if (j.contains("model")) {
        const json& m = j.at("model");
        check_keys(m, origin, "model.", {"depths", "dims", "k", "heads", "width_scale"});
        read_key(m, "depths", origin, "model.", cfg.depths);
        read_key(m, "dims", origin, "model.", cfg.dims);
        read_key(m, "k", origin, "model.", cfg.k);
        read_key(m, "heads", origin, "model.", cfg.heads);
        read_key(m, "width_scale", origin, "model.", cfg.width_scale);
    }
    if (j.contains("superpixel")) {
        const json& s = j.at("superpixel");
        check_keys(s, origin, "superpixel.", {"m_target", "compactness", "iters"});
        read_key(s, "m_target", origin, "superpixel.", cfg.m_target);
        read_key(s, "compactness", origin, "superpixel.", cfg.compactness);
        read_key(s, "iters", origin, "superpixel.", cfg.slic_iters);
    }
    if (j.contains("rpn")) {
        const json& r = j.at("rpn");
        check_keys(r, origin, "rpn.", {"nms_iou", "pre_nms_top", "post_nms_top"});
        read_key(r, "nms_iou", origin, "rpn.", cfg.rpn_nms_iou);
        read_key(r, "pre_nms_top", origin, "rpn.", cfg.pre_nms_top);
        read_key(r, "post_nms_top", origin, "rpn.", cfg.post_nms_top);
    }
    if (j.contains("optimizer")) {
        const json& o = j.at("optimizer");
        check_keys(o, origin, "optimizer.", {"lr", "momentum", "weight_decay", "batch"});
        read_key(o, "lr", origin, "optimizer.", cfg.lr);
        read_key(o, "momentum", origin, "optimizer.", cfg.momentum);
        read_key(o, "weight_decay", origin, "optimizer.", cfg.weight_decay);
        read_key(o, "batch", origin, "optimizer.", cfg.batch);
    }
    if (j.contains("schedule")) {
        const json& s = j.at("schedule");
        check_keys(s, origin, "schedule.",
                   {"epochs", "steps", "warmup", "early_ap50", "eval_every"});
        read_key(s, "epochs", origin, "schedule.", cfg.epochs);
        read_key(s, "steps", origin, "schedule.", cfg.steps);
        read_key(s, "warmup", origin, "schedule.", cfg.warmup);
        read_key(s, "early_ap50", origin, "schedule.", cfg.early_ap50);
        read_key(s, "eval_every", origin, "schedule.", cfg.eval_every);
    }
    if (j.contains("paths")) {
        const json& p = j.at("paths");
        check_keys(p, origin, "paths.", {"data", "out"});
        read_key(p, "data", origin, "paths.", cfg.data_dir);
        read_key(p, "out", origin, "paths.", cfg.out_dir);
    }

    if (const char* env = std::getenv("SPGNN_SEED")) {
        char* end = nullptr;
        unsigned long long v = std::strtoull(env, &end, 10);
        if (end == env || *end != '\0')
            fail(origin, std::string("SPGNN_SEED is not an integer: ") + env);
        cfg.seed = static_cast<std::uint64_t>(v);
    }
    cfg.validate();
    return cfg;
}

RunConfig config_load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config: " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return config_from_json_text(text.str(), path);
}

std::string config_to_json_text(const RunConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["classes"] = cfg.num_classes;
    j["fusion"] = fuse_mode_name(cfg.fusion);
    j["sprpn"] = cfg.sprpn;
    j["model"] = {{"depths", cfg.depths},
                  {"dims", cfg.dims},
                  {"k", cfg.k},
                  {"heads", cfg.heads},
                  {"width_scale", cfg.width_scale}};
    j["superpixel"] = {{"m_target", cfg.m_target},
                       {"compactness", cfg.compactness},
                       {"iters", cfg.slic_iters}};
    j["rpn"] = {{"nms_iou", cfg.rpn_nms_iou},
                {"pre_nms_top", cfg.pre_nms_top},
                {"post_nms_top", cfg.post_nms_top}};
    j["optimizer"] = {{"lr", cfg.lr},
                      {"momentum", cfg.momentum},
                      {"weight_decay", cfg.weight_decay},
                      {"batch", cfg.batch}};
    j["schedule"] = {{"epochs", cfg.epochs},
                     {"steps", cfg.steps},
                     {"warmup", cfg.warmup},
                     {"early_ap50", cfg.early_ap50},
                     {"eval_every", cfg.eval_every}};
    j["paths"] = {{"data", cfg.data_dir}, {"out", cfg.out_dir}};
    return j.dump(2) + "\n";
}

}  // namespace spgnn
