#include "spgnn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

#include "spgnn/checkpoint.hpp"
#include "spgnn/image.hpp"
#include "spgnn/optim.hpp"

namespace spgnn {
namespace {

std::string join(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

// %.17g keeps doubles bit-exact through the text trace, so identical runs
// produce byte-identical files.
std::string format_row(const LossRow& r) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g", r.step, r.rpn_cls,
                  r.rpn_reg, r.head_cls, r.head_reg, r.total);
    return buf;
}

bool finite_row(const LossRow& r) {
    return std::isfinite(r.rpn_cls) && std::isfinite(r.rpn_reg) && std::isfinite(r.head_cls) &&
           std::isfinite(r.head_reg) && std::isfinite(r.total);
}

void save_and_remember(const std::string& path, const std::vector<Parameter*>& params,
                       TrainStats& stats) {
    save_checkpoint(path, params);
    stats.last_checkpoint = path;
}

}  // namespace

TrainData load_train_data(const std::string& data_dir) {
    TrainData data;
    data.gt = load_ground_truth(join(data_dir, "gt.json"));
    data.per_image.resize(data.gt.images.size());
    data.images.reserve(data.gt.images.size());
    std::unordered_map<int, size_t> slot;
    for (size_t i = 0; i < data.gt.images.size(); ++i) {
        const ImageInfo& im = data.gt.images[i];
        slot[im.id] = i;
        std::string name = im.file_name;
        if (name.empty()) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "img_%04d.ppm", im.id);
            name = buf;
        }
        Tensor img = load_ppm(join(data_dir, name));
        if (img.dim(1) != im.height || img.dim(2) != im.width)
            throw std::runtime_error(name + ": size differs from the ground-truth record");
        data.images.push_back(std::move(img));
    }
    for (const GroundTruthBox& b : data.gt.boxes) data.per_image[slot.at(b.image_id)].push_back(b);
    return data;
}

double train_set_ap50(SpgnnModel& model, const TrainData& data) {
    std::vector<DetectionBox> dets;
    for (size_t i = 0; i < data.images.size(); ++i) {
        for (const Detection& d : run_detect(model, data.images[i]))
            dets.push_back({data.gt.images[i].id, d.cls, d.box, d.score});
    }
    return evaluate(dets, data.gt).ap50;
}

TrainStats train_run(const RunConfig& cfg, SpgnnModel& model, const TrainData& data) {
    cfg.validate();
    if (data.images.empty()) throw std::invalid_argument("train_run: empty dataset");
    std::filesystem::create_directories(cfg.out_dir);
    {
        std::ofstream echo(join(cfg.out_dir, "config.json"), std::ios::binary);
        echo << config_to_json_text(cfg);
    }

    TrainStats stats;
    stats.trace_path = join(cfg.out_dir, "trace.csv");
    std::vector<Parameter*> params = model.params();
    save_and_remember(join(cfg.out_dir, "ckpt_init.bin"), params, stats);

    const double base_lr = cfg.effective_lr();
    SgdMomentum opt(params, base_lr, cfg.momentum, cfg.weight_decay);
    // Separate streams so the visit order and the in-loss sampling stay
    // decoupled: both derive from the seed alone.
    Rng order_rng(cfg.seed ^ 0x5DEECE66DULL);
    Rng sample_rng(cfg.seed ^ 0xC0FFEE123ULL);

    std::ofstream trace(stats.trace_path, std::ios::binary);
    if (!trace) throw std::runtime_error("cannot write " + stats.trace_path);
    trace << "step,rpn_cls,rpn_reg,head_cls,head_reg,total\n";

    int step = 0;
    bool stop = false;
    for (int epoch = 0; epoch < cfg.epochs && !stop; ++epoch) {
        std::vector<int> order(data.images.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        order_rng.shuffle(order);
        for (size_t at = 0; at < order.size() && !stop; at += static_cast<size_t>(cfg.batch)) {
            const size_t bn = std::min(static_cast<size_t>(cfg.batch), order.size() - at);
            zero_grads(params);
            LossRow row;
            bool bad = false;
            for (size_t b = 0; b < bn; ++b) {
                const int idx = order[at + b];
                Graph g;
                LossTerms lt = image_loss(g, model, data.images[idx], data.per_image[idx],
                                          sample_rng);
                row.rpn_cls += lt.rpn_cls.value().item();
                row.rpn_reg += lt.rpn_reg.value().item();
                row.head_cls += lt.head_cls.value().item();
                row.head_reg += lt.head_reg.value().item();
                row.total += lt.total.value().item();
                if (!finite_row(row)) {
                    bad = true;
                    break;
                }
                g.backward(lt.total);
            }
            if (bad) {  // keep the last good checkpoint, skip the step
                stats.aborted = true;
                break;
            }
            const double inv = 1.0 / static_cast<double>(bn);
            row.rpn_cls *= inv;
            row.rpn_reg *= inv;
            row.head_cls *= inv;
            row.head_reg *= inv;
            row.total *= inv;
            for (Parameter* p : params) {
                double* gd = p->grad.data();
                const std::int64_t n = p->grad.numel();
                for (std::int64_t i = 0; i < n; ++i) gd[i] *= inv;
            }
            ++step;
            row.step = step;
            double lr = base_lr;
            if (cfg.warmup > 0 && step <= cfg.warmup)
                lr = base_lr * static_cast<double>(step) / cfg.warmup;
            opt.set_lr(lr);
            opt.step();
            trace << format_row(row) << "\n";
            stats.trace.push_back(row);
            if (cfg.early_ap50 > 0.0 && step % cfg.eval_every == 0) {
                trace.flush();
                stats.final_ap50 = train_set_ap50(model, data);
                if (stats.final_ap50 >= cfg.early_ap50) {
                    stats.early_stopped = true;
                    stop = true;
                }
            }
            if (cfg.steps > 0 && step >= cfg.steps) stop = true;
        }
        if (stats.aborted) break;
        if (!stop) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "ckpt_epoch_%03d.bin", epoch + 1);
            save_and_remember(join(cfg.out_dir, buf), params, stats);
        }
    }
    if (!stats.aborted) save_and_remember(join(cfg.out_dir, "ckpt_final.bin"), params, stats);
    return stats;
}

}  // namespace spgnn
