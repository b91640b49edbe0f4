#include "spgnn/eval.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace spgnn {

namespace {

using nlohmann::json;

double box_area(const Box& b) { return b.w() * b.h(); }

std::vector<DetectionBox> cap_per_image(const std::vector<DetectionBox>& dets, int cap) {
    std::unordered_map<int, std::vector<int>> by_image;
    for (int i = 0; i < static_cast<int>(dets.size()); ++i)
        by_image[dets[i].image_id].push_back(i);
    std::vector<char> keep(dets.size(), 1);
    for (auto& [id, idx] : by_image)
        if (static_cast<int>(idx.size()) > cap) {
            std::stable_sort(idx.begin(), idx.end(),
                             [&](int a, int b) { return dets[a].score > dets[b].score; });
            for (size_t k = static_cast<size_t>(cap); k < idx.size(); ++k)
                keep[static_cast<size_t>(idx[k])] = 0;
        }
    std::vector<DetectionBox> out;
    for (size_t i = 0; i < dets.size(); ++i)
        if (keep[i]) out.push_back(dets[i]);
    return out;
}

std::vector<int> sorted_classes(const std::vector<GroundTruthBox>& gts) {
    std::vector<int> ids;
    for (const auto& g : gts) ids.push_back(g.category);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

// Mean AP over the IoU grid and the classes present in gts. Optionally
// exposes the per-class AP table, the class list, and the mean final recall.
double grid_mean_ap(const std::vector<DetectionBox>& dets, const std::vector<GroundTruthBox>& gts,
                    std::vector<std::vector<double>>* ap_table, std::vector<int>* class_ids,
                    double* mean_recall) {
    const std::vector<int> ids = sorted_classes(gts);
    const std::vector<double> grid = iou_grid();
    const int c_n = static_cast<int>(ids.size());
    const int t_n = static_cast<int>(grid.size());
    if (class_ids) *class_ids = ids;
    if (ap_table) ap_table->assign(static_cast<size_t>(c_n), std::vector<double>(t_n, 0.0));
    if (mean_recall) *mean_recall = 0.0;
    if (c_n == 0) return 0.0;

    struct Slice {
        std::vector<DetectionBox> dets;
        std::vector<GroundTruthBox> gts;
    };
    std::vector<Slice> slices(static_cast<size_t>(c_n));
    std::unordered_map<int, int> slot;
    for (int c = 0; c < c_n; ++c) slot[ids[static_cast<size_t>(c)]] = c;
    for (const auto& d : dets) {
        auto it = slot.find(d.category);
        if (it != slot.end()) slices[static_cast<size_t>(it->second)].dets.push_back(d);
    }
    for (const auto& g : gts) slices[static_cast<size_t>(slot[g.category])].gts.push_back(g);

    // cells are independent; each writes only its own slot
    std::vector<double> ap(static_cast<size_t>(c_n * t_n), 0.0);
    std::vector<double> rec(static_cast<size_t>(c_n * t_n), 0.0);
#pragma omp parallel for schedule(dynamic)
    for (int ct = 0; ct < c_n * t_n; ++ct) {
        const auto c = static_cast<size_t>(ct / t_n);
        const auto t = static_cast<size_t>(ct % t_n);
        PrCurve pc = pr_curve(slices[c].dets, slices[c].gts, grid[t]);
        ap[static_cast<size_t>(ct)] = average_precision(pc.precision, pc.recall);
        rec[static_cast<size_t>(ct)] = pc.recall.empty() ? 0.0 : pc.recall.back();
    }
    double ap_sum = 0.0, rec_sum = 0.0;
    for (int ct = 0; ct < c_n * t_n; ++ct) {
        ap_sum += ap[static_cast<size_t>(ct)];
        rec_sum += rec[static_cast<size_t>(ct)];
    }
    if (ap_table)
        for (int ct = 0; ct < c_n * t_n; ++ct)
            (*ap_table)[static_cast<size_t>(ct / t_n)][static_cast<size_t>(ct % t_n)] =
                ap[static_cast<size_t>(ct)];
    if (mean_recall) *mean_recall = rec_sum / (c_n * t_n);
    return ap_sum / (c_n * t_n);
}

template <class Pred>
double bucket_ap(const std::vector<DetectionBox>& dets, const std::vector<GroundTruthBox>& gts,
                 Pred pred) {
    std::vector<DetectionBox> d2;
    std::vector<GroundTruthBox> g2;
    for (const auto& d : dets)
        if (pred(d.box)) d2.push_back(d);
    for (const auto& g : gts)
        if (pred(g.box)) g2.push_back(g);
    return grid_mean_ap(d2, g2, nullptr, nullptr, nullptr);
}

json parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    try {
        json j;
        in >> j;
        return j;
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

void write_file(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << "\n";
    if (!out) throw std::runtime_error("write failed: " + path);
}

json box_to_bbox(const Box& b) { return json::array({b.x1, b.y1, b.w(), b.h()}); }

Box bbox_to_box(const json& bb) {
    if (!bb.is_array() || bb.size() != 4) throw std::runtime_error("bbox must be [x,y,w,h]");
    double x = bb[0].get<double>(), y = bb[1].get<double>();
    double w = bb[2].get<double>(), h = bb[3].get<double>();
    if (!(w > 0.0) || !(h > 0.0)) throw std::runtime_error("bbox extent must be positive");
    return Box{x, y, x + w, y + h};
}

}  // namespace

PrCurve pr_curve(std::vector<DetectionBox> dets, const std::vector<GroundTruthBox>& gts,
                 double iou_thresh) {
    std::stable_sort(dets.begin(), dets.end(),
                     [](const DetectionBox& a, const DetectionBox& b) { return a.score > b.score; });
    std::vector<char> used(gts.size(), 0);
    PrCurve out;
    int tp = 0, fp = 0;
    for (const auto& d : dets) {
        int best = -1;
        double best_iou = 0.0;
        for (size_t j = 0; j < gts.size(); ++j) {
            if (used[j] || gts[j].image_id != d.image_id) continue;
            double v = iou(d.box, gts[j].box);
            if (v >= iou_thresh && v > best_iou) {
                best_iou = v;
                best = static_cast<int>(j);
            }
        }
        if (best >= 0) {
            used[static_cast<size_t>(best)] = 1;
            ++tp;
        } else {
            ++fp;
        }
        out.precision.push_back(static_cast<double>(tp) / (tp + fp));
        out.recall.push_back(gts.empty() ? 0.0
                                         : static_cast<double>(tp) / static_cast<double>(gts.size()));
    }
    return out;
}

double average_precision(const std::vector<double>& precision, const std::vector<double>& recall) {
    if (precision.size() != recall.size())
        throw std::invalid_argument("precision/recall size mismatch");
    double total = 0.0;
    for (int s = 0; s <= 100; ++s) {
        const double rs = s / 100.0;
        double env = 0.0;
        for (size_t i = 0; i < precision.size(); ++i)
            if (recall[i] >= rs && precision[i] > env) env = precision[i];
        total += env;
    }
    return total / 101.0;
}

std::vector<double> iou_grid() {
    std::vector<double> g(10);
    for (int k = 0; k < 10; ++k) g[static_cast<size_t>(k)] = 0.5 + 0.05 * k;
    return g;
}

EvalReport evaluate(const std::vector<DetectionBox>& dets_in, const GroundTruth& gt) {
    std::unordered_set<int> image_ids;
    for (const auto& im : gt.images) image_ids.insert(im.id);
    for (const auto& d : dets_in)
        if (image_ids.find(d.image_id) == image_ids.end())
            throw std::invalid_argument("unknown image id " + std::to_string(d.image_id));

    const std::vector<DetectionBox> dets = cap_per_image(dets_in, 100);

    EvalReport rep;
    double mar = 0.0;
    rep.map = grid_mean_ap(dets, gt.boxes, &rep.ap, &rep.class_ids, &mar);
    rep.mar = mar;
    const int c_n = static_cast<int>(rep.class_ids.size());
    if (c_n > 0) {
        double s50 = 0.0, s75 = 0.0;
        for (int c = 0; c < c_n; ++c) {
            s50 += rep.ap[static_cast<size_t>(c)][0];
            s75 += rep.ap[static_cast<size_t>(c)][5];
        }
        rep.ap50 = s50 / c_n;
        rep.ap75 = s75 / c_n;
    }
    rep.ap_m = bucket_ap(dets, gt.boxes, [](const Box& b) {
        double a = box_area(b);
        return a >= 1024.0 && a <= 9216.0;
    });
    rep.ap_l = bucket_ap(dets, gt.boxes, [](const Box& b) { return box_area(b) > 9216.0; });
    return rep;
}

GroundTruth load_ground_truth(const std::string& path) {
    const json j = parse_file(path);
    GroundTruth gt;
    try {
        std::unordered_set<int> ids;
        for (const auto& im : j.at("images")) {
            ImageInfo info{im.at("id").get<int>(), im.at("width").get<int>(),
                           im.at("height").get<int>(), im.value("file_name", "")};
            if (info.width <= 0 || info.height <= 0)
                throw std::runtime_error("non-positive image size");
            if (!ids.insert(info.id).second)
                throw std::runtime_error("duplicate image id " + std::to_string(info.id));
            gt.images.push_back(info);
        }
        std::unordered_set<int> cats;
        for (const auto& c : j.at("categories")) {
            int id = c.at("id").get<int>();
            if (!cats.insert(id).second)
                throw std::runtime_error("duplicate category id " + std::to_string(id));
            gt.categories.emplace_back(id, c.at("name").get<std::string>());
        }
        for (const auto& a : j.at("annotations")) {
            GroundTruthBox b;
            b.image_id = a.at("image_id").get<int>();
            b.category = a.at("category_id").get<int>();
            if (ids.find(b.image_id) == ids.end())
                throw std::runtime_error("annotation references unknown image id " +
                                         std::to_string(b.image_id));
            if (cats.find(b.category) == cats.end())
                throw std::runtime_error("annotation references unknown category id " +
                                         std::to_string(b.category));
            b.box = bbox_to_box(a.at("bbox"));
            gt.boxes.push_back(b);
        }
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    return gt;
}

std::vector<DetectionBox> load_detections(const std::string& path) {
    const json j = parse_file(path);
    std::vector<DetectionBox> dets;
    try {
        if (!j.is_array()) throw std::runtime_error("detections file must be a JSON array");
        for (const auto& d : j) {
            DetectionBox b;
            b.image_id = d.at("image_id").get<int>();
            b.category = d.at("category_id").get<int>();
            b.box = bbox_to_box(d.at("bbox"));
            b.score = d.at("score").get<double>();
            if (!std::isfinite(b.score)) throw std::runtime_error("non-finite score");
            dets.push_back(b);
        }
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    return dets;
}

void save_ground_truth(const GroundTruth& gt, const std::string& path) {
    json j;
    j["images"] = json::array();
    for (const auto& im : gt.images) {
        json e = {{"id", im.id}, {"width", im.width}, {"height", im.height}};
        if (!im.file_name.empty()) e["file_name"] = im.file_name;
        j["images"].push_back(e);
    }
    j["annotations"] = json::array();
    for (const auto& b : gt.boxes)
        j["annotations"].push_back(
            {{"image_id", b.image_id}, {"category_id", b.category}, {"bbox", box_to_bbox(b.box)}});
    j["categories"] = json::array();
    for (const auto& [id, name] : gt.categories)
        j["categories"].push_back({{"id", id}, {"name", name}});
    write_file(j, path);
}

void save_detections(const std::vector<DetectionBox>& dets, const std::string& path) {
    json j = json::array();
    for (const auto& d : dets)
        j.push_back({{"image_id", d.image_id},
                     {"category_id", d.category},
                     {"bbox", box_to_bbox(d.box)},
                     {"score", d.score}});
    write_file(j, path);
}

void save_report(const EvalReport& rep, const std::string& path) {
    json j;
    j["mAP"] = rep.map;
    j["AP50"] = rep.ap50;
    j["AP75"] = rep.ap75;
    j["AP_M"] = rep.ap_m;
    j["AP_L"] = rep.ap_l;
    j["mAR"] = rep.mar;
    j["iou_grid"] = iou_grid();
    json per = json::array();
    for (size_t c = 0; c < rep.class_ids.size(); ++c)
        per.push_back({{"category", rep.class_ids[c]}, {"ap", rep.ap[c]}});
    j["per_class"] = per;
    write_file(j, path);
}

}  // namespace spgnn
