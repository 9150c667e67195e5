#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "miae/core/errors.hpp"
#include "miae/train/trainer.hpp"

namespace miae::train {

// Line-delimited JSON metrics stream, one record per optimization step.
class MetricsWriter {
  public:
    explicit MetricsWriter(const std::string& path) : out_(path, std::ios::app) {
        if (!out_) throw Error("cannot open metrics file: " + path);
    }

    void write(const StepReport& r) {
        nlohmann::json j{{"step", r.step},
                         {"lr", r.lr},
                         {"dist", r.loss.dist},
                         {"dir", r.loss.dir},
                         {"binned_dist", r.loss.binned_dist},
                         {"binned_dir", r.loss.binned_dir},
                         {"total", r.loss.total}};
        if (r.loss.inverse_folding != 0.0 || r.loss.inverse_folding_empty)
            j["inverse_folding"] = r.loss.inverse_folding;
        out_ << j.dump() << '\n';
        out_.flush();
    }

    void write(const ClassStepReport& r) {
        const nlohmann::json j{{"step", r.step},
                               {"lr", r.lr},
                               {"cross_entropy", r.cross_entropy},
                               {"accuracy", r.accuracy}};
        out_ << j.dump() << '\n';
        out_.flush();
    }

  private:
    std::ofstream out_;
};

} // namespace miae::train
