#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <vector>

#include "miae/core/errors.hpp"

namespace miae::eval {

struct ClassificationMetrics {
    double accuracy = 0.0;
    // Macro-F1 averaged over the classes present in truth or predictions.
    double macro_f1 = 0.0;
    // Macro-F1 averaged over a fixed label space 0..n_classes-1; classes that
    // never occur contribute zero. Equal to macro_f1 when no space is given.
    double macro_f1_full = 0.0;
    std::size_t n_classes_present = 0;
};

// Accuracy and macro-averaged F1. Classes appearing in neither the truth nor
// the predictions are excluded from the macro average; classes that occur in
// the truth but are never predicted count with F1 = 0. Passing n_classes > 0
// additionally averages over the whole label space for macro_f1_full.
inline ClassificationMetrics classification_metrics(const std::vector<int>& truth,
                                                    const std::vector<int>& pred,
                                                    std::size_t n_classes = 0) {
    if (truth.size() != pred.size())
        throw ShapeError("classification_metrics: length mismatch");
    if (truth.empty()) throw ShapeError("classification_metrics: empty input");

    std::map<int, std::size_t> tp, fp, fn;
    std::set<int> classes;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        classes.insert(truth[i]);
        classes.insert(pred[i]);
        if (truth[i] == pred[i]) {
            ++tp[truth[i]];
            ++correct;
        } else {
            ++fp[pred[i]];
            ++fn[truth[i]];
        }
    }

    auto f1_of = [&](int c) {
        const double tpc = static_cast<double>(tp.count(c) ? tp.at(c) : 0);
        const double fpc = static_cast<double>(fp.count(c) ? fp.at(c) : 0);
        const double fnc = static_cast<double>(fn.count(c) ? fn.at(c) : 0);
        const double denom = 2.0 * tpc + fpc + fnc;
        return denom == 0.0 ? 0.0 : 2.0 * tpc / denom;
    };

    ClassificationMetrics out;
    out.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
    out.n_classes_present = classes.size();
    double sum = 0.0;
    for (int c : classes) sum += f1_of(c);
    out.macro_f1 = sum / static_cast<double>(classes.size());

    if (n_classes == 0) {
        out.macro_f1_full = out.macro_f1;
    } else {
        for (int c : classes)
            if (c < 0 || static_cast<std::size_t>(c) >= n_classes)
                throw ShapeError("classification_metrics: label outside the class space");
        out.macro_f1_full = sum / static_cast<double>(n_classes);
    }
    return out;
}

} // namespace miae::eval
