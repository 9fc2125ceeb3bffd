#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <map>
#include <set>

#include "vascnet/features.hpp"

namespace vascnet {

namespace {

double two_sided_p(double t, double df) {
    if (!std::isfinite(t)) return 0.0;
    const boost::math::students_t dist(df);
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_var(const std::vector<double>& v, double m) {
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

}  // namespace

PearsonResult pearson(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw Error(ErrorKind::Parameter, "correlation needs equal-length vectors");
    if (a.size() < 3) throw Error(ErrorKind::Parameter, "correlation needs at least 3 pairs");
    const double ma = mean_of(a), mb = mean_of(b);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (!(saa > 0.0) || !(sbb > 0.0)) throw Error(ErrorKind::Undefined, "correlation is undefined for a constant vector");
    PearsonResult res;
    res.n = a.size();
    res.r = std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
    const double df = static_cast<double>(res.n) - 2.0;
    const double denom = 1.0 - res.r * res.r;
    res.p = denom <= 0.0 ? 0.0 : two_sided_p(res.r * std::sqrt(df / denom), df);
    return res;
}

WelchResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() < 2 || b.size() < 2) throw Error(ErrorKind::Parameter, "t-test needs at least 2 values per group");
    const double ma = mean_of(a), mb = mean_of(b);
    const double va = sample_var(a, ma) / static_cast<double>(a.size());
    const double vb = sample_var(b, mb) / static_cast<double>(b.size());
    if (!(va + vb > 0.0)) throw Error(ErrorKind::Undefined, "t statistic is undefined when both groups have zero variance");
    WelchResult res;
    res.t = (ma - mb) / std::sqrt(va + vb);
    const double num = (va + vb) * (va + vb);
    const double den = va * va / static_cast<double>(a.size() - 1) + vb * vb / static_cast<double>(b.size() - 1);
    res.df = num / den;
    res.p = two_sided_p(res.t, res.df);
    return res;
}

std::vector<double> percent_difference(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw Error(ErrorKind::Parameter, "percent difference needs equal-length vectors");
    std::vector<double> out;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (b[i] == 0.0) throw Error(ErrorKind::Undefined, "percent difference against a zero reference at entry " + std::to_string(i));
        out.push_back(100.0 * (a[i] - b[i]) / b[i]);
    }
    return out;
}

ComparisonReport compare(const std::vector<FeatureRow>& extracted, const std::vector<FeatureRow>& truth) {
    std::map<std::string, const FeatureRow*> ex, gt;
    for (const auto& r : extracted)
        if (r.present) ex[r.artery] = &r;
    for (const auto& r : truth)
        if (r.present) gt[r.artery] = &r;
    std::set<std::string> unmatched;
    for (const auto& [name, r] : ex)
        if (!gt.count(name)) unmatched.insert(name);
    for (const auto& [name, r] : gt)
        if (!ex.count(name)) unmatched.insert(name);
    if (!unmatched.empty()) {
        std::string msg = "artery names do not match between extracted and ground truth:";
        for (const auto& n : unmatched) msg += " " + n;
        throw Error(ErrorKind::Join, msg);
    }

    ComparisonReport report;
    for (const auto& f : feature_names()) {
        FeatureComparison fc;
        fc.feature = f;
        for (const auto& [name, r] : ex) {
            const auto a = feature_value(*r, f);
            const auto b = feature_value(*gt.at(name), f);
            if (!a || !b) continue;
            fc.arteries.push_back(name);
            fc.extracted.push_back(*a);
            fc.truth.push_back(*b);
            fc.percent_diff.push_back(*b == 0.0 ? (*a == 0.0 ? 0.0 : std::copysign(INFINITY, *a)) : 100.0 * (*a - *b) / *b);
        }
        try {
            if (fc.extracted.size() >= 3) fc.correlation = pearson(fc.extracted, fc.truth);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Undefined) throw;
        }
        report.features.push_back(std::move(fc));
    }
    return report;
}

}  // namespace vascnet
