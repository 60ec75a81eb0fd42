#pragma once

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "charmend/core/errors.hpp"
#include "charmend/eval/m2.hpp"

namespace charmend {

struct LengthBin {
    size_t low = 0;   // inclusive source word count
    size_t high = 0;  // exclusive
    size_t count = 0;
    double f = 0.0;
};

/// F-score by source-length bucket: per-bin counts aggregated from the
/// per-sentence scoring results, bins holding fewer than min_count
/// sentences suppressed.
inline std::vector<LengthBin> length_breakdown(const M2Report& report,
                                               const std::vector<size_t>& source_lengths,
                                               size_t bin_width = 5, double beta = 0.5,
                                               size_t min_count = 10) {
    if (report.sentences.size() != source_lengths.size())
        throw ArgumentError("length_breakdown: report and length list disagree");
    if (bin_width == 0) throw ArgumentError("length_breakdown: bin width must be positive");

    std::map<size_t, PRF> bins;
    std::map<size_t, size_t> counts;
    for (size_t s = 0; s < report.sentences.size(); ++s) {
        const size_t bin = source_lengths[s] / bin_width;
        PRF& prf = bins[bin];
        prf.beta = beta;
        prf.matched += report.sentences[s].matched;
        prf.proposed += report.sentences[s].proposed;
        prf.gold += report.sentences[s].gold;
        ++counts[bin];
    }

    std::vector<LengthBin> out;
    for (const auto& [bin, prf] : bins) {
        if (counts[bin] < min_count) continue;
        LengthBin lb;
        lb.low = bin * bin_width;
        lb.high = (bin + 1) * bin_width;
        lb.count = counts[bin];
        lb.f = prf.f();
        out.push_back(lb);
    }
    return out;
}

/// Plottable TSV: bin_low, bin_high, count, F (F as a percentage).
inline std::string length_bins_tsv(const std::vector<LengthBin>& bins) {
    std::ostringstream out;
    out << "bin_low\tbin_high\tcount\tf\n";
    char buf[32];
    for (const auto& b : bins) {
        std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * b.f);
        out << b.low << "\t" << b.high << "\t" << b.count << "\t" << buf << "\n";
    }
    return out.str();
}

}  // namespace charmend
