#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "charmend/core/errors.hpp"
#include "charmend/synth/tagger.hpp"
#include "charmend/text/m2.hpp"

namespace charmend {

/// Corruption probabilities estimated from gold corrections. All values
/// describe the corruption direction: a gold edit that inserts a
/// determiner is evidence the learner deleted one, so it feeds p_delete.
struct ErrorDistribution {
    double p_delete = 0.0;  // per determiner occurrence
    double p_insert = 0.0;  // per NP start
    std::map<std::string, double> insert_choice;             // determiner -> probability
    std::map<std::string, std::map<std::string, double>> confusion;  // correct det -> written det -> p
    double p_to_singular = 0.0;  // per plural noun occurrence
    double p_to_plural = 0.0;    // per singular noun occurrence
    std::vector<std::string> warnings;
};

/// Counts corruption events from one annotator's gold ArtOrDet and Nn
/// edits against opportunity counts taken from the corrected text
/// (determiner occurrences, NP starts, noun occurrences).
inline ErrorDistribution estimate_error_stats(const std::vector<AnnotatedSentence>& corpus,
                                              int annotator = 0) {
    size_t det_occurrences = 0, np_starts = 0, singular_nouns = 0, plural_nouns = 0;
    size_t delete_events = 0, insert_events = 0;
    size_t to_singular_events = 0, to_plural_events = 0;
    std::map<std::string, size_t> det_counts;                       // per-determiner occurrences
    std::map<std::string, size_t> insert_counts;                    // learner-inserted determiners
    std::map<std::string, std::map<std::string, size_t>> confusion; // correct -> written

    for (const auto& sentence : corpus) {
        const std::vector<Edit> gold = sentence.gold_edits(annotator);
        const Tokens corrected = apply_edits(sentence.tokens, gold);
        const TaggedSentence tagged = tag_heuristic(corrected);
        for (size_t i = 0; i < tagged.size(); ++i) {
            if (tagged.is_determiner[i]) {
                ++det_occurrences;
                ++det_counts[tagger_detail::lower(tagged.tokens[i])];
            }
            if (tagged.is_np_start[i]) ++np_starts;
            if (tagged.is_noun_singular[i]) ++singular_nouns;
            if (tagged.is_noun_plural[i]) ++plural_nouns;
        }

        for (const Edit& e : gold) {
            if (e.type == "ArtOrDet") {
                const bool src_det = e.source.size() == 1 &&
                                     tagger_detail::determiner_lexicon().count(tagger_detail::lower(e.source[0]));
                const bool repl_det = e.replacement.size() == 1 &&
                                      tagger_detail::determiner_lexicon().count(tagger_detail::lower(e.replacement[0]));
                if (e.source.empty() && repl_det) {
                    ++delete_events;  // gold inserted; learner had deleted
                } else if (src_det && e.replacement.empty()) {
                    ++insert_events;  // gold deleted; learner had inserted
                    ++insert_counts[tagger_detail::lower(e.source[0])];
                } else if (src_det && repl_det) {
                    ++confusion[tagger_detail::lower(e.replacement[0])][tagger_detail::lower(e.source[0])];
                }
            } else if (e.type == "Nn") {
                if (e.source.size() == 1 && e.replacement.size() == 1) {
                    const bool repl_plural = looks_plural(e.replacement[0]);
                    const bool src_plural = looks_plural(e.source[0]);
                    if (repl_plural && !src_plural)
                        ++to_singular_events;  // corrected is plural; learner wrote singular
                    else if (!repl_plural && src_plural)
                        ++to_plural_events;
                }
            }
        }
    }

    ErrorDistribution dist;
    auto ratio = [&dist](size_t events, size_t opportunities, const char* what) {
        if (opportunities == 0) {
            if (events > 0) dist.warnings.push_back(std::string("no opportunities for ") + what);
            return 0.0;
        }
        return static_cast<double>(events) / static_cast<double>(opportunities);
    };
    dist.p_delete = ratio(delete_events, det_occurrences, "determiner deletion");
    dist.p_insert = ratio(insert_events, np_starts, "determiner insertion");
    dist.p_to_singular = ratio(to_singular_events, plural_nouns, "plural-to-singular flips");
    dist.p_to_plural = ratio(to_plural_events, singular_nouns, "singular-to-plural flips");
    if (det_occurrences == 0) dist.warnings.push_back("no determiner occurrences in corpus");

    size_t insert_total = 0;
    for (const auto& [det, c] : insert_counts) insert_total += c;
    if (insert_total > 0) {
        for (const auto& [det, c] : insert_counts)
            dist.insert_choice[det] = static_cast<double>(c) / static_cast<double>(insert_total);
    } else {
        dist.insert_choice = {{"a", 1.0 / 3}, {"an", 1.0 / 3}, {"the", 1.0 / 3}};
    }

    for (const auto& [correct, row] : confusion) {
        const size_t occ = det_counts.count(correct) ? det_counts[correct] : 0;
        if (occ == 0) continue;
        for (const auto& [written, c] : row)
            dist.confusion[correct][written] = static_cast<double>(c) / static_cast<double>(occ);
    }
    return dist;
}

// ---------------------------------------------------------------------------
// Distribution file: plain structured text, one "key [args] value" per line
// ---------------------------------------------------------------------------

inline void write_error_distribution(const ErrorDistribution& dist, std::ostream& out) {
    char buf[64];
    auto fmt = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.12g", v);
        return std::string(buf);
    };
    out << "artordet.p_delete " << fmt(dist.p_delete) << "\n";
    out << "artordet.p_insert " << fmt(dist.p_insert) << "\n";
    for (const auto& [det, p] : dist.insert_choice)
        out << "artordet.insert_choice " << det << " " << fmt(p) << "\n";
    for (const auto& [correct, row] : dist.confusion)
        for (const auto& [written, p] : row)
            out << "artordet.confusion " << correct << " " << written << " " << fmt(p) << "\n";
    out << "nn.p_to_singular " << fmt(dist.p_to_singular) << "\n";
    out << "nn.p_to_plural " << fmt(dist.p_to_plural) << "\n";
}

inline ErrorDistribution read_error_distribution(std::istream& in) {
    ErrorDistribution dist;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        bool ok = true;
        if (key == "artordet.p_delete") ok = static_cast<bool>(ls >> dist.p_delete);
        else if (key == "artordet.p_insert") ok = static_cast<bool>(ls >> dist.p_insert);
        else if (key == "nn.p_to_singular") ok = static_cast<bool>(ls >> dist.p_to_singular);
        else if (key == "nn.p_to_plural") ok = static_cast<bool>(ls >> dist.p_to_plural);
        else if (key == "artordet.insert_choice") {
            std::string det;
            double p;
            ok = static_cast<bool>(ls >> det >> p);
            if (ok) dist.insert_choice[det] = p;
        } else if (key == "artordet.confusion") {
            std::string correct, written;
            double p;
            ok = static_cast<bool>(ls >> correct >> written >> p);
            if (ok) dist.confusion[correct][written] = p;
        } else {
            throw ParseError("unknown distribution key '" + key + "'", line_no);
        }
        if (!ok) throw ParseError("malformed distribution line", line_no);
    }
    return dist;
}

inline ErrorDistribution load_error_distribution(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open distribution file: " + path);
    return read_error_distribution(in);
}

}  // namespace charmend
