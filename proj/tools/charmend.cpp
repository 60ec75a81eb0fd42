// Command-line front end: training, correction, LM building, the edit
// classification pipeline, error synthesis, and scoring.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "charmend/decode/beam.hpp"
#include "charmend/edit/align.hpp"
#include "charmend/edit/classifier.hpp"
#include "charmend/edit/features.hpp"
#include "charmend/eval/bleu.hpp"
#include "charmend/eval/length_bins.hpp"
#include "charmend/eval/m2.hpp"
#include "charmend/lm/arpa.hpp"
#include "charmend/synth/corrupt.hpp"
#include "charmend/synth/stats.hpp"
#include "charmend/text/corpus.hpp"
#include "charmend/train/checkpoint.hpp"
#include "charmend/train/trainer.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace charmend;

namespace {

// ---------------------------------------------------------------------------
// Run configuration: json file mirroring the module configs; explicitly
// passed CLI flags override file values; unknown keys are rejected.
// ---------------------------------------------------------------------------

struct RunConfig {
    uint64_t seed = 1;
    ModelConfig model;
    TrainConfig train;
    DecodeConfig decode;
    double p_min = 0.5;
    double discount = 0.75;
    size_t lm_order = 5;

    json to_json() const {
        return json{
            {"seed", seed},
            {"model",
             {{"hidden", model.hidden},
              {"embed", model.embed},
              {"enc_layers", model.enc_layers},
              {"dec_layers", model.dec_layers},
              {"dropout", model.dropout},
              {"literal_attention", model.literal_attention}}},
            {"train",
             {{"lr", train.lr},
              {"batch_size", train.batch_size},
              {"max_epochs", train.max_epochs},
              {"grad_clip", train.grad_clip}}},
            {"decode",
             {{"lambda", decode.lambda},
              {"beam", decode.beam_width},
              {"max_len", decode.max_len},
              {"normalize_during_search", decode.normalize_during_search},
              {"threads", decode.threads},
              {"p_min", p_min}}},
            {"lm", {{"order", lm_order}, {"discount", discount}}},
        };
    }

    static void check_keys(const json& j, std::initializer_list<const char*> allowed,
                           const std::string& where) {
        for (const auto& [key, value] : j.items()) {
            bool ok = false;
            for (const char* a : allowed)
                if (key == a) ok = true;
            if (!ok) throw FormatError("config: unknown key '" + where + key + "'");
        }
    }

    static RunConfig from_json(const json& j) {
        RunConfig cfg;
        check_keys(j, {"seed", "model", "train", "decode", "lm"}, "");
        if (j.contains("seed")) cfg.seed = j.at("seed").get<uint64_t>();
        if (j.contains("model")) {
            const json& m = j.at("model");
            check_keys(m, {"hidden", "embed", "enc_layers", "dec_layers", "dropout", "literal_attention"},
                       "model.");
            if (m.contains("hidden")) cfg.model.hidden = m.at("hidden").get<size_t>();
            cfg.model.embed = m.contains("embed") ? m.at("embed").get<size_t>() : cfg.model.hidden;
            if (m.contains("enc_layers")) cfg.model.enc_layers = m.at("enc_layers").get<size_t>();
            if (m.contains("dec_layers")) cfg.model.dec_layers = m.at("dec_layers").get<size_t>();
            if (m.contains("dropout")) cfg.model.dropout = m.at("dropout").get<double>();
            if (m.contains("literal_attention"))
                cfg.model.literal_attention = m.at("literal_attention").get<bool>();
        }
        if (j.contains("train")) {
            const json& t = j.at("train");
            check_keys(t, {"lr", "batch_size", "max_epochs", "grad_clip"}, "train.");
            if (t.contains("lr")) cfg.train.lr = t.at("lr").get<double>();
            if (t.contains("batch_size")) cfg.train.batch_size = t.at("batch_size").get<size_t>();
            if (t.contains("max_epochs")) cfg.train.max_epochs = t.at("max_epochs").get<size_t>();
            if (t.contains("grad_clip")) cfg.train.grad_clip = t.at("grad_clip").get<double>();
        }
        if (j.contains("decode")) {
            const json& d = j.at("decode");
            check_keys(d, {"lambda", "beam", "max_len", "normalize_during_search", "threads", "p_min"},
                       "decode.");
            if (d.contains("lambda")) cfg.decode.lambda = d.at("lambda").get<double>();
            if (d.contains("beam")) cfg.decode.beam_width = d.at("beam").get<size_t>();
            if (d.contains("max_len")) cfg.decode.max_len = d.at("max_len").get<size_t>();
            if (d.contains("normalize_during_search"))
                cfg.decode.normalize_during_search = d.at("normalize_during_search").get<bool>();
            if (d.contains("threads")) cfg.decode.threads = d.at("threads").get<size_t>();
            if (d.contains("p_min")) cfg.p_min = d.at("p_min").get<double>();
        }
        if (j.contains("lm")) {
            const json& l = j.at("lm");
            check_keys(l, {"order", "discount"}, "lm.");
            if (l.contains("order")) cfg.lm_order = l.at("order").get<size_t>();
            if (l.contains("discount")) cfg.discount = l.at("discount").get<double>();
        }
        return cfg;
    }

    static RunConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ArgumentError("cannot open config file: " + path);
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw FormatError("config: " + std::string(e.what()));
        }
        return from_json(j);
    }
};

void echo_config(const RunConfig& cfg, const fs::path& target_dir,
                 const std::string& name = "run_config.json") {
    fs::create_directories(target_dir);
    std::ofstream out(target_dir / name);
    out << cfg.to_json().dump(2) << "\n";
}

/// Effective config written next to a produced output file.
void echo_config_for(const RunConfig& cfg, const std::string& output_file) {
    std::ofstream out(output_file + ".run.json");
    out << cfg.to_json().dump(2) << "\n";
}

std::vector<Tokens> tokenized_lines(const std::string& path) {
    std::vector<Tokens> out;
    for (const auto& line : read_lines(path)) out.push_back(split_whitespace(line));
    return out;
}

std::vector<AnnotatedSentence> load_m2_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open annotation file: " + path);
    return parse_m2(in);
}

struct EditRow {
    size_t sentence = 0;
    Edit edit;
    int label = -1;  // -1 unlabeled
};

void write_edit_rows(const std::vector<EditRow>& rows, const std::string& path, bool labeled) {
    std::ofstream out(path);
    if (!out) throw ArgumentError("cannot open output file: " + path);
    for (const auto& r : rows) {
        out << r.sentence << '\t' << r.edit.start << '\t' << r.edit.end << '\t'
            << join_tokens(r.edit.source) << '\t' << join_tokens(r.edit.replacement);
        if (labeled) out << '\t' << (r.label > 0 ? 1 : 0);
        out << '\n';
    }
}

std::vector<EditRow> read_edit_rows(const std::string& path) {
    std::vector<EditRow> rows;
    size_t line_no = 0;
    for (const auto& line : read_lines(path)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        size_t pos = 0;
        while (true) {
            size_t tab = line.find('\t', pos);
            if (tab == std::string::npos) {
                fields.push_back(line.substr(pos));
                break;
            }
            fields.push_back(line.substr(pos, tab - pos));
            pos = tab + 1;
        }
        if (fields.size() != 5 && fields.size() != 6)
            throw ParseError("edit row needs 5 or 6 tab-separated fields", line_no);
        EditRow r;
        try {
            r.sentence = std::stoul(fields[0]);
            r.edit.start = std::stoul(fields[1]);
            r.edit.end = std::stoul(fields[2]);
        } catch (const std::exception&) {
            throw ParseError("bad numeric field in edit row", line_no);
        }
        r.edit.source = split_whitespace(fields[3]);
        r.edit.replacement = split_whitespace(fields[4]);
        if (fields.size() == 6) r.label = fields[5] == "1" ? 1 : 0;
        rows.push_back(std::move(r));
    }
    return rows;
}

std::string pct(double fraction) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * fraction);
    return buf;
}

void print_m2_report(const M2Report& r, std::ostream& out) {
    out << "precision\t" << pct(r.overall.precision()) << "\n";
    out << "recall\t" << pct(r.overall.recall()) << "\n";
    out << "f" << r.overall.beta << "\t" << pct(r.overall.f()) << "\n";
    out << "matched\t" << r.overall.matched << "\n";
    out << "proposed\t" << r.overall.proposed << "\n";
    out << "gold\t" << r.overall.gold << "\n";
    for (const auto& [id, prf] : r.per_annotator) {
        out << "annotator_" << id << "\tP " << pct(prf.precision()) << "\tR " << pct(prf.recall())
            << "\tF " << pct(prf.f()) << "\n";
    }
}

// ---------------------------------------------------------------------------
// Subcommand implementations
// ---------------------------------------------------------------------------

int run_train(const RunConfig& cfg, const std::string& train_path, const std::string& dev_path,
              const std::string& out_dir) {
    ParallelCorpus train_set = load_tsv_corpus(train_path);
    ParallelCorpus dev_set = load_tsv_corpus(dev_path);
    if (train_set.skipped_lines > 0)
        std::cerr << "warning: skipped " << train_set.skipped_lines << " malformed corpus lines\n";

    Seq2Seq model(cfg.model);
    Rng init(derive_seed(cfg.seed, "init"));
    model.init_params(init);

    TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    tc.checkpoint_dir = out_dir;
    tc.log = &std::cout;
    echo_config(cfg, out_dir);

    TrainResult result = train(model, train_set, dev_set, tc);
    std::cout << "best epoch " << result.best_epoch << " dev_ppl " << result.best_perplexity
              << " checkpoint " << result.best_path << "\n";
    return 0;
}

int run_correct(const RunConfig& cfg, const std::string& ckpt_path, const std::string& input,
                const std::string& output, const std::string& lm_path) {
    LoadedCheckpoint loaded = load_checkpoint(ckpt_path);
    std::optional<NGramModel> lm;
    if (!lm_path.empty()) lm = read_arpa_file(lm_path);

    std::vector<std::string> sentences = read_lines(input);
    CorrectionResult result = correct_corpus(loaded.model, lm ? &*lm : nullptr, sentences, cfg.decode);
    write_lines(result.outputs, output);
    echo_config_for(cfg, output);
    for (const auto& [idx, what] : result.failures)
        std::cerr << "warning: sentence " << idx << " failed: " << what << "\n";
    std::cout << "corrected " << result.outputs.size() << " sentences (" << result.failures.size()
              << " failures)\n";
    return 0;
}

int run_lm_build(const RunConfig& cfg, const std::string& input, const std::string& output,
                 bool modified) {
    std::vector<std::string> lines = read_lines(input);
    NGramModel model = build_lm(lines, cfg.lm_order, cfg.discount, modified);
    write_arpa_file(model, output);
    echo_config_for(cfg, output);
    std::cout << "built order-" << model.order << " model over " << model.vocabulary.size()
              << " words\n";
    return 0;
}

int run_lm_query(const std::string& lm_path, const std::string& input) {
    NGramModel model = read_arpa_file(lm_path);
    for (const auto& line : read_lines(input)) {
        Tokens words = split_whitespace(line);
        Tokens context;
        for (size_t i = 0; i + 1 < model.order; ++i) context.push_back(kBos);
        double total = 0.0;
        for (const auto& w : words) {
            const double lp = model.logprob(w, context);
            std::printf("%s\t%.6f\n", w.c_str(), lp);
            total += lp;
            context.push_back(w);
        }
        const double eos_lp = model.logprob(kEosWord, context);
        total += eos_lp;
        std::printf("%s\t%.6f\n", kEosWord, eos_lp);
        std::printf("total\t%.6f\n", total);
    }
    return 0;
}

int run_edits_extract(const std::string& source_path, const std::string& hyp_path,
                      const std::string& output) {
    std::vector<Tokens> sources = tokenized_lines(source_path);
    std::vector<Tokens> hyps = tokenized_lines(hyp_path);
    if (sources.size() != hyps.size())
        throw ArgumentError("edits extract: source and hypothesis line counts differ");
    std::vector<EditRow> rows;
    for (size_t s = 0; s < sources.size(); ++s)
        for (Edit& e : extract_edits(sources[s], hyps[s])) rows.push_back({s, std::move(e), -1});
    write_edit_rows(rows, output, /*labeled=*/false);
    std::cout << "extracted " << rows.size() << " edits from " << sources.size() << " sentences\n";
    return 0;
}

int run_edits_label(const std::string& edits_path, const std::string& gold_path,
                    const std::string& output, int annotator) {
    std::vector<EditRow> rows = read_edit_rows(edits_path);
    std::vector<AnnotatedSentence> gold = load_m2_file(gold_path);
    size_t good = 0;
    for (EditRow& r : rows) {
        if (r.sentence >= gold.size())
            throw ArgumentError("edits label: sentence id " + std::to_string(r.sentence) +
                                " outside the gold corpus");
        const std::vector<Edit> gold_edits = gold[r.sentence].gold_edits(annotator);
        r.label = 0;
        for (const Edit& g : gold_edits)
            if (r.edit.same_span_and_replacement(g)) r.label = 1;
        good += static_cast<size_t>(r.label);
    }
    write_edit_rows(rows, output, /*labeled=*/true);
    std::cout << "labeled " << rows.size() << " edits, " << good << " good\n";
    return 0;
}

int run_edits_train_clf(const RunConfig& cfg, const std::string& labeled_path,
                        const std::string& source_path, const std::string& vectors_path,
                        const std::string& output, size_t epochs, double lr) {
    std::vector<EditRow> rows = read_edit_rows(labeled_path);
    std::vector<Tokens> sources = tokenized_lines(source_path);
    WordVectors vectors = WordVectors::load(vectors_path);

    std::vector<std::vector<double>> features;
    std::vector<int> labels;
    for (const EditRow& r : rows) {
        if (r.label < 0) throw ArgumentError("edits train-clf: rows must be labeled");
        if (r.sentence >= sources.size())
            throw ArgumentError("edits train-clf: sentence id outside the source corpus");
        features.push_back(featurize(r.edit, sources[r.sentence], vectors));
        labels.push_back(r.label);
    }
    ClassifierConfig cc;
    cc.epochs = epochs;
    cc.lr = lr;
    cc.seed = derive_seed(cfg.seed, "edit-classifier");
    EditClassifier clf = EditClassifier::train(features, labels, cc);
    clf.save(output);
    echo_config_for(cfg, output);
    std::cout << "trained on " << features.size() << " edits\n";
    return 0;
}

int run_edits_filter(const RunConfig& cfg, const std::string& edits_path,
                     const std::string& source_path, const std::string& vectors_path,
                     const std::string& clf_path, const std::string& output) {
    std::vector<EditRow> rows = read_edit_rows(edits_path);
    std::vector<Tokens> sources = tokenized_lines(source_path);
    WordVectors vectors = WordVectors::load(vectors_path);
    EditClassifier clf = EditClassifier::load(clf_path);

    std::vector<std::vector<Edit>> per_sentence(sources.size());
    for (EditRow& r : rows) {
        if (r.sentence >= sources.size())
            throw ArgumentError("edits filter: sentence id outside the source corpus");
        per_sentence[r.sentence].push_back(std::move(r.edit));
    }
    std::vector<std::string> corrected;
    size_t changed = 0;
    for (size_t s = 0; s < sources.size(); ++s) {
        Tokens out = filter_and_apply(sources[s], per_sentence[s], clf, vectors, cfg.p_min);
        changed += extract_edits(sources[s], out).size();
        corrected.push_back(join_tokens(out));
    }
    write_lines(corrected, output);
    echo_config_for(cfg, output);
    std::cout << "filtered at p_min " << cfg.p_min << ", " << changed << " spans kept over "
              << sources.size() << " sentences\n";
    return 0;
}

int run_synth_stats(const std::string& gold_path, const std::string& output, int annotator) {
    std::vector<AnnotatedSentence> corpus = load_m2_file(gold_path);
    ErrorDistribution dist = estimate_error_stats(corpus, annotator);
    std::ofstream out(output);
    if (!out) throw ArgumentError("cannot open output file: " + output);
    write_error_distribution(dist, out);
    for (const auto& w : dist.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "estimated distribution from " << corpus.size() << " sentences\n";
    return 0;
}

int run_synth_corrupt(const RunConfig& cfg, const std::string& input, const std::string& tagged_path,
                      const std::string& dist_path, const std::string& output) {
    ErrorDistribution dist = load_error_distribution(dist_path);
    std::vector<std::pair<Tokens, Tokens>> pairs;
    size_t sentence_count = 0;
    if (!tagged_path.empty()) {
        std::ifstream in(tagged_path);
        if (!in) throw ArgumentError("cannot open pre-tagged file: " + tagged_path);
        std::vector<TaggedSentence> tagged = parse_tagged_sentences(in);
        sentence_count = tagged.size();
        pairs = corrupt_corpus(tagged, dist, derive_seed(cfg.seed, "synth"));
    } else {
        std::vector<Tokens> sentences = tokenized_lines(input);
        sentence_count = sentences.size();
        pairs = corrupt_corpus(sentences, dist, derive_seed(cfg.seed, "synth"));
    }
    std::ofstream out(output);
    if (!out) throw ArgumentError("cannot open output file: " + output);
    for (const auto& [corrupted, clean] : pairs)
        out << join_tokens(corrupted) << '\t' << join_tokens(clean) << '\n';
    echo_config_for(cfg, output);
    std::cout << "wrote " << pairs.size() << " corrupted pairs from " << sentence_count
              << " sentences\n";
    return 0;
}

M2Report score_m2_common(const std::string& source_path, const std::string& hyp_path,
                         const std::string& gold_path, const M2Options& opt) {
    std::vector<Tokens> sources = tokenized_lines(source_path);
    std::vector<Tokens> hyps = tokenized_lines(hyp_path);
    std::vector<AnnotatedSentence> gold = load_m2_file(gold_path);
    return m2_evaluate(sources, hyps, gold, opt);
}

int run_score_m2(const std::string& source_path, const std::string& hyp_path,
                 const std::string& gold_path, const M2Options& opt, bool with_types) {
    M2Report report = score_m2_common(source_path, hyp_path, gold_path, opt);
    print_m2_report(report, std::cout);
    if (with_types) {
        for (const auto& [type, recall] : per_type_recall(report)) {
            std::cout << "recall[" << type << "]\t" << pct(recall) << "\t("
                      << report.per_type.at(type).first << "/" << report.per_type.at(type).second
                      << ")\n";
        }
    }
    return 0;
}

int run_score_bleu(const std::string& hyp_path, const std::string& ref_path) {
    std::vector<std::string> hyps = read_lines(hyp_path);
    std::vector<std::string> refs = read_lines(ref_path);
    std::printf("bleu\t%.2f\n", bleu(hyps, refs));
    return 0;
}

int run_score_length_bins(const std::string& source_path, const std::string& hyp_path,
                          const std::string& gold_path, const M2Options& opt, size_t bin_width,
                          size_t min_count, const std::string& output) {
    std::vector<Tokens> sources = tokenized_lines(source_path);
    M2Report report = score_m2_common(source_path, hyp_path, gold_path, opt);
    std::vector<size_t> lengths;
    for (const auto& s : sources) lengths.push_back(s.size());
    auto bins = length_breakdown(report, lengths, bin_width, opt.beta, min_count);
    const std::string tsv = length_bins_tsv(bins);
    if (output.empty()) {
        std::cout << tsv;
    } else {
        std::ofstream out(output);
        if (!out) throw ArgumentError("cannot open output file: " + output);
        out << tsv;
        std::cout << "wrote " << bins.size() << " bins\n";
    }
    return 0;
}

int run_tune(const RunConfig& cfg, const std::string& ckpt_path, const std::string& src_path,
             const std::string& gold_path, const std::string& lm_path, const std::string& clf_path,
             const std::string& vectors_path) {
    LoadedCheckpoint loaded = load_checkpoint(ckpt_path);
    std::optional<NGramModel> lm;
    if (!lm_path.empty()) lm = read_arpa_file(lm_path);

    std::vector<std::string> sources = read_lines(src_path);
    std::vector<Tokens> source_tokens;
    for (const auto& s : sources) source_tokens.push_back(split_whitespace(s));
    std::vector<AnnotatedSentence> gold = load_m2_file(gold_path);

    std::vector<double> lambdas{0.0};
    if (lm)
        for (int i = 1; i <= 10; ++i) lambdas.push_back(0.1 * i);

    double best_lambda = 0.0, best_f = -1.0;
    std::vector<std::string> best_outputs;
    for (double lambda : lambdas) {
        DecodeConfig dc = cfg.decode;
        dc.lambda = lambda;
        CorrectionResult result = correct_corpus(loaded.model, lm ? &*lm : nullptr, sources, dc);
        std::vector<Tokens> hyp_tokens;
        for (const auto& h : result.outputs) hyp_tokens.push_back(split_whitespace(h));
        M2Report report = m2_evaluate(source_tokens, hyp_tokens, gold, {});
        const double f = report.overall.f();
        std::printf("lambda %.1f\tF %.2f\n", lambda, 100.0 * f);
        if (f > best_f) {
            best_f = f;
            best_lambda = lambda;
            best_outputs = result.outputs;
        }
    }
    std::printf("best lambda %.1f\tF %.2f\n", best_lambda, 100.0 * best_f);

    if (!clf_path.empty()) {
        EditClassifier clf = EditClassifier::load(clf_path);
        WordVectors vectors = WordVectors::load(vectors_path);
        double best_pmin = 0.0;
        double best_pmin_f = best_f;  // p_min 0 keeps every edit: the unfiltered baseline
        for (int i = 1; i <= 9; ++i) {
            const double p_min = 0.1 * i;
            std::vector<Tokens> filtered;
            for (size_t s = 0; s < source_tokens.size(); ++s) {
                auto edits = extract_edits(source_tokens[s], split_whitespace(best_outputs[s]));
                filtered.push_back(filter_and_apply(source_tokens[s], edits, clf, vectors, p_min));
            }
            M2Report report = m2_evaluate(source_tokens, filtered, gold, {});
            const double f = report.overall.f();
            std::printf("p_min %.1f\tF %.2f\n", p_min, 100.0 * f);
            if (f > best_pmin_f) {
                best_pmin_f = f;
                best_pmin = p_min;
            }
        }
        std::printf("best p_min %.1f\tF %.2f\n", best_pmin, 100.0 * best_pmin_f);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"character-level text correction toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "json run configuration (flags override it)");

    uint64_t seed = 1;
    auto* seed_opt = app.add_option("--seed", seed, "master seed; module seeds derive from it");

    auto load_config = [&]() {
        RunConfig cfg;
        if (!config_path.empty()) cfg = RunConfig::load(config_path);
        if (seed_opt->count()) cfg.seed = seed;
        return cfg;
    };

    // --- train ---
    auto* train_cmd = app.add_subcommand("train", "train the correction model");
    std::string train_path, dev_path, out_dir;
    train_cmd->add_option("--train", train_path, "training corpus tsv")->required();
    train_cmd->add_option("--dev", dev_path, "development corpus tsv")->required();
    train_cmd->add_option("--out", out_dir, "checkpoint directory")->required();
    size_t hidden = 0, embed = 0, enc_layers = 0, dec_layers = 0, batch_size = 0, max_epochs = 0;
    double dropout = -1.0, lr = 0.0, grad_clip = -1.0;
    auto* hidden_opt = train_cmd->add_option("--hidden", hidden, "hidden size");
    auto* embed_opt = train_cmd->add_option("--embed", embed, "embedding size");
    auto* encl_opt = train_cmd->add_option("--enc-layers", enc_layers, "encoder layers");
    auto* decl_opt = train_cmd->add_option("--dec-layers", dec_layers, "decoder layers");
    auto* dropout_opt = train_cmd->add_option("--dropout", dropout, "dropout rate");
    auto* lr_opt = train_cmd->add_option("--lr", lr, "learning rate");
    auto* batch_opt = train_cmd->add_option("--batch-size", batch_size, "minibatch size");
    auto* epochs_opt = train_cmd->add_option("--epochs", max_epochs, "maximum epochs");
    auto* clip_opt = train_cmd->add_option("--grad-clip", grad_clip, "max gradient norm, 0 disables");

    // --- correct ---
    auto* correct_cmd = app.add_subcommand("correct", "decode corrections for a text file");
    std::string ckpt_path, input_path, output_path, lm_path;
    correct_cmd->add_option("--checkpoint", ckpt_path, "model checkpoint")->required();
    correct_cmd->add_option("--input", input_path, "input sentences, one per line")->required();
    correct_cmd->add_option("--output", output_path, "corrected output file")->required();
    correct_cmd->add_option("--lm", lm_path, "ARPA language model for shallow fusion");
    double lambda = -1.0;
    size_t beam = 0, threads = 0, max_len = 0;
    bool greedy = false, end_only_norm = false;
    auto* lambda_opt = correct_cmd->add_option("--lambda", lambda, "LM weight");
    auto* beam_opt = correct_cmd->add_option("--beam", beam, "beam width");
    correct_cmd->add_flag("--greedy", greedy, "beam width 1");
    auto* threads_opt = correct_cmd->add_option("--threads", threads, "sentence-level threads");
    auto* maxlen_opt = correct_cmd->add_option("--max-len", max_len, "max output characters");
    correct_cmd->add_flag("--end-only-normalization", end_only_norm,
                          "normalize by word count only for the final ranking");

    // --- lm build/query ---
    auto* lm_cmd = app.add_subcommand("lm", "n-gram language model tools");
    lm_cmd->require_subcommand(1);
    auto* lm_build = lm_cmd->add_subcommand("build", "estimate a Kneser-Ney model, write ARPA");
    std::string lm_input, lm_output;
    lm_build->add_option("--input", lm_input, "training text, one sentence per line")->required();
    lm_build->add_option("--output", lm_output, "ARPA output path")->required();
    size_t order = 0;
    double discount = -1.0;
    auto* order_opt = lm_build->add_option("--order", order, "model order");
    auto* discount_opt = lm_build->add_option("--discount", discount, "absolute discount in (0,1)");
    bool lm_modified = false;
    lm_build->add_flag("--modified", lm_modified, "count-of-count discounts (modified KN)");
    auto* lm_query = lm_cmd->add_subcommand("query", "per-word log10 probabilities");
    std::string query_lm, query_input;
    lm_query->add_option("--lm", query_lm, "ARPA model")->required();
    lm_query->add_option("--input", query_input, "text file")->required();

    // --- edits ---
    auto* edits_cmd = app.add_subcommand("edits", "edit extraction and classification pipeline");
    edits_cmd->require_subcommand(1);
    auto* ed_extract = edits_cmd->add_subcommand("extract", "align and extract proposed edits");
    std::string ed_source, ed_hyp, ed_output;
    ed_extract->add_option("--source", ed_source, "source sentences")->required();
    ed_extract->add_option("--hypothesis", ed_hyp, "corrected sentences")->required();
    ed_extract->add_option("--output", ed_output, "edits tsv")->required();
    auto* ed_label = edits_cmd->add_subcommand("label", "label proposed edits against gold");
    std::string lb_edits, lb_gold, lb_output;
    int lb_annotator = 0;
    ed_label->add_option("--edits", lb_edits, "edits tsv")->required();
    ed_label->add_option("--gold", lb_gold, "gold annotation file")->required();
    ed_label->add_option("--output", lb_output, "labeled tsv")->required();
    ed_label->add_option("--annotator", lb_annotator, "gold annotator id");
    auto* ed_train = edits_cmd->add_subcommand("train-clf", "train the edit classifier");
    std::string tc_labeled, tc_source, tc_vectors, tc_output;
    size_t tc_epochs = 200;
    double tc_lr = 1e-3;
    ed_train->add_option("--labeled", tc_labeled, "labeled edits tsv")->required();
    ed_train->add_option("--source", tc_source, "source sentences")->required();
    ed_train->add_option("--vectors", tc_vectors, "word-vector file")->required();
    ed_train->add_option("--output", tc_output, "classifier output path")->required();
    ed_train->add_option("--epochs", tc_epochs, "training epochs");
    ed_train->add_option("--lr", tc_lr, "learning rate");
    auto* ed_filter = edits_cmd->add_subcommand("filter", "apply edits above the threshold");
    std::string fl_edits, fl_source, fl_vectors, fl_clf, fl_output;
    double p_min = -1.0;
    ed_filter->add_option("--edits", fl_edits, "edits tsv")->required();
    ed_filter->add_option("--source", fl_source, "source sentences")->required();
    ed_filter->add_option("--vectors", fl_vectors, "word-vector file")->required();
    ed_filter->add_option("--classifier", fl_clf, "trained classifier")->required();
    ed_filter->add_option("--output", fl_output, "corrected output file")->required();
    auto* pmin_opt = ed_filter->add_option("--p-min", p_min, "acceptance threshold");

    // --- synth ---
    auto* synth_cmd = app.add_subcommand("synth", "error synthesis");
    synth_cmd->require_subcommand(1);
    auto* sy_stats = synth_cmd->add_subcommand("stats", "estimate error distributions from gold");
    std::string st_gold, st_output;
    int st_annotator = 0;
    sy_stats->add_option("--gold", st_gold, "gold annotation file")->required();
    sy_stats->add_option("--output", st_output, "distribution file")->required();
    sy_stats->add_option("--annotator", st_annotator, "gold annotator id");
    auto* sy_corrupt = synth_cmd->add_subcommand("corrupt", "corrupt clean sentences");
    std::string co_input, co_tagged, co_dist, co_output;
    auto* co_input_opt = sy_corrupt->add_option("--input", co_input, "clean sentences");
    auto* co_tagged_opt =
        sy_corrupt->add_option("--tagged", co_tagged, "pre-tagged sentences (token<TAB>flags)");
    co_input_opt->excludes(co_tagged_opt);
    sy_corrupt->add_option("--dist", co_dist, "distribution file")->required();
    sy_corrupt->add_option("--output", co_output, "augmented tsv (corrupted<TAB>clean)")->required();

    // --- score ---
    auto* score_cmd = app.add_subcommand("score", "evaluation reports");
    score_cmd->require_subcommand(1);
    std::string sc_source, sc_hyp, sc_gold, sc_ref, sc_output;
    double beta = 0.5;
    size_t max_unchanged = 2, bin_width = 5, min_count = 10;
    int sc_annotator = -1;
    auto add_m2_opts = [&](CLI::App* cmd) {
        cmd->add_option("--source", sc_source, "source sentences")->required();
        cmd->add_option("--hypothesis", sc_hyp, "system output")->required();
        cmd->add_option("--gold", sc_gold, "gold annotation file")->required();
        cmd->add_option("--beta", beta, "F-measure beta");
        cmd->add_option("--max-unchanged", max_unchanged, "MaxMatch merge window");
        cmd->add_option("--annotator", sc_annotator, "restrict to one annotator");
    };
    auto* sc_m2 = score_cmd->add_subcommand("m2", "MaxMatch precision/recall/F");
    add_m2_opts(sc_m2);
    auto* sc_types = score_cmd->add_subcommand("types", "per-error-type recall");
    add_m2_opts(sc_types);
    auto* sc_bins = score_cmd->add_subcommand("length-bins", "F-score by source length");
    add_m2_opts(sc_bins);
    sc_bins->add_option("--bin-width", bin_width, "bin width in words");
    sc_bins->add_option("--min-count", min_count, "suppress smaller bins");
    sc_bins->add_option("--output", sc_output, "TSV output (stdout when absent)");
    auto* sc_bleu = score_cmd->add_subcommand("bleu", "corpus BLEU");
    sc_bleu->add_option("--hypothesis", sc_hyp, "system output")->required();
    sc_bleu->add_option("--reference", sc_ref, "reference text")->required();

    // --- tune ---
    auto* tune_cmd = app.add_subcommand("tune", "grid-search lambda and p_min on a dev set");
    std::string tu_ckpt, tu_source, tu_gold, tu_lm, tu_clf, tu_vectors;
    tune_cmd->add_option("--checkpoint", tu_ckpt, "model checkpoint")->required();
    tune_cmd->add_option("--dev-source", tu_source, "dev sentences")->required();
    tune_cmd->add_option("--dev-gold", tu_gold, "dev gold annotations")->required();
    tune_cmd->add_option("--lm", tu_lm, "ARPA model (enables the lambda grid)");
    tune_cmd->add_option("--classifier", tu_clf, "edit classifier (enables the p_min grid)");
    tune_cmd->add_option("--vectors", tu_vectors, "word vectors (required with --classifier)");
    size_t tu_beam = 0;
    auto* tu_beam_opt = tune_cmd->add_option("--beam", tu_beam, "beam width");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        RunConfig cfg = load_config();

        if (*train_cmd) {
            if (hidden_opt->count()) cfg.model.hidden = hidden;
            if (embed_opt->count())
                cfg.model.embed = embed;
            else if (hidden_opt->count())
                cfg.model.embed = hidden;
            if (encl_opt->count()) cfg.model.enc_layers = enc_layers;
            if (decl_opt->count()) cfg.model.dec_layers = dec_layers;
            if (dropout_opt->count()) cfg.model.dropout = dropout;
            if (lr_opt->count()) cfg.train.lr = lr;
            if (batch_opt->count()) cfg.train.batch_size = batch_size;
            if (epochs_opt->count()) cfg.train.max_epochs = max_epochs;
            if (clip_opt->count()) cfg.train.grad_clip = grad_clip;
            return run_train(cfg, train_path, dev_path, out_dir);
        }
        if (*correct_cmd) {
            if (lambda_opt->count()) cfg.decode.lambda = lambda;
            if (beam_opt->count()) cfg.decode.beam_width = beam;
            if (greedy) cfg.decode.beam_width = 1;
            if (threads_opt->count()) cfg.decode.threads = threads;
            if (maxlen_opt->count()) cfg.decode.max_len = max_len;
            if (end_only_norm) cfg.decode.normalize_during_search = false;
            if (lm_path.empty()) cfg.decode.lambda = 0.0;
            return run_correct(cfg, ckpt_path, input_path, output_path, lm_path);
        }
        if (*lm_build) {
            if (order_opt->count()) cfg.lm_order = order;
            if (discount_opt->count()) cfg.discount = discount;
            return run_lm_build(cfg, lm_input, lm_output, lm_modified);
        }
        if (*lm_query) return run_lm_query(query_lm, query_input);
        if (*ed_extract) return run_edits_extract(ed_source, ed_hyp, ed_output);
        if (*ed_label) return run_edits_label(lb_edits, lb_gold, lb_output, lb_annotator);
        if (*ed_train)
            return run_edits_train_clf(cfg, tc_labeled, tc_source, tc_vectors, tc_output, tc_epochs,
                                       tc_lr);
        if (*ed_filter) {
            if (pmin_opt->count()) cfg.p_min = p_min;
            return run_edits_filter(cfg, fl_edits, fl_source, fl_vectors, fl_clf, fl_output);
        }
        if (*sy_stats) return run_synth_stats(st_gold, st_output, st_annotator);
        if (*sy_corrupt) {
            if (co_input.empty() && co_tagged.empty())
                throw ArgumentError("synth corrupt: --input or --tagged required");
            return run_synth_corrupt(cfg, co_input, co_tagged, co_dist, co_output);
        }

        M2Options opt;
        opt.beta = beta;
        opt.max_unchanged = max_unchanged;
        opt.restrict_annotator = sc_annotator;
        if (*sc_m2) return run_score_m2(sc_source, sc_hyp, sc_gold, opt, /*with_types=*/false);
        if (*sc_types) return run_score_m2(sc_source, sc_hyp, sc_gold, opt, /*with_types=*/true);
        if (*sc_bins)
            return run_score_length_bins(sc_source, sc_hyp, sc_gold, opt, bin_width, min_count,
                                         sc_output);
        if (*sc_bleu) return run_score_bleu(sc_hyp, sc_ref);
        if (*tune_cmd) {
            if (tu_beam_opt->count()) cfg.decode.beam_width = tu_beam;
            if (!tu_clf.empty() && tu_vectors.empty())
                throw ArgumentError("tune: --classifier needs --vectors");
            return run_tune(cfg, tu_ckpt, tu_source, tu_gold, tu_lm, tu_clf, tu_vectors);
        }
        std::cerr << "no subcommand selected\n";
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return 2;
    } catch (const ArgumentError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
