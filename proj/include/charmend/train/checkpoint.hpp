#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "charmend/core/errors.hpp"
#include "charmend/model/seq2seq.hpp"
#include "charmend/text/vocab.hpp"

namespace charmend {

struct CheckpointMeta {
    size_t epoch = 0;
    double dev_perplexity = 0.0;
};

namespace detail {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

/// Checkpoint layout: a human-readable header (version line, model config,
/// vocabulary hash, epoch, dev perplexity, parameter manifest in insertion
/// order, "end" sentinel), then the payload of row-major little-endian
/// 32-bit floats in manifest order. Parameters are 64-bit in memory; the
/// narrowing happens only here.
inline void save_checkpoint(const Seq2Seq& model, const CheckpointMeta& meta, const std::string& path) {
    const ModelConfig& cfg = model.config();
    std::ostringstream header;
    header << "charmend-checkpoint v1\n";
    header << "hidden " << cfg.hidden << "\n";
    header << "embed " << cfg.embed << "\n";
    header << "enc_layers " << cfg.enc_layers << "\n";
    header << "dec_layers " << cfg.dec_layers << "\n";
    header << "vocab " << cfg.vocab << "\n";
    header << "dropout " << detail::format_double(cfg.dropout) << "\n";
    header << "literal_attention " << (cfg.literal_attention ? 1 : 0) << "\n";
    header << "vocab_hash " << std::hex << CharVocab::inventory_hash() << std::dec << "\n";
    header << "epoch " << meta.epoch << "\n";
    header << "dev_perplexity " << detail::format_double(meta.dev_perplexity) << "\n";
    header << "params " << model.params().size() << "\n";
    for (const auto& e : model.params().entries()) {
        header << e.name << " " << e.value.ndim();
        for (size_t d : e.value.shape()) header << " " << d;
        header << "\n";
    }
    header << "end\n";

    std::ofstream out(path, std::ios::binary);
    if (!out) throw ArgumentError("cannot open checkpoint for writing: " + path);
    const std::string h = header.str();
    out.write(h.data(), static_cast<std::streamsize>(h.size()));
    std::vector<char> buf;
    for (const auto& e : model.params().entries()) {
        buf.resize(e.value.numel() * 4);
        for (size_t i = 0; i < e.value.numel(); ++i) {
            float f = static_cast<float>(e.value[i]);
            std::memcpy(buf.data() + i * 4, &f, 4);
        }
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
    if (!out) throw FormatError("checkpoint write failed: " + path);
}

struct LoadedCheckpoint {
    Seq2Seq model{ModelConfig{1, 1, 1, 1, 2, 0.0, false}};
    CheckpointMeta meta;
};

inline LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArgumentError("cannot open checkpoint: " + path);

    auto next_line = [&]() {
        std::string line;
        if (!std::getline(in, line)) throw FormatError("checkpoint truncated in header: " + path);
        return line;
    };
    auto field = [&](const std::string& line, const std::string& key) {
        if (line.rfind(key + " ", 0) != 0)
            throw FormatError("checkpoint header: expected '" + key + "', got '" + line + "'");
        return line.substr(key.size() + 1);
    };

    const std::string version = next_line();
    if (version != "charmend-checkpoint v1")
        throw FormatError("unsupported checkpoint version: '" + version + "'");

    ModelConfig cfg;
    cfg.hidden = std::stoul(field(next_line(), "hidden"));
    cfg.embed = std::stoul(field(next_line(), "embed"));
    cfg.enc_layers = std::stoul(field(next_line(), "enc_layers"));
    cfg.dec_layers = std::stoul(field(next_line(), "dec_layers"));
    cfg.vocab = std::stoul(field(next_line(), "vocab"));
    cfg.dropout = std::stod(field(next_line(), "dropout"));
    cfg.literal_attention = field(next_line(), "literal_attention") == "1";
    const uint64_t vh = std::stoull(field(next_line(), "vocab_hash"), nullptr, 16);
    if (vh != CharVocab::inventory_hash())
        throw FormatError("checkpoint vocabulary hash does not match this build");

    CheckpointMeta meta;
    meta.epoch = std::stoul(field(next_line(), "epoch"));
    meta.dev_perplexity = std::stod(field(next_line(), "dev_perplexity"));
    const size_t nparams = std::stoul(field(next_line(), "params"));

    LoadedCheckpoint loaded{Seq2Seq(cfg), meta};
    Rng throwaway(0);
    loaded.model.init_params(throwaway);
    if (loaded.model.params().size() != nparams)
        throw FormatError("checkpoint manifest holds " + std::to_string(nparams) + " parameters, model expects " +
                          std::to_string(loaded.model.params().size()));

    for (const auto& e : loaded.model.params().entries()) {
        std::istringstream ls(next_line());
        std::string name;
        size_t ndim = 0;
        ls >> name >> ndim;
        if (name != e.name) throw FormatError("checkpoint manifest: expected parameter " + e.name + ", got " + name);
        std::vector<size_t> shape(ndim);
        for (auto& d : shape) ls >> d;
        if (!ls || shape != e.value.shape())
            throw FormatError("checkpoint manifest: shape mismatch for " + e.name);
    }
    if (next_line() != "end") throw FormatError("checkpoint header missing end sentinel");

    for (auto& e : loaded.model.params().entries()) {
        std::vector<char> buf(e.value.numel() * 4);
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (in.gcount() != static_cast<std::streamsize>(buf.size()))
            throw FormatError("checkpoint payload truncated at parameter " + e.name);
        for (size_t i = 0; i < e.value.numel(); ++i) {
            float f;
            std::memcpy(&f, buf.data() + i * 4, 4);
            e.value[i] = static_cast<double>(f);
        }
    }
    char extra;
    if (in.read(&extra, 1))
        throw FormatError("checkpoint payload longer than manifest describes");
    return loaded;
}

}  // namespace charmend
