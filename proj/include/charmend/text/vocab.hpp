#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace charmend {

/// The fixed 98-symbol character inventory: ids 0..94 are printable ASCII
/// 0x20..0x7E in code-point order, then start / end / unknown markers.
/// Bytes outside the printable range (including all non-ASCII) encode to unk.
class CharVocab {
public:
    static constexpr int kSize = 98;
    static constexpr int kSos = 95;
    static constexpr int kEos = 96;
    static constexpr int kUnk = 97;
    static constexpr int kSpace = 0;  // ' ' is 0x20

    static int size() { return kSize; }

    static int encode_char(char c) {
        const unsigned char u = static_cast<unsigned char>(c);
        if (u >= 0x20 && u <= 0x7E) return static_cast<int>(u) - 0x20;
        return kUnk;
    }

    /// Encodes per character, walking UTF-8 sequences so one non-ASCII
    /// code point becomes one unk (malformed bytes decay to unk each).
    static std::vector<int> encode(const std::string& s, bool add_eos) {
        std::vector<int> ids;
        ids.reserve(s.size() + (add_eos ? 1 : 0));
        size_t i = 0;
        while (i < s.size()) {
            const unsigned char u = static_cast<unsigned char>(s[i]);
            if (u < 0x80) {
                ids.push_back(encode_char(s[i]));
                ++i;
                continue;
            }
            size_t extent = u >= 0xF0 ? 3 : u >= 0xE0 ? 2 : u >= 0xC0 ? 1 : 0;
            size_t consumed = 1;
            while (extent > 0 && i + consumed < s.size() &&
                   (static_cast<unsigned char>(s[i + consumed]) & 0xC0) == 0x80) {
                ++consumed;
                --extent;
            }
            ids.push_back(kUnk);
            i += consumed;
        }
        if (add_eos) ids.push_back(kEos);
        return ids;
    }

    static std::string decode_symbol(int id) {
        if (id >= 0 && id <= 94) return std::string(1, static_cast<char>(id + 0x20));
        if (id == kSos) return "<sos>";
        if (id == kEos) return "<eos>";
        return "<unk>";
    }

    /// Decodes a sequence, dropping the markers. Unknowns render as '?'.
    static std::string decode(const std::vector<int>& ids) {
        std::string out;
        out.reserve(ids.size());
        for (int id : ids) {
            if (id >= 0 && id <= 94)
                out.push_back(static_cast<char>(id + 0x20));
            else if (id == kUnk)
                out.push_back('?');
        }
        return out;
    }

    /// FNV-1a over the symbol inventory; recorded in checkpoints so a file
    /// trained against a different vocabulary is rejected on load.
    static uint64_t inventory_hash() {
        uint64_t h = 1469598103934665603ull;
        for (int id = 0; id < kSize; ++id) {
            for (char c : decode_symbol(id)) {
                h ^= static_cast<unsigned char>(c);
                h *= 1099511628211ull;
            }
        }
        return h;
    }
};

}  // namespace charmend
