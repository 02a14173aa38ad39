#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fanflow {

// Dense integer ids assigned in first-seen order. Node-based map keeps the
// key strings stable, so tokens_ can point at them.
class Interner {
public:
    Interner() = default;
    Interner(const Interner&) = delete;  // tokens_ aliases map keys
    Interner& operator=(const Interner&) = delete;
    Interner(Interner&&) = default;
    Interner& operator=(Interner&&) = default;

    uint32_t intern(std::string_view tok) {
        auto it = map_.find(tok);
        if (it != map_.end()) return it->second;
        uint32_t id = static_cast<uint32_t>(tokens_.size());
        auto [ins, _] = map_.emplace(std::string(tok), id);
        tokens_.push_back(&ins->first);
        return id;
    }

    std::optional<uint32_t> find(std::string_view tok) const {
        auto it = map_.find(tok);
        if (it == map_.end()) return std::nullopt;
        return it->second;
    }

    const std::string& token(uint32_t id) const { return *tokens_[id]; }
    uint32_t size() const { return static_cast<uint32_t>(tokens_.size()); }

    bool operator==(const Interner& o) const {
        if (tokens_.size() != o.tokens_.size()) return false;
        for (size_t i = 0; i < tokens_.size(); ++i)
            if (*tokens_[i] != *o.tokens_[i]) return false;
        return true;
    }

private:
    struct Hash {
        using is_transparent = void;
        size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
    };
    std::unordered_map<std::string, uint32_t, Hash, std::equal_to<>> map_;
    std::vector<const std::string*> tokens_;
};

}  // namespace fanflow
