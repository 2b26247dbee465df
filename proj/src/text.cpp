#include "orderly/text.hpp"

#include <charconv>

namespace orderly {

std::string to_hex(std::uint64_t v) {
    char buf[19] = {'0', 'x'};
    auto [end, ec] = std::to_chars(buf + 2, buf + sizeof buf, v, 16);
    return std::string(buf, end);
}

std::string to_signed_hex(std::int64_t v) {
    if (v >= 0) return to_hex(static_cast<std::uint64_t>(v));
    return "-" + to_hex(0 - static_cast<std::uint64_t>(v));
}

std::optional<std::uint64_t> parse_hex(std::string_view text) {
    if (text.size() < 3 || text.size() > 18 || text[0] != '0' || (text[1] != 'x' && text[1] != 'X')) {
        return std::nullopt;
    }
    std::uint64_t v = 0;
    const char* first = text.data() + 2;
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, v, 16);
    if (ec != std::errc() || ptr != last) return std::nullopt;
    return v;
}

std::optional<std::uint64_t> parse_number(std::string_view text) {
    bool negative = false;
    if (!text.empty() && text.front() == '-') {
        negative = true;
        text.remove_prefix(1);
    }
    std::optional<std::uint64_t> v;
    if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
        v = parse_hex(text);
    } else if (!text.empty()) {
        std::uint64_t d = 0;
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), d, 10);
        if (ec == std::errc() && ptr == text.data() + text.size()) v = d;
    }
    if (v && negative) *v = 0 - *v;
    return v;
}

std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

}  // namespace orderly
