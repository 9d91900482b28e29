#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <type_traits>

#include "scenemem/common.hpp"

namespace scenemem {

// Little-endian fixed-width encoding of scalars and strings.
class BinaryWriter {
public:
    explicit BinaryWriter(std::ostream& out) : out_(out) {}

    template <class T>
        requires std::is_arithmetic_v<T>
    void put(T v) {
        char buf[sizeof(T)];
        std::memcpy(buf, &v, sizeof(T));
        out_.write(buf, sizeof(T));
    }
    void put_string(const std::string& s) {
        put<std::uint64_t>(s.size());
        out_.write(s.data(), static_cast<std::streamsize>(s.size()));
    }
    void put_optional(const std::optional<int>& v) {
        put<std::uint8_t>(v ? 1 : 0);
        put<std::int32_t>(v.value_or(0));
    }
    bool ok() const { return static_cast<bool>(out_); }

private:
    std::ostream& out_;
};

class BinaryReader {
public:
    explicit BinaryReader(std::istream& in) : in_(in) {}

    template <class T>
        requires std::is_arithmetic_v<T>
    T get() {
        char buf[sizeof(T)];
        if (!in_.read(buf, sizeof(T))) throw Error("unexpected end of binary data");
        T v;
        std::memcpy(&v, buf, sizeof(T));
        return v;
    }
    std::string get_string() {
        const auto n = get<std::uint64_t>();
        if (n > (1u << 30)) throw Error("corrupt string length in binary data");
        std::string s(n, '\0');
        if (n > 0 && !in_.read(s.data(), static_cast<std::streamsize>(n))) {
            throw Error("unexpected end of binary data");
        }
        return s;
    }
    std::optional<int> get_optional() {
        const bool present = get<std::uint8_t>() != 0;
        const int v = get<std::int32_t>();
        return present ? std::optional<int>(v) : std::nullopt;
    }

private:
    std::istream& in_;
};

}  // namespace scenemem
