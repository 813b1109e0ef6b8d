#pragma once

// CSV output: a "# key: value" metadata block, one header row, data rows.
// Doubles use 17 significant digits through std::to_chars, which round-trips
// exactly and ignores the C locale.

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <variant>
#include <vector>

#include "ergocap/error.hpp"

namespace ergocap::csv {

inline std::string format(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
    return {buf, res.ptr};
}

inline std::string format(const std::vector<double>& xs) {
    std::string out = "[";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i > 0) out += ", ";
        out += format(xs[i]);
    }
    return out + "]";
}

using Cell = std::variant<double, std::int64_t, std::string>;

class Writer {
public:
    explicit Writer(std::ostream& os) : os_(os) {}

    void meta(std::string_view key, std::string_view value) {
        if (header_written_) throw Error(ErrorKind::InvalidArgument, "metadata must precede the header");
        os_ << "# " << key << ": " << value << '\n';
    }
    void meta(std::string_view key, double value) { meta(key, format(value)); }

    void header(const std::vector<std::string>& columns) {
        columns_ = columns.size();
        header_written_ = true;
        for (std::size_t i = 0; i < columns.size(); ++i) os_ << (i ? "," : "") << columns[i];
        os_ << '\n';
    }

    void row(const std::vector<Cell>& cells) {
        if (cells.size() != columns_) throw Error(ErrorKind::InvalidArgument, "row width differs from header");
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) os_ << ',';
            std::visit(
                [&](const auto& v) {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, double>) {
                        os_ << format(v);
                    } else {
                        os_ << v;
                    }
                },
                cells[i]);
        }
        os_ << '\n';
        ++rows_;
    }

    std::size_t rows() const noexcept { return rows_; }

private:
    std::ostream& os_;
    std::size_t columns_ = 0;
    std::size_t rows_ = 0;
    bool header_written_ = false;
};

}  // namespace ergocap::csv
