// SPDX-License-Identifier: Apache-2.0
//
// mimocorr - spatial correlation estimation toolkit for MIMO OFDM channels

#pragma once

#include <cctype>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace mimocorr::toml {

/// Config file error; message carries the line number.
class parse_error : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

struct value;
using array = std::vector<value>;

/// TOML-subset value: bool, integer, float, string or (nested) array.
struct value {
    std::variant<bool, std::int64_t, double, std::string, array> v;

    bool is_bool() const { return std::holds_alternative<bool>(v); }
    bool is_int() const { return std::holds_alternative<std::int64_t>(v); }
    bool is_float() const { return std::holds_alternative<double>(v); }
    bool is_number() const { return is_int() || is_float(); }
    bool is_string() const { return std::holds_alternative<std::string>(v); }
    bool is_array() const { return std::holds_alternative<array>(v); }

    bool as_bool() const { return std::get<bool>(v); }
    std::int64_t as_int() const
    {
        if (is_float()) {
            const double d = std::get<double>(v);
            if (d != double(std::int64_t(d)))
                throw parse_error("expected integer, got non-integral float");
            return std::int64_t(d);
        }
        return std::get<std::int64_t>(v);
    }
    double as_float() const
    {
        return is_int() ? double(std::get<std::int64_t>(v)) : std::get<double>(v);
    }
    const std::string &as_string() const { return std::get<std::string>(v); }
    const array &as_array() const { return std::get<array>(v); }
};

using table = std::map<std::string, value>;
/// Parsed document: section name -> key/value table. Top-level keys live in "".
using document = std::map<std::string, table>;

namespace detail {

struct cursor {
    const std::string &text;
    std::size_t pos = 0;
    std::size_t line = 1;

    bool eof() const { return pos >= text.size(); }
    char peek() const { return text[pos]; }
    char get()
    {
        const char c = text[pos++];
        if (c == '\n')
            ++line;
        return c;
    }
    [[noreturn]] void fail(const std::string &msg) const
    {
        throw parse_error("config line " + std::to_string(line) + ": " + msg);
    }
    void skip_ws_inline()
    {
        while (!eof() && (peek() == ' ' || peek() == '\t'))
            ++pos;
    }
    void skip_comment()
    {
        if (!eof() && peek() == '#')
            while (!eof() && peek() != '\n')
                ++pos;
    }
    // whitespace, comments and newlines (used inside arrays)
    void skip_filler()
    {
        for (;;) {
            skip_ws_inline();
            skip_comment();
            if (!eof() && peek() == '\n') {
                get();
                continue;
            }
            break;
        }
    }
};

inline bool is_bare_key_char(char c)
{
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

inline std::string parse_bare_key(cursor &c)
{
    std::string k;
    while (!c.eof() && is_bare_key_char(c.peek()))
        k.push_back(c.get());
    if (k.empty())
        c.fail("expected key");
    return k;
}

inline std::string parse_string(cursor &c)
{
    c.get();  // opening quote
    std::string s;
    for (;;) {
        if (c.eof())
            c.fail("unterminated string");
        char ch = c.get();
        if (ch == '"')
            return s;
        if (ch == '\n')
            c.fail("newline in string");
        if (ch == '\\') {
            if (c.eof())
                c.fail("dangling escape");
            const char e = c.get();
            switch (e) {
                case '"': s.push_back('"'); break;
                case '\\': s.push_back('\\'); break;
                case 'n': s.push_back('\n'); break;
                case 't': s.push_back('\t'); break;
                default: c.fail(std::string("unsupported escape \\") + e);
            }
        } else {
            s.push_back(ch);
        }
    }
}

value parse_value(cursor &c);

inline value parse_array(cursor &c)
{
    c.get();  // '['
    array items;
    for (;;) {
        c.skip_filler();
        if (c.eof())
            c.fail("unterminated array");
        if (c.peek() == ']') {
            c.get();
            break;
        }
        items.push_back(parse_value(c));
        c.skip_filler();
        if (c.eof())
            c.fail("unterminated array");
        if (c.peek() == ',') {
            c.get();
            continue;
        }
        if (c.peek() == ']') {
            c.get();
            break;
        }
        c.fail("expected ',' or ']' in array");
    }
    return value{std::move(items)};
}

inline value parse_scalar(cursor &c)
{
    std::string tok;
    while (!c.eof()) {
        const char ch = c.peek();
        if (ch == ',' || ch == ']' || ch == '\n' || ch == '#' || ch == ' ' || ch == '\t')
            break;
        tok.push_back(c.get());
    }
    if (tok.empty())
        c.fail("expected value");
    if (tok == "true")
        return value{true};
    if (tok == "false")
        return value{false};
    if (tok == "inf" || tok == "+inf")
        return value{std::numeric_limits<double>::infinity()};
    if (tok == "-inf")
        return value{-std::numeric_limits<double>::infinity()};
    if (tok == "nan")
        return value{std::numeric_limits<double>::quiet_NaN()};
    const bool looks_float = tok.find_first_of(".eE") != std::string::npos &&
                             tok.find_first_not_of("+-0123456789.eE") == std::string::npos;
    try {
        std::size_t used = 0;
        if (!looks_float) {
            const std::int64_t i = std::stoll(tok, &used);
            if (used == tok.size())
                return value{i};
        }
        const double d = std::stod(tok, &used);
        if (used == tok.size())
            return value{d};
    } catch (const std::exception &) {
        // fall through to the error below
    }
    c.fail("cannot parse value '" + tok + "'");
}

inline value parse_value(cursor &c)
{
    if (c.peek() == '"')
        return value{parse_string(c)};
    if (c.peek() == '[')
        return parse_array(c);
    return parse_scalar(c);
}

} // namespace detail

/// Parses the TOML subset used by experiment configs: [section] headers,
/// key = value pairs, comments, strings, numbers (incl. inf), booleans and
/// nested arrays. Unknown syntax raises parse_error with a line number.
inline document parse(const std::string &text)
{
    detail::cursor c{text};
    document doc;
    std::string section;
    doc[section];
    while (!c.eof()) {
        c.skip_ws_inline();
        c.skip_comment();
        if (c.eof())
            break;
        if (c.peek() == '\n') {
            c.get();
            continue;
        }
        if (c.peek() == '[') {
            c.get();
            c.skip_ws_inline();
            section = detail::parse_bare_key(c);
            c.skip_ws_inline();
            if (c.eof() || c.get() != ']')
                c.fail("expected ']' after section name");
            doc[section];
            continue;
        }
        const std::string key = detail::parse_bare_key(c);
        c.skip_ws_inline();
        if (c.eof() || c.get() != '=')
            c.fail("expected '=' after key '" + key + "'");
        c.skip_ws_inline();
        if (c.eof())
            c.fail("missing value for key '" + key + "'");
        value v = detail::parse_value(c);
        c.skip_ws_inline();
        c.skip_comment();
        if (!c.eof() && c.peek() != '\n')
            c.fail("trailing characters after value for key '" + key + "'");
        if (doc[section].count(key))
            c.fail("duplicate key '" + key + "'");
        doc[section].emplace(key, std::move(v));
    }
    return doc;
}

} // namespace mimocorr::toml
