#include "eca/toml.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "eca/csv.hpp"
#include "eca/date.hpp"
#include "eca/error.hpp"

namespace eca::toml {

using nlohmann::json;

namespace {

class Parser {
public:
    explicit Parser(std::string_view text) : s_(text) {}

    json run() {
        json root = json::object();
        json* current = &root;
        while (true) {
            skip_ws_comments_newlines();
            if (eof()) break;
            if (peek() == '[') {
                current = table_header(root);
            } else {
                key_value(*current);
            }
            expect_line_end();
        }
        return root;
    }

private:
    std::string_view s_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;

    bool eof() const { return pos_ >= s_.size(); }
    char peek() const { return eof() ? '\0' : s_[pos_]; }
    char get() {
        char c = s_[pos_++];
        if (c == '\n') ++line_;
        return c;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError("toml line " + std::to_string(line_) + ": " + msg);
    }

    void skip_ws() {
        while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
    }
    void skip_comment() {
        if (peek() == '#')
            while (!eof() && peek() != '\n') ++pos_;
    }
    void skip_ws_comments_newlines() {
        while (!eof()) {
            skip_ws();
            skip_comment();
            if (peek() == '\n' || peek() == '\r')
                get();
            else
                break;
        }
    }
    void expect_line_end() {
        skip_ws();
        skip_comment();
        if (eof()) return;
        if (peek() == '\r') get();
        if (peek() != '\n') fail("unexpected trailing characters");
        get();
    }

    std::string key() {
        skip_ws();
        if (peek() == '"') return basic_string();
        if (peek() == '\'') return literal_string();
        std::string k;
        while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-'))
            k.push_back(get());
        if (k.empty()) fail("expected key");
        return k;
    }

    std::vector<std::string> dotted_key() {
        std::vector<std::string> parts{key()};
        skip_ws();
        while (peek() == '.') {
            get();
            parts.push_back(key());
            skip_ws();
        }
        return parts;
    }

    json* table_header(json& root) {
        get();  // '['
        const bool array = peek() == '[';
        if (array) get();
        auto parts = dotted_key();
        if (peek() != ']') fail("expected ']'");
        get();
        if (array) {
            if (peek() != ']') fail("expected ']]'");
            get();
        }
        json* node = &root;
        for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
            json& next = (*node)[parts[i]];
            if (next.is_null()) next = json::object();
            if (next.is_array()) {
                if (next.empty()) fail("empty array of tables '" + parts[i] + "'");
                node = &next.back();
            } else if (next.is_object()) {
                node = &next;
            } else {
                fail("key '" + parts[i] + "' is not a table");
            }
        }
        json& leaf = (*node)[parts.back()];
        if (array) {
            if (leaf.is_null()) leaf = json::array();
            if (!leaf.is_array()) fail("'" + parts.back() + "' redefined as array of tables");
            leaf.push_back(json::object());
            return &leaf.back();
        }
        if (leaf.is_null()) leaf = json::object();
        if (!leaf.is_object()) fail("'" + parts.back() + "' redefined as table");
        return &leaf;
    }

    void key_value(json& table) {
        const std::string k = key();
        skip_ws();
        if (peek() == '.') fail("dotted keys are not supported");
        if (peek() != '=') fail("expected '=' after key '" + k + "'");
        get();
        skip_ws();
        if (table.contains(k)) fail("duplicate key '" + k + "'");
        table[k] = value();
    }

    json value() {
        skip_ws();
        const char c = peek();
        if (c == '"') return basic_string();
        if (c == '\'') return literal_string();
        if (c == '[') return array();
        if (c == '{') fail("inline tables are not supported");
        return bare_scalar();
    }

    json array() {
        get();  // '['
        json arr = json::array();
        while (true) {
            skip_ws_comments_newlines();
            if (peek() == ']') {
                get();
                return arr;
            }
            arr.push_back(value());
            skip_ws_comments_newlines();
            if (peek() == ',') {
                get();
            } else if (peek() == ']') {
                get();
                return arr;
            } else {
                fail("expected ',' or ']' in array");
            }
        }
    }

    std::string basic_string() {
        get();  // '"'
        std::string out;
        while (true) {
            if (eof() || peek() == '\n') fail("unterminated string");
            char c = get();
            if (c == '"') return out;
            if (c != '\\') {
                out.push_back(c);
                continue;
            }
            if (eof()) fail("unterminated escape");
            switch (char e = get()) {
                case 'n': out.push_back('\n'); break;
                case 't': out.push_back('\t'); break;
                case 'r': out.push_back('\r'); break;
                case '"': out.push_back('"'); break;
                case '\\': out.push_back('\\'); break;
                default: fail(std::string("unsupported escape '\\") + e + "'");
            }
        }
    }

    std::string literal_string() {
        get();  // '\''
        std::string out;
        while (true) {
            if (eof() || peek() == '\n') fail("unterminated string");
            char c = get();
            if (c == '\'') return out;
            out.push_back(c);
        }
    }

    json bare_scalar() {
        std::string tok;
        while (!eof() && peek() != ',' && peek() != ']' && peek() != '\n' && peek() != '\r' && peek() != '#' &&
               peek() != ' ' && peek() != '\t')
            tok.push_back(get());
        if (tok.empty()) fail("expected value");
        if (tok == "true") return true;
        if (tok == "false") return false;
        if (Date::parse(tok)) return tok;
        std::string digits;
        for (char ch : tok)
            if (ch != '_') digits.push_back(ch);
        const char* b = digits.data();
        const char* e = b + digits.size();
        if (*b == '+') ++b;
        std::int64_t iv = 0;
        if (auto [p, ec] = std::from_chars(b, e, iv); ec == std::errc() && p == e) return iv;
        double dv = 0;
        if (digits == "inf" || digits == "+inf") return std::numeric_limits<double>::infinity();
        if (digits == "-inf") return -std::numeric_limits<double>::infinity();
        if (auto [p, ec] = std::from_chars(b, e, dv); ec == std::errc() && p == e) return dv;
        fail("cannot parse value '" + tok + "'");
    }
};

bool is_bare_key(const std::string& k) {
    if (k.empty()) return false;
    for (char c : k)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
    return true;
}

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default: out.push_back(c);
        }
    }
    return out + "\"";
}

std::string key_text(const std::string& k) { return is_bare_key(k) ? k : quote(k); }

bool is_table_array(const json& v) {
    if (!v.is_array() || v.empty()) return false;
    for (const auto& e : v)
        if (!e.is_object()) return false;
    return true;
}

std::string scalar_text(const json& v) {
    if (v.is_string()) {
        const auto& s = v.get_ref<const std::string&>();
        return Date::parse(s) ? s : quote(s);
    }
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (std::isinf(d)) return d > 0 ? "inf" : "-inf";
        std::string t = csv::format_number(d);
        if (t.find_first_of(".eE") == std::string::npos) t += ".0";
        return t;
    }
    if (v.is_array()) {
        std::string out = "[";
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) out += ", ";
            out += scalar_text(v[i]);
        }
        return out + "]";
    }
    throw ConfigError("value cannot be written as TOML: " + v.dump());
}

void dump_table(std::ostringstream& out, const json& table, const std::string& prefix) {
    for (auto it = table.begin(); it != table.end(); ++it) {
        if (it->is_object() || is_table_array(*it)) continue;
        out << key_text(it.key()) << " = " << scalar_text(*it) << '\n';
    }
    for (auto it = table.begin(); it != table.end(); ++it) {
        const std::string path = prefix.empty() ? key_text(it.key()) : prefix + "." + key_text(it.key());
        if (it->is_object()) {
            out << "\n[" << path << "]\n";
            dump_table(out, *it, path);
        } else if (is_table_array(*it)) {
            for (const auto& elem : *it) {
                out << "\n[[" << path << "]]\n";
                dump_table(out, elem, path);
            }
        }
    }
}

}  // namespace

json parse(std::string_view text) { return Parser(text).run(); }

json parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string dump(const json& doc) {
    std::ostringstream out;
    dump_table(out, doc, "");
    return out.str();
}

}  // namespace eca::toml
