#include "lcdt/toml.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lcdt {

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& what) {
    throw std::runtime_error("toml parse error at line " + std::to_string(line) + ": " + what);
}

std::string strip(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) {
        ++b;
    }
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) {
        --e;
    }
    return s.substr(b, e - b);
}

// Removes an unquoted trailing comment.
std::string strip_comment(const std::string& s) {
    bool in_string = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) {
            in_string = !in_string;
        } else if (s[i] == '#' && !in_string) {
            return s.substr(0, i);
        }
    }
    return s;
}

nlohmann::json parse_scalar(const std::string& raw, std::size_t line);

nlohmann::json parse_array(const std::string& raw, std::size_t line) {
    nlohmann::json arr = nlohmann::json::array();
    std::string inner = strip(raw.substr(1, raw.size() - 2));
    if (inner.empty()) {
        return arr;
    }
    std::size_t start = 0;
    bool in_string = false;
    for (std::size_t i = 0; i <= inner.size(); ++i) {
        if (i < inner.size() && inner[i] == '"' && (i == 0 || inner[i - 1] != '\\')) {
            in_string = !in_string;
        }
        if (i == inner.size() || (inner[i] == ',' && !in_string)) {
            std::string item = strip(inner.substr(start, i - start));
            if (!item.empty()) {
                arr.push_back(parse_scalar(item, line));
            }
            start = i + 1;
        }
    }
    return arr;
}

nlohmann::json parse_scalar(const std::string& raw, std::size_t line) {
    if (raw.empty()) {
        fail(line, "empty value");
    }
    if (raw.front() == '[') {
        if (raw.back() != ']') {
            fail(line, "unterminated array");
        }
        return parse_array(raw, line);
    }
    if (raw.front() == '"') {
        if (raw.size() < 2 || raw.back() != '"') {
            fail(line, "unterminated string");
        }
        std::string out;
        for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
            if (raw[i] == '\\' && i + 2 < raw.size()) {
                ++i;
                switch (raw[i]) {
                    case 'n': out += '\n'; break;
                    case 't': out += '\t'; break;
                    case '"': out += '"'; break;
                    case '\\': out += '\\'; break;
                    default: fail(line, std::string("unknown escape \\") + raw[i]);
                }
            } else {
                out += raw[i];
            }
        }
        return out;
    }
    if (raw == "true") {
        return true;
    }
    if (raw == "false") {
        return false;
    }
    // Number: integer when it looks like one, double otherwise.
    const bool looks_float = raw.find_first_of(".eE") != std::string::npos;
    try {
        std::size_t used = 0;
        if (!looks_float) {
            long long v = std::stoll(raw, &used);
            if (used == raw.size()) {
                return v;
            }
        }
        double d = std::stod(raw, &used);
        if (used == raw.size()) {
            return d;
        }
    } catch (const std::exception&) {
    }
    fail(line, "cannot parse value '" + raw + "'");
}

}  // namespace

nlohmann::json parse_toml(const std::string& text) {
    nlohmann::json root = nlohmann::json::object();
    nlohmann::json* current = &root;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string s = strip(strip_comment(line));
        if (s.empty()) {
            continue;
        }
        if (s.front() == '[') {
            const bool is_array = s.size() >= 4 && s[1] == '[';
            const std::string closer = is_array ? "]]" : "]";
            if (s.substr(s.size() - closer.size()) != closer) {
                fail(line_no, "unterminated table header");
            }
            const std::size_t open = is_array ? 2 : 1;
            std::string name = strip(s.substr(open, s.size() - open - closer.size()));
            if (name.empty()) {
                fail(line_no, "empty table name");
            }
            if (is_array) {
                if (!root.contains(name)) {
                    root[name] = nlohmann::json::array();
                }
                root[name].push_back(nlohmann::json::object());
                current = &root[name].back();
            } else {
                if (!root.contains(name)) {
                    root[name] = nlohmann::json::object();
                }
                current = &root[name];
            }
            continue;
        }
        const std::size_t eq = s.find('=');
        if (eq == std::string::npos) {
            fail(line_no, "expected key = value");
        }
        std::string key = strip(s.substr(0, eq));
        std::string value = strip(s.substr(eq + 1));
        if (key.empty()) {
            fail(line_no, "empty key");
        }
        (*current)[key] = parse_scalar(value, line_no);
    }
    return root;
}

nlohmann::json parse_toml_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open config file: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_toml(buf.str());
}

}  // namespace lcdt
