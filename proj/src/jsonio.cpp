#include "glw/jsonio.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace glw {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

void dump_rec(const Json& j, std::string& out, int indent, int depth) {
    const bool compact = indent < 0;
    const std::string pad(compact ? 0 : static_cast<std::size_t>(indent) * depth, ' ');
    const std::string pad_in(compact ? 0 : static_cast<std::size_t>(indent) * (depth + 1), ' ');
    switch (j.type()) {
        case Json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += compact ? "{" : "{\n";
            std::size_t i = 0;
            for (auto it = j.begin(); it != j.end(); ++it, ++i) {
                out += pad_in;
                out += Json(it.key()).dump();
                out += ": ";
                dump_rec(it.value(), out, indent, depth + 1);
                if (i + 1 < j.size()) out += compact ? ", " : ",";
                if (!compact) out += "\n";
            }
            out += pad + "}";
            return;
        }
        case Json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            // Scalar-only arrays stay on one line (parameter lists dominate
            // checkpoint files; one element per line would be enormous).
            bool scalars_only = true;
            for (const auto& e : j) {
                if (e.is_object() || e.is_array()) {
                    scalars_only = false;
                    break;
                }
            }
            if (scalars_only || compact) {
                out += "[";
                for (std::size_t i = 0; i < j.size(); ++i) {
                    if (i) out += ", ";
                    dump_rec(j[i], out, indent, depth + 1);
                }
                out += "]";
                return;
            }
            out += "[\n";
            for (std::size_t i = 0; i < j.size(); ++i) {
                out += pad_in;
                dump_rec(j[i], out, indent, depth + 1);
                if (i + 1 < j.size()) out += ",";
                out += "\n";
            }
            out += pad + "]";
            return;
        }
        case Json::value_t::number_float:
            out += format_double(j.get<double>());
            return;
        default:
            out += j.dump();
            return;
    }
}

}  // namespace

std::string dump_json(const Json& j, int indent) {
    std::string out;
    dump_rec(j, out, indent, 0);
    out += "\n";
    return out;
}

void write_json_file(const std::string& path, const Json& j) {
    write_file(path, dump_json(j));
}

Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open JSON file: " + path);
    Json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed JSON in " + path + ": " + e.what());
    }
    return j;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Tensor& rows) {
    if (rows.rank() != 2 && rows.size() != 0) {
        throw ShapeError("write_csv expects a matrix, got " + rows.shape_str());
    }
    std::string out;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (j) out += ",";
        out += header[j];
    }
    out += "\n";
    if (rows.rank() == 2) {
        if (rows.cols() != header.size()) {
            throw ShapeError("write_csv: " + std::to_string(header.size()) + " header names vs " +
                             std::to_string(rows.cols()) + " columns");
        }
        for (std::size_t i = 0; i < rows.rows(); ++i) {
            const double* r = rows.row_ptr(i);
            for (std::size_t j = 0; j < rows.cols(); ++j) {
                if (j) out += ",";
                out += format_double(r[j]);
            }
            out += "\n";
        }
    }
    write_file(path, out);
}

Tensor read_csv(const std::string& path, std::vector<std::string>* header_out) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open CSV file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty CSV file: " + path);
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    if (header_out) *header_out = header;
    const std::size_t cols = header.size();
    std::vector<double> values;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t c = 0;
        while (std::getline(ss, cell, ',')) {
            try {
                values.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ConfigError("bad numeric cell '" + cell + "' in " + path);
            }
            ++c;
        }
        if (c != cols) {
            throw ConfigError("row " + std::to_string(rows + 1) + " in " + path + " has " +
                              std::to_string(c) + " cells, header has " + std::to_string(cols));
        }
        ++rows;
    }
    Tensor t;
    t.shape = {rows, cols};
    t.data = std::move(values);
    return t;
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
    return buf;
}

std::string file_digest(const std::string& path) { return fnv1a_hex(read_file(path)); }

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write file: " + path);
    out << content;
}

}  // namespace glw
