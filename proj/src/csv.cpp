#include "uad/csv.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "uad/errors.hpp"

namespace uad::csv {

std::string fmt_g17(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

bool parse_double(const std::string& field, double* out) {
    const char* begin = field.c_str();
    char* end = nullptr;
    errno = 0;
    double v = std::strtod(begin, &end);
    if (end == begin) return false;
    while (*end == ' ' || *end == '\t') ++end;
    if (*end != '\0') return false;
    *out = v;
    return true;
}

std::string strip(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

Table read_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");

    Table table;
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    std::size_t ncols = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (strip(line).empty()) continue;
        auto fields = split_fields(line);
        double probe = 0.0;
        if (rows.empty() && table.header.empty() && !parse_double(strip(fields[0]), &probe)) {
            table.header = fields;
            continue;
        }
        std::vector<double> row(fields.size());
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (!parse_double(strip(fields[i]), &row[i])) {
                throw DataError("'" + path.string() + "' row " + std::to_string(lineno) +
                                " field " + std::to_string(i + 1) + ": not a number: '" +
                                fields[i] + "'");
            }
        }
        if (rows.empty()) {
            ncols = row.size();
        } else if (row.size() != ncols) {
            throw DataError("'" + path.string() + "' row " + std::to_string(lineno) +
                            ": expected " + std::to_string(ncols) + " fields, got " +
                            std::to_string(row.size()));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError("'" + path.string() + "': no rows");

    table.values.resize(static_cast<Eigen::Index>(rows.size()),
                        static_cast<Eigen::Index>(ncols));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < ncols; ++c)
            table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                rows[r][c];
    return table;
}

void write_table(const std::filesystem::path& path, const Eigen::MatrixXd& values,
                 const std::vector<std::string>& header) {
    AtomicWriter writer(path);
    auto& out = writer.stream();
    if (!header.empty()) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i) out << ',';
            out << header[i];
        }
        out << '\n';
    }
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
        for (Eigen::Index c = 0; c < values.cols(); ++c) {
            if (c) out << ',';
            out << fmt_g17(values(r, c));
        }
        out << '\n';
    }
    writer.commit();
}

AtomicWriter::AtomicWriter(std::filesystem::path path)
    : path_(std::move(path)), tmp_path_(path_.string() + ".tmp"), stream_(tmp_path_) {
    if (!stream_) throw DataError("cannot write '" + tmp_path_.string() + "'");
}

AtomicWriter::~AtomicWriter() {
    if (!committed_) {
        stream_.close();
        std::error_code ec;
        std::filesystem::remove(tmp_path_, ec);
    }
}

void AtomicWriter::commit() {
    stream_.flush();
    if (!stream_) throw DataError("write failed for '" + tmp_path_.string() + "'");
    stream_.close();
    std::filesystem::rename(tmp_path_, path_);
    committed_ = true;
}

}  // namespace uad::csv
